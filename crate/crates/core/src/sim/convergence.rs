//! BER as a function of the iteration budget.

use serde::{Deserialize, Serialize};

use super::config::DetectorConfig;
use super::engine::{Arm, Evaluation, Point, Simulator, StopRule};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub detector: String,
    pub ebn0_db: f64,
    pub rho: f64,
    pub iterations: usize,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci95: f64,
}

/// Budgets `0..=max_iters` of one detector, all read from a single run per trial.
///
/// A run truncated after `b` iterations makes the same random draws as the
/// first `b` iterations of a longer run, so one run yields every budget.
/// Budget 0 of a hybrid is its bare linear decision.
pub fn convergence_study<R: Real>(
    sim: &Simulator<R>,
    detector: &DetectorConfig,
    points: &[Point],
    max_iters: usize,
    stop: StopRule,
) -> Result<Vec<ConvergenceRow>> {
    if detector.detector.heuristic().is_none() {
        return Err(Error::Config(format!("{} has no iteration budget", detector.detector)));
    }
    let mut rows = Vec::new();
    for &point in points {
        let eval = convergence_eval(sim, detector, point, max_iters, stop)?;
        rows.extend(eval.columns.iter().enumerate().map(|(col, c)| ConvergenceRow {
            detector: c.detector.clone(),
            ebn0_db: point.ebn0_db,
            rho: point.rho,
            iterations: c.budget.expect("heuristic column"),
            trials: eval.trials,
            bit_errors: c.bit_errors,
            ber: eval.ber(col),
            ci95: eval.ci95(col),
        }));
    }
    Ok(rows)
}

/// Raw evaluation behind [`convergence_study`], keeping the paired statistics.
pub fn convergence_eval<R: Real>(
    sim: &Simulator<R>,
    detector: &DetectorConfig,
    point: Point,
    max_iters: usize,
    stop: StopRule,
) -> Result<Evaluation> {
    let arm = Arm::with_budgets(detector.clone(), (0..=max_iters).collect());
    sim.evaluate(&[arm], point, stop)
}

/// Smallest budget whose BER is within `tolerance` of `target`, if any.
pub fn iterations_to_reach(rows: &[ConvergenceRow], target: f64, tolerance: f64) -> Option<usize> {
    rows.iter().filter(|r| r.ber <= target + tolerance).map(|r| r.iterations).min()
}
