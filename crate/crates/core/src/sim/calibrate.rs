//! Coordinate-wise parameter calibration at a fixed operating point.

use serde::{Deserialize, Serialize};

use super::config::{DetectorConfig, SimulationConfig};
use super::engine::{Arm, Point, Simulator, StopRule};
use crate::detector::{DetectorKind, Heuristic};
use crate::error::{Error, Result};
use crate::heuristic::{DeParams, HeuristicParams, PsoParams};
use crate::scalar::Real;

/// One tunable parameter: its name, candidate values and start value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub name: String,
    pub candidates: Vec<f64>,
    pub start: f64,
}

impl ParamGrid {
    /// `k / denom` for `k` in `lo..=hi`.
    pub fn rational(name: &str, lo: u32, hi: u32, denom: u32, start: f64) -> Self {
        Self { name: name.into(), candidates: (lo..=hi).map(|k| f64::from(k) / f64::from(denom)).collect(), start }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPlan {
    pub detector: DetectorKind,
    /// Visited in order, once each.
    pub parameters: Vec<ParamGrid>,
    pub ebn0_db: f64,
    pub rho: f64,
    pub iterations: usize,
    /// Log entries with fewer bit errors are flagged as weakly backed.
    pub min_errors: u64,
}

impl CalibrationPlan {
    /// Default grids and start values for a heuristic or hybrid detector.
    pub fn default_for(detector: DetectorKind, rho: f64) -> Result<Self> {
        let heuristic =
            detector.heuristic().ok_or_else(|| Error::Config(format!("{detector} has no tunable parameters")))?;
        let parameters = match heuristic {
            Heuristic::Pso => vec![
                ParamGrid::rational("c1", 1, 8, 2, 2.0),
                ParamGrid::rational("c2", 1, 8, 2, 2.0),
                ParamGrid::rational("w", 2, 7, 2, 1.0),
            ],
            Heuristic::De => {
                vec![ParamGrid::rational("f_mut", 6, 20, 10, 1.0), ParamGrid::rational("f_cr", 5, 9, 10, 0.5)]
            }
        };
        Ok(Self {
            detector,
            parameters,
            ebn0_db: 24.0,
            rho,
            iterations: if detector.is_hybrid() { 20 } else { 100 },
            min_errors: 100,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let heuristic = self
            .detector
            .heuristic()
            .ok_or_else(|| Error::Config(format!("{} has no tunable parameters", self.detector)))?;
        if self.parameters.is_empty() {
            return Err(Error::Config("calibration plan has no parameters".into()));
        }
        for p in &self.parameters {
            if p.candidates.is_empty() {
                return Err(Error::Config(format!("empty grid for {}", p.name)));
            }
            if !p.candidates.contains(&p.start) {
                return Err(Error::Config(format!("start value {} of {} is not in its grid", p.start, p.name)));
            }
            let known: &[&str] = match heuristic {
                Heuristic::Pso => &["c1", "c2", "w"],
                Heuristic::De => &["f_mut", "f_cr"],
            };
            if !known.contains(&p.name.as_str()) {
                return Err(Error::Config(format!("unknown parameter {} for {}", p.name, self.detector)));
            }
        }
        Ok(())
    }

    fn params(&self, values: &[(String, f64)]) -> HeuristicParams {
        let get = |n: &str| values.iter().find(|(k, _)| k == n).map(|&(_, v)| v);
        match self.detector.heuristic().expect("validated") {
            Heuristic::Pso => {
                let d = PsoParams::default();
                HeuristicParams::Pso(PsoParams {
                    c1: get("c1").unwrap_or(d.c1),
                    c2: get("c2").unwrap_or(d.c2),
                    w0: get("w").unwrap_or(d.w0),
                    n_iter: self.iterations,
                    ..d
                })
            }
            Heuristic::De => {
                let d = DeParams::default();
                HeuristicParams::De(DeParams {
                    f_mut: get("f_mut").unwrap_or(d.f_mut),
                    f_cr: get("f_cr").unwrap_or(d.f_cr),
                    n_gen: self.iterations,
                    ..d
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub parameter: String,
    pub candidate: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub trials: u64,
    /// At least `min_errors` bit errors back this value.
    pub backed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub detector: DetectorKind,
    pub rho: f64,
    pub values: Vec<(String, f64)>,
    pub params: HeuristicParams,
    pub start_ber: f64,
    pub final_ber: f64,
    pub log: Vec<CalibrationEntry>,
}

/// Greedy coordinate descent: each parameter in turn takes the candidate with
/// the lowest BER, ties going to the smaller value.
///
/// Every candidate runs on the same `max_trials` trials of the simulator's
/// configuration and on the same detector random stream, so the BER of an
/// unchanged setting is reproduced exactly from one parameter to the next.
pub fn calibrate<R: Real>(sim: &Simulator<R>, plan: &CalibrationPlan) -> Result<CalibrationOutcome> {
    plan.validate()?;
    let cfg: &SimulationConfig = sim.config();
    let point = Point::new(0, plan.ebn0_db, 0, plan.rho);
    let stop = StopRule::fixed(cfg.max_trials);
    let mut values: Vec<(String, f64)> = plan.parameters.iter().map(|p| (p.name.clone(), p.start)).collect();
    let mut log = Vec::new();
    let mut start_ber = None;
    let mut current_ber = f64::NAN;
    for (pi, grid) in plan.parameters.iter().enumerate() {
        let mut candidates = grid.candidates.clone();
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        let arms: Vec<Arm> = candidates
            .iter()
            .map(|&c| {
                let mut v = values.clone();
                v[pi].1 = c;
                let det =
                    DetectorConfig::new(plan.detector).with_params(plan.params(&v)).with_label(plan.detector.id());
                Arm::new(det)
            })
            .collect();
        let eval = sim.evaluate(&arms, point, stop)?;
        let mut best = (0usize, f64::INFINITY);
        for (ci, &c) in candidates.iter().enumerate() {
            let ber = eval.ber(ci);
            let errors = eval.columns[ci].bit_errors;
            log.push(CalibrationEntry {
                parameter: grid.name.clone(),
                candidate: c,
                ber,
                bit_errors: errors,
                trials: eval.trials,
                backed: errors >= plan.min_errors,
            });
            if errors < plan.min_errors {
                log::warn!("{} {}={c}: only {errors} bit errors behind BER {ber:.3e}", plan.detector, grid.name);
            }
            if pi == 0 && c == grid.start {
                start_ber = Some(ber);
            }
            if ber < best.1 {
                best = (ci, ber);
            }
        }
        values[pi].1 = candidates[best.0];
        current_ber = best.1;
    }
    Ok(CalibrationOutcome {
        detector: plan.detector,
        rho: plan.rho,
        params: plan.params(&values),
        values,
        start_ber: start_ber.expect("start value is in the first grid"),
        final_ber: current_ber,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim() -> Simulator<f64> {
        let cfg = SimulationConfig { n_subcarriers: 16, max_trials: 96, ..SimulationConfig::default() };
        Simulator::new(cfg, 1).unwrap()
    }

    #[test]
    fn single_candidate_plan() {
        let plan = CalibrationPlan {
            detector: DetectorKind::PsoMmse,
            parameters: vec![ParamGrid { name: "c1".into(), candidates: vec![1.5], start: 1.5 }],
            ebn0_db: 10.0,
            rho: 0.0,
            iterations: 3,
            min_errors: 1,
        };
        let out = calibrate(&sim(), &plan).unwrap();
        assert_eq!(out.values, vec![("c1".to_string(), 1.5)]);
        assert_eq!(out.log.len(), 1);
        assert_eq!(out.start_ber, out.final_ber);
    }

    #[test]
    fn ties_pick_the_smaller_value() {
        // With zero inertia and zero social pull the cognitive factor cannot move a
        // swarm whose personal bests equal its positions, so all candidates tie.
        let plan = CalibrationPlan {
            detector: DetectorKind::PsoMmse,
            parameters: vec![
                ParamGrid { name: "w".into(), candidates: vec![0.0], start: 0.0 },
                ParamGrid { name: "c2".into(), candidates: vec![0.0], start: 0.0 },
                ParamGrid { name: "c1".into(), candidates: vec![3.0, 0.5, 2.0], start: 2.0 },
            ],
            ebn0_db: 6.0,
            rho: 0.5,
            iterations: 4,
            min_errors: 1,
        };
        let out = calibrate(&sim(), &plan).unwrap();
        let c1: Vec<_> = out.log.iter().filter(|e| e.parameter == "c1").collect();
        assert!(c1.windows(2).all(|w| w[0].ber == w[1].ber));
        assert_eq!(out.values[2], ("c1".to_string(), 0.5));
    }

    #[test]
    fn descent_never_ends_worse_than_start() {
        let mut plan = CalibrationPlan::default_for(DetectorKind::De, 0.0).unwrap();
        plan.ebn0_db = 6.0;
        plan.iterations = 5;
        plan.parameters[0].candidates = vec![0.6, 1.0, 1.4];
        plan.parameters[1].candidates = vec![0.5, 0.9];
        let out = calibrate(&sim(), &plan).unwrap();
        assert!(out.final_ber <= out.start_ber);
        assert_eq!(out.log.len(), 5);
    }

    #[test]
    fn plan_validation() {
        assert!(CalibrationPlan::default_for(DetectorKind::Mmse, 0.0).is_err());
        for kind in [DetectorKind::Pso, DetectorKind::DeMmse] {
            CalibrationPlan::default_for(kind, 0.0).unwrap().validate().unwrap();
        }
        let mut p = CalibrationPlan::default_for(DetectorKind::Pso, 0.0).unwrap();
        p.parameters[0].start = 0.3;
        assert!(p.validate().is_err());
        p.parameters[0] = ParamGrid { name: "f_mut".into(), candidates: vec![1.0], start: 1.0 };
        assert!(p.validate().is_err());
        let w = &CalibrationPlan::default_for(DetectorKind::Pso, 0.0).unwrap().parameters[2];
        assert_eq!(w.candidates, vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5]);
    }
}
