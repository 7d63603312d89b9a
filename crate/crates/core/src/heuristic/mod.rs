//! Population-based detectors searching the real-valued symbol space.

mod de;
mod hybrid;
mod init;
mod pso;

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::Constellation;
use crate::real::{complexify, RealSystem};
use crate::scalar::Real;

pub use de::{
    de_crossover, de_detect, de_mutation, de_mutation_indices, de_selection, de_step, init_population, DeParams,
    PopulationState,
};
pub use hybrid::{hybrid_detect, HeuristicParams, HYBRID_ITERATIONS};
pub use init::{InitKind, InitStrategy, PERTURB_SIGMA};
pub use pso::{init_swarm, pso_detect, pso_iterate, pso_iterate_with, PsoParams, SwarmState, INERTIA_DECAY};

/// What a candidate position is scored on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchObjective {
    /// `‖y − H·slice(ζ)‖²`: positions are scored at their nearest lattice point.
    #[default]
    Sliced,
    /// `‖y − Hζ‖²` on the raw position.
    Continuous,
}

/// Real system plus the constellation used for slicing.
#[derive(Clone, Debug)]
pub struct Problem<'a, R> {
    pub sys: RealSystem<R>,
    pub constellation: &'a Constellation<R>,
}

impl<'a, R: Real> Problem<'a, R> {
    pub fn new(sys: RealSystem<R>, constellation: &'a Constellation<R>) -> Self {
        Self { sys, constellation }
    }

    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    /// Nearest lattice point of each coordinate.
    pub fn slice(&self, zeta: &[R]) -> Vec<R> {
        zeta.iter().map(|&v| self.constellation.slice_coordinate(v)).collect()
    }

    /// Hard symbol decisions for a real position.
    pub fn hard_symbols(&self, zeta: &[R]) -> Vec<Complex<R>> {
        complexify(&self.slice(zeta)).expect("real dimension is even")
    }

    pub(crate) fn evaluate(&self, zeta: &[R], objective: SearchObjective, scratch: &mut Vec<R>) -> R {
        match objective {
            SearchObjective::Continuous => self.sys.fitness_unchecked(zeta),
            SearchObjective::Sliced => {
                scratch.clear();
                scratch.extend(zeta.iter().map(|&v| self.constellation.slice_coordinate(v)));
                self.sys.fitness_unchecked(scratch)
            }
        }
    }

    /// Public scoring entry point with a dimension check.
    pub fn score(&self, zeta: &[R], objective: SearchObjective) -> Result<R> {
        if zeta.len() != self.dim() {
            return Err(Error::Dimension(format!("candidate of length {} for dimension {}", zeta.len(), self.dim())));
        }
        Ok(self.evaluate(zeta, objective, &mut Vec::with_capacity(zeta.len())))
    }
}

/// Result of one heuristic or hybrid detection.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection<R> {
    pub symbols: Vec<Complex<R>>,
    /// Best real position found.
    pub best: Vec<R>,
    /// Best fitness after initialization (index 0) and after each iteration.
    pub trace: Vec<R>,
    /// Hard decisions of the best position after each iteration, index 0 being the start.
    pub decisions: Vec<Vec<Complex<R>>>,
    pub iterations: usize,
    /// The linear seed failed and the search fell back to uniform initialization.
    pub fallback: bool,
}

impl<R: Real> Detection<R> {
    pub(crate) fn record(&mut self, problem: &Problem<'_, R>, best: &[R], fitness: R) {
        self.trace.push(fitness);
        self.decisions.push(problem.hard_symbols(best));
    }

    pub(crate) fn start(problem: &Problem<'_, R>, best: &[R], fitness: R) -> Self {
        let mut d = Detection {
            symbols: Vec::new(),
            best: Vec::new(),
            trace: Vec::new(),
            decisions: Vec::new(),
            iterations: 0,
            fallback: false,
        };
        d.record(problem, best, fitness);
        d
    }

    pub(crate) fn finish(mut self, problem: &Problem<'_, R>, best: Vec<R>, iterations: usize) -> Self {
        self.symbols = problem.hard_symbols(&best);
        self.best = best;
        self.iterations = iterations;
        self
    }

    /// Hard decisions as they stood after `budget` iterations.
    pub fn decisions_at(&self, budget: usize) -> &[Complex<R>] {
        &self.decisions[budget.min(self.decisions.len() - 1)]
    }
}

/// Writes per-iteration best fitness as `detector,trial,iteration,fitness` rows.
pub fn write_trace_csv<R: Real>(
    out: &mut impl Write,
    detector: &str,
    trial: u64,
    trace: &[R],
    header: bool,
) -> Result<()> {
    if header {
        writeln!(out, "detector,trial,iteration,fitness")?;
    }
    for (i, f) in trace.iter().enumerate() {
        writeln!(out, "{detector},{trial},{i},{f}")?;
    }
    Ok(())
}
