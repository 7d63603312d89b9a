use serde::{Deserialize, Serialize};

use super::{Detection, InitStrategy, Problem, SearchObjective};
use crate::error::{Error, Result};
use crate::flops;
use crate::linalg::RealMatrix;
use crate::rng::RngStream;
use crate::scalar::Real;

/// Per-iteration inertia multiplier.
pub const INERTIA_DECAY: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub c1: f64,
    pub c2: f64,
    pub w0: f64,
    pub n_pop: usize,
    pub n_iter: usize,
    pub v_max: f64,
    pub search_lo: f64,
    pub search_hi: f64,
    /// Clip positions to the search box after each update.
    pub clamp_positions: bool,
    pub objective: SearchObjective,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            c1: 2.0,
            c2: 2.0,
            w0: 1.0,
            n_pop: 40,
            n_iter: 100,
            v_max: 2.0,
            search_lo: -1.0,
            search_hi: 1.0,
            clamp_positions: false,
            objective: SearchObjective::Sliced,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) || !self.c1.is_finite() || !self.c2.is_finite() {
            return bad(format!("c1 = {}, c2 = {} must be finite and non-negative", self.c1, self.c2));
        }
        if !self.w0.is_finite() {
            return bad(format!("inertia {} must be finite", self.w0));
        }
        if self.n_pop < 2 {
            return bad(format!("swarm of {} particles, need at least 2", self.n_pop));
        }
        if !(self.v_max > 0.0) {
            return bad(format!("v_max = {} must be positive", self.v_max));
        }
        if !(self.search_lo < self.search_hi) || !self.search_lo.is_finite() || !self.search_hi.is_finite() {
            return bad(format!("empty search box [{}, {}]", self.search_lo, self.search_hi));
        }
        Ok(())
    }

    /// Inertia after `t` updates.
    pub fn inertia(&self, t: usize) -> f64 {
        self.w0 * INERTIA_DECAY.powi(t as i32)
    }
}

/// Swarm positions, velocities and best-so-far memory; one vector per particle.
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState<R> {
    pub positions: Vec<Vec<R>>,
    pub velocities: Vec<Vec<R>>,
    pub personal_best: Vec<Vec<R>>,
    pub pb_fitness: Vec<R>,
    pub global_best: Vec<R>,
    pub gb_fitness: R,
    pub w: f64,
    pub iteration: usize,
}

impl<R: Real> SwarmState<R> {
    /// Positions as an `N_dim×N_pop` matrix, one particle per column.
    pub fn position_matrix(&self) -> RealMatrix<R> {
        columns(&self.positions)
    }

    pub fn velocity_matrix(&self) -> RealMatrix<R> {
        columns(&self.velocities)
    }

    pub fn max_speed(&self) -> R {
        self.velocities.iter().flatten().fold(R::zero(), |m, v| m.max(v.abs()))
    }

    fn refresh_global(&mut self) {
        let (k, f) = argmin(&self.pb_fitness);
        if f < self.gb_fitness {
            self.gb_fitness = f;
            self.global_best.clone_from(&self.personal_best[k]);
        }
    }
}

fn columns<R: Real>(vs: &[Vec<R>]) -> RealMatrix<R> {
    RealMatrix::from_fn(vs[0].len(), vs.len(), |i, j| vs[j][i])
}

/// Index and value of the first minimum.
pub(crate) fn argmin<R: Real>(xs: &[R]) -> (usize, R) {
    xs.iter().enumerate().fold((0, R::infinity()), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
}

pub fn init_swarm<R: Real>(
    rng: &mut RngStream,
    params: &PsoParams,
    strategy: &InitStrategy<R>,
    problem: &Problem<'_, R>,
) -> Result<SwarmState<R>> {
    params.validate()?;
    let dim = problem.dim();
    let positions = strategy.sample(rng, params.n_pop, dim, params.search_lo, params.search_hi)?;
    let mut scratch = Vec::with_capacity(dim);
    let pb_fitness: Vec<R> = positions.iter().map(|p| problem.evaluate(p, params.objective, &mut scratch)).collect();
    let (k, gb_fitness) = argmin(&pb_fitness);
    Ok(SwarmState {
        velocities: vec![vec![R::zero(); dim]; params.n_pop],
        personal_best: positions.clone(),
        global_best: positions[k].clone(),
        positions,
        pb_fitness,
        gb_fitness,
        w: params.w0,
        iteration: 0,
    })
}

/// One swarm update drawing `U₁`, `U₂` from `rng`.
pub fn pso_iterate<R: Real>(
    rng: &mut RngStream,
    state: &mut SwarmState<R>,
    params: &PsoParams,
    problem: &Problem<'_, R>,
) {
    pso_iterate_with(state, params, problem, || rng.uniform());
}

/// One swarm update with the uniform draws supplied by `u`, two per dimension (`U₁` then `U₂`).
pub fn pso_iterate_with<R: Real>(
    state: &mut SwarmState<R>,
    params: &PsoParams,
    problem: &Problem<'_, R>,
    mut u: impl FnMut() -> f64,
) {
    let w = R::lit(state.w);
    let (c1, c2) = (R::lit(params.c1), R::lit(params.c2));
    let v_max = R::lit(params.v_max);
    let (lo, hi) = (R::lit(params.search_lo), R::lit(params.search_hi));
    let n_t = problem.sys.n_t();
    let mut scratch = Vec::with_capacity(problem.dim());
    for k in 0..state.positions.len() {
        let (p, v, pb) = (&mut state.positions[k], &mut state.velocities[k], &state.personal_best[k]);
        for i in 0..p.len() {
            let u1 = R::lit(u());
            let u2 = R::lit(u());
            let vi = w * v[i] + c1 * u1 * (pb[i] - p[i]) + c2 * u2 * (state.global_best[i] - p[i]);
            v[i] = vi.max(-v_max).min(v_max);
            p[i] += v[i];
            if params.clamp_positions {
                p[i] = p[i].max(lo).min(hi);
            }
        }
        flops::charge(20.0 * n_t as f64);
        let f = problem.evaluate(p, params.objective, &mut scratch);
        if f < state.pb_fitness[k] {
            state.pb_fitness[k] = f;
            state.personal_best[k].clone_from(p);
        }
    }
    state.refresh_global();
    state.iteration += 1;
    state.w = params.inertia(state.iteration);
}

/// Runs `params.n_iter` swarm updates and slices the global best.
pub fn pso_detect<R: Real>(
    rng: &mut RngStream,
    problem: &Problem<'_, R>,
    params: &PsoParams,
    strategy: &InitStrategy<R>,
) -> Result<Detection<R>> {
    let mut state = init_swarm(rng, params, strategy, problem)?;
    let mut out = Detection::start(problem, &state.global_best, state.gb_fitness);
    for _ in 0..params.n_iter {
        pso_iterate(rng, &mut state, params, problem);
        out.record(problem, &state.global_best, state.gb_fitness);
    }
    Ok(out.finish(problem, state.global_best, params.n_iter))
}
