use serde::{Deserialize, Serialize};

use super::pso::argmin;
use super::{Detection, InitStrategy, Problem, SearchObjective};
use crate::error::{Error, Result};
use crate::flops;
use crate::rng::RngStream;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeParams {
    pub f_mut: f64,
    pub f_cr: f64,
    pub n_ind: usize,
    pub n_gen: usize,
    pub search_lo: f64,
    pub search_hi: f64,
    pub objective: SearchObjective,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            f_mut: 1.0,
            f_cr: 0.5,
            n_ind: 40,
            n_gen: 100,
            search_lo: -1.0,
            search_hi: 1.0,
            objective: SearchObjective::Sliced,
        }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..=2.0).contains(&self.f_mut) {
            return bad(format!("F_mut = {} outside [0, 2]", self.f_mut));
        }
        if !(0.0..=1.0).contains(&self.f_cr) {
            return bad(format!("F_cr = {} outside [0, 1]", self.f_cr));
        }
        if self.n_ind < 4 {
            return bad(format!("population of {} individuals, need at least 4", self.n_ind));
        }
        if !(self.search_lo < self.search_hi) || !self.search_lo.is_finite() || !self.search_hi.is_finite() {
            return bad(format!("empty search box [{}, {}]", self.search_lo, self.search_hi));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationState<R> {
    pub individuals: Vec<Vec<R>>,
    pub fitness: Vec<R>,
    pub generation: usize,
}

impl<R: Real> PopulationState<R> {
    /// Index and fitness of the best individual; ties go to the lowest index.
    pub fn best(&self) -> (usize, R) {
        argmin(&self.fitness)
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }
}

pub fn init_population<R: Real>(
    rng: &mut RngStream,
    params: &DeParams,
    strategy: &InitStrategy<R>,
    problem: &Problem<'_, R>,
) -> Result<PopulationState<R>> {
    params.validate()?;
    let dim = problem.dim();
    let individuals = strategy.sample(rng, params.n_ind, dim, params.search_lo, params.search_hi)?;
    let mut scratch = Vec::with_capacity(dim);
    let fitness = individuals.iter().map(|p| problem.evaluate(p, params.objective, &mut scratch)).collect();
    Ok(PopulationState { individuals, fitness, generation: 0 })
}

/// Distinct `r1, r2, r3`, all different from `k`, by rejection.
pub fn de_mutation_indices(rng: &mut RngStream, n_ind: usize, k: usize) -> Result<[usize; 3]> {
    if n_ind < 4 || k >= n_ind {
        return Err(Error::InvalidParameter(format!("mutation of individual {k} in a population of {n_ind}")));
    }
    let mut r = [k; 3];
    for j in 0..3 {
        r[j] = loop {
            let c = rng.index(n_ind);
            if c != k && !r[..j].contains(&c) {
                break c;
            }
        };
    }
    Ok(r)
}

/// `ν_k = ι_r1 + F_mut·(ι_r2 − ι_r3)`.
pub fn de_mutation<R: Real>(rng: &mut RngStream, pop: &PopulationState<R>, f_mut: f64, k: usize) -> Result<Vec<R>> {
    let [r1, r2, r3] = de_mutation_indices(rng, pop.len(), k)?;
    let f = R::lit(f_mut);
    let (a, b, c) = (&pop.individuals[r1], &pop.individuals[r2], &pop.individuals[r3]);
    Ok((0..a.len()).map(|i| a[i] + f * (b[i] - c[i])).collect())
}

/// Binomial crossover with one forced dimension taken from `nu`.
pub fn de_crossover<R: Real>(rng: &mut RngStream, iota: &[R], nu: &[R], f_cr: f64) -> Result<Vec<R>> {
    if iota.len() != nu.len() || iota.is_empty() {
        return Err(Error::Dimension(format!("crossover of lengths {} and {}", iota.len(), nu.len())));
    }
    let forced = rng.index(iota.len());
    Ok((0..iota.len())
        .map(|i| {
            let take = rng.uniform() <= f_cr;
            if take || i == forced {
                nu[i]
            } else {
                iota[i]
            }
        })
        .collect())
}

/// Greedy replacement `ι_k ← ψ_k` when `f(ψ_k) < f(ι_k)`.
///
/// Both the incumbent and the trial are scored, so a generation costs `2·N_ind` evaluations.
pub fn de_selection<R: Real>(
    pop: &mut PopulationState<R>,
    trials: Vec<Vec<R>>,
    problem: &Problem<'_, R>,
    objective: SearchObjective,
) -> Result<()> {
    if trials.len() != pop.len() {
        return Err(Error::Dimension(format!("{} trials for {} individuals", trials.len(), pop.len())));
    }
    let mut scratch = Vec::with_capacity(problem.dim());
    for (k, psi) in trials.into_iter().enumerate() {
        let f_iota = problem.evaluate(&pop.individuals[k], objective, &mut scratch);
        let f_psi = problem.evaluate(&psi, objective, &mut scratch);
        pop.fitness[k] = f_iota;
        if f_psi < f_iota {
            pop.individuals[k] = psi;
            pop.fitness[k] = f_psi;
        }
    }
    pop.generation += 1;
    Ok(())
}

/// One generation of mutation, crossover and selection.
pub fn de_step<R: Real>(
    rng: &mut RngStream,
    pop: &mut PopulationState<R>,
    params: &DeParams,
    problem: &Problem<'_, R>,
) -> Result<()> {
    let per_individual = 6.0 * problem.dim() as f64;
    let trials = (0..pop.len())
        .map(|k| {
            let nu = de_mutation(rng, pop, params.f_mut, k)?;
            flops::charge(per_individual);
            de_crossover(rng, &pop.individuals[k], &nu, params.f_cr)
        })
        .collect::<Result<Vec<_>>>()?;
    de_selection(pop, trials, problem, params.objective)
}

/// Runs `params.n_gen` generations and slices the best individual.
pub fn de_detect<R: Real>(
    rng: &mut RngStream,
    problem: &Problem<'_, R>,
    params: &DeParams,
    strategy: &InitStrategy<R>,
) -> Result<Detection<R>> {
    let mut pop = init_population(rng, params, strategy, problem)?;
    let (k, f) = pop.best();
    let mut out = Detection::start(problem, &pop.individuals[k], f);
    for _ in 0..params.n_gen {
        de_step(rng, &mut pop, params, problem)?;
        let (k, f) = pop.best();
        out.record(problem, &pop.individuals[k], f);
    }
    let (k, _) = pop.best();
    Ok(out.finish(problem, pop.individuals.swap_remove(k), params.n_gen))
}
