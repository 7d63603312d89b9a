use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{de_detect, pso_detect, DeParams, Detection, InitStrategy, Problem, PsoParams};
use crate::detector::DetectorKind;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::linear::{apply_equalizer, LinearEqualizer};
use crate::real::realify_vec;
use crate::rng::RngStream;
use crate::scalar::Real;

/// Iteration budget of the hybrid detectors unless overridden.
pub const HYBRID_ITERATIONS: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum HeuristicParams {
    Pso(PsoParams),
    De(DeParams),
}

impl HeuristicParams {
    pub fn iterations(&self) -> usize {
        match self {
            Self::Pso(p) => p.n_iter,
            Self::De(p) => p.n_gen,
        }
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        match &mut self {
            Self::Pso(p) => p.n_iter = n,
            Self::De(p) => p.n_gen = n,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Pso(p) => p.validate(),
            Self::De(p) => p.validate(),
        }
    }

    pub fn run<R: Real>(
        &self,
        rng: &mut RngStream,
        problem: &Problem<'_, R>,
        strategy: &InitStrategy<R>,
    ) -> Result<Detection<R>> {
        match self {
            Self::Pso(p) => pso_detect(rng, problem, p, strategy),
            Self::De(p) => de_detect(rng, problem, p, strategy),
        }
    }
}

/// Linear estimate refined by a heuristic seeded around it.
///
/// The unperturbed linear estimate is kept as one member of the starting
/// population. A zero budget returns the sliced linear estimate. If the
/// linear stage fails the search starts from a uniform population and the
/// result is flagged.
pub fn hybrid_detect<R: Real>(
    rng: &mut RngStream,
    problem: &Problem<'_, R>,
    h: &ComplexMatrix<R>,
    y: &[Complex<R>],
    kind: DetectorKind,
    params: &HeuristicParams,
    n0_over_es: f64,
) -> Result<Detection<R>> {
    let linear = kind
        .linear_part()
        .filter(|_| kind.is_hybrid())
        .ok_or_else(|| Error::InvalidParameter(format!("{kind} is not a hybrid detector")))?;
    match (kind.heuristic(), params) {
        (Some(crate::detector::Heuristic::Pso), HeuristicParams::Pso(_))
        | (Some(crate::detector::Heuristic::De), HeuristicParams::De(_)) => {}
        _ => {
            return Err(Error::InvalidParameter(format!("{kind} given parameters of another heuristic")));
        }
    }
    params.validate()?;
    let seed = LinearEqualizer::new(linear, h, n0_over_es).and_then(|eq| apply_equalizer(&eq, y));
    match seed {
        Ok(soft) => {
            let seed = realify_vec(&soft);
            if params.iterations() == 0 {
                let fit = problem.score(&seed, objective(params))?;
                return Ok(Detection::start(problem, &seed, fit).finish(problem, seed, 0));
            }
            let strategy = InitStrategy::GaussianPerturbed { seed, keep_seed: true };
            params.run(rng, problem, &strategy)
        }
        Err(e) => {
            log::warn!("{kind}: linear stage failed ({e}); starting from a uniform population");
            let mut d = params.run(rng, problem, &InitStrategy::UniformRandom)?;
            d.fallback = true;
            Ok(d)
        }
    }
}

fn objective(params: &HeuristicParams) -> super::SearchObjective {
    match params {
        HeuristicParams::Pso(p) => p.objective,
        HeuristicParams::De(p) => p.objective,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristic::SearchObjective;
    use crate::ofdm::Constellation;
    use crate::real::realify;
    use crate::rng::draw_standard_complex_gaussian;

    fn setup(seed: u64, noise: f64) -> (ComplexMatrix<f64>, Vec<Complex<f64>>) {
        let c = Constellation::<f64>::qam(4).unwrap();
        let mut rng = RngStream::new(seed);
        let h: ComplexMatrix<f64> = draw_standard_complex_gaussian(&mut rng, 4, 4);
        let x: Vec<_> = (0..4).map(|_| c.points()[rng.index(4)]).collect();
        let y = h.matvec(&x).unwrap().into_iter().map(|v| v + rng.complex_gaussian::<f64>() * noise).collect();
        (h, y)
    }

    fn all_params() -> Vec<(DetectorKind, HeuristicParams)> {
        let pso = HeuristicParams::Pso(PsoParams { n_iter: HYBRID_ITERATIONS, ..Default::default() });
        let de = HeuristicParams::De(DeParams { n_gen: HYBRID_ITERATIONS, ..Default::default() });
        vec![
            (DetectorKind::PsoMf, pso),
            (DetectorKind::PsoMmse, pso),
            (DetectorKind::DeMf, de),
            (DetectorKind::DeMmse, de),
        ]
    }

    #[test]
    fn zero_budget_is_the_sliced_linear_estimate() {
        let c = Constellation::qam(4).unwrap();
        for seed in 0..20 {
            let (h, y) = setup(seed, 0.4);
            let prob = Problem::new(realify(&h, &y).unwrap(), &c);
            for (kind, params) in all_params() {
                let eq = LinearEqualizer::new(kind.linear_part().unwrap(), &h, 0.16).unwrap();
                let soft = apply_equalizer(&eq, &y).unwrap();
                let expect: Vec<_> = soft.iter().map(|&s| c.slice(s).0).collect();
                let mut rng = RngStream::new(seed);
                let d = hybrid_detect(&mut rng, &prob, &h, &y, kind, &params.with_iterations(0), 0.16).unwrap();
                assert_eq!(d.symbols, expect);
                assert_eq!(d.iterations, 0);
            }
        }
    }

    #[test]
    fn never_worse_than_the_seed() {
        let c = Constellation::qam(4).unwrap();
        for seed in 0..30 {
            let (h, y) = setup(seed, 0.6);
            let prob = Problem::new(realify(&h, &y).unwrap(), &c);
            for (kind, params) in all_params() {
                let eq = LinearEqualizer::new(kind.linear_part().unwrap(), &h, 0.36).unwrap();
                let seed_vec = realify_vec(&apply_equalizer(&eq, &y).unwrap());
                let seed_fit = prob.score(&seed_vec, SearchObjective::Sliced).unwrap();
                let mut rng = RngStream::new(seed + 100);
                let d = hybrid_detect(&mut rng, &prob, &h, &y, kind, &params, 0.36).unwrap();
                let out_fit = prob.score(&d.best, SearchObjective::Sliced).unwrap();
                assert!(out_fit <= seed_fit);
                assert_eq!(d.trace.len(), HYBRID_ITERATIONS + 1);
                assert!(d.trace[0] <= seed_fit);
                assert!(d.trace.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn singular_linear_stage_falls_back() {
        let c = Constellation::qam(4).unwrap();
        let h = ComplexMatrix::<f64>::zeros(4, 4);
        let y = vec![Complex::new(0.1, 0.2); 4];
        let prob = Problem::new(realify(&h, &y).unwrap(), &c);
        let params = HeuristicParams::Pso(PsoParams { n_iter: 3, ..Default::default() });
        let d = hybrid_detect(&mut RngStream::new(0), &prob, &h, &y, DetectorKind::PsoMmse, &params, 0.0).unwrap();
        assert!(d.fallback);
        assert_eq!(d.symbols.len(), 4);
    }

    #[test]
    fn rejects_mismatched_kinds() {
        let c = Constellation::qam(4).unwrap();
        let (h, y) = setup(1, 0.1);
        let prob = Problem::new(realify(&h, &y).unwrap(), &c);
        let pso = HeuristicParams::Pso(PsoParams::default());
        let de = HeuristicParams::De(DeParams::default());
        let mut rng = RngStream::new(0);
        assert!(hybrid_detect(&mut rng, &prob, &h, &y, DetectorKind::DeMmse, &pso, 0.1).is_err());
        assert!(hybrid_detect(&mut rng, &prob, &h, &y, DetectorKind::PsoMf, &de, 0.1).is_err());
        assert!(hybrid_detect(&mut rng, &prob, &h, &y, DetectorKind::Mmse, &pso, 0.1).is_err());
    }
}
