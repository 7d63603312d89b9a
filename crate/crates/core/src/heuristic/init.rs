use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Standard deviation of the perturbation added around a seed.
pub const PERTURB_SIGMA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    UniformRandom,
    SeededMember,
    GaussianPerturbed,
}

/// How the first population is placed.
#[derive(Clone, Debug, PartialEq)]
pub enum InitStrategy<R> {
    /// Every member uniform over the search box.
    UniformRandom,
    /// Member 0 is the seed, the rest uniform.
    SeededMember(Vec<R>),
    /// Every member is `seed + N(0, σ²)`; with `keep_seed` member 0 is the bare seed.
    GaussianPerturbed { seed: Vec<R>, keep_seed: bool },
}

impl<R: Real> InitStrategy<R> {
    pub fn from_parts(kind: InitKind, seed: Option<Vec<R>>) -> Result<Self> {
        let need = |s: Option<Vec<R>>| {
            s.ok_or_else(|| Error::InvalidParameter(format!("{kind:?} initialization needs a seed vector")))
        };
        Ok(match kind {
            InitKind::UniformRandom => Self::UniformRandom,
            InitKind::SeededMember => Self::SeededMember(need(seed)?),
            InitKind::GaussianPerturbed => Self::GaussianPerturbed { seed: need(seed)?, keep_seed: false },
        })
    }

    pub fn kind(&self) -> InitKind {
        match self {
            Self::UniformRandom => InitKind::UniformRandom,
            Self::SeededMember(_) => InitKind::SeededMember,
            Self::GaussianPerturbed { .. } => InitKind::GaussianPerturbed,
        }
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        match self {
            Self::UniformRandom => Ok(()),
            Self::SeededMember(s) | Self::GaussianPerturbed { seed: s, .. } if s.len() != dim => {
                Err(Error::Dimension(format!("seed of length {} for dimension {dim}", s.len())))
            }
            _ => Ok(()),
        }
    }

    /// Draws `count` starting points of length `dim`.
    pub fn sample(&self, rng: &mut RngStream, count: usize, dim: usize, lo: f64, hi: f64) -> Result<Vec<Vec<R>>> {
        self.check(dim)?;
        let uniform = |rng: &mut RngStream| (0..dim).map(|_| R::lit(rng.uniform_in(lo, hi))).collect::<Vec<R>>();
        Ok((0..count)
            .map(|k| match self {
                Self::UniformRandom => uniform(rng),
                Self::SeededMember(s) if k == 0 => s.clone(),
                Self::SeededMember(_) => uniform(rng),
                Self::GaussianPerturbed { seed, keep_seed: true } if k == 0 => seed.clone(),
                Self::GaussianPerturbed { seed, .. } => {
                    seed.iter().map(|&s| s + R::lit(PERTURB_SIGMA * rng.standard_normal())).collect()
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_seed_is_rejected() {
        assert!(InitStrategy::<f64>::from_parts(InitKind::SeededMember, None).is_err());
        assert!(InitStrategy::<f64>::from_parts(InitKind::GaussianPerturbed, None).is_err());
        assert_eq!(
            InitStrategy::<f64>::from_parts(InitKind::UniformRandom, None).unwrap(),
            InitStrategy::UniformRandom
        );
        let s = InitStrategy::from_parts(InitKind::SeededMember, Some(vec![1.0f64, 2.0])).unwrap();
        assert_eq!(s.kind(), InitKind::SeededMember);
        assert!(s.sample(&mut RngStream::new(0), 3, 3, -1.0, 1.0).is_err());
    }

    #[test]
    fn uniform_points_stay_in_the_box() {
        let pts = InitStrategy::<f64>::UniformRandom.sample(&mut RngStream::new(1), 200, 8, -1.0, 1.0).unwrap();
        assert!(pts.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn seeded_member_is_first() {
        let seed = vec![5.0f64, -5.0];
        let pts = InitStrategy::SeededMember(seed.clone()).sample(&mut RngStream::new(2), 4, 2, -1.0, 1.0).unwrap();
        assert_eq!(pts[0], seed);
        assert!(pts[1..].iter().flatten().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn perturbed_mean_matches_seed() {
        let seed = vec![0.7f64, -0.7, 0.2, 3.0];
        let strat = InitStrategy::GaussianPerturbed { seed: seed.clone(), keep_seed: false };
        let pts = strat.sample(&mut RngStream::new(3), 10_000, 4, -1.0, 1.0).unwrap();
        for (d, &s) in seed.iter().enumerate() {
            let mean = pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64;
            let var = pts.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / pts.len() as f64;
            assert!((mean - s).abs() < 0.05, "dim {d}: {mean}");
            assert!((var - PERTURB_SIGMA * PERTURB_SIGMA).abs() < 0.05, "dim {d}: {var}");
        }
        let kept = InitStrategy::GaussianPerturbed { seed: seed.clone(), keep_seed: true }
            .sample(&mut RngStream::new(3), 2, 4, -1.0, 1.0)
            .unwrap();
        assert_eq!(kept[0], seed);
        assert_ne!(kept[1], seed);
    }
}
