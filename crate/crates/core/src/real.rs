//! Real-valued equivalent of the complex system and the heuristic fitness.

use num_complex::Complex;

use crate::error::{dim_err, Result};
use crate::flops;
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::scalar::Real;

/// `y_r = H_r ζ + z_r` with `H_r = [[Re H, −Im H], [Im H, Re H]]` and `y_r = [Re y; Im y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSystem<R> {
    pub h: RealMatrix<R>,
    pub y: Vec<R>,
    n_t: usize,
    n_r: usize,
}

/// `[Re x; Im x]`.
pub fn realify_vec<R: Real>(x: &[Complex<R>]) -> Vec<R> {
    x.iter().map(|z| z.re).chain(x.iter().map(|z| z.im)).collect()
}

/// Inverse of [`realify_vec`].
pub fn complexify<R: Real>(v: &[R]) -> Result<Vec<Complex<R>>> {
    if !v.len().is_multiple_of(2) {
        return dim_err(format!("odd-length real vector ({})", v.len()));
    }
    let half = v.len() / 2;
    Ok(v[..half].iter().zip(&v[half..]).map(|(&re, &im)| Complex::new(re, im)).collect())
}

pub fn realify_matrix<R: Real>(h: &ComplexMatrix<R>) -> RealMatrix<R> {
    let (n_r, n_t) = h.shape();
    RealMatrix::from_fn(2 * n_r, 2 * n_t, |i, j| {
        let z = h[(i % n_r, j % n_t)];
        match (i < n_r, j < n_t) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn realify<R: Real>(h: &ComplexMatrix<R>, y: &[Complex<R>]) -> Result<RealSystem<R>> {
    let (n_r, n_t) = h.shape();
    if y.len() != n_r {
        return dim_err(format!("received vector of length {} for {n_r} antennas", y.len()));
    }
    Ok(RealSystem { h: realify_matrix(h), y: realify_vec(y), n_t, n_r })
}

impl<R: Real> RealSystem<R> {
    /// Search-space dimension `2N_t`.
    pub fn dim(&self) -> usize {
        2 * self.n_t
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    /// `‖y_r − H_r ζ‖²`.
    pub fn fitness(&self, zeta: &[R]) -> Result<R> {
        if zeta.len() != self.dim() {
            return dim_err(format!("candidate of length {} for dimension {}", zeta.len(), self.dim()));
        }
        Ok(self.fitness_unchecked(zeta))
    }

    pub(crate) fn fitness_unchecked(&self, zeta: &[R]) -> R {
        flops::charge_fitness(self.n_t, self.n_r);
        let cols = self.h.cols();
        self.h
            .as_slice()
            .chunks_exact(cols)
            .zip(&self.y)
            .map(|(row, &yi)| {
                let r = yi - row.iter().zip(zeta).fold(R::zero(), |acc, (&a, &b)| acc + a * b);
                r * r
            })
            .sum()
    }
}

/// Free-function form of [`RealSystem::fitness`].
pub fn fitness<R: Real>(sys: &RealSystem<R>, zeta: &[R]) -> Result<R> {
    sys.fitness(zeta)
}
