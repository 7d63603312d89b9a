//! Linear equalizers (MF, ZF, MMSE) and the exhaustive ML detector.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::flops::{self, Primitive};
use crate::linalg::{invert_lu, ComplexMatrix};
use crate::ofdm::Constellation;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinearKind {
    Mf,
    Zf,
    Mmse,
}

/// `x̃ = W y` with `W` of size `N_t×N_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEqualizer<R> {
    pub kind: LinearKind,
    pub w: ComplexMatrix<R>,
    pub subcarrier: usize,
}

/// Matched filter `W = Hᴴ`, unnormalized.
pub fn mf_equalizer<R: Real>(h: &ComplexMatrix<R>) -> LinearEqualizer<R> {
    LinearEqualizer { kind: LinearKind::Mf, w: h.hermitian(), subcarrier: 0 }
}

/// Zero forcing `W = (HᴴH)⁻¹Hᴴ`.
pub fn zf_equalizer<R: Real>(h: &ComplexMatrix<R>) -> Result<LinearEqualizer<R>> {
    let (n_r, n_t) = h.shape();
    let hh = h.hermitian();
    let gram = hh.matmul(h)?;
    flops::charge_primitive(Primitive::MatMat { m: 2 * n_t, p: 2 * n_t, q: 2 * n_r });
    let w = pseudo_inverse_tail(&gram, &hh)?;
    Ok(LinearEqualizer { kind: LinearKind::Zf, w, subcarrier: 0 })
}

/// MMSE `W = (HᴴH + (N₀/E_S)·I)⁻¹Hᴴ`.
pub fn mmse_equalizer<R: Real>(h: &ComplexMatrix<R>, n0_over_es: f64) -> Result<LinearEqualizer<R>> {
    if !(n0_over_es >= 0.0) || !n0_over_es.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise-to-signal ratio {n0_over_es} must be finite and non-negative"
        )));
    }
    let (n_r, n_t) = h.shape();
    let hh = h.hermitian();
    let mut gram = hh.matmul(h)?;
    let reg = R::lit(n0_over_es);
    for i in 0..n_t {
        gram[(i, i)].re += reg;
    }
    // Gram plus regularizer as one multiply-add; the scalar touches the diagonal only.
    flops::charge_primitive(Primitive::MultiplyAdd { m: 2 * n_t, p: 2 * n_t, q: 2 * n_r });
    flops::charge(2.0 * n_t as f64);
    let w = pseudo_inverse_tail(&gram, &hh)?;
    Ok(LinearEqualizer { kind: LinearKind::Mmse, w, subcarrier: 0 })
}

fn pseudo_inverse_tail<R: Real>(gram: &ComplexMatrix<R>, hh: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>> {
    let (n_t, n_r) = hh.shape();
    let inv = invert_lu(gram)?;
    flops::charge_primitive(Primitive::LuInverse { q: 2 * n_t });
    let w = inv.matmul(hh)?;
    flops::charge_primitive(Primitive::MatMat { m: 2 * n_t, p: 2 * n_r, q: 2 * n_t });
    Ok(w)
}

impl<R: Real> LinearEqualizer<R> {
    pub fn new(kind: LinearKind, h: &ComplexMatrix<R>, n0_over_es: f64) -> Result<Self> {
        match kind {
            LinearKind::Mf => Ok(mf_equalizer(h)),
            LinearKind::Zf => zf_equalizer(h),
            LinearKind::Mmse => mmse_equalizer(h, n0_over_es),
        }
    }

    pub fn for_subcarrier(mut self, n: usize) -> Self {
        self.subcarrier = n;
        self
    }
}

/// Soft estimate `x̃ = W y`; no slicing.
pub fn apply_equalizer<R: Real>(eq: &LinearEqualizer<R>, y: &[Complex<R>]) -> Result<Vec<Complex<R>>> {
    let out = eq.w.matvec(y)?;
    let (n_t, n_r) = eq.w.shape();
    flops::charge_primitive(Primitive::MatVec { m: 2 * n_t, q: 2 * n_r });
    Ok(out)
}

/// Largest candidate set [`ml_detect`] will enumerate.
pub const ML_SEARCH_LIMIT: u128 = 1 << 20;

/// Exhaustive minimum-distance search over all `M^N_t` symbol vectors.
///
/// Candidates are visited in lexicographic label order (antenna 0 most
/// significant); ties keep the earliest candidate.
pub fn ml_detect<R: Real>(
    h: &ComplexMatrix<R>,
    y: &[Complex<R>],
    constellation: &Constellation<R>,
) -> Result<Vec<Complex<R>>> {
    let (n_r, n_t) = h.shape();
    if y.len() != n_r {
        return dim_err(format!("received vector of length {} for {n_r} antennas", y.len()));
    }
    let m = constellation.order();
    let total = (m as u128).checked_pow(n_t as u32).unwrap_or(u128::MAX);
    if total > ML_SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge(total));
    }
    let points = constellation.points();
    let mut digits = vec![0usize; n_t];
    let mut candidate = vec![points[0]; n_t];
    let mut best = candidate.clone();
    let mut best_metric = R::infinity();
    let zero = Complex::new(R::zero(), R::zero());
    for _ in 0..total {
        for (c, &d) in candidate.iter_mut().zip(&digits) {
            *c = points[d];
        }
        let mut metric = R::zero();
        for (i, &yi) in y.iter().enumerate() {
            let hx = h.row(i).iter().zip(&candidate).fold(zero, |acc, (&a, &b)| acc + a * b);
            metric += (yi - hx).norm_sqr();
        }
        flops::charge_fitness(n_t, n_r);
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(&candidate);
        }
        // Odometer increment, last antenna fastest.
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < m {
                break;
            }
            *d = 0;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{demap_symbols, map_bits};
    use crate::rng::{draw_standard_complex_gaussian, RngStream};

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn random_h(seed: u64, n_r: usize, n_t: usize) -> ComplexMatrix<f64> {
        draw_standard_complex_gaussian(&mut RngStream::new(seed), n_r, n_t)
    }

    fn random_x(seed: u64, n_t: usize) -> Vec<C> {
        let constellation = Constellation::<f64>::qam(4).unwrap();
        let mut rng = RngStream::new(seed);
        (0..n_t).map(|_| constellation.points()[rng.index(4)]).collect()
    }

    #[test]
    fn mf_is_conjugate_transpose() {
        let id = ComplexMatrix::<f64>::identity(3);
        assert_eq!(mf_equalizer(&id).w, id);
        let j = ComplexMatrix::new(1, 1, vec![c(0.0, 1.0)]).unwrap();
        assert_eq!(mf_equalizer(&j).w.as_slice(), &[c(0.0, -1.0)]);
    }

    #[test]
    fn mf_recovers_on_orthogonal_columns() {
        // Columns of a scaled DFT matrix are orthogonal.
        let n = 4;
        let h = ComplexMatrix::from_fn(n, n, |i, k| {
            C::from_polar(1.5, -2.0 * std::f64::consts::PI * (i * k) as f64 / n as f64)
        });
        let x = random_x(4, n);
        let y = h.matvec(&x).unwrap();
        let soft = apply_equalizer(&mf_equalizer(&h), &y).unwrap();
        let norms: Vec<f64> = (0..n).map(|k| h.column(k).iter().map(C::norm_sqr).sum()).collect();
        let scaled: Vec<C> = soft.iter().zip(&norms).map(|(s, nrm)| s / nrm).collect();
        let constellation = Constellation::qam(4).unwrap();
        let decided: Vec<C> = scaled.iter().map(|&s| constellation.slice(s).0).collect();
        assert_eq!(decided, x);
    }

    #[test]
    fn zf_of_scaled_identity() {
        let h = ComplexMatrix::<f64>::identity(4).scale(c(2.0, 0.0));
        let w = zf_equalizer(&h).unwrap().w;
        assert!(w.max_abs_diff(&ComplexMatrix::identity(4).scale(c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn zf_multiplies_back_to_identity() {
        for seed in 0..20 {
            let h = random_h(seed, 4, 4);
            let w = zf_equalizer(&h).unwrap().w;
            assert!(w.matmul(&h).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) <= 1e-9);
        }
        let tall = random_h(99, 6, 4);
        let w = zf_equalizer(&tall).unwrap().w;
        assert!(w.matmul(&tall).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) <= 1e-9);
    }

    #[test]
    fn zf_rejects_rank_deficient() {
        let mut h = random_h(3, 4, 4);
        for i in 0..4 {
            h[(i, 3)] = h[(i, 0)] * 2.0;
        }
        assert!(matches!(zf_equalizer(&h), Err(Error::Singular { .. })));
    }

    #[test]
    fn noiseless_zf_recovers_symbols() {
        let constellation = Constellation::<f64>::qam(4).unwrap();
        let mut rng = RngStream::new(17);
        let bits: Vec<u8> = (0..8).map(|_| rng.bit()).collect();
        let frame = map_bits(&constellation, &bits, 4).unwrap();
        let h = random_h(5, 4, 4);
        let x = frame.subcarrier(0);
        let y = h.matvec(&x).unwrap();
        let soft = apply_equalizer(&zf_equalizer(&h).unwrap(), &y).unwrap();
        for (s, t) in soft.iter().zip(&x) {
            assert!((s - t).norm() < 1e-9);
        }
        assert_eq!(demap_symbols(&soft, &constellation), bits);
    }

    #[test]
    fn mmse_identity_case() {
        let w = mmse_equalizer(&ComplexMatrix::<f64>::identity(4), 1.0).unwrap().w;
        assert!(w.max_abs_diff(&ComplexMatrix::identity(4).scale(c(0.5, 0.0))) < 1e-15);
        assert!(mmse_equalizer(&ComplexMatrix::<f64>::identity(2), -1.0).is_err());
    }

    #[test]
    fn mmse_without_noise_is_zf() {
        for seed in 0..10 {
            let h = random_h(seed + 100, 4, 4);
            let zf = zf_equalizer(&h).unwrap().w;
            let mmse = mmse_equalizer(&h, 0.0).unwrap().w;
            assert!(zf.max_abs_diff(&mmse) <= 1e-9);
        }
    }

    #[test]
    fn mmse_high_noise_aligns_with_mf() {
        let h = random_h(7, 4, 4);
        let w = mmse_equalizer(&h, 1e9).unwrap().w;
        let hh = h.hermitian();
        let fro = |m: &ComplexMatrix<f64>| m.as_slice().iter().map(C::norm_sqr).sum::<f64>().sqrt();
        let a = w.scale(c(1.0 / fro(&w), 0.0));
        let b = hh.scale(c(1.0 / fro(&hh), 0.0));
        assert!(a.max_abs_diff(&b) <= 1e-6);
    }

    #[test]
    fn apply_checks_dimensions() {
        let eq = mf_equalizer(&ComplexMatrix::<f64>::identity(2));
        assert_eq!(apply_equalizer(&eq, &[c(1.0, 2.0), c(3.0, 4.0)]).unwrap(), vec![c(1.0, 2.0), c(3.0, 4.0)]);
        assert!(apply_equalizer(&eq, &[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn mmse_beats_zf_in_mean_square_error() {
        let constellation = Constellation::<f64>::qam(4).unwrap();
        let mut rng = RngStream::new(31);
        let sigma2 = 0.1;
        let (mut e_zf, mut e_mmse) = (0.0, 0.0);
        for _ in 0..10_000 {
            let h: ComplexMatrix<f64> = draw_standard_complex_gaussian(&mut rng, 4, 4);
            let x: Vec<C> = (0..4).map(|_| constellation.points()[rng.index(4)]).collect();
            let y = crate::ofdm::transmit_subcarrier(&h, &x, sigma2, &mut rng).unwrap();
            let err = |eq: LinearEqualizer<f64>| {
                apply_equalizer(&eq, &y).unwrap().iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            };
            e_zf += err(zf_equalizer(&h).unwrap());
            e_mmse += err(mmse_equalizer(&h, sigma2).unwrap());
        }
        assert!(e_mmse <= e_zf, "mmse {e_mmse} zf {e_zf}");
    }

    #[test]
    fn ml_noiseless_and_scalar_cases() {
        let constellation = Constellation::<f64>::qam(4).unwrap();
        let h = random_h(8, 4, 4);
        let x = random_x(9, 4);
        let y = h.matvec(&x).unwrap();
        assert_eq!(ml_detect(&h, &y, &constellation).unwrap(), x);

        let mut rng = RngStream::new(10);
        for _ in 0..200 {
            let h1 = random_h(rng.index(1000) as u64, 1, 1);
            let y1 = vec![rng.complex_gaussian::<f64>()];
            let ml = ml_detect(&h1, &y1, &constellation).unwrap();
            assert_eq!(ml[0], constellation.slice(y1[0] / h1[(0, 0)]).0);
        }
    }

    #[test]
    fn ml_ties_keep_first_candidate() {
        let constellation = Constellation::<f64>::qam(4).unwrap();
        let h = ComplexMatrix::<f64>::zeros(2, 2);
        let ml = ml_detect(&h, &[c(0.0, 0.0), c(0.0, 0.0)], &constellation).unwrap();
        assert_eq!(ml, vec![constellation.points()[0]; 2]);
    }

    #[test]
    fn ml_search_guard() {
        let constellation = Constellation::<f64>::qam(16).unwrap();
        let h = ComplexMatrix::<f64>::identity(6);
        let y = vec![c(0.0, 0.0); 6];
        assert!(matches!(ml_detect(&h, &y, &constellation), Err(Error::SearchSpaceTooLarge(_))));
    }
}
