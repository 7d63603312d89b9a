//! Spatially correlated Rayleigh channels for uniform linear arrays.
//!
//! `H[n] = √R_r · G[n] · √R_tᴴ` with `G[n]` i.i.d. `CN(0, 1)` and Toeplitz
//! correlation `R(i, j) = ρ^((i−j)²)` on both ends of the link.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, ComplexMatrix};
use crate::rng::{draw_standard_complex_gaussian, RngStream};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub rho: f64,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl CorrelationSpec {
    pub fn new(rho: f64, n_tx: usize, n_rx: usize) -> Result<Self> {
        let spec = Self { rho, n_tx, n_rx };
        spec.validate()?;
        Ok(spec)
    }

    /// `N_t = N_r = n`.
    pub fn square(rho: f64, n: usize) -> Result<Self> {
        Self::new(rho, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("correlation index {} outside [0, 1]", self.rho)));
        }
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::InvalidParameter("antenna count must be positive".into()));
        }
        Ok(())
    }
}

/// ULA Toeplitz correlation matrix with entries `ρ^((i−j)²)`.
pub fn build_correlation_matrix<R: Real>(rho: f64, n_antennas: usize) -> ComplexMatrix<R> {
    ComplexMatrix::from_fn(n_antennas, n_antennas, |i, j| {
        let d = i.abs_diff(j) as i32;
        Complex::new(R::lit(rho.powi(d * d)), R::zero())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    IidPerSubcarrier,
    PdpFrequencySelective,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization<R> {
    /// One `N_r×N_t` matrix per subcarrier.
    pub per_subcarrier: Vec<ComplexMatrix<R>>,
    pub correlation: CorrelationSpec,
    pub mode: GenerationMode,
}

impl<R> ChannelRealization<R> {
    pub fn n_subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }
}

/// Precomputed square roots of the transmit and receive correlation matrices.
#[derive(Clone, Debug)]
pub struct KroneckerShaper<R> {
    spec: CorrelationSpec,
    rx_sqrt: Option<ComplexMatrix<R>>,
    tx_sqrt_h: Option<ComplexMatrix<R>>,
}

impl<R: Real> KroneckerShaper<R> {
    pub fn new(spec: CorrelationSpec) -> Result<Self> {
        spec.validate()?;
        // At ρ = 0 both matrices are the identity; skipping the products keeps H = G bit for bit.
        if spec.rho == 0.0 {
            return Ok(Self { spec, rx_sqrt: None, tx_sqrt_h: None });
        }
        let rx = psd_sqrt(&build_correlation_matrix::<R>(spec.rho, spec.n_rx))?;
        let tx = psd_sqrt(&build_correlation_matrix::<R>(spec.rho, spec.n_tx))?;
        Ok(Self { spec, rx_sqrt: Some(rx), tx_sqrt_h: Some(tx.hermitian()) })
    }

    pub fn spec(&self) -> &CorrelationSpec {
        &self.spec
    }

    /// Applies `√R_r · G · √R_tᴴ`.
    pub fn shape(&self, g: &ComplexMatrix<R>) -> ComplexMatrix<R> {
        match (&self.rx_sqrt, &self.tx_sqrt_h) {
            (Some(rx), Some(tx)) => {
                rx.matmul(g).and_then(|m| m.matmul(tx)).expect("shaper dimensions fixed at construction")
            }
            _ => g.clone(),
        }
    }

    /// Draws one correlated `N_r×N_t` matrix.
    pub fn draw(&self, rng: &mut RngStream) -> ComplexMatrix<R> {
        let g = draw_standard_complex_gaussian(rng, self.spec.n_rx, self.spec.n_tx);
        self.shape(&g)
    }
}

/// Independent correlated channel per subcarrier.
pub fn generate_channel<R: Real>(
    rng: &mut RngStream,
    spec: CorrelationSpec,
    n_subcarriers: usize,
) -> Result<ChannelRealization<R>> {
    if n_subcarriers == 0 {
        return Err(Error::InvalidParameter("need at least one subcarrier".into()));
    }
    let shaper = KroneckerShaper::new(spec)?;
    Ok(ChannelRealization {
        per_subcarrier: (0..n_subcarriers).map(|_| shaper.draw(rng)).collect(),
        correlation: spec,
        mode: GenerationMode::IidPerSubcarrier,
    })
}

/// Exponential power delay profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdpSpec {
    pub bandwidth_hz: f64,
    pub tau_rms_s: f64,
    pub n_taps: usize,
}

impl Default for PdpSpec {
    fn default() -> Self {
        Self { bandwidth_hz: 20e6, tau_rms_s: 64e-9, n_taps: 8 }
    }
}

impl PdpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.tau_rms_s > 0.0 && self.n_taps >= 1) {
            return Err(Error::InvalidParameter(format!("invalid power delay profile {self:?}")));
        }
        Ok(())
    }

    /// Tap powers `p_l ∝ exp(−l·T_s/τ_rms)`, normalized to sum to one.
    pub fn tap_powers(&self) -> Vec<f64> {
        let ts = 1.0 / self.bandwidth_hz;
        let raw: Vec<f64> = (0..self.n_taps).map(|l| (-(l as f64) * ts / self.tau_rms_s).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

/// Per-tap `N_r×N_t` matrices, each spatially correlated and scaled by its PDP power.
pub fn generate_pdp_taps<R: Real>(
    rng: &mut RngStream,
    spec: CorrelationSpec,
    pdp: &PdpSpec,
) -> Result<Vec<ComplexMatrix<R>>> {
    pdp.validate()?;
    let shaper = KroneckerShaper::new(spec)?;
    Ok(pdp
        .tap_powers()
        .into_iter()
        .map(|p| {
            let amp = Complex::new(R::lit(p.sqrt()), R::zero());
            shaper.draw(rng).scale(amp)
        })
        .collect())
}

/// Frequency response `H[n] = Σ_l h_l e^{−j2πln/N}` of a tapped-delay-line MIMO channel.
pub fn taps_to_subcarriers<R: Real>(taps: &[ComplexMatrix<R>], n_subcarriers: usize) -> Result<Vec<ComplexMatrix<R>>> {
    let first = taps.first().ok_or_else(|| Error::InvalidParameter("empty tap list".into()))?;
    if taps.len() > n_subcarriers {
        return Err(Error::InvalidParameter(format!("{} taps exceed {} subcarriers", taps.len(), n_subcarriers)));
    }
    let (rows, cols) = first.shape();
    let fft = FftPlanner::<R>::new().plan_fft_forward(n_subcarriers);
    let mut out = vec![ComplexMatrix::zeros(rows, cols); n_subcarriers];
    let mut buf = vec![Complex::new(R::zero(), R::zero()); n_subcarriers];
    for i in 0..rows {
        for j in 0..cols {
            buf.iter_mut().for_each(|b| *b = Complex::new(R::zero(), R::zero()));
            for (l, tap) in taps.iter().enumerate() {
                buf[l] = tap[(i, j)];
            }
            fft.process(&mut buf);
            for (n, h) in out.iter_mut().enumerate() {
                h[(i, j)] = buf[n];
            }
        }
    }
    Ok(out)
}

/// Frequency-selective channel derived from an exponential PDP.
pub fn generate_pdp_channel<R: Real>(
    rng: &mut RngStream,
    spec: CorrelationSpec,
    pdp: &PdpSpec,
    n_subcarriers: usize,
) -> Result<ChannelRealization<R>> {
    if pdp.n_taps > n_subcarriers {
        return Err(Error::InvalidParameter(format!("{} taps exceed {} subcarriers", pdp.n_taps, n_subcarriers)));
    }
    let taps = generate_pdp_taps(rng, spec, pdp)?;
    Ok(ChannelRealization {
        per_subcarrier: taps_to_subcarriers(&taps, n_subcarriers)?,
        correlation: spec,
        mode: GenerationMode::PdpFrequencySelective,
    })
}

/// Adds circularly-symmetric Gaussian noise of per-entry variance `sigma2`.
///
/// Noise draws are consumed even when `sigma2 = 0`, so the stream position
/// does not depend on the operating point.
pub fn add_awgn<R: Real>(rng: &mut RngStream, y_clean: &[Complex<R>], sigma2: f64) -> Vec<Complex<R>> {
    assert!(sigma2 >= 0.0, "noise variance must be non-negative");
    let std = R::lit(sigma2.sqrt());
    y_clean.iter().map(|&y| y + rng.complex_gaussian::<R>() * std).collect()
}

/// Matrix form of [`add_awgn`].
pub fn add_awgn_matrix<R: Real>(rng: &mut RngStream, y: &ComplexMatrix<R>, sigma2: f64) -> ComplexMatrix<R> {
    let noisy = add_awgn(rng, y.as_slice(), sigma2);
    ComplexMatrix::new(y.rows(), y.cols(), noisy).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;

    type C = Complex<f64>;

    #[test]
    fn zero_correlation_is_identity() {
        let r: ComplexMatrix<f64> = build_correlation_matrix(0.0, 4);
        assert_eq!(r, ComplexMatrix::identity(4));
    }

    #[test]
    fn toeplitz_pattern() {
        let r: ComplexMatrix<f64> = build_correlation_matrix(0.5, 2);
        assert_eq!(r.as_slice(), &[C::new(1.0, 0.0), C::new(0.5, 0.0), C::new(0.5, 0.0), C::new(1.0, 0.0)]);
        let r: ComplexMatrix<f64> = build_correlation_matrix(0.9, 4);
        assert!((r[(0, 3)].re - 0.387_420_489).abs() < 1e-15);
        assert!((r[(3, 0)].re - 0.387_420_489).abs() < 1e-15);
        assert!((r[(0, 2)].re - 0.9f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn correlation_matrix_is_psd_over_rho() {
        for k in 0..=20 {
            let rho = k as f64 / 20.0;
            for n in 1..=6 {
                let r: ComplexMatrix<f64> = build_correlation_matrix(rho, n);
                assert!(r.is_hermitian(0.0));
                assert!((0..n).all(|i| r[(i, i)].re == 1.0));
                let (vals, _) = hermitian_eigen(&r).unwrap();
                assert!(vals[0] >= -1e-10, "rho {rho} n {n} min eig {}", vals[0]);
            }
        }
    }

    #[test]
    fn sqrt_reproduces_correlation() {
        let r: ComplexMatrix<f64> = build_correlation_matrix(0.5, 4);
        let s = psd_sqrt(&r).unwrap();
        assert!(s.matmul(&s.hermitian()).unwrap().max_abs_diff(&r) <= 1e-9);
        // ρ = 1 is singular but still has a square root.
        let r1: ComplexMatrix<f64> = build_correlation_matrix(1.0, 4);
        let s1 = psd_sqrt(&r1).unwrap();
        assert!(s1.matmul(&s1.hermitian()).unwrap().max_abs_diff(&r1) <= 1e-9);
    }

    #[test]
    fn uncorrelated_channel_equals_raw_draw() {
        let spec = CorrelationSpec::square(0.0, 4).unwrap();
        let h: ChannelRealization<f64> = generate_channel(&mut RngStream::new(8), spec, 3).unwrap();
        let mut rng = RngStream::new(8);
        for hn in &h.per_subcarrier {
            let g: ComplexMatrix<f64> = draw_standard_complex_gaussian(&mut rng, 4, 4);
            assert_eq!(hn, &g);
        }
        assert_eq!(h.mode, GenerationMode::IidPerSubcarrier);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = CorrelationSpec::square(0.9, 4).unwrap();
        let a: ChannelRealization<f64> = generate_channel(&mut RngStream::new(4), spec, 8).unwrap();
        let b: ChannelRealization<f64> = generate_channel(&mut RngStream::new(4), spec, 8).unwrap();
        assert_eq!(a, b);
        assert!(a.per_subcarrier.iter().all(|h| h.all_finite() && h.shape() == (4, 4)));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(CorrelationSpec::square(1.5, 4).is_err());
        assert!(CorrelationSpec::square(-0.1, 4).is_err());
        assert!(CorrelationSpec::square(0.5, 0).is_err());
        let spec = CorrelationSpec::square(0.5, 2).unwrap();
        assert!(generate_channel::<f64>(&mut RngStream::new(1), spec, 0).is_err());
        let bad = PdpSpec { n_taps: 0, ..PdpSpec::default() };
        assert!(generate_pdp_channel::<f64>(&mut RngStream::new(1), spec, &bad, 8).is_err());
        let long = PdpSpec { n_taps: 16, ..PdpSpec::default() };
        assert!(generate_pdp_channel::<f64>(&mut RngStream::new(1), spec, &long, 8).is_err());
    }

    #[test]
    fn tap_powers_normalized_and_decaying() {
        let p = PdpSpec::default().tap_powers();
        assert_eq!(p.len(), 8);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.windows(2).all(|w| w[1] < w[0]));
        let ratio = (-(1.0 / 20e6) / 64e-9f64).exp();
        assert!((p[1] / p[0] - ratio).abs() < 1e-12);
    }

    #[test]
    fn single_tap_is_flat() {
        let spec = CorrelationSpec::square(0.5, 2).unwrap();
        let pdp = PdpSpec { n_taps: 1, ..PdpSpec::default() };
        let h: ChannelRealization<f64> = generate_pdp_channel(&mut RngStream::new(3), spec, &pdp, 16).unwrap();
        for hn in &h.per_subcarrier[1..] {
            assert!(hn.max_abs_diff(&h.per_subcarrier[0]) < 1e-14);
        }
    }

    #[test]
    fn noiseless_awgn_is_identity() {
        let y = vec![C::new(1.0, -2.0), C::new(0.25, 3.0)];
        assert_eq!(add_awgn(&mut RngStream::new(1), &y, 0.0), y);
    }

    #[test]
    fn awgn_moments() {
        let mut rng = RngStream::new(99);
        let n = 1_000_000;
        let clean = vec![C::new(0.3, -0.7); n];
        let noisy = add_awgn(&mut rng, &clean, 0.5);
        let diffs: Vec<C> = noisy.iter().zip(&clean).map(|(a, b)| a - b).collect();
        let mean: C = diffs.iter().sum::<C>() / n as f64;
        let var = diffs.iter().map(|d| (d - mean).norm_sqr()).sum::<f64>() / n as f64;
        assert!(mean.norm() < 0.01);
        assert!((var - 0.5).abs() < 0.01, "variance {var}");
    }
}
