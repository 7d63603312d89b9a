//! Statistical checks of the channel generator and the OFDM chain.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_correlation_matrix, generate_pdp_taps, taps_to_subcarriers, CorrelationSpec, KroneckerShaper, PdpSpec,
};
use crate::error::Result;
use crate::linalg::ComplexMatrix;
use crate::ofdm::time_domain_roundtrip;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelValidation {
    pub rho: f64,
    pub samples: usize,
    /// Largest entrywise gap between the sample covariance of `vec(H)` and `R_t ⊗ R_r`.
    pub covariance_max_error: f64,
    pub covariance_tolerance: f64,
    /// Largest gap between the time-domain chain and `H[n]·x[n]`.
    pub cp_max_error: f64,
    pub cp_tolerance: f64,
}

impl ChannelValidation {
    pub fn passed(&self) -> bool {
        self.covariance_max_error <= self.covariance_tolerance && self.cp_max_error <= self.cp_tolerance
    }
}

/// Sample covariance `E[H_ij · conj(H_kl)]` against `R_r[i,k]·R_t[j,l]`, entrywise.
pub fn kronecker_covariance_error(spec: CorrelationSpec, samples: usize, rng: &mut RngStream) -> Result<f64> {
    covariance_gap(spec, spec.rho, samples, rng)
}

fn covariance_gap(spec: CorrelationSpec, model_rho: f64, samples: usize, rng: &mut RngStream) -> Result<f64> {
    let shaper = KroneckerShaper::<f64>::new(spec)?;
    let (n_r, n_t) = (spec.n_rx, spec.n_tx);
    let d = n_r * n_t;
    let mut acc = vec![Complex::new(0.0, 0.0); d * d];
    for _ in 0..samples {
        let h = shaper.draw(rng);
        let v = h.as_slice();
        for a in 0..d {
            for b in 0..d {
                acc[a * d + b] += v[a] * v[b].conj();
            }
        }
    }
    let r_r = build_correlation_matrix::<f64>(model_rho, n_r);
    let r_t = build_correlation_matrix::<f64>(model_rho, n_t);
    let mut worst: f64 = 0.0;
    for a in 0..d {
        let (i, j) = (a / n_t, a % n_t);
        for b in 0..d {
            let (k, l) = (b / n_t, b % n_t);
            let expect = r_r[(i, k)] * r_t[(j, l)];
            worst = worst.max((acc[a * d + b] / samples as f64 - expect).norm());
        }
    }
    Ok(worst)
}

/// Largest deviation of the IDFT/CP/convolution/DFT chain from the per-subcarrier model.
pub fn cp_equivalence_error(
    spec: CorrelationSpec,
    pdp: &PdpSpec,
    n_subcarriers: usize,
    cp_len: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let taps = generate_pdp_taps::<f64>(rng, spec, pdp)?;
    let freq = taps_to_subcarriers(&taps, n_subcarriers)?;
    let x = ComplexMatrix::from_fn(spec.n_tx, n_subcarriers, |_, _| rng.complex_gaussian::<f64>());
    let y = time_domain_roundtrip(&taps, &x, cp_len)?;
    let mut worst: f64 = 0.0;
    for (n, h) in freq.iter().enumerate() {
        let expect = h.matvec(&x.column(n))?;
        for (r, e) in expect.iter().enumerate() {
            worst = worst.max((y[(r, n)] - e).norm());
        }
    }
    Ok(worst)
}

/// Runs both checks with the tolerances used by the test suite.
pub fn validate_channel(rho: f64, n_t: usize, n_r: usize, samples: usize, seed: u64) -> Result<ChannelValidation> {
    let spec = CorrelationSpec::new(rho, n_t, n_r)?;
    let mut rng = RngStream::substream(seed, &[1]);
    let covariance_max_error = kronecker_covariance_error(spec, samples, &mut rng)?;
    let mut rng = RngStream::substream(seed, &[2]);
    let pdp = PdpSpec::default();
    let cp_max_error = cp_equivalence_error(spec, &pdp, 64, 16, &mut rng)?;
    Ok(ChannelValidation {
        rho,
        samples,
        covariance_max_error,
        covariance_tolerance: 0.02,
        cp_max_error,
        cp_tolerance: 1e-10,
    })
}
