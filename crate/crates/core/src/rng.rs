//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator seeded from a 64-bit key. Substreams are
//! keyed by hashing the parent seed with a tuple of integers, so work items can
//! draw independently of the order in which they are scheduled.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::ComplexMatrix;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to key substreams by name.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3))
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Stream keyed by `(master, keys...)`.
    pub fn substream(master: u64, keys: &[u64]) -> Self {
        let seed = keys.iter().fold(mix(master), |h, &k| mix(h ^ mix(k.wrapping_add(0x632B_E59B_D9B4_E019))));
        Self::new(seed)
    }

    /// Child stream keyed on this stream's seed, independent of its current position.
    pub fn derive(&self, key: u64) -> Self {
        Self::substream(self.seed, &[key])
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn bit(&mut self) -> u8 {
        u8::from(self.inner.random::<bool>())
    }

    /// Circularly-symmetric complex Gaussian with unit total variance.
    pub fn complex_gaussian<R: Real>(&mut self) -> Complex<R> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex::new(R::lit(self.standard_normal() * s), R::lit(self.standard_normal() * s))
    }
}

/// Matrix of i.i.d. `CN(0, 1)` entries.
pub fn draw_standard_complex_gaussian<R: Real>(rng: &mut RngStream, rows: usize, cols: usize) -> ComplexMatrix<R> {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian())
}
