//! Confidence intervals and one-sided comparisons for bit-error counts.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95_TWO_SIDED: f64 = 1.959_963_984_540_054;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// Half-width of the normal-approximation 95% interval for a binomial proportion.
pub fn binomial_ci95(errors: u64, bits: u64) -> f64 {
    if bits == 0 {
        return 0.0;
    }
    let p = errors as f64 / bits as f64;
    Z95_TWO_SIDED * (p * (1.0 - p) / bits as f64).sqrt()
}

/// Running first and second moments of per-trial bit-error counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorMoments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl ErrorMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Paired comparison of two detectors run on the same trials: `d = errors(a) − errors(b)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairedDiff {
    pub d: ErrorMoments,
}

impl PairedDiff {
    pub fn push(&mut self, a: f64, b: f64) {
        self.d.push(a - b);
    }

    /// Upper one-sided 95% bound on `E[a − b]` per trial.
    pub fn upper95(&self) -> f64 {
        self.d.mean() + Z95_ONE_SIDED * self.d.std_error()
    }

    /// Lower one-sided 95% bound on `E[a − b]` per trial.
    pub fn lower95(&self) -> f64 {
        self.d.mean() - Z95_ONE_SIDED * self.d.std_error()
    }

    /// `a ≤ b` supported: the upper bound on the mean difference is not positive.
    pub fn a_at_most_b(&self) -> bool {
        self.d.n > 0 && self.upper95() <= 0.0
    }

    /// `a < b` supported: the upper bound is negative.
    pub fn a_less_than_b(&self) -> bool {
        self.d.n > 0 && self.upper95() < 0.0
    }
}

/// Welch-type comparison of mean per-trial errors from independent samples.
///
/// Returns the lower one-sided 95% bound on `mean(a) − mean(b)`.
pub fn independent_lower95(a: &ErrorMoments, b: &ErrorMoments) -> f64 {
    let se = (a.variance() / a.n.max(1) as f64 + b.variance() / b.n.max(1) as f64).sqrt();
    a.mean() - b.mean() - Z95_ONE_SIDED * se
}
