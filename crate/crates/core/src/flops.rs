//! Closed-form FLOP accounting and an opt-in runtime counter.
//!
//! Counting conventions: real-valued flops, complex arithmetic charged at its
//! real-equivalent dimensions (a complex `m×q` operand counts as `2m×2q`),
//! conjugate transposes, comparisons and random draws are free.

use std::cell::Cell;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::DetectorKind;
use crate::error::{Error, Result};

/// Basic operations with a fixed flop price.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Primitive {
    Sqrt,
    /// `sqrt(wᵀw)` for `w` of length `n`.
    Norm2 {
        n: usize,
    },
    /// `A w` with `A` of size `m×q`.
    MatVec {
        m: usize,
        q: usize,
    },
    /// `A B` with `A` `m×q` and `B` `q×p`.
    MatMat {
        m: usize,
        p: usize,
        q: usize,
    },
    /// `A B + C`.
    MultiplyAdd {
        m: usize,
        p: usize,
        q: usize,
    },
    /// Inverse of a `q×q` matrix via LU factorization.
    LuInverse {
        q: usize,
    },
}

impl Primitive {
    /// Builds a primitive from its name and the `(m, p, q)` dimensions; unused
    /// dimensions are ignored (`norm2` takes its length from `q`).
    pub fn from_name(kind: &str, m: usize, p: usize, q: usize) -> Result<Self> {
        Ok(match kind {
            "sqrt" => Self::Sqrt,
            "norm2" => Self::Norm2 { n: q },
            "matvec" => Self::MatVec { m, q },
            "matmat" => Self::MatMat { m, p, q },
            "multiply-add" => Self::MultiplyAdd { m, p, q },
            "lu-inverse" => Self::LuInverse { q },
            other => return Err(Error::InvalidParameter(format!("unknown flop primitive `{other}`"))),
        })
    }

    pub fn flops(self) -> f64 {
        match self {
            Self::Sqrt => 8.0,
            Self::Norm2 { n } => 2.0 * n as f64 - 1.0 + 8.0,
            Self::MatVec { m, q } => m as f64 * (2.0 * q as f64 - 1.0),
            Self::MatMat { m, p, q } => (m * p) as f64 * (2.0 * q as f64 - 1.0),
            Self::MultiplyAdd { m, p, q } => 2.0 * (m * p * q) as f64,
            Self::LuInverse { q } => {
                let q = q as f64;
                2.0 / 3.0 * q * q * q + 2.0 * q * q
            }
        }
    }
}

pub fn flops_primitive(kind: &str, m: usize, p: usize, q: usize) -> Result<f64> {
    Primitive::from_name(kind, m, p, q).map(Primitive::flops)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopInput {
    pub n_t: usize,
    pub n_r: usize,
    /// `N_pop` for PSO, `N_ind` for DE.
    pub population: usize,
    /// `I` for stand-alone heuristics, `I_hyb` for hybrids.
    pub iters: usize,
    pub m_order: usize,
}

fn mf(n_t: f64, n_r: f64) -> f64 {
    2.0 * n_t * (4.0 * n_r - 1.0)
}

fn zf(n_t: f64, n_r: f64) -> f64 {
    16.0 / 3.0 * n_t.powi(3) + 4.0 * n_t * n_t + 32.0 * n_t * n_t * n_r + 4.0 * n_t * n_r - 2.0 * n_t
}

fn mmse(n_t: f64, n_r: f64) -> f64 {
    16.0 / 3.0 * n_t.powi(3) + 8.0 * n_t * n_t + 32.0 * n_t * n_t * n_r + 4.0 * n_t * n_r
}

/// Per-particle, per-iteration PSO cost: one fitness plus the vector update.
pub fn pso_particle_flops(n_t: usize, n_r: usize) -> f64 {
    let (t, r) = (n_t as f64, n_r as f64);
    8.0 * t * r + 20.0 * t + 4.0 * r + 7.0
}

/// Per-individual, per-generation DE cost: two fitness evaluations plus mutation/crossover.
pub fn de_individual_flops(n_t: usize, n_r: usize) -> f64 {
    let (t, r) = (n_t as f64, n_r as f64);
    16.0 * t * r + 12.0 * t + 8.0 * r + 14.0
}

/// One evaluation of `‖y − Hζ‖` in the real-valued system.
pub fn fitness_flops(n_t: usize, n_r: usize) -> f64 {
    Primitive::MatVec { m: 2 * n_r, q: 2 * n_t }.flops() + 2.0 * n_r as f64 + Primitive::Norm2 { n: 2 * n_r }.flops()
}

/// Per-subcarrier flops of a detector.
pub fn flops_detector(kind: DetectorKind, input: &FlopInput) -> f64 {
    let (t, r) = (input.n_t as f64, input.n_r as f64);
    let pso = || input.population as f64 * input.iters as f64 * pso_particle_flops(input.n_t, input.n_r);
    let de = || input.population as f64 * input.iters as f64 * de_individual_flops(input.n_t, input.n_r);
    match kind {
        DetectorKind::Mf => mf(t, r),
        DetectorKind::Zf => zf(t, r),
        DetectorKind::Mmse => mmse(t, r),
        DetectorKind::Pso => pso(),
        DetectorKind::De => de(),
        DetectorKind::PsoMf => pso() + mf(t, r),
        DetectorKind::PsoMmse => pso() + mmse(t, r),
        DetectorKind::DeMf => de() + mf(t, r),
        DetectorKind::DeMmse => de() + mmse(t, r),
        DetectorKind::Ml => (input.m_order as f64).powf(2.0 * t) * (8.0 * t * r + 4.0 * r + 7.0),
    }
}

/// Fixed settings for a complexity-versus-antennas sweep.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Population size per real dimension (`N_pop = factor · 2N_t`).
    pub population_per_dim: usize,
    pub iters: usize,
    pub hybrid_iters: usize,
    pub m_order: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { population_per_dim: 5, iters: 50, hybrid_iters: 15, m_order: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub n_t: usize,
    pub detector: DetectorKind,
    pub flops: f64,
}

/// Flops of every detector at `N_t = N_r = n` for each `n` in `n_t_values`.
pub fn complexity_sweep(n_t_values: &[usize], cfg: &SweepConfig) -> Vec<ComplexityRow> {
    let mut rows = Vec::with_capacity(n_t_values.len() * DetectorKind::ALL.len());
    for &n_t in n_t_values {
        for kind in DetectorKind::ALL {
            let iters = if kind.is_hybrid() { cfg.hybrid_iters } else { cfg.iters };
            let input =
                FlopInput { n_t, n_r: n_t, population: cfg.population_per_dim * 2 * n_t, iters, m_order: cfg.m_order };
            rows.push(ComplexityRow { n_t, detector: kind, flops: flops_detector(kind, &input) });
        }
    }
    rows
}

pub fn write_complexity_csv(rows: &[ComplexityRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "n_t,detector,flops")?;
    for row in rows {
        writeln!(out, "{},{},{}", row.n_t, row.detector, row.flops)?;
    }
    Ok(())
}

/// Counts accumulated while [`instrument`] is active on the current thread.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FlopTally {
    pub flops: f64,
    pub fitness_evaluations: u64,
}

impl fmt::Display for FlopTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} flops, {} fitness evaluations", self.flops, self.fitness_evaluations)
    }
}

impl std::ops::AddAssign for FlopTally {
    fn add_assign(&mut self, rhs: Self) {
        self.flops += rhs.flops;
        self.fitness_evaluations += rhs.fitness_evaluations;
    }
}

thread_local! {
    static TALLY: Cell<Option<FlopTally>> = const { Cell::new(None) };
}

/// Runs `f` with flop counting enabled on this thread and returns what it charged.
///
/// Nested calls are folded into the outermost tally.
pub fn instrument<T>(f: impl FnOnce() -> T) -> (T, FlopTally) {
    let outer = TALLY.with(|t| t.replace(Some(FlopTally::default())));
    let value = f();
    let inner = TALLY.with(|t| t.replace(outer)).unwrap_or_default();
    if let Some(mut o) = outer {
        o += inner;
        TALLY.with(|t| t.set(Some(o)));
    }
    (value, inner)
}

pub(crate) fn charge(flops: f64) {
    TALLY.with(|t| {
        if let Some(mut tally) = t.get() {
            tally.flops += flops;
            t.set(Some(tally));
        }
    });
}

pub(crate) fn charge_primitive(p: Primitive) {
    charge(p.flops());
}

pub(crate) fn charge_fitness(n_t: usize, n_r: usize) {
    TALLY.with(|t| {
        if let Some(mut tally) = t.get() {
            tally.flops += fitness_flops(n_t, n_r);
            tally.fitness_evaluations += 1;
            t.set(Some(tally));
        }
    });
}

impl FromStr for Primitive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, 1, 1, 1)
    }
}
