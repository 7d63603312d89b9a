//! Monte Carlo BER engine.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DetectorConfig, SimulationConfig};
use super::stats::{binomial_ci95, ErrorMoments, PairedDiff};
use crate::channel::{taps_to_subcarriers, CorrelationSpec, GenerationMode, KroneckerShaper};
use crate::detector::DetectorKind;
use crate::error::{Error, Result};
use crate::flops;
use crate::heuristic::{hybrid_detect, HeuristicParams, InitStrategy, Problem};
use crate::linalg::ComplexMatrix;
use crate::linear::{apply_equalizer, ml_detect, LinearEqualizer};
use crate::ofdm::{demap_symbols, map_bits, transmit_subcarrier, Constellation, NoiseSpec, TxFrame};
use crate::real::realify;
use crate::rng::{stable_hash, RngStream};
use crate::scalar::Real;

const CHANNEL_STREAM: u64 = 0x4348_414e;
const DETECTOR_STREAM: u64 = 0x4445_5445;
/// Frames per parallel batch grow by doubling up to this size.
const MAX_BATCH_FRAMES: u64 = 16;

/// One operating point; the indices key the random streams.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub ebn0_idx: usize,
    pub ebn0_db: f64,
    pub rho_idx: usize,
    pub rho: f64,
}

impl Point {
    pub fn new(ebn0_idx: usize, ebn0_db: f64, rho_idx: usize, rho: f64) -> Self {
        Self { ebn0_idx, ebn0_db, rho_idx, rho }
    }
}

/// A detector evaluated at one or more iteration budgets from a single run.
#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub detector: DetectorConfig,
    /// Empty means the configured budget only.
    pub budgets: Vec<usize>,
}

impl Arm {
    pub fn new(detector: DetectorConfig) -> Self {
        Self { detector, budgets: Vec::new() }
    }

    pub fn with_budgets(detector: DetectorConfig, budgets: Vec<usize>) -> Self {
        Self { detector, budgets }
    }
}

/// When to stop sampling an operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub max_trials: u64,
    /// Stop once every column has seen this many bit errors.
    pub target_bit_errors: Option<u64>,
}

impl StopRule {
    pub fn fixed(trials: u64) -> Self {
        Self { max_trials: trials, target_bit_errors: None }
    }
}

/// One measured operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub detector: String,
    pub ebn0_db: f64,
    pub rho: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci95: f64,
    pub mean_iterations: f64,
    pub flops_per_subcarrier: f64,
    /// Trials whose linear stage failed (counted as errors, or seeded uniformly for hybrids).
    pub failures: u64,
}

/// Totals for one (arm, budget) column.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub detector: String,
    pub budget: Option<usize>,
    pub bit_errors: u64,
    pub moments: ErrorMoments,
}

/// Result of [`Simulator::evaluate`].
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub point: Point,
    pub trials: u64,
    pub bits_per_trial: u64,
    pub columns: Vec<Column>,
    /// Per arm.
    pub flops: Vec<f64>,
    pub iterations: Vec<f64>,
    pub failures: Vec<u64>,
    /// `pairs[a * n + b]` compares column `a` against column `b`.
    pairs: Vec<PairedDiff>,
}

impl Evaluation {
    pub fn column(&self, detector: &str, budget: Option<usize>) -> Option<usize> {
        self.columns.iter().position(|c| c.detector == detector && (budget.is_none() || c.budget == budget))
    }

    pub fn ber(&self, col: usize) -> f64 {
        self.columns[col].bit_errors as f64 / (self.trials * self.bits_per_trial).max(1) as f64
    }

    pub fn ci95(&self, col: usize) -> f64 {
        binomial_ci95(self.columns[col].bit_errors, self.trials * self.bits_per_trial)
    }

    /// Paired per-trial difference `errors(a) − errors(b)`.
    pub fn paired(&self, a: usize, b: usize) -> &PairedDiff {
        &self.pairs[a * self.columns.len() + b]
    }

    /// Paired per-trial contrast `errors(a) − scale·errors(b)`.
    pub fn contrast(&self, a: usize, b: usize, scale: f64) -> PairedDiff {
        let (ma, mb) = (&self.columns[a].moments, &self.columns[b].moments);
        let diff = &self.paired(a, b).d;
        let cross = 0.5 * (ma.sum_sq + mb.sum_sq - diff.sum_sq);
        PairedDiff {
            d: ErrorMoments {
                n: ma.n,
                sum: ma.sum - scale * mb.sum,
                sum_sq: ma.sum_sq + scale * scale * mb.sum_sq - 2.0 * scale * cross,
            },
        }
    }

    /// Record for the first column of arm `arm`.
    pub fn record(&self, arm: usize, col: usize) -> BerRecord {
        let bits = self.trials * self.bits_per_trial;
        let c = &self.columns[col];
        BerRecord {
            detector: c.detector.clone(),
            ebn0_db: self.point.ebn0_db,
            rho: self.point.rho,
            trials: self.trials,
            bit_errors: c.bit_errors,
            ber: c.bit_errors as f64 / bits.max(1) as f64,
            ci95: binomial_ci95(c.bit_errors, bits),
            mean_iterations: self.iterations[arm] / self.trials.max(1) as f64,
            flops_per_subcarrier: self.flops[arm] / self.trials.max(1) as f64,
            failures: self.failures[arm],
        }
    }
}

/// Transmitted and received data of one OFDM frame.
#[derive(Clone, Debug)]
pub struct FrameData<R> {
    pub channel: Vec<ComplexMatrix<R>>,
    pub tx: TxFrame<R>,
    pub received: Vec<Vec<Complex<R>>>,
}

struct ResolvedArm {
    id: String,
    kind: DetectorKind,
    params: Option<HeuristicParams>,
    /// Sorted, deduplicated budgets; a single `None` entry for non-iterative detectors.
    budgets: Vec<Option<usize>>,
    run_budget: usize,
}

struct FrameOutcome {
    /// `errors[col][trial]`.
    errors: Vec<Vec<u32>>,
    flops: Vec<f64>,
    iterations: Vec<f64>,
    failures: Vec<u64>,
}

pub struct Simulator<R> {
    cfg: SimulationConfig,
    constellation: Constellation<R>,
    pool: rayon::ThreadPool,
}

impl<R: Real> Simulator<R> {
    pub fn new(cfg: SimulationConfig, workers: usize) -> Result<Self> {
        cfg.validate()?;
        let constellation = Constellation::qam(cfg.m_order)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { cfg, constellation, pool })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    pub fn constellation(&self) -> &Constellation<R> {
        &self.constellation
    }

    /// Regenerates frame `frame` at `point`; identical for every detector.
    pub fn frame_data(&self, point: &Point, frame: u64) -> Result<FrameData<R>> {
        let shaper = KroneckerShaper::new(CorrelationSpec::new(point.rho, self.cfg.n_t, self.cfg.n_r)?)?;
        self.frame_with(&shaper, point, frame)
    }

    fn frame_with(&self, shaper: &KroneckerShaper<R>, point: &Point, frame: u64) -> Result<FrameData<R>> {
        let cfg = &self.cfg;
        let mut rng = RngStream::substream(
            cfg.master_seed,
            &[CHANNEL_STREAM, point.ebn0_idx as u64, point.rho_idx as u64, frame],
        );
        let n = cfg.n_subcarriers;
        let channel = match cfg.channel_mode {
            GenerationMode::IidPerSubcarrier => (0..n).map(|_| shaper.draw(&mut rng)).collect(),
            GenerationMode::PdpFrequencySelective => {
                let taps: Vec<_> = cfg
                    .pdp
                    .tap_powers()
                    .into_iter()
                    .map(|p| shaper.draw(&mut rng).scale(Complex::new(R::lit(p.sqrt()), R::zero())))
                    .collect();
                taps_to_subcarriers(&taps, n)?
            }
        };
        let bits: Vec<u8> = (0..n as u64 * cfg.bits_per_trial()).map(|_| rng.bit()).collect();
        let tx = map_bits(&self.constellation, &bits, cfg.n_t)?;
        let sigma2 = NoiseSpec::from_eb_n0(point.ebn0_db, cfg.bits_per_symbol()).sigma2;
        let received = (0..n)
            .map(|k| transmit_subcarrier(&channel[k], &tx.subcarrier(k), sigma2, &mut rng))
            .collect::<Result<_>>()?;
        Ok(FrameData { channel, tx, received })
    }

    fn resolve(&self, arms: &[Arm], rho: f64) -> Result<Vec<ResolvedArm>> {
        arms.iter()
            .map(|arm| {
                arm.detector.validate()?;
                let params = arm.detector.resolve(rho);
                let kind = arm.detector.detector;
                let (budgets, run_budget) = match params {
                    None => (vec![None], 0),
                    Some(p) if arm.budgets.is_empty() => (vec![Some(p.iterations())], p.iterations()),
                    Some(_) => {
                        let mut b = arm.budgets.clone();
                        b.sort_unstable();
                        b.dedup();
                        let max = *b.last().expect("non-empty");
                        (b.into_iter().map(Some).collect(), max)
                    }
                };
                if kind == DetectorKind::Ml {
                    let total = (self.cfg.m_order as u128).checked_pow(self.cfg.n_t as u32);
                    if total.is_none_or(|t| t > crate::linear::ML_SEARCH_LIMIT) {
                        return Err(Error::Config(format!(
                            "ML over {}^{} candidates exceeds the enumeration guard",
                            self.cfg.m_order, self.cfg.n_t
                        )));
                    }
                }
                Ok(ResolvedArm {
                    id: arm.detector.id(),
                    kind,
                    params: params.map(|p| p.with_iterations(run_budget)),
                    budgets,
                    run_budget,
                })
            })
            .collect()
    }

    /// Runs `arms` on shared frames at `point` until `stop` is met.
    pub fn evaluate(&self, arms: &[Arm], point: Point, stop: StopRule) -> Result<Evaluation> {
        if arms.is_empty() {
            return Err(Error::Config("no detectors to evaluate".into()));
        }
        let resolved = self.resolve(arms, point.rho)?;
        let shaper = KroneckerShaper::new(CorrelationSpec::new(point.rho, self.cfg.n_t, self.cfg.n_r)?)?;
        let n_cols: usize = resolved.iter().map(|a| a.budgets.len()).sum();
        let mut columns: Vec<Column> = resolved
            .iter()
            .flat_map(|a| {
                a.budgets.iter().map(|&budget| Column {
                    detector: a.id.clone(),
                    budget,
                    bit_errors: 0,
                    moments: ErrorMoments::default(),
                })
            })
            .collect();
        let mut pairs = vec![PairedDiff::default(); n_cols * n_cols];
        let mut flops = vec![0.0; resolved.len()];
        let mut iterations = vec![0.0; resolved.len()];
        let mut failures = vec![0u64; resolved.len()];
        let per_frame = self.cfg.n_subcarriers as u64;
        let total_frames = stop.max_trials.div_ceil(per_frame);
        let mut trials = 0u64;
        let mut next = 0u64;
        let mut batch = 1u64;
        'outer: while next < total_frames {
            let end = (next + batch).min(total_frames);
            let outcomes: Vec<Result<FrameOutcome>> = self.pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|f| {
                        let limit = (stop.max_trials - f * per_frame).min(per_frame) as usize;
                        self.run_frame(&shaper, &resolved, &point, f, limit)
                    })
                    .collect()
            });
            for outcome in outcomes {
                let o = outcome?;
                let n_trials = o.errors[0].len();
                for t in 0..n_trials {
                    for a in 0..n_cols {
                        let ea = f64::from(o.errors[a][t]);
                        columns[a].bit_errors += u64::from(o.errors[a][t]);
                        columns[a].moments.push(ea);
                        for b in 0..n_cols {
                            pairs[a * n_cols + b].push(ea, f64::from(o.errors[b][t]));
                        }
                    }
                }
                for i in 0..resolved.len() {
                    flops[i] += o.flops[i];
                    iterations[i] += o.iterations[i];
                    failures[i] += o.failures[i];
                }
                trials += n_trials as u64;
                if let Some(target) = stop.target_bit_errors {
                    if columns.iter().all(|c| c.bit_errors >= target) {
                        break 'outer;
                    }
                }
            }
            next = end;
            batch = (batch * 2).min(MAX_BATCH_FRAMES);
        }
        Ok(Evaluation {
            point,
            trials,
            bits_per_trial: self.cfg.bits_per_trial(),
            columns,
            flops,
            iterations,
            failures,
            pairs,
        })
    }

    fn run_frame(
        &self,
        shaper: &KroneckerShaper<R>,
        arms: &[ResolvedArm],
        point: &Point,
        frame: u64,
        limit: usize,
    ) -> Result<FrameOutcome> {
        let data = self.frame_with(shaper, point, frame)?;
        let bits_per_trial = self.cfg.bits_per_trial() as usize;
        let n0 = NoiseSpec::from_eb_n0(point.ebn0_db, self.cfg.bits_per_symbol()).n0_over_es();
        let mut out = FrameOutcome {
            errors: Vec::new(),
            flops: vec![0.0; arms.len()],
            iterations: vec![0.0; arms.len()],
            failures: vec![0; arms.len()],
        };
        for (ai, arm) in arms.iter().enumerate() {
            let id_hash = stable_hash(&arm.id);
            let mut errs = vec![Vec::with_capacity(limit); arm.budgets.len()];
            for k in 0..limit {
                // One stream per trial, so a detector's draws never depend on its budget on earlier trials.
                let mut rng = RngStream::substream(
                    self.cfg.master_seed,
                    &[DETECTOR_STREAM, id_hash, point.ebn0_idx as u64, point.rho_idx as u64, frame, k as u64],
                );
                let sent = &data.tx.bits[k * bits_per_trial..(k + 1) * bits_per_trial];
                let (decisions, tally) =
                    flops::instrument(|| self.detect(arm, &data.channel[k], &data.received[k], n0, &mut rng));
                out.flops[ai] += tally.flops;
                out.iterations[ai] += arm.run_budget as f64;
                let decisions = match decisions {
                    Ok((d, failed)) => {
                        out.failures[ai] += u64::from(failed);
                        d
                    }
                    Err(e @ (Error::Singular { .. } | Error::InvalidParameter(_))) => {
                        log::debug!("{} frame {frame} trial {k}: {e}", arm.id);
                        out.failures[ai] += 1;
                        vec![None; arm.budgets.len()]
                    }
                    Err(e) => return Err(e),
                };
                for (col, d) in decisions.into_iter().enumerate() {
                    let e = match d {
                        Some(symbols) => hamming(sent, &demap_symbols(&symbols, &self.constellation)),
                        None => bits_per_trial as u32,
                    };
                    errs[col].push(e);
                }
            }
            out.errors.extend(errs);
        }
        Ok(out)
    }

    /// Hard decisions per budget column, plus whether the linear stage failed.
    #[allow(clippy::type_complexity)]
    fn detect(
        &self,
        arm: &ResolvedArm,
        h: &ComplexMatrix<R>,
        y: &[Complex<R>],
        n0: f64,
        rng: &mut RngStream,
    ) -> Result<(Vec<Option<Vec<Complex<R>>>>, bool)> {
        let c = &self.constellation;
        let slice = |v: Vec<Complex<R>>| v.into_iter().map(|s| c.slice(s).0).collect::<Vec<_>>();
        if let Some(params) = &arm.params {
            let problem = Problem::new(realify(h, y)?, c);
            let d = if arm.kind.is_hybrid() {
                hybrid_detect(rng, &problem, h, y, arm.kind, params, n0)?
            } else {
                params.run(rng, &problem, &InitStrategy::UniformRandom)?
            };
            let failed = d.fallback;
            let cols = arm
                .budgets
                .iter()
                .map(|b| {
                    let b = b.expect("heuristic columns carry a budget");
                    if b == 0 && arm.kind.is_hybrid() && arm.run_budget > 0 {
                        // The zero-budget hybrid is the bare linear decision, not the best initial member.
                        hybrid_detect(rng, &problem, h, y, arm.kind, &params.with_iterations(0), n0)
                            .map(|z| Some(z.symbols))
                    } else {
                        Ok(Some(d.decisions_at(b).to_vec()))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((cols, failed));
        }
        let symbols = match arm.kind.linear_part() {
            Some(kind) => {
                let eq = LinearEqualizer::new(kind, h, n0)?;
                slice(apply_equalizer(&eq, y)?)
            }
            None => ml_detect(h, y, c)?,
        };
        Ok((vec![Some(symbols)], false))
    }

    /// One operating point for one detector under the configured stopping rule.
    pub fn run_ber_point(&self, detector: &DetectorConfig, point: Point) -> Result<BerRecord> {
        let stop = StopRule { max_trials: self.cfg.max_trials, target_bit_errors: Some(self.cfg.target_bit_errors) };
        let eval = self.evaluate(&[Arm::new(detector.clone())], point, stop)?;
        Ok(eval.record(0, 0))
    }

    /// Every detector × ρ × Eb/N0 combination, detector-major.
    pub fn run_sweep(&self) -> Result<Vec<BerRecord>> {
        let mut out = Vec::new();
        for det in &self.cfg.detectors {
            for (ri, &rho) in self.cfg.rho_list.iter().enumerate() {
                for (ei, &ebn0) in self.cfg.ebn0_db_list.iter().enumerate() {
                    let rec = self.run_ber_point(det, Point::new(ei, ebn0, ri, rho))?;
                    log::info!(
                        "{} rho={} Eb/N0={} dB: BER {:.3e} over {} trials",
                        rec.detector,
                        rho,
                        ebn0,
                        rec.ber,
                        rec.trials
                    );
                    out.push(rec);
                }
            }
        }
        Ok(out)
    }
}

fn hamming(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}
