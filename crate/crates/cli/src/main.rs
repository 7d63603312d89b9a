use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_mimo::flops::{complexity_sweep, write_complexity_csv, SweepConfig};
use hybrid_mimo::sim::output::{write_ber_csv, write_calibration_csv, write_convergence_csv, write_json};
use hybrid_mimo::sim::{
    calibrate, convergence_study, validate_channel, CalibrationPlan, ChannelValidation, Point, StopRule,
};
use hybrid_mimo::{DetectorConfig, DetectorKind, Error, SimulationConfig, Simulator};

#[derive(Parser)]
#[command(name = "hybrid-mimo", version, about = "MIMO-OFDM detector simulations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, written atomically. Standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// BER of every configured detector over the Eb/N0 × ρ grid.
    Simulate,
    /// Coordinate-wise parameter search for the heuristic detectors.
    Calibrate {
        /// Detector ids; every configured heuristic detector when omitted.
        #[arg(long, value_delimiter = ',')]
        detector: Vec<DetectorKind>,
        /// Correlation values; the configured `rho_list` when omitted.
        #[arg(long, value_delimiter = ',')]
        rho: Vec<f64>,
        #[arg(long)]
        ebn0: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// BER against iteration budget.
    Convergence {
        #[arg(long)]
        detector: DetectorKind,
        #[arg(long, default_value_t = 25)]
        max_iters: usize,
    },
    /// Flop counts of every detector for N_t = N_r over a range.
    Complexity {
        #[arg(long, default_value_t = 2)]
        nt_min: usize,
        #[arg(long, default_value_t = 8)]
        nt_max: usize,
        #[arg(long)]
        population_per_dim: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        hybrid_iters: Option<usize>,
    },
    /// Kronecker covariance and cyclic-prefix equivalence checks.
    ValidateChannel {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::Json(_) => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &Common) -> Result<SimulationConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => SimulationConfig::load(path)?,
        None => SimulationConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn workers(common: &Common) -> usize {
    common.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    if let Command::Complexity { nt_min, nt_max, population_per_dim, iters, hybrid_iters } = cli.command {
        return complexity(common, nt_min, nt_max, population_per_dim, iters, hybrid_iters);
    }
    let cfg = load_config(common)?;
    let sim = Simulator::<f64>::new(cfg.clone(), workers(common))?;
    let mut buf = Vec::new();
    match cli.command {
        Command::Simulate => {
            log::info!("simulating {} detectors", cfg.detectors.len());
            let records = sim.run_sweep()?;
            match common.format {
                Format::Csv => write_ber_csv(&mut buf, &cfg, &records)?,
                Format::Json => write_json(&mut buf, &cfg, &records)?,
            }
        }
        Command::Calibrate { detector, rho, ebn0, iterations } => {
            let kinds: Vec<DetectorKind> = if detector.is_empty() {
                cfg.detectors.iter().map(|d| d.detector).filter(|k| k.heuristic().is_some()).collect()
            } else {
                detector
            };
            if kinds.is_empty() {
                return Err(Failure::Config("no heuristic detector to calibrate".into()));
            }
            let rhos = if rho.is_empty() { cfg.rho_list.clone() } else { rho };
            let mut outcomes = Vec::new();
            for kind in kinds {
                for &r in &rhos {
                    let mut plan = CalibrationPlan::default_for(kind, r)?;
                    if let Some(e) = ebn0 {
                        plan.ebn0_db = e;
                    }
                    if let Some(n) = iterations {
                        plan.iterations = n;
                    }
                    log::info!("calibrating {kind} at rho {r}");
                    outcomes.push(calibrate(&sim, &plan)?);
                }
            }
            match common.format {
                Format::Csv => write_calibration_csv(&mut buf, &cfg, &outcomes)?,
                Format::Json => write_json(&mut buf, &cfg, &outcomes)?,
            }
        }
        Command::Convergence { detector, max_iters } => {
            let points: Vec<Point> = cfg
                .rho_list
                .iter()
                .enumerate()
                .flat_map(|(ri, &rho)| {
                    cfg.ebn0_db_list.iter().enumerate().map(move |(ei, &e)| Point::new(ei, e, ri, rho))
                })
                .collect();
            let stop = StopRule { max_trials: cfg.max_trials, target_bit_errors: Some(cfg.target_bit_errors) };
            let det = cfg
                .detectors
                .iter()
                .find(|d| d.detector == detector)
                .cloned()
                .unwrap_or_else(|| DetectorConfig::new(detector));
            let rows = convergence_study(&sim, &det, &points, max_iters, stop)?;
            match common.format {
                Format::Csv => write_convergence_csv(&mut buf, &cfg, &rows)?,
                Format::Json => write_json(&mut buf, &cfg, &rows)?,
            }
        }
        Command::ValidateChannel { samples } => {
            let checks = cfg
                .rho_list
                .iter()
                .map(|&rho| validate_channel(rho, cfg.n_t, cfg.n_r, samples, cfg.master_seed))
                .collect::<Result<Vec<_>, _>>()?;
            match common.format {
                Format::Csv => write_validation_csv(&mut buf, &checks)?,
                Format::Json => write_json(&mut buf, &cfg, &checks)?,
            }
            emit(common.out.as_deref(), &buf)?;
            if let Some(bad) = checks.iter().find(|c| !c.passed()) {
                return Err(Failure::Numerical(format!("channel check failed at rho {}", bad.rho)));
            }
            return Ok(());
        }
        Command::Complexity { .. } => unreachable!("handled above"),
    }
    emit(common.out.as_deref(), &buf)
}

fn complexity(
    common: &Common,
    nt_min: usize,
    nt_max: usize,
    population_per_dim: Option<usize>,
    iters: Option<usize>,
    hybrid_iters: Option<usize>,
) -> Result<(), Failure> {
    if nt_min == 0 || nt_min > nt_max {
        return Err(Failure::Config(format!("empty antenna range {nt_min}..={nt_max}")));
    }
    let d = SweepConfig::default();
    let sweep = SweepConfig {
        population_per_dim: population_per_dim.unwrap_or(d.population_per_dim),
        iters: iters.unwrap_or(d.iters),
        hybrid_iters: hybrid_iters.unwrap_or(d.hybrid_iters),
        ..d
    };
    let n_t: Vec<usize> = (nt_min..=nt_max).collect();
    let rows = complexity_sweep(&n_t, &sweep);
    let mut buf = Vec::new();
    match common.format {
        Format::Csv => write_complexity_csv(&rows, &mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &serde_json::json!({ "sweep": sweep, "rows": rows }))
                .map_err(|e| Failure::Config(e.to_string()))?;
            buf.push(b'\n');
        }
    }
    emit(common.out.as_deref(), &buf)
}

fn write_validation_csv(out: &mut impl Write, checks: &[ChannelValidation]) -> io::Result<()> {
    writeln!(out, "rho,samples,covariance_max_error,covariance_tolerance,cp_max_error,cp_tolerance,passed")?;
    for c in checks {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.rho,
            c.samples,
            c.covariance_max_error,
            c.covariance_tolerance,
            c.cp_max_error,
            c.cp_tolerance,
            c.passed()
        )?;
    }
    Ok(())
}

/// Writes to a temporary file beside `path` and renames it into place.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let Some(path) = path else {
        io::stdout().lock().write_all(bytes)?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(())
}
