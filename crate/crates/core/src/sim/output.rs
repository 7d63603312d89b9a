//! CSV and JSON writers for simulation results.

use std::io::Write;

use serde::Serialize;

use super::calibrate::CalibrationOutcome;
use super::config::SimulationConfig;
use super::convergence::ConvergenceRow;
use super::engine::BerRecord;
use crate::error::Result;

/// Caveat attached to every BER output.
pub const SEQUENTIAL_STOPPING_NOTE: &str = "points stopped at target_bit_errors carry the usual \
sequential-stopping bias; ber is unbiased only up to that caveat";

pub const BER_CSV_HEADER: &str = "detector,ebn0_db,rho,trials,bit_errors,ber,ci95,mean_iterations,flops_per_subcarrier";

fn write_preamble(out: &mut impl Write, cfg: &SimulationConfig) -> Result<()> {
    writeln!(out, "# config: {}", serde_json::to_string(cfg)?)?;
    writeln!(out, "# seed: {}", cfg.master_seed)?;
    writeln!(out, "# note: {SEQUENTIAL_STOPPING_NOTE}")?;
    Ok(())
}

pub fn write_ber_csv(out: &mut impl Write, cfg: &SimulationConfig, records: &[BerRecord]) -> Result<()> {
    write_preamble(out, cfg)?;
    writeln!(out, "{BER_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.detector,
            r.ebn0_db,
            r.rho,
            r.trials,
            r.bit_errors,
            r.ber,
            r.ci95,
            r.mean_iterations,
            r.flops_per_subcarrier
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    seed: u64,
    config: &'a SimulationConfig,
    note: &'static str,
    records: &'a [T],
}

pub fn write_json<T: Serialize>(out: &mut impl Write, cfg: &SimulationConfig, records: &[T]) -> Result<()> {
    let doc = Document { seed: cfg.master_seed, config: cfg, note: SEQUENTIAL_STOPPING_NOTE, records };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_convergence_csv(out: &mut impl Write, cfg: &SimulationConfig, rows: &[ConvergenceRow]) -> Result<()> {
    write_preamble(out, cfg)?;
    writeln!(out, "detector,ebn0_db,rho,iterations,trials,bit_errors,ber,ci95")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.detector, r.ebn0_db, r.rho, r.iterations, r.trials, r.bit_errors, r.ber, r.ci95
        )?;
    }
    Ok(())
}

pub fn write_calibration_csv(
    out: &mut impl Write,
    cfg: &SimulationConfig,
    outcomes: &[CalibrationOutcome],
) -> Result<()> {
    write_preamble(out, cfg)?;
    writeln!(out, "detector,rho,parameter,candidate,ber,bit_errors,trials,backed,selected")?;
    for o in outcomes {
        for e in &o.log {
            let selected = o.values.iter().any(|(n, v)| *n == e.parameter && *v == e.candidate);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                o.detector, o.rho, e.parameter, e.candidate, e.ber, e.bit_errors, e.trials, e.backed, selected
            )?;
        }
    }
    Ok(())
}
