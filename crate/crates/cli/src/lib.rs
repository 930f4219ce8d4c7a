//! Command-line front end for the `pmqkd` numerical lab.
//!
//! [`main_with_args`] is the whole binary; the pieces are public so that tests
//! can drive them without spawning a process.

pub mod config;
pub mod grid;
pub mod output;
pub mod svg;
mod verify;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use pmqkd_core::rates::{self, SweepRow};
use pmqkd_core::sim::{self, charlie_click_probabilities};
use pmqkd_core::{Adversary, ProtocolParams};
use thiserror::Error;

pub use config::{parse_args, Command, RunConfig, XAxis};
use config::{AttackSweepConfig, Preset, RatesConfig, SimulateConfig};
use output::{AttackRow, OutputSet};
pub use verify::{run_checks, Check, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Clap(#[from] clap::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] pmqkd_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("{0} verification check(s) failed")]
    ChecksFailed(usize),

    #[error("a plot needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for everything that goes
    /// wrong after the configuration was accepted.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Run a resolved configuration. Returns the files written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut out = OutputSet::new(&cfg.output_dir)?;
    let digits = cfg.csv_precision;
    match &cfg.command {
        Command::Verify(v) => {
            let report = run_checks(v)?;
            let mut w = out.create("parity.csv")?;
            report.table.write_csv(&mut w, digits)?;
            w.flush()?;
            let text = report.render();
            out.write("verify_report.txt", text.as_bytes())?;
            print!("{text}");
            let failed = report.failed();
            if failed > 0 {
                // the report stays on disk so the failure can be inspected
                out.keep();
                return Err(CliError::ChecksFailed(failed));
            }
        }
        Command::Rates(r) => run_rates(r, digits, &mut out)?,
        Command::Simulate(s) => run_simulate(s, &mut out)?,
        Command::AttackSweep(a) => run_attack(a, digits, &mut out)?,
    }
    for p in out.paths() {
        println!("wrote {}", p.display());
    }
    Ok(out.keep())
}

fn run_rates(r: &RatesConfig, digits: usize, out: &mut OutputSet) -> Result<(), CliError> {
    let sweep = rates::sweep(&r.points)?;
    if let Some((i, e)) = sweep.errors.first() {
        return Err(CliError::Config(format!("grid point {i}: {e}")));
    }
    let w = out.create("sweep.csv")?;
    output::write_sweep_csv(&sweep.rows, digits, r.clamp_rates, w)?;
    if r.emit_svg {
        let (name, title) = match r.preset {
            Some(Preset::Fig4a) => ("figure4a.svg", "Phase error bounds versus intensity"),
            Some(Preset::Fig4b) => ("figure4b.svg", "Phase error bounds versus channel loss"),
            None => ("sweep.svg", "Phase error bounds"),
        };
        let body = svg::emit_svg(&sweep.rows, r.x_axis, title)?;
        out.write(name, body.as_bytes())?;
    }
    Ok(())
}

/// Probability that at least one detector clicks; it does not depend on the
/// relative phase.
fn expected_gain(p: &ProtocolParams) -> Result<f64, CliError> {
    let c = charlie_click_probabilities(0.0, 0.0, p.mu_a, p.mu_b, p.eta, p.dark_count)?;
    Ok(c.p_l_only + c.p_r_only + c.p_both)
}

fn run_simulate(s: &SimulateConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let p = &s.params;
    let (stats, log) = sim::run_rounds(p, s.adversary, s.log)?;
    let mut w = out.create("sim_stats.txt")?;
    writeln!(w, "mu_a={:?}", p.mu_a)?;
    writeln!(w, "mu_b={:?}", p.mu_b)?;
    writeln!(w, "eta={:?}", p.eta)?;
    writeln!(w, "d={}", p.d)?;
    writeln!(w, "dark_count={:?}", p.dark_count)?;
    writeln!(w, "misalignment={:?}", p.misalignment)?;
    writeln!(w, "seed={}", p.seed)?;
    stats.write_kv(&mut w)?;
    writeln!(w, "gain_expected={:?}", expected_gain(p)?)?;
    if s.adversary == Adversary::Beamsplit {
        writeln!(w, "usd_expected={:?}", p.usd_probability())?;
    }
    w.flush()?;
    if let Some(records) = log {
        let w = out.create("rounds.csv")?;
        sim::write_round_log(&records, w)?;
    }
    Ok(())
}

fn run_attack(a: &AttackSweepConfig, digits: usize, out: &mut OutputSet) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(a.points.len());
    for point in &a.points {
        let params = config::point_params(&a.base, point);
        let (stats, _) = sim::run_rounds(&params, Adversary::Beamsplit, false)?;
        let row = SweepRow::at(point.with_f(params.f)?)?;
        rows.push(AttackRow {
            row,
            stats,
            usd_expected: params.usd_probability(),
        });
    }
    let w = out.create("attack_sweep.csv")?;
    output::write_attack_csv(&rows, digits, w)?;
    Ok(())
}

/// Parse, run and report. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(_) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("pmqkd: {e}");
            e.exit_code()
        }
    }
}
