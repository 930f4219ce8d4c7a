//! Command-line flags, the optional TOML config file, and their merge into a
//! validated [`RunConfig`].
//!
//! Precedence per key: flag, then config file, then built-in default. The
//! output directory additionally falls back to `PMQKD_OUTPUT_DIR`.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmqkd_core::rates::{self, ChannelPoint};
use pmqkd_core::{Adversary, CircuitParams, ProtocolParams};
use serde::Deserialize;

use crate::grid::parse_grid;
use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "PMQKD_OUTPUT_DIR";
pub const DEFAULT_CSV_PRECISION: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "pmqkd",
    version,
    about = "Numerical lab for phase-matching quantum key distribution",
    arg_required_else_help = true
)]
pub struct Cli {
    /// TOML file with per-command sections; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (default: $PMQKD_OUTPUT_DIR, then the working directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Significant digits in CSV output.
    #[arg(long, global = true, value_name = "DIGITS")]
    pub csv_precision: Option<usize>,

    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Run the virtual-protocol circuit and check its invariants.
    Verify(VerifyArgs),
    /// Evaluate gains, phase-error bounds and key rates over a grid.
    Rates(RatesArgs),
    /// Monte-Carlo simulation of the protocol rounds.
    Simulate(SimulateArgs),
    /// Beam-splitting attack simulated across a grid.
    #[command(name = "attack-sweep")]
    AttackSweep(AttackSweepArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub mu_a: Option<f64>,
    #[arg(long)]
    pub mu_b: Option<f64>,
    /// Phase-slice count.
    #[arg(long)]
    pub d: Option<usize>,
    /// Photon-number cutoff per mode.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Transmittance used for the detection-weighted cross-check.
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Intensity: a value, a comma list, or start:stop:step.
    #[arg(long, value_name = "GRID")]
    pub mu: Option<String>,
    /// Transmittance grid.
    #[arg(long, value_name = "GRID")]
    pub eta: Option<String>,
    /// Channel loss grid in dB.
    #[arg(long, value_name = "GRID")]
    pub eta_db: Option<String>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Error-correction efficiency.
    #[arg(long)]
    pub f: Option<f64>,
    /// Bit error rate fed to the key-rate formula.
    #[arg(long)]
    pub e_bit: Option<f64>,
    /// Preset grid; replaces mu, eta and eta_db.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Same as `--preset fig4a`.
    #[arg(long, conflicts_with_all = ["preset", "fig4b"])]
    pub fig4a: bool,
    /// Same as `--preset fig4b`.
    #[arg(long, conflicts_with = "preset")]
    pub fig4b: bool,
    /// Also write an SVG plot of the bounds.
    #[arg(long)]
    pub svg: bool,
    /// Clamp negative key rates to zero in the CSV.
    #[arg(long)]
    pub clamp_rates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// mu = 0.005..0.5 step 0.005 at eta = 0.01.
    Fig4a,
    /// eta = 0..50 dB step 0.5 at mu = 0.05.
    Fig4b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryArg {
    None,
    Beamsplit,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub mu_a: Option<f64>,
    #[arg(long)]
    pub mu_b: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub dark_count: Option<f64>,
    #[arg(long)]
    pub misalignment: Option<f64>,
    #[arg(long)]
    pub f: Option<f64>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub adversary: Option<AdversaryArg>,
    /// Skip the per-round log.
    #[arg(long)]
    pub no_log: bool,
}

#[derive(Debug, Args)]
pub struct AttackSweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub dark_count: Option<f64>,
    #[arg(long)]
    pub misalignment: Option<f64>,
    #[arg(long)]
    pub f: Option<f64>,
    /// Rounds per grid point.
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridValue {
    Number(f64),
    Text(String),
}

impl GridValue {
    fn text(&self) -> String {
        match self {
            GridValue::Number(x) => format!("{x:?}"),
            GridValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    output_dir: Option<PathBuf>,
    csv_precision: Option<usize>,
    verify: Option<VerifyFile>,
    rates: Option<RatesFile>,
    simulate: Option<SimulateFile>,
    #[serde(rename = "attack-sweep")]
    attack_sweep: Option<AttackSweepFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    mu_a: Option<f64>,
    mu_b: Option<f64>,
    d: Option<usize>,
    cutoff: Option<usize>,
    eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesFile {
    mu: Option<GridValue>,
    eta: Option<GridValue>,
    eta_db: Option<GridValue>,
    f: Option<f64>,
    e_bit: Option<f64>,
    preset: Option<Preset>,
    emit_svg: Option<bool>,
    clamp_rates: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    mu_a: Option<f64>,
    mu_b: Option<f64>,
    eta: Option<f64>,
    d: Option<usize>,
    dark_count: Option<f64>,
    misalignment: Option<f64>,
    f: Option<f64>,
    rounds: Option<u64>,
    seed: Option<u64>,
    adversary: Option<AdversaryArg>,
    log: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackSweepFile {
    mu: Option<GridValue>,
    eta: Option<GridValue>,
    eta_db: Option<GridValue>,
    d: Option<usize>,
    dark_count: Option<f64>,
    misalignment: Option<f64>,
    f: Option<f64>,
    rounds: Option<u64>,
    seed: Option<u64>,
}

/// Fully resolved and validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub csv_precision: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Verify(VerifyConfig),
    Rates(RatesConfig),
    Simulate(SimulateConfig),
    AttackSweep(AttackSweepConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub circuit: CircuitParams,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Mu,
    EtaDb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatesConfig {
    pub points: Vec<ChannelPoint>,
    /// Which parameter varies along the grid.
    pub x_axis: XAxis,
    pub preset: Option<Preset>,
    pub emit_svg: bool,
    pub clamp_rates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub params: ProtocolParams,
    pub adversary: Adversary,
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSweepConfig {
    pub points: Vec<ChannelPoint>,
    pub x_axis: XAxis,
    /// Template for every grid point; intensities and transmittance are
    /// overwritten per point.
    pub base: ProtocolParams,
}

pub const DEFAULT_SIM_ROUNDS: u64 = 100_000;
const DEFAULT_MU: f64 = 0.05;
const DEFAULT_RATES_ETA: f64 = 0.01;
const DEFAULT_ATTACK_ETA_DB: &str = "0:50:5";

/// Parse command-line arguments (including the program name) into a
/// validated configuration.
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(CliError::Clap)?;
    resolve(cli, std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
}

/// Merge flags with the config file (if any) and validate.
pub fn resolve(cli: Cli, env_output_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let (file, src) = match &cli.config {
        Some(path) => load_file(path)?,
        None => (FileConfig::default(), Source::none()),
    };
    let output_dir = cli
        .out_dir
        .or(file.output_dir)
        .or(env_output_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    let csv_precision = cli
        .csv_precision
        .or(file.csv_precision)
        .unwrap_or(DEFAULT_CSV_PRECISION);
    if !(1..=17).contains(&csv_precision) {
        return Err(src.invalid(
            None,
            "csv_precision",
            format!("must lie in 1..=17, got {csv_precision}"),
        ));
    }
    let command = match cli.command {
        CommandArgs::Verify(a) => Command::Verify(resolve_verify(a, file.verify, &src)?),
        CommandArgs::Rates(a) => Command::Rates(resolve_rates(a, file.rates, &src)?),
        CommandArgs::Simulate(a) => Command::Simulate(resolve_simulate(a, file.simulate, &src)?),
        CommandArgs::AttackSweep(a) => {
            Command::AttackSweep(resolve_attack(a, file.attack_sweep, &src)?)
        }
    };
    Ok(RunConfig {
        output_dir,
        csv_precision,
        command,
    })
}

/// Config file text, used to point diagnostics at the offending line.
struct Source {
    path: Option<PathBuf>,
    text: String,
}

impl Source {
    fn none() -> Self {
        Source {
            path: None,
            text: String::new(),
        }
    }

    /// Line and column (1-based) of `key = ...` inside `[section]`.
    fn locate(&self, section: Option<&str>, key: &str) -> Option<(usize, usize)> {
        let mut current: Option<String> = None;
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim_start();
            if let Some(rest) = t.strip_prefix('[') {
                current = rest.split(']').next().map(|s| s.trim().to_string());
                continue;
            }
            if current.as_deref() != section {
                continue;
            }
            if let Some(after) = t.strip_prefix(key) {
                if after.trim_start().starts_with('=') {
                    return Some((i + 1, line.len() - t.len() + 1));
                }
            }
        }
        None
    }

    fn invalid(&self, section: Option<&str>, key: &str, msg: String) -> CliError {
        let at = match (&self.path, self.locate(section, key)) {
            (Some(p), Some((line, col))) => format!("{}:{line}:{col}: ", p.display()),
            _ => String::new(),
        };
        CliError::Config(format!("{at}invalid `{key}`: {msg}"))
    }
}

fn load_file(path: &Path) -> Result<(FileConfig, Source), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: FileConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((
        file,
        Source {
            path: Some(path.to_path_buf()),
            text,
        },
    ))
}

/// Tracks which keys were taken from the file so that validation errors can
/// point at the right place.
struct Merge<'a> {
    src: &'a Source,
    section: &'static str,
    from_file: HashSet<&'static str>,
}

impl<'a> Merge<'a> {
    fn new(src: &'a Source, section: &'static str) -> Self {
        Merge {
            src,
            section,
            from_file: HashSet::new(),
        }
    }

    fn pick<T>(&mut self, key: &'static str, flag: Option<T>, file: Option<T>) -> Option<T> {
        match (flag, file) {
            (Some(v), _) => Some(v),
            (None, Some(v)) => {
                self.from_file.insert(key);
                Some(v)
            }
            (None, None) => None,
        }
    }

    fn fail(&self, key: &str, msg: impl Into<String>) -> CliError {
        if self.from_file.contains(key) {
            self.src.invalid(Some(self.section), key, msg.into())
        } else {
            CliError::Config(format!(
                "invalid `--{}`: {}",
                key.replace('_', "-"),
                msg.into()
            ))
        }
    }

    fn grid(&self, key: &'static str, spec: &str) -> Result<Vec<f64>, CliError> {
        parse_grid(spec).map_err(|e| self.fail(key, e))
    }
}

fn resolve_verify(
    a: VerifyArgs,
    file: Option<VerifyFile>,
    src: &Source,
) -> Result<VerifyConfig, CliError> {
    let f = file.unwrap_or_default();
    let mut m = Merge::new(src, "verify");
    let defaults = CircuitParams::default();
    let circuit = CircuitParams {
        mu_a: m.pick("mu_a", a.mu_a, f.mu_a).unwrap_or(defaults.mu_a),
        mu_b: m.pick("mu_b", a.mu_b, f.mu_b).unwrap_or(defaults.mu_b),
        d: m.pick("d", a.d, f.d).unwrap_or(defaults.d),
        cutoff: m
            .pick("cutoff", a.cutoff, f.cutoff)
            .unwrap_or(defaults.cutoff),
        ..defaults
    };
    let eta = m.pick("eta", a.eta, f.eta).unwrap_or(DEFAULT_RATES_ETA);
    circuit
        .validate()
        .map_err(|e| m.fail(key_of(&e, &["d", "mu_a", "mu_b"]), e.to_string()))?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(m.fail("eta", format!("must lie in (0, 1], got {eta}")));
    }
    Ok(VerifyConfig { circuit, eta })
}

/// Config key named by a core validation error. Core messages start with
/// the offending parameter name; truncation errors concern the cutoff.
fn key_of(e: &pmqkd_core::Error, keys: &[&'static str]) -> &'static str {
    use pmqkd_core::Error;
    match e {
        Error::OddD(_) => "d",
        Error::Truncation(_) => "cutoff",
        Error::Domain(msg) => {
            let first = msg.split_whitespace().next().unwrap_or("");
            keys.iter()
                .copied()
                .find(|k| *k == first)
                .unwrap_or(keys[0])
        }
        _ => keys[0],
    }
}

/// The grid axes after merging: intensities and one channel axis.
struct Axes {
    mus: Vec<f64>,
    channel: Channel,
}

enum Channel {
    Eta(Vec<f64>),
    Db(Vec<f64>),
}

fn resolve_axes(
    m: &mut Merge,
    grid: GridArgs,
    file: (Option<GridValue>, Option<GridValue>, Option<GridValue>),
    default_channel: Channel,
) -> Result<Axes, CliError> {
    let (file_mu, file_eta, file_db) = file;
    let mus = match m.pick("mu", grid.mu, file_mu.map(|g| g.text())) {
        Some(s) => m.grid("mu", &s)?,
        None => vec![DEFAULT_MU],
    };
    if grid.eta.is_some() && grid.eta_db.is_some() {
        return Err(CliError::Config(
            "`--eta` and `--eta-db` cannot be combined".into(),
        ));
    }
    // a channel flag replaces both channel keys from the file
    let (eta, db) = if grid.eta.is_some() || grid.eta_db.is_some() {
        (grid.eta, grid.eta_db)
    } else {
        if file_eta.is_some() && file_db.is_some() {
            return Err(m.src.invalid(
                Some(m.section),
                "eta_db",
                "`eta` and `eta_db` cannot both be set".into(),
            ));
        }
        (
            m.pick("eta", None, file_eta.map(|g| g.text())),
            m.pick("eta_db", None, file_db.map(|g| g.text())),
        )
    };
    let channel = match (eta, db) {
        (Some(s), _) => Channel::Eta(m.grid("eta", &s)?),
        (None, Some(s)) => Channel::Db(m.grid("eta_db", &s)?),
        (None, None) => default_channel,
    };
    let n_channel = match &channel {
        Channel::Eta(v) | Channel::Db(v) => v.len(),
    };
    if mus.len() > 1 && n_channel > 1 {
        return Err(CliError::Config(
            "only one of the intensity and channel axes may hold more than one value".into(),
        ));
    }
    Ok(Axes { mus, channel })
}

fn build_points(m: &Merge, axes: &Axes) -> Result<(Vec<ChannelPoint>, XAxis), CliError> {
    let (values, key, x_axis) = match &axes.channel {
        Channel::Eta(v) => (v, "eta", XAxis::EtaDb),
        Channel::Db(v) => (v, "eta_db", XAxis::EtaDb),
    };
    let x_axis = if axes.mus.len() > 1 || values.len() == 1 {
        XAxis::Mu
    } else {
        x_axis
    };
    let mut points = Vec::with_capacity(axes.mus.len() * values.len());
    for &mu in &axes.mus {
        for &c in values {
            let p = match &axes.channel {
                Channel::Eta(_) => ChannelPoint::from_eta(mu, c),
                Channel::Db(_) => ChannelPoint::from_db(mu, c),
            };
            let p = p.map_err(|e| {
                let bad_mu = !(mu.is_finite() && mu >= 0.0);
                m.fail(if bad_mu { "mu" } else { key }, e.to_string())
            })?;
            points.push(p);
        }
    }
    Ok((points, x_axis))
}

fn resolve_rates(
    a: RatesArgs,
    file: Option<RatesFile>,
    src: &Source,
) -> Result<RatesConfig, CliError> {
    let f = file.unwrap_or_default();
    let mut m = Merge::new(src, "rates");
    let flag_preset = if a.fig4a {
        Some(Preset::Fig4a)
    } else if a.fig4b {
        Some(Preset::Fig4b)
    } else {
        a.preset
    };
    let preset = m.pick("preset", flag_preset, f.preset);
    let ec = m.pick("f", a.f, f.f);
    let e_bit = m.pick("e_bit", a.e_bit, f.e_bit);
    let emit_svg = a.svg || f.emit_svg.unwrap_or(false);
    let clamp_rates = a.clamp_rates || f.clamp_rates.unwrap_or(false);

    let (points, x_axis) = if let Some(preset) = preset {
        // a preset fixes the whole grid
        let grid_given = a.grid.mu.is_some() || a.grid.eta.is_some() || a.grid.eta_db.is_some();
        let file_grid = f.mu.is_some() || f.eta.is_some() || f.eta_db.is_some();
        if grid_given || file_grid {
            return Err(m.fail("preset", "cannot be combined with mu, eta or eta_db"));
        }
        match preset {
            Preset::Fig4a => (rates::fig4a_points(), XAxis::Mu),
            Preset::Fig4b => (rates::fig4b_points(), XAxis::EtaDb),
        }
    } else {
        let axes = resolve_axes(
            &mut m,
            a.grid,
            (f.mu, f.eta, f.eta_db),
            Channel::Eta(vec![DEFAULT_RATES_ETA]),
        )?;
        build_points(&m, &axes)?
    };
    let points = points
        .into_iter()
        .map(|p| {
            let p = match ec {
                Some(v) => p.with_f(v).map_err(|e| m.fail("f", e.to_string()))?,
                None => p,
            };
            match e_bit {
                Some(v) => p.with_e_bit(v).map_err(|e| m.fail("e_bit", e.to_string())),
                None => Ok(p),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RatesConfig {
        points,
        x_axis,
        preset,
        emit_svg,
        clamp_rates,
    })
}

const PROTOCOL_KEYS: &[&str] = &[
    "d",
    "mu_a",
    "mu_b",
    "eta",
    "dark_count",
    "misalignment",
    "f",
    "rounds",
];

fn resolve_simulate(
    a: SimulateArgs,
    file: Option<SimulateFile>,
    src: &Source,
) -> Result<SimulateConfig, CliError> {
    let f = file.unwrap_or_default();
    let mut m = Merge::new(src, "simulate");
    let defaults = ProtocolParams::default();
    let params = ProtocolParams {
        mu_a: m.pick("mu_a", a.mu_a, f.mu_a).unwrap_or(defaults.mu_a),
        mu_b: m.pick("mu_b", a.mu_b, f.mu_b).unwrap_or(defaults.mu_b),
        eta: m.pick("eta", a.eta, f.eta).unwrap_or(defaults.eta),
        d: m.pick("d", a.d, f.d).unwrap_or(defaults.d),
        dark_count: m
            .pick("dark_count", a.dark_count, f.dark_count)
            .unwrap_or(defaults.dark_count),
        misalignment: m
            .pick("misalignment", a.misalignment, f.misalignment)
            .unwrap_or(defaults.misalignment),
        f: m.pick("f", a.f, f.f).unwrap_or(defaults.f),
        rounds: m
            .pick("rounds", a.rounds, f.rounds)
            .unwrap_or(DEFAULT_SIM_ROUNDS),
        seed: m.pick("seed", a.seed, f.seed).unwrap_or(defaults.seed),
    };
    params
        .validate()
        .map_err(|e| m.fail(key_of(&e, PROTOCOL_KEYS), e.to_string()))?;
    let adversary = match m.pick("adversary", a.adversary, f.adversary) {
        Some(AdversaryArg::Beamsplit) => Adversary::Beamsplit,
        _ => Adversary::None,
    };
    let log = !a.no_log && f.log.unwrap_or(true);
    Ok(SimulateConfig {
        params,
        adversary,
        log,
    })
}

fn resolve_attack(
    a: AttackSweepArgs,
    file: Option<AttackSweepFile>,
    src: &Source,
) -> Result<AttackSweepConfig, CliError> {
    let f = file.unwrap_or_default();
    let mut m = Merge::new(src, "attack-sweep");
    let default_db = parse_grid(DEFAULT_ATTACK_ETA_DB).expect("valid default grid");
    let axes = resolve_axes(
        &mut m,
        a.grid,
        (f.mu, f.eta, f.eta_db),
        Channel::Db(default_db),
    )?;
    let (points, x_axis) = build_points(&m, &axes)?;
    let defaults = ProtocolParams::default();
    let base = ProtocolParams {
        d: m.pick("d", a.d, f.d).unwrap_or(defaults.d),
        dark_count: m
            .pick("dark_count", a.dark_count, f.dark_count)
            .unwrap_or(defaults.dark_count),
        misalignment: m
            .pick("misalignment", a.misalignment, f.misalignment)
            .unwrap_or(defaults.misalignment),
        f: m.pick("f", a.f, f.f).unwrap_or(defaults.f),
        rounds: m
            .pick("rounds", a.rounds, f.rounds)
            .unwrap_or(DEFAULT_SIM_ROUNDS),
        seed: m.pick("seed", a.seed, f.seed).unwrap_or(defaults.seed),
        ..defaults
    };
    for p in &points {
        let params = point_params(&base, p);
        params
            .validate()
            .map_err(|e| m.fail(key_of(&e, PROTOCOL_KEYS), e.to_string()))?;
    }
    Ok(AttackSweepConfig {
        points,
        x_axis,
        base,
    })
}

/// Protocol parameters for one attack-sweep grid point.
pub fn point_params(base: &ProtocolParams, p: &ChannelPoint) -> ProtocolParams {
    ProtocolParams {
        mu_a: p.mu,
        mu_b: p.mu,
        eta: p.eta,
        ..*base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let cli = Cli::try_parse_from(args).map_err(CliError::Clap)?;
        resolve(cli, None)
    }

    fn with_file(body: &str, args: &[&str]) -> Result<RunConfig, CliError> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        let path = f.path().to_str().unwrap().to_string();
        let mut all = vec!["pmqkd", "--config", path.as_str()];
        all.extend_from_slice(args);
        parse(&all)
    }

    fn rates(cfg: RunConfig) -> RatesConfig {
        match cfg.command {
            Command::Rates(r) => r,
            other => panic!("expected rates, got {other:?}"),
        }
    }

    #[test]
    fn eta_db_range_expands() {
        let r = rates(parse(&["pmqkd", "rates", "--mu", "0.05", "--eta-db", "0:50:0.5"]).unwrap());
        assert_eq!(r.points.len(), 101);
        assert_eq!(r.x_axis, XAxis::EtaDb);
        assert_eq!(r.points[100].eta_db, 50.0);
    }

    #[test]
    fn conflicting_channel_flags() {
        let e = parse(&["pmqkd", "rates", "--eta", "0.1", "--eta-db", "10"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn zero_rounds_rejected() {
        let e = parse(&["pmqkd", "simulate", "--rounds", "0"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn odd_d_rejected() {
        let e = parse(&["pmqkd", "simulate", "--d", "7"]).unwrap_err();
        assert!(e.to_string().contains("--d"), "{e}");
    }

    #[test]
    fn empty_args_show_usage() {
        let e = parse(&["pmqkd"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn presets() {
        let r = rates(parse(&["pmqkd", "rates", "--preset", "fig4a"]).unwrap());
        assert_eq!(r.points.len(), 100);
        assert_eq!(r.x_axis, XAxis::Mu);
        let r = rates(parse(&["pmqkd", "rates", "--preset", "fig4b"]).unwrap());
        assert_eq!(r.points.len(), 101);
        assert!(parse(&["pmqkd", "rates", "--preset", "fig4b", "--mu", "0.1"]).is_err());
        let r = rates(parse(&["pmqkd", "rates", "--fig4a"]).unwrap());
        assert_eq!(r.preset, Some(Preset::Fig4a));
        assert!(parse(&["pmqkd", "rates", "--fig4a", "--fig4b"]).is_err());
    }

    #[test]
    fn two_varying_axes_rejected() {
        assert!(parse(&["pmqkd", "rates", "--mu", "0.1,0.2", "--eta-db", "0:10:5"]).is_err());
    }

    #[test]
    fn flags_override_file() {
        let body = "[simulate]\nrounds = 500\nseed = 9\n";
        let cfg = with_file(body, &["simulate", "--seed", "3"]).unwrap();
        let Command::Simulate(s) = cfg.command else {
            panic!()
        };
        assert_eq!(s.params.rounds, 500);
        assert_eq!(s.params.seed, 3);
    }

    #[test]
    fn unknown_key_reports_position() {
        let e = with_file("[rates]\nmu = 0.1\nbogus = 1\n", &["rates"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn invalid_file_value_reports_position() {
        let e = with_file("[simulate]\nseed = 1\n  rounds = 0\n", &["simulate"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains(":3:3:"), "{e}");
    }

    #[test]
    fn file_grids_accept_numbers_and_strings() {
        let r = rates(with_file("[rates]\nmu = 0.1\neta_db = \"0:10:1\"\n", &["rates"]).unwrap());
        assert_eq!(r.points.len(), 11);
        assert!(r.points.iter().all(|p| p.mu == 0.1));
    }

    #[test]
    fn channel_flag_replaces_file_channel() {
        let r = rates(with_file("[rates]\neta_db = 10\n", &["rates", "--eta", "0.5"]).unwrap());
        assert_eq!(r.points[0].eta, 0.5);
    }

    #[test]
    fn output_dir_precedence() {
        let cli = Cli::try_parse_from(["pmqkd", "verify"]).unwrap();
        let cfg = resolve(cli, Some(PathBuf::from("/tmp/env"))).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/env"));
        let cli = Cli::try_parse_from(["pmqkd", "verify", "--out-dir", "x"]).unwrap();
        let cfg = resolve(cli, Some(PathBuf::from("/tmp/env"))).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("x"));
    }

    #[test]
    fn verify_cutoff_checked() {
        let e = parse(&["pmqkd", "verify", "--mu-a", "5", "--cutoff", "4"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
