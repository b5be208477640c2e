//! Run configuration: TOML file merged with command-line flags, validated
//! per workflow before anything is computed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use herald_core::optics::{DetectorKind, DetectorModel};
use herald_core::scheme::{build_circuit, SignPattern};
use herald_core::source::SourceConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Workflow {
    Herald,
    NoonScan,
    SweepTau,
    EtaScan,
}

impl Workflow {
    pub fn name(self) -> &'static str {
        match self {
            Workflow::Herald => "herald",
            Workflow::NoonScan => "noon-scan",
            Workflow::SweepTau => "sweep-tau",
            Workflow::EtaScan => "eta-scan",
        }
    }

    fn allowed(self) -> &'static [Key] {
        use Key::*;
        match self {
            Workflow::Herald => {
                &[Crystals, Orders, Tau, DeltaPhi, Detector, Eta, Count, Pattern, Out, Format, DumpState, OracleCheck]
            }
            Workflow::NoonScan => &[Crystals, Points, Pattern, Out, Format, OracleCheck],
            Workflow::SweepTau => &[Crystals, Orders, DeltaPhi, Eta, From, To, Steps, Detectors, Out, Format],
            Workflow::EtaScan => {
                &[Crystals, Orders, Tau, DeltaPhi, Detector, Count, Pattern, From, To, Steps, Out, Format]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Bucket,
    Pnr,
}

impl From<Kind> for DetectorKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Bucket => DetectorKind::Bucket,
            Kind::Pnr => DetectorKind::Pnr,
        }
    }
}

/// Flags shared by every subcommand. Each workflow rejects the ones it does
/// not use.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with the same settings; flags win over file values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Number of crystals (at least 2).
    #[arg(long)]
    pub crystals: Option<usize>,
    /// Emission orders (pair numbers), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<u32>>,
    /// Interaction parameter weighting the orders.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Mirror phase in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_phi: Option<f64>,
    #[arg(long, value_enum)]
    pub detector: Option<Kind>,
    /// Detector efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Photon count a number-resolving detector conditions on.
    #[arg(long)]
    pub count: Option<u32>,
    /// One sign (+, -, H or V) per measured mode, in canonical mode order.
    #[arg(long, allow_hyphen_values = true)]
    pub pattern: Option<String>,
    /// Phase samples over [0, 2 pi).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub detectors: Option<Vec<Kind>>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Include the conditional state in herald output.
    #[arg(long)]
    pub dump_state: bool,
    /// Recompute with the exact-arithmetic oracle and compare.
    #[arg(long)]
    pub oracle_check: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    workflow: Option<Workflow>,
    pattern: Option<String>,
    source: Option<FileSource>,
    detector: Option<FileDetector>,
    grid: Option<FileGrid>,
    output: Option<FileOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSource {
    n_crystals: Option<usize>,
    delta_phi_rad: Option<f64>,
    tau: Option<f64>,
    orders: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDetector {
    kind: Option<Kind>,
    eta: Option<f64>,
    required_count: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGrid {
    points: Option<usize>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
    detectors: Option<Vec<Kind>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOutput {
    out: Option<PathBuf>,
    format: Option<Format>,
    dump_state: Option<bool>,
    oracle_check: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Crystals,
    Orders,
    Tau,
    DeltaPhi,
    Detector,
    Eta,
    Count,
    Pattern,
    Points,
    From,
    To,
    Steps,
    Detectors,
    Out,
    Format,
    DumpState,
    OracleCheck,
}

impl Key {
    fn flag(self) -> &'static str {
        match self {
            Key::Crystals => "--crystals",
            Key::Orders => "--orders",
            Key::Tau => "--tau",
            Key::DeltaPhi => "--delta-phi",
            Key::Detector => "--detector",
            Key::Eta => "--eta",
            Key::Count => "--count",
            Key::Pattern => "--pattern",
            Key::Points => "--points",
            Key::From => "--from",
            Key::To => "--to",
            Key::Steps => "--steps",
            Key::Detectors => "--detectors",
            Key::Out => "--out",
            Key::Format => "--format",
            Key::DumpState => "--dump-state",
            Key::OracleCheck => "--oracle-check",
        }
    }

    fn file_key(self) -> &'static str {
        match self {
            Key::Crystals => "source.n_crystals",
            Key::Orders => "source.orders",
            Key::Tau => "source.tau",
            Key::DeltaPhi => "source.delta_phi_rad",
            Key::Detector => "detector.kind",
            Key::Eta => "detector.eta",
            Key::Count => "detector.required_count",
            Key::Pattern => "pattern",
            Key::Points => "grid.points",
            Key::From => "grid.from",
            Key::To => "grid.to",
            Key::Steps => "grid.steps",
            Key::Detectors => "grid.detectors",
            Key::Out => "output.out",
            Key::Format => "output.format",
            Key::DumpState => "output.dump_state",
            Key::OracleCheck => "output.oracle_check",
        }
    }
}

/// Merged settings before workflow validation, remembering where each value
/// came from so diagnostics can name the flag or the file key.
#[derive(Debug, Default)]
struct Settings {
    crystals: Option<usize>,
    orders: Option<Vec<u32>>,
    tau: Option<f64>,
    delta_phi: Option<f64>,
    detector: Option<Kind>,
    eta: Option<f64>,
    count: Option<u32>,
    pattern: Option<String>,
    points: Option<usize>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
    detectors: Option<Vec<Kind>>,
    out: Option<PathBuf>,
    format: Option<Format>,
    dump_state: Option<bool>,
    oracle_check: Option<bool>,
    from_flags: BTreeSet<Key>,
    present: BTreeSet<Key>,
}

impl Settings {
    fn name(&self, key: Key) -> &'static str {
        if self.from_flags.contains(&key) {
            key.flag()
        } else {
            key.file_key()
        }
    }

    fn error(&self, key: Key, message: impl Into<String>) -> CliError {
        CliError::Config { key: self.name(key).to_string(), message: message.into() }
    }
}

fn take<T>(slot: &mut Option<T>, flag: Option<T>, file: Option<T>, key: Key, from_flags: &mut BTreeSet<Key>) {
    if flag.is_some() {
        from_flags.insert(key);
        *slot = flag;
    } else {
        *slot = file;
    }
}

fn merge(flags: &Flags, file: FileConfig) -> Settings {
    let src = file.source.unwrap_or_default();
    let det = file.detector.unwrap_or_default();
    let grid = file.grid.unwrap_or_default();
    let out = file.output.unwrap_or_default();
    let mut s = Settings::default();
    let mut ff = BTreeSet::new();
    take(&mut s.crystals, flags.crystals, src.n_crystals, Key::Crystals, &mut ff);
    take(&mut s.orders, flags.orders.clone(), src.orders, Key::Orders, &mut ff);
    take(&mut s.tau, flags.tau, src.tau, Key::Tau, &mut ff);
    take(&mut s.delta_phi, flags.delta_phi, src.delta_phi_rad, Key::DeltaPhi, &mut ff);
    take(&mut s.detector, flags.detector, det.kind, Key::Detector, &mut ff);
    take(&mut s.eta, flags.eta, det.eta, Key::Eta, &mut ff);
    take(&mut s.count, flags.count, det.required_count, Key::Count, &mut ff);
    take(&mut s.pattern, flags.pattern.clone(), file.pattern, Key::Pattern, &mut ff);
    take(&mut s.points, flags.points, grid.points, Key::Points, &mut ff);
    take(&mut s.from, flags.from, grid.from, Key::From, &mut ff);
    take(&mut s.to, flags.to, grid.to, Key::To, &mut ff);
    take(&mut s.steps, flags.steps, grid.steps, Key::Steps, &mut ff);
    take(&mut s.detectors, flags.detectors.clone(), grid.detectors, Key::Detectors, &mut ff);
    take(&mut s.out, flags.out.clone(), out.out, Key::Out, &mut ff);
    take(&mut s.format, flags.format, out.format, Key::Format, &mut ff);
    take(&mut s.dump_state, flags.dump_state.then_some(true), out.dump_state, Key::DumpState, &mut ff);
    take(&mut s.oracle_check, flags.oracle_check.then_some(true), out.oracle_check, Key::OracleCheck, &mut ff);
    s.from_flags = ff;

    let set: [(Key, bool); 17] = [
        (Key::Crystals, s.crystals.is_some()),
        (Key::Orders, s.orders.is_some()),
        (Key::Tau, s.tau.is_some()),
        (Key::DeltaPhi, s.delta_phi.is_some()),
        (Key::Detector, s.detector.is_some()),
        (Key::Eta, s.eta.is_some()),
        (Key::Count, s.count.is_some()),
        (Key::Pattern, s.pattern.is_some()),
        (Key::Points, s.points.is_some()),
        (Key::From, s.from.is_some()),
        (Key::To, s.to.is_some()),
        (Key::Steps, s.steps.is_some()),
        (Key::Detectors, s.detectors.is_some()),
        (Key::Out, s.out.is_some()),
        (Key::Format, s.format.is_some()),
        (Key::DumpState, s.dump_state.is_some()),
        (Key::OracleCheck, s.oracle_check.is_some()),
    ];
    s.present = set.into_iter().filter(|&(_, on)| on).map(|(k, _)| k).collect();
    s
}

/// Where and how results are written.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeraldRun {
    pub source: SourceConfig,
    pub detector: DetectorModel,
    #[serde(serialize_with = "as_text")]
    pub pattern: SignPattern,
    #[serde(skip)]
    pub output: OutputSpec,
    #[serde(skip)]
    pub dump_state: bool,
    #[serde(skip)]
    pub oracle_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoonRun {
    pub n_crystals: usize,
    pub points: usize,
    #[serde(serialize_with = "as_text")]
    pub pattern: SignPattern,
    #[serde(skip)]
    pub output: OutputSpec,
    #[serde(skip)]
    pub oracle_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub n_crystals: usize,
    pub delta_phi_rad: f64,
    pub orders: Vec<u32>,
    pub taus: Vec<f64>,
    pub detectors: Vec<DetectorModel>,
    #[serde(skip)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaRun {
    pub source: SourceConfig,
    pub detector: DetectorModel,
    #[serde(serialize_with = "as_text")]
    pub pattern: SignPattern,
    pub etas: Vec<f64>,
    #[serde(skip)]
    pub output: OutputSpec,
}

fn as_text<S: serde::Serializer>(p: &SignPattern, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(p)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Herald(HeraldRun),
    NoonScan(NoonRun),
    SweepTau(SweepRun),
    EtaScan(EtaRun),
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config { key: path.display().to_string(), message: e.message().to_string() })
}

/// Reads the optional config file, applies the flags on top and checks the
/// result for `workflow`.
pub fn resolve(workflow: Workflow, flags: &Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(path) => read_file(path)?,
        None => FileConfig::default(),
    };
    if let Some(w) = file.workflow {
        if w != workflow {
            return Err(CliError::Config {
                key: "workflow".into(),
                message: format!("file is for {}, command is {}", w.name(), workflow.name()),
            });
        }
    }
    let s = merge(flags, file);
    if let Some(&key) = s.present.iter().find(|k| !workflow.allowed().contains(k)) {
        return Err(s.error(key, format!("not used by {}", workflow.name())));
    }
    match workflow {
        Workflow::Herald => herald(&s).map(RunConfig::Herald),
        Workflow::NoonScan => noon(&s).map(RunConfig::NoonScan),
        Workflow::SweepTau => sweep(&s).map(RunConfig::SweepTau),
        Workflow::EtaScan => eta_scan(&s).map(RunConfig::EtaScan),
    }
}

fn crystals(s: &Settings) -> Result<usize, CliError> {
    let n = s.crystals.unwrap_or(2);
    build_circuit(n).map_err(|e| s.error(Key::Crystals, e.to_string()))?;
    Ok(n)
}

fn finite(s: &Settings, key: Key, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(s.error(key, "must be finite"))
    }
}

fn source(s: &Settings, n: usize) -> Result<SourceConfig, CliError> {
    let orders = s.orders.clone().unwrap_or_else(|| vec![2 * n as u32]);
    if orders.is_empty() {
        return Err(s.error(Key::Orders, "must list at least one order"));
    }
    if let Some(&k) = orders.iter().find(|&&k| k > 4 * n as u32) {
        return Err(s.error(Key::Orders, format!("order {k} is above the supported maximum {}", 4 * n)));
    }
    let tau = s.tau.unwrap_or(0.05);
    if !(tau.is_finite() && tau > 0.0) {
        return Err(s.error(Key::Tau, "must be a positive number"));
    }
    let delta_phi = finite(s, Key::DeltaPhi, s.delta_phi.unwrap_or(0.0))?;
    Ok(SourceConfig::weak(n, delta_phi).with_tau(tau).with_orders(orders))
}

fn efficiency(s: &Settings, key: Key, eta: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&eta) {
        Ok(eta)
    } else {
        Err(s.error(key, format!("efficiency {eta} outside [0, 1]")))
    }
}

fn detector(s: &Settings) -> Result<DetectorModel, CliError> {
    let eta = efficiency(s, Key::Eta, s.eta.unwrap_or(1.0))?;
    match s.detector.unwrap_or(Kind::Bucket) {
        Kind::Bucket => {
            if s.count.is_some() {
                return Err(s.error(Key::Count, "only number-resolving detectors take a count"));
            }
            Ok(DetectorModel::bucket(eta))
        }
        Kind::Pnr => Ok(DetectorModel::pnr(eta, s.count.unwrap_or(1))),
    }
}

fn pattern(s: &Settings, len: usize, default: SignPattern) -> Result<SignPattern, CliError> {
    let Some(text) = &s.pattern else {
        return Ok(default);
    };
    let p = SignPattern::parse(text).map_err(|e| s.error(Key::Pattern, e.to_string()))?;
    if p.len() != len {
        return Err(s.error(Key::Pattern, format!("has {} signs, the circuit measures {len} modes", p.len())));
    }
    Ok(p)
}

fn output(s: &Settings, default: Format) -> OutputSpec {
    OutputSpec { path: s.out.clone(), format: s.format.unwrap_or(default) }
}

/// `steps` evenly spaced values from `from` to `to`, both included.
fn grid(s: &Settings, default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
    let from = finite(s, Key::From, s.from.unwrap_or(default.0))?;
    let to = finite(s, Key::To, s.to.unwrap_or(default.1))?;
    let steps = s.steps.unwrap_or(default.2);
    if steps == 0 {
        return Err(s.error(Key::Steps, "must be at least 1"));
    }
    if steps == 1 {
        if from != to {
            return Err(s.error(Key::Steps, "a single step needs from == to"));
        }
        return Ok(vec![from]);
    }
    Ok((0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect())
}

fn herald(s: &Settings) -> Result<HeraldRun, CliError> {
    let n = crystals(s)?;
    let source = source(s, n)?;
    let detector = detector(s)?;
    let layout = build_circuit(n).expect("checked");
    let len = layout.detection_modes.len();
    let pattern = pattern(s, len, SignPattern::all_plus(len))?;
    let output = output(s, Format::Json);
    if output.format != Format::Json {
        return Err(s.error(Key::Format, "herald writes json only"));
    }
    let oracle_check = s.oracle_check.unwrap_or(false);
    if oracle_check {
        let single = source.orders.len() == 1 && source.orders.contains(&(2 * n as u32));
        let modelled = detector.eta == 1.0
            && match detector.kind {
                DetectorKind::Pnr => detector.required_count == 1,
                DetectorKind::Bucket => single,
            };
        if !modelled {
            return Err(s.error(
                Key::OracleCheck,
                "the oracle models unit-efficiency single-photon detection (pnr, or bucket at the lowest order only)",
            ));
        }
        if n > 3 {
            return Err(s.error(Key::OracleCheck, "the oracle handles at most 3 crystals"));
        }
    }
    Ok(HeraldRun { source, detector, pattern, output, dump_state: s.dump_state.unwrap_or(false), oracle_check })
}

fn noon(s: &Settings) -> Result<NoonRun, CliError> {
    let n = crystals(s)?;
    let len = build_circuit(n).expect("checked").primed_modes().len();
    let pattern = pattern(s, len, SignPattern::first_minus(len))?;
    if pattern.minus_count() % 2 == 0 {
        return Err(s.error(Key::Pattern, "needs an odd number of '-' signs for a fringe"));
    }
    let points = s.points.unwrap_or(128);
    if points < 16 {
        return Err(s.error(Key::Points, "the fringe fit needs at least 16 points"));
    }
    let oracle_check = s.oracle_check.unwrap_or(false);
    if oracle_check && n > 3 {
        return Err(s.error(Key::OracleCheck, "the oracle handles at most 3 crystals"));
    }
    Ok(NoonRun { n_crystals: n, points, pattern, output: output(s, Format::Csv), oracle_check })
}

fn sweep(s: &Settings) -> Result<SweepRun, CliError> {
    let n = crystals(s)?;
    let base = 2 * n as u32;
    let orders = s.orders.clone().unwrap_or_else(|| vec![base, base + 1]);
    let contiguous = orders.iter().enumerate().all(|(i, &k)| k == base + i as u32);
    if orders.is_empty() || !contiguous || orders.len() > 3 {
        return Err(
            s.error(Key::Orders, format!("must be {base}, {base},{} or {base},{},{}", base + 1, base + 1, base + 2))
        );
    }
    let delta_phi = finite(s, Key::DeltaPhi, s.delta_phi.unwrap_or(0.0))?;
    let eta = efficiency(s, Key::Eta, s.eta.unwrap_or(1.0))?;
    let taus = grid(s, (0.01, 0.1, 10))?;
    if taus.iter().any(|&t| t <= 0.0) {
        return Err(s.error(Key::From, "tau values must be positive"));
    }
    let kinds = s.detectors.clone().unwrap_or_else(|| vec![Kind::Bucket, Kind::Pnr]);
    if kinds.is_empty() {
        return Err(s.error(Key::Detectors, "must list at least one detector"));
    }
    let detectors = kinds
        .into_iter()
        .map(|k| match k {
            Kind::Bucket => DetectorModel::bucket(eta),
            Kind::Pnr => DetectorModel::pnr(eta, 1),
        })
        .collect();
    Ok(SweepRun { n_crystals: n, delta_phi_rad: delta_phi, orders, taus, detectors, output: output(s, Format::Csv) })
}

fn eta_scan(s: &Settings) -> Result<EtaRun, CliError> {
    let n = crystals(s)?;
    let source = source(s, n)?;
    let detector = detector(s)?;
    let len = build_circuit(n).expect("checked").detection_modes.len();
    let pattern = pattern(s, len, SignPattern::all_plus(len))?;
    let etas = grid(s, (0.5, 1.0, 6))?;
    for (&eta, key) in etas.iter().zip([Key::From].into_iter().chain(std::iter::repeat(Key::To))) {
        efficiency(s, key, eta)?;
    }
    Ok(EtaRun { source, detector, pattern, etas, output: output(s, Format::Csv) })
}
