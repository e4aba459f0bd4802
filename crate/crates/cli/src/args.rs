use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twophoton_core::spectrum::ExponentSign;
use twophoton_core::{BetaConvention, CorrelationMode, LineshapeMethod};

#[derive(Debug, Parser)]
#[command(
    name = "twophoton",
    version,
    about = "Two-photon resonance of a driven spin with telegraph noise",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Ensemble seed; realization i always uses stream i of this seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Convention::Appendix)]
    pub beta_convention: Convention,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Flat `key=value` file; keys are long flag names, command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one telegraph-noise realization.
    Noise(NoiseArgs),
    /// Floquet quasienergy gaps: frequency scans and multiphoton resonances.
    Floquet(FloquetArgs),
    /// Spin dynamics under noise.
    Dynamics(DynamicsArgs),
    /// Effective-field correlator, closed form or Monte Carlo.
    Correlator(CorrelatorArgs),
    /// Absorption lineshapes.
    Spectrum(SpectrumArgs),
    /// Lineshape curves for the small- and large-β sets with method overlays.
    #[command(name = "reproduce-fig2")]
    ReproduceFig2(Fig2Args),
    /// Oracle suite with a JSON pass/fail report.
    Validate(ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Noise(_) => "noise",
            Command::Floquet(_) => "floquet",
            Command::Dynamics(_) => "dynamics",
            Command::Correlator(_) => "correlator",
            Command::Spectrum(_) => "spectrum",
            Command::ReproduceFig2(_) => "reproduce-fig2",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Appendix,
    Paper,
}

impl From<Convention> for BetaConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Appendix => BetaConvention::Appendix,
            Convention::Paper => BetaConvention::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    InPhase,
    Independent,
}

impl From<Mode> for CorrelationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::InPhase => CorrelationMode::InPhase,
            Mode::Independent => CorrelationMode::Independent,
        }
    }
}

/// `start:end:count`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Span {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

pub fn parse_span(s: &str) -> Result<Span, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:end:count, got `{s}`"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    let (start, end) = (num(parts[0])?, num(parts[1])?);
    let count = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("`{}`: {e}", parts[2]))?;
    if !start.is_finite() || !end.is_finite() || count == 0 || end < start {
        return Err(format!("need finite start <= end and count >= 1, got `{s}`"));
    }
    Ok(Span { start, end, count })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldArgs {
    #[arg(long, default_value_t = 0.01)]
    pub bx: f64,
    #[arg(long, default_value_t = 0.0)]
    pub by: f64,
    #[arg(long, default_value_t = 0.001)]
    pub bz: f64,
    /// Mean time between switches.
    #[arg(long, default_value_t = 100.0)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = Mode::InPhase)]
    pub mode: Mode,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 1000.0)]
    pub t_max: f64,
    /// Realization index within the seeded ensemble.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Resonance {
    #[value(name = "2photon")]
    #[serde(rename = "2photon")]
    Two,
    #[value(name = "3photon")]
    #[serde(rename = "3photon")]
    Three,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("task").required(true).args(["scan_omega", "resonance", "omega"]))]
pub struct FloquetArgs {
    #[arg(long, default_value_t = 1.0)]
    pub b0: f64,
    #[arg(long)]
    pub b1: f64,
    /// Harmonic cutoff N; the truncation keeps n in [-N, N].
    #[arg(long, default_value_t = twophoton_core::floquet::DEFAULT_ORDER)]
    pub order: usize,
    /// Drive-frequency scan `start:end:count`.
    #[arg(long, value_parser = parse_span)]
    pub scan_omega: Option<Span>,
    /// Locate a multiphoton resonance and report its minimal gap.
    #[arg(long, value_enum)]
    pub resonance: Option<Resonance>,
    /// Single drive frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Static transverse field for the effective reduction at `--resonance 2photon`.
    #[arg(long, default_value_t = 0.0)]
    pub bx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Effective two-photon Hamiltonian, one trajectory or an ensemble mean.
    Effective,
    /// Full driven spin, one trajectory plus its period average.
    Full,
    /// Ensemble-mean full drive against the effective model over one envelope.
    Compare,
    /// Closed-form cumulant prediction of the mean.
    Cumulant,
    /// Integro-differential equation for the mean.
    Volterra,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DynamicsArgs {
    #[arg(long, value_enum, default_value_t = Model::Effective)]
    pub model: Model,
    #[command(flatten)]
    pub field: FieldArgs,
    /// Effective detuning Δ.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Mediated field b̃_x; derived from the drive and `--bx` when omitted.
    #[arg(long)]
    pub b_tilde: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub b0: f64,
    #[arg(long, default_value_t = 0.15)]
    pub b1: f64,
    /// Drive frequency for the full model; the two-photon resonance when omitted.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 1000.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Realizations; 1 writes a single Bloch trajectory.
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Self-convergence tolerance of the Volterra solve.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = twophoton_core::floquet::DEFAULT_ORDER)]
    pub order: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrelatorArgs {
    #[arg(long)]
    pub b_tilde: f64,
    #[arg(long)]
    pub bz: f64,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = Mode::InPhase)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Lag grid `start:end:count`.
    #[arg(long, value_parser = parse_span, default_value = "0:10:101")]
    pub lags: Span,
    /// Monte Carlo realizations; 0 for the closed form only.
    #[arg(long, default_value_t = 0)]
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    AsPrinted,
    CumulantConsistent,
}

impl From<Sign> for ExponentSign {
    fn from(s: Sign) -> Self {
        match s {
            Sign::AsPrinted => ExponentSign::AsPrinted,
            Sign::CumulantConsistent => ExponentSign::CumulantConsistent,
        }
    }
}

fn parse_method(s: &str) -> Result<LineshapeMethod, String> {
    s.parse().map_err(|e: twophoton_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("physical").multiple(true).args(["b_tilde", "bz", "tau"]))]
pub struct SpectrumArgs {
    #[arg(long, conflicts_with = "physical", required_unless_present_all = ["b_tilde", "bz", "tau"])]
    pub beta: Option<f64>,
    #[arg(long, requires_all = ["bz", "tau"])]
    pub b_tilde: Option<f64>,
    #[arg(long, requires_all = ["b_tilde", "tau"])]
    pub bz: Option<f64>,
    #[arg(long, requires_all = ["b_tilde", "bz"])]
    pub tau: Option<f64>,
    /// Comma-separated: numeric, zeroth, byparts, trajectory.
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "numeric,zeroth,byparts")]
    #[serde(serialize_with = "serialize_methods")]
    pub methods: Vec<LineshapeMethod>,
    /// Dimensionless detuning grid `start:end:count`.
    #[arg(long, value_parser = parse_span, default_value = "0:3:121")]
    pub delta: Span,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Sign::AsPrinted)]
    pub exponent_sign: Sign,
    /// Realizations for the trajectory method.
    #[arg(long, default_value_t = 2000)]
    pub n: u64,
    /// Time step of the trajectory method, in units of τ_s.
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    /// Trajectory length, in units of τ_s.
    #[arg(long, default_value_t = 40.0)]
    pub t_end: f64,
}

fn serialize_methods<S: serde::Serializer>(m: &[LineshapeMethod], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(m.iter().map(|x| x.as_str()))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Fig2Args {
    #[arg(long, value_parser = parse_span, default_value = "0:3:121")]
    pub delta: Span,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Sign::AsPrinted)]
    pub exponent_sign: Sign,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    /// CI-scale sample sizes.
    #[arg(long)]
    pub fast: bool,
    /// Multiplies every statistical tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tol_scale: f64,
}
