//! `impsca`: simulate impedance trace campaigns, attack them, and export
//! results.
//!
//! Exit status: 0 on success, 1 when an analysis fails (an attack errors or
//! an `--expect-key` check does not hold), 2 on usage, config or I/O errors.

mod attack;
mod config;
mod report;
mod tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use impedance_sca::attacks::{Accumulation, AttackError, DimaScore};
use impedance_sca::crypto::SboxKind;
use impedance_sca::pdn::ExponentConvention;
use impedance_sca::trace::Channel;

#[derive(Parser)]
#[command(name = "impsca", version, about = "Impedance side-channel simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// S11 of a dielectric slab in free space over a linear sweep, as CSV.
    TlModel(TlModelArgs),
    /// Run a trace campaign from a TOML config and write an archive.
    Simulate(SimulateArgs),
    /// Difference-of-means attack on an S-box output.
    Dima(DimaArgs),
    /// Correlation attack with a Hamming-weight model.
    Cima(CimaArgs),
    /// Build per-bit Gaussian templates from labeled traces.
    TimaProfile(TimaProfileArgs),
    /// Classify key-share bits of attack traces with saved templates.
    TimaAttack(TimaAttackArgs),
    /// Emit figure data as CSV, or merge JSON reports.
    Report(ReportArgs),
    /// Convert Touchstone `.s1p` or VNA CSV exports into an archive.
    Ingest(IngestArgs),
}

#[derive(Args)]
pub struct TlModelArgs {
    /// Relative permittivity of the slab.
    #[arg(long, default_value_t = 4.4)]
    pub eps_r: f64,
    /// Slab length in meters.
    #[arg(long, default_value_t = 0.01)]
    pub length_m: f64,
    #[arg(long, default_value_t = 1e8)]
    pub start_hz: f64,
    #[arg(long, default_value_t = 6e9)]
    pub stop_hz: f64,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = ConventionArg::BoundaryDerived)]
    pub convention: ConventionArg,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    BoundaryDerived,
    AsPrinted,
}

impl From<ConventionArg> for ExponentConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::BoundaryDerived => ExponentConvention::BoundaryDerived,
            ConventionArg::AsPrinted => ExponentConvention::AsPrinted,
        }
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Trace archive to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also save the device model as JSON.
    #[arg(long)]
    pub device_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TargetArgs {
    /// Trace archive.
    #[arg(long)]
    pub traces: PathBuf,
    /// Plaintext byte whose S-box output is targeted.
    #[arg(long, default_value_t = 0)]
    pub byte: usize,
    #[arg(long, value_enum, default_value_t = SboxArg::Aes)]
    pub sbox: SboxArg,
    /// Channel to analyze; defaults to the archive's channel.
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// Expected key, either one byte or the full key in hex; a mismatch
    /// with the best hypothesis exits with status 1.
    #[arg(long)]
    pub expect_key: Option<String>,
    /// Rows of the ranking to keep in the report.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// JSON report to write.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SboxArg {
    Aes,
    Present4,
}

impl From<SboxArg> for SboxKind {
    fn from(s: SboxArg) -> Self {
        match s {
            SboxArg::Aes => SboxKind::Aes,
            SboxArg::Present4 => SboxKind::Present4,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ChannelArg {
    PhaseDeg,
    MagnitudeDb,
    Both,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::PhaseDeg => Channel::PhaseDeg,
            ChannelArg::MagnitudeDb => Channel::MagnitudeDb,
            ChannelArg::Both => Channel::Both,
        }
    }
}

#[derive(Args)]
pub struct DimaArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Partition on one S-box output bit instead of summing over all bits.
    #[arg(long)]
    pub bit: Option<u8>,
    #[arg(long, value_enum, default_value_t = ScoreArg::Mean)]
    pub score: ScoreArg,
    /// CSV of the difference-of-means matrix (one column per hypothesis).
    #[arg(long)]
    pub band_report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScoreArg {
    Mean,
    Max,
}

impl From<ScoreArg> for DimaScore {
    fn from(s: ScoreArg) -> Self {
        match s {
            ScoreArg::Mean => DimaScore::Mean,
            ScoreArg::Max => DimaScore::Max,
        }
    }
}

#[derive(Args)]
pub struct CimaArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Model one S-box output bit instead of the whole byte.
    #[arg(long)]
    pub bit: Option<u8>,
    /// CSV of the correlation matrix (one column per hypothesis).
    #[arg(long)]
    pub correlation_report: Option<PathBuf>,
}

#[derive(Args)]
pub struct TimaProfileArgs {
    /// Labeled profiling archive.
    #[arg(long)]
    pub traces: PathBuf,
    /// Number of key-share bits to template, in byte, share, bit order.
    #[arg(long, default_value_t = 24)]
    pub bits: usize,
    /// Explicit target bits (e.g. `k0.0.3`); overrides `--bits`.
    #[arg(long = "bit")]
    pub bit: Vec<String>,
    /// Share count of the masked key.
    #[arg(long, default_value_t = 3)]
    pub shares: u8,
    #[arg(long, default_value_t = 5)]
    pub pois: usize,
    /// POI exclusion radius as a fraction of the features.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Covariance ridge, relative to the mean variance.
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// Template file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TimaAttackArgs {
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long, value_enum, default_value_t = AccumulationArg::LogLikelihood)]
    pub accumulation: AccumulationArg,
    #[arg(long, default_value_t = 3)]
    pub shares: u8,
    /// Expected key bytes (hex) for the recovered byte range; a mismatch
    /// exits with status 1.
    #[arg(long)]
    pub expect_key: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AccumulationArg {
    LogLikelihood,
    ProbabilitySum,
}

impl From<AccumulationArg> for Accumulation {
    fn from(a: AccumulationArg) -> Self {
        match a {
            AccumulationArg::LogLikelihood => Accumulation::LogLikelihood,
            AccumulationArg::ProbabilitySum => Accumulation::ProbabilitySum,
        }
    }
}

#[derive(Args)]
pub struct ReportArgs {
    /// Figure to emit: fanout-dm, dom-matrix, correlation-matrix, top-keys,
    /// bit-dm, snr, rank-trajectory.
    #[arg(long, required_unless_present = "merge")]
    pub figure: Option<String>,
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Register bits for DM and SNR figures (default `fanout`).
    #[arg(long = "bit")]
    pub bit: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub byte: usize,
    #[arg(long, value_enum, default_value_t = SboxArg::Aes)]
    pub sbox: SboxArg,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// True key byte (hex), for the rank trajectory.
    #[arg(long)]
    pub expect_key: Option<String>,
    /// Trace counts of the rank trajectory.
    #[arg(long, value_delimiter = ',', default_value = "100,200,500,1000,2000,3000")]
    pub steps: Vec<usize>,
    /// JSON reports to merge into `--out`.
    #[arg(long, num_args = 1.., conflicts_with = "figure")]
    pub merge: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct IngestArgs {
    /// `.s1p` or `.csv` sweeps on a common grid, one trace each.
    #[arg(long = "input", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ChannelArg::PhaseDeg)]
    pub channel: ChannelArg,
    #[arg(long)]
    pub out: PathBuf,
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Done,
    /// The analysis ran but did not reach the expected result.
    Failed(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TlModel(a) => tools::tl_model(&a),
        Command::Simulate(a) => tools::simulate(&a),
        Command::Dima(a) => attack::dima(&a),
        Command::Cima(a) => attack::cima(&a),
        Command::TimaProfile(a) => attack::tima_profile(&a),
        Command::TimaAttack(a) => attack::tima_attack(&a),
        Command::Report(a) => report::run(&a),
        Command::Ingest(a) => tools::ingest(&a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(why)) => {
            eprintln!("analysis failed: {why}");
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<AttackError>().is_some() => {
            eprintln!("analysis failed: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
