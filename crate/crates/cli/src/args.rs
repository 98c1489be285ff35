use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "psprog", version, about = "Polynomial progressions in Piatetski-Shapiro sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Cmd {
    /// Exact volume of a polytope of the C family
    Volume(VolumeArgs),
    /// Classify progression starts n, by brute force and by the polytope criterion
    Detect(DetectArgs),
    /// Density of progression starts with a fixed step r
    Density(DensityArgs),
    /// Density of progression starts in a short interval [N, N+L)
    Short(ShortArgs),
    /// Count progressions with free step r
    VaryR(VaryRArgs),
    /// Gap lengths L(x) to the next progression start
    Gaps(GapsArgs),
    /// Density as a function of alpha
    Sweep(SweepArgs),
    /// Discrepancy of the orbit (f(n), r f'(n)) mod 1
    Discrepancy(DiscrepancyArgs),
    /// Density for x log x against its limit band
    XlogxBand(BandArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    C,
    Cminus,
    Cplus,
    Cprime,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the result here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write a run manifest (config, version, timings, checksums) here
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Flat `key = value` file supplying defaults for the flags, or a manifest to replay
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (results do not depend on it)
    #[arg(long, env = "PSPROG_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct VolumeArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub d: u32,
    #[arg(long, value_enum, default_value = "c")]
    pub variant: VariantArg,
    /// Slack for cminus and cplus, as p/q or decimal
    #[arg(long)]
    pub eps: Option<String>,
    /// Also estimate the volume by Monte Carlo with this many samples
    #[arg(long)]
    pub mc_samples: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct DetectArgs {
    /// Function, e.g. pow:3/2, xlog:2, x2log:1, x2loglog:1, xlogx
    #[arg(long = "f", default_value = "pow:3/2")]
    pub f: String,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    /// Single start n
    #[arg(long, conflicts_with_all = ["from", "to"])]
    pub n: Option<u64>,
    #[arg(long, requires = "to")]
    pub from: Option<u64>,
    #[arg(long, requires = "from")]
    pub to: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    /// Function, e.g. pow:3/2, xlog:2, x2log:1, x2loglog:1, xlogx
    #[arg(long = "f", default_value = "pow:3/2")]
    pub f: String,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    /// Largest N; the grid is every power of ten from 1000 below it, then N
    #[arg(long, required_unless_present = "grid")]
    pub n: Option<u64>,
    /// Explicit comma-separated N grid
    #[arg(long)]
    pub grid: Option<String>,
    /// Let the polytope criterion decide first (same counts)
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    pub accelerate: bool,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ShortArgs {
    /// Function, e.g. pow:3/2, xlog:2, x2log:1, x2loglog:1, xlogx
    #[arg(long = "f", default_value = "pow:3/2")]
    pub f: String,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub l: u64,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    pub accelerate: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct VaryRArgs {
    #[arg(long, default_value = "3/2")]
    pub alpha: String,
    #[arg(long)]
    pub k: u32,
    #[arg(long, required_unless_present = "grid")]
    pub n: Option<u64>,
    #[arg(long)]
    pub grid: Option<String>,
    /// Check every step r instead of stopping at the proven cutoff
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    pub no_prune: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct GapsArgs {
    #[arg(long, default_value = "3/2")]
    pub alpha: String,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    /// Comma-separated x values, or log:LO..HI:COUNT for log-spaced points
    #[arg(long, default_value = "log:1000..1000000:31")]
    pub x_grid: String,
    /// Also scan every x between the grid ends for the largest ratio
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    pub full_scan: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    #[arg(long)]
    pub n: u64,
    /// A+i/B,i=LO..HI or a comma-separated list of rationals in (1,2)
    #[arg(long, default_value = "1+i/1000,i=1..999")]
    pub alpha_grid: String,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct DiscrepancyArgs {
    /// Power function pow:P/Q
    #[arg(long = "f", default_value = "pow:3/2")]
    pub f: String,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    /// First n of the orbit
    #[arg(long)]
    pub n: u64,
    /// Number of points
    #[arg(long)]
    pub l: u64,
    /// Comma-separated H values for the exponential-sum bound
    #[arg(long, default_value = "2,4,8,16,32,64")]
    pub h: String,
    /// Grid size used above 2048 points
    #[arg(long, default_value_t = 1024)]
    pub grid: u32,
    /// Frequencies for the derivative tests, e.g. --h0 1 --h1 0
    #[arg(long, requires = "h1", allow_hyphen_values = true)]
    pub h0: Option<i64>,
    #[arg(long, requires = "h0", allow_hyphen_values = true)]
    pub h1: Option<i64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct BandArgs {
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    #[arg(long, required_unless_present = "grid")]
    pub n: Option<u64>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    pub accelerate: bool,
    #[command(flatten)]
    pub common: Common,
}

impl Cmd {
    pub fn common(&self) -> &Common {
        match self {
            Cmd::Volume(a) => &a.common,
            Cmd::Detect(a) => &a.common,
            Cmd::Density(a) => &a.common,
            Cmd::Short(a) => &a.common,
            Cmd::VaryR(a) => &a.common,
            Cmd::Gaps(a) => &a.common,
            Cmd::Sweep(a) => &a.common,
            Cmd::Discrepancy(a) => &a.common,
            Cmd::XlogxBand(a) => &a.common,
        }
    }
}
