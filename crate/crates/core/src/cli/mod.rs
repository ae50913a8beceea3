//! Command-line experiment runner.

pub mod config;
mod output;
pub mod run;
pub mod sanity;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::dimension::MetricTag;
use crate::error::Error;
use crate::schottky::LimitMode;
pub use config::ExperimentConfig;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONSTRUCTION: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;
pub const EXIT_ESTIMATION: u8 = 5;

/// Error carrying the process exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(e: impl std::fmt::Display) -> Self {
        Self::new(EXIT_USAGE, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Construction(_) => EXIT_CONSTRUCTION,
            Error::Verification(_) => EXIT_VERIFICATION,
            Error::Estimation(_) | Error::Numeric(_) | Error::Conditioning(_) | Error::Domain(_) => EXIT_ESTIMATION,
            Error::Input(_) | Error::Parse(_) | Error::Io(_) => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "chdim", version, about = "Schottky groups in complex hyperbolic space and limit-set dimensions")]
pub struct Cli {
    /// Experiment configuration (TOML); flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Complex dimension of the ball.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of free generators.
    #[arg(long, global = true)]
    pub generators: Option<usize>,
    /// Seed for construction and sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximal reduced word length.
    #[arg(long, global = true)]
    pub word_length: Option<usize>,
    /// Coarsest box-counting scale.
    #[arg(long, global = true)]
    pub scale_hi: Option<f64>,
    /// Finest box-counting scale.
    #[arg(long, global = true)]
    pub scale_lo: Option<f64>,
    /// Number of box-counting scales.
    #[arg(long, global = true)]
    pub scale_count: Option<usize>,
    /// Comma-separated metric tags.
    #[arg(long, global = true, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricTag>>,
    /// word-fixed-points, nested-centers or orbit-of-point.
    #[arg(long, global = true)]
    pub limit_mode: Option<LimitMode>,
    /// Boundary samples per domain in verification.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Required clearance for the no-triple-chain condition.
    #[arg(long, global = true)]
    pub margin: Option<f64>,
    /// Base translation length of the generators.
    #[arg(long, global = true)]
    pub t0: Option<f64>,
    /// Largest generator power tried before giving up.
    #[arg(long, global = true)]
    pub power_cap: Option<u32>,
    /// Relative enlargement of the ping-pong radius.
    #[arg(long, global = true)]
    pub slack: Option<f64>,
    /// Minimal spherical distance from a fixed-point chain to other fixed points.
    #[arg(long, global = true)]
    pub chain_separation: Option<f64>,
    /// Put all fixed points on one chain (negative control).
    #[arg(long, global = true)]
    pub forced_shared_chain: bool,
    /// Random instances per invariant in the battery.
    #[arg(long, global = true)]
    pub sanity_instances: Option<usize>,
    /// Directory for output files.
    #[arg(long, short, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, short = 'j', global = true)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and verify a Schottky system in good position.
    SchottkyBuild,
    /// Re-verify a stored descriptor.
    SchottkyVerify(DescriptorArg),
    /// Write limit-set samples.
    LimitSample(DescriptorArg),
    /// Estimate the critical exponent from orbit distances.
    Exponent(DescriptorArg),
    /// Run the full dimension experiment.
    DimensionRun(DescriptorArg),
    /// Run the invariant battery.
    Sanity,
}

#[derive(Debug, Args)]
pub struct DescriptorArg {
    /// Descriptor file, or `bundled` for the bundled system.
    #[arg(long, short)]
    pub descriptor: String,
}

impl Overrides {
    fn apply(&self, c: &mut ExperimentConfig) {
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(self.n, c.n);
        set!(self.generators, c.generators);
        set!(self.seed, c.seed);
        set!(self.word_length, c.word_length);
        set!(self.scale_hi, c.scales.hi);
        set!(self.scale_lo, c.scales.lo);
        set!(self.scale_count, c.scales.count);
        set!(self.metrics, c.metrics);
        set!(self.limit_mode, c.limit_mode);
        set!(self.resolution, c.verification.resolution);
        set!(self.margin, c.verification.margin);
        set!(self.t0, c.construction.t0);
        set!(self.power_cap, c.construction.power_cap);
        set!(self.slack, c.construction.slack);
        set!(self.chain_separation, c.construction.chain_separation);
        set!(self.sanity_instances, c.sanity_instances);
        set!(self.output_dir, c.output_dir);
        set!(self.parallelism, c.parallelism);
        if self.forced_shared_chain {
            c.construction.forced_shared_chain = true;
        }
    }
}

/// Resolves the configuration from the file and flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut c = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text).map_err(Failure::usage)?
        }
        None => ExperimentConfig::default(),
    };
    cli.overrides.apply(&mut c);
    c.validate().map_err(Failure::usage)?;
    Ok(c)
}

/// Runs a parsed command inside a thread pool of the configured size.
pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let config = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", config.output_dir.display())))?;
    pool.install(|| match &cli.command {
        Command::SchottkyBuild => run::schottky_build(&config),
        Command::SchottkyVerify(d) => run::schottky_verify(&config, &d.descriptor),
        Command::LimitSample(d) => run::limit_sample(&config, &d.descriptor),
        Command::Exponent(d) => run::exponent(&config, &d.descriptor),
        Command::DimensionRun(d) => match run::dimension_run(&config, &d.descriptor)?.failure() {
            Some(f) => Err(f),
            None => Ok(()),
        },
        Command::Sanity => run::sanity(&config),
    })
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("chdim: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
