use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hochster::cli::{
    parse_window_spec, run, CliError, Command, EnumerateCheck, JobConfig, OutputFormat, EXIT_INPUT,
};
use hochster::exactlin::CoefficientRing;

/// Exact multigraded local cohomology and Ext of squarefree modules, with
/// brute-force verification oracles.
#[derive(Parser)]
#[command(name = "hochster", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Facet list or sheaf JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Coefficient ring: q, z, or fp:<prime>.
    #[arg(long, default_value = "q")]
    coeff: String,
    /// Degree window, lo..hi for all coordinates or a comma-separated
    /// per-coordinate list.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Cohomological index; sweeps every index when omitted.
    #[arg(long, allow_negative_numbers = true)]
    i: Option<i64>,
    /// Output format: tsv or json.
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Table of the decomposed local cohomology over a degree window.
    Lc {
        #[command(flatten)]
        common: Common,
    },
    /// Table of the decomposed Ext against the ideal of l-th powers.
    Ext {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        l: i64,
    },
    /// Hilbert series of the local cohomology, per face and coarse.
    Series {
        #[command(flatten)]
        common: Common,
    },
    /// Table of the brute-force Cech local cohomology.
    OracleLc {
        #[command(flatten)]
        common: Common,
    },
    /// Table of the brute-force Koszul Ext.
    OracleExt {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        l: i64,
    },
    /// Compare the local cohomology formula with the Cech oracle.
    VerifyLc {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the Ext formula with the Koszul oracle.
    VerifyExt {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        l: i64,
    },
    /// Check the two sheaf decompositions degreewise.
    VerifyProps {
        #[command(flatten)]
        common: Common,
        /// Vertex count of the ambient poset.
        #[arg(long)]
        n: usize,
        /// Largest power to check on the finite side.
        #[arg(long, default_value_t = 3)]
        l: i64,
    },
    /// Compare multiplication ranks between the two sides.
    VerifyMulti {
        #[command(flatten)]
        common: Common,
    },
    /// Decompose an injective sheaf into closures, or name a witness stalk.
    DecomposeInjective {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep every complex on n vertices through a verify subcommand.
    Enumerate {
        #[command(flatten)]
        common: Common,
        /// Vertex count; exhaustive enumeration is capped at 4.
        #[arg(long)]
        n: usize,
        /// Which comparison to run: lc, ext, or multi.
        #[arg(long, default_value = "lc")]
        check: String,
        #[arg(long, default_value_t = 1)]
        l: i64,
    },
}

fn build(common: &Common, command: Command) -> Result<JobConfig, CliError> {
    let mut job = JobConfig::new(command);
    job.input = common.input.clone();
    job.coeff = CoefficientRing::parse(&common.coeff).map_err(|e| CliError::Flag(e.to_string()))?;
    job.window = common.window.as_deref().map(parse_window_spec).transpose()?;
    job.index = common.i;
    job.format = OutputFormat::parse(&common.format)?;
    job.jobs = common.jobs.max(1);
    Ok(job)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let job = (|| -> Result<JobConfig, CliError> {
        Ok(match &cli.cmd {
            Cmd::Lc { common } => build(common, Command::Lc)?,
            Cmd::Ext { common, l } => {
                let mut j = build(common, Command::Ext)?;
                j.l = *l;
                j
            }
            Cmd::Series { common } => build(common, Command::Series)?,
            Cmd::OracleLc { common } => build(common, Command::OracleLc)?,
            Cmd::OracleExt { common, l } => {
                let mut j = build(common, Command::OracleExt)?;
                j.l = *l;
                j
            }
            Cmd::VerifyLc { common } => build(common, Command::VerifyLc)?,
            Cmd::VerifyExt { common, l } => {
                let mut j = build(common, Command::VerifyExt)?;
                j.l = *l;
                j
            }
            Cmd::VerifyProps { common, n, l } => {
                let mut j = build(common, Command::VerifyProps)?;
                j.n = Some(*n);
                j.l = *l;
                j
            }
            Cmd::VerifyMulti { common } => build(common, Command::VerifyMulti)?,
            Cmd::DecomposeInjective { common } => build(common, Command::DecomposeInjective)?,
            Cmd::Enumerate { common, n, check, l } => {
                let mut j = build(common, Command::Enumerate)?;
                j.n = Some(*n);
                j.check = EnumerateCheck::parse(check)?;
                j.l = *l;
                j
            }
        })
    })();
    match job {
        Ok(job) => {
            let mut stdout = std::io::stdout().lock();
            ExitCode::from(run(&job, &mut stdout) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
