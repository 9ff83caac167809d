mod commands;
mod render;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use firstpat::exact::{SizeSpec, TruncationBox};
use firstpat::montecarlo::{RevealMethod, DEFAULT_HARD_CAP};
use firstpat::oracle::{EnumerationConfig, DEFAULT_CAP};
use render::{render, Format};

#[derive(Debug, Parser)]
#[command(
    name = "firstpat",
    version,
    about = "Law of the lexicographically first 123 pattern in a random permutation"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Output format; csv and json are the stable machine formats.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Omit run metadata (seed, wall time) from the output.
    #[arg(long, global = true)]
    no_metadata: bool,

    /// Worker threads for enumeration and simulation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Enumerate above the oracle cap.
    #[arg(long, global = true)]
    force: bool,

    /// Decimal places in rendered probabilities (round half to even).
    #[arg(long, default_value_t = 4, global = true)]
    places: usize,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SizeArgs {
    /// Permutation size.
    #[arg(long)]
    n: Option<usize>,

    /// A bijection of the positive integers.
    #[arg(long)]
    infinite: bool,
}

impl SizeArgs {
    fn spec(&self) -> Result<SizeSpec, CliError> {
        match (self.n, self.infinite) {
            (Some(n), false) => Ok(SizeSpec::finite(n)?),
            (None, true) => Ok(SizeSpec::Infinite),
            _ => Err(CliError::Usage(
                "give exactly one of --n or --infinite".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ExactSelector {
    /// One triple, as a,b,c (or abc when n <= 9).
    #[arg(long)]
    pub(crate) triple: Option<String>,

    /// Every triple with a = 1, plus the a >= 2 remainder.
    #[arg(long)]
    pub(crate) leading_one: bool,

    /// The whole law of X.
    #[arg(long)]
    pub(crate) full: bool,

    /// P(X >= {2,3,4}), including X = never.
    #[arg(long = "ge-234")]
    pub(crate) ge_234: bool,

    /// P(X = never), the 123-avoidance probability.
    #[arg(long)]
    pub(crate) avoid: bool,

    /// Probability that the shortest 123-containing prefix has length K.
    #[arg(long, value_name = "K")]
    pub(crate) prefix_k: Option<usize>,

    /// Median of X.
    #[arg(long)]
    pub(crate) median: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact probabilities from the closed forms (and the oracle for a >= 2).
    Exact {
        #[command(flatten)]
        size: SizeArgs,
        #[command(flatten)]
        select: ExactSelector,
        /// Truncation box s_max,r_max for infinite tables.
        #[arg(long, value_name = "S,R", default_value = "50,200")]
        truncate: String,
    },
    /// Exhaustive census over all n! permutations.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Condition on the shortest pattern-containing prefix having length K.
        #[arg(long, value_name = "K", conflicts_with_all = ["segments", "prefix_law"])]
        given_prefix_k: Option<usize>,
        /// Report the monotone-segment shape of the census.
        #[arg(long, conflicts_with = "prefix_law")]
        segments: bool,
        /// Counts of the shortest pattern-containing prefix length.
        #[arg(long)]
        prefix_law: bool,
    },
    /// Seeded Monte Carlo estimates.
    Simulate {
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, env = "FIRSTPAT_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        /// Positions per infinite-case trial before the run aborts.
        #[arg(long, default_value_t = DEFAULT_HARD_CAP)]
        hard_cap: u64,
        /// How infinite-case values are revealed.
        #[arg(long, value_enum, default_value_t = Method::SkipAhead)]
        method: Method,
        /// Print z-scores against the exact law instead of raw estimates.
        #[arg(long)]
        compare: bool,
        /// Truncation box s_max,r_max for --compare with --infinite.
        #[arg(long, value_name = "S,R", default_value = "5,10")]
        truncate: String,
    },
    /// Cross-check the closed forms, the oracle and (optionally) simulation.
    Verify {
        /// A size or an inclusive range such as 3..8.
        #[arg(long, value_name = "RANGE", default_value = "3..8")]
        n: String,
        /// Add Monte Carlo z-score rows.
        #[arg(long)]
        with_mc: bool,
        #[arg(long, env = "FIRSTPAT_SEED", default_value_t = 42)]
        seed: u64,
        /// Finite-case trials per n; the infinite check runs ten times as many.
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    SkipAhead,
    Sequential,
}

impl From<Method> for RevealMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::SkipAhead => RevealMethod::SkipAhead,
            Method::Sequential => RevealMethod::Sequential,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(firstpat::Error),
    Io(io::Error),
    VerifyFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use firstpat::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(E::CapExceeded { .. }) => 3,
            CliError::VerifyFailed(_) => 4,
            CliError::Lib(E::HardCapExceeded { .. }) => 5,
            CliError::Lib(E::Output(_)) | CliError::Io(_) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Lib(e) => e.fmt(f),
            CliError::Io(e) => write!(f, "i/o: {e}"),
            CliError::VerifyFailed(k) => write!(f, "verification failed: {k} check(s)"),
        }
    }
}

impl From<firstpat::Error> for CliError {
    fn from(e: firstpat::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

pub fn parse_box(s: &str) -> Result<TruncationBox, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
    match nums.as_deref() {
        Some(&[s_max, r_max]) => Ok(TruncationBox::new(s_max, r_max)?),
        _ => Err(CliError::Usage(format!(
            "expected S,R for a truncation box, got {s:?}"
        ))),
    }
}

fn enum_config(g: &GlobalOpts) -> EnumerationConfig {
    EnumerationConfig {
        cap: DEFAULT_CAP,
        force: g.force,
        threads: g.threads,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let ecfg = enum_config(g);
    let (report, failures) = match &cli.command {
        Command::Exact {
            size,
            select,
            truncate,
        } => (
            commands::exact(size.spec()?, select, truncate, &ecfg, g.places)?,
            0,
        ),
        Command::Enumerate {
            n,
            given_prefix_k,
            segments,
            prefix_law,
        } => {
            if ecfg.force && *n > ecfg.cap {
                let (perms, estimate) = firstpat::oracle::cost_estimate(*n);
                eprintln!("forcing enumeration of {perms} permutations, estimated {estimate}");
            }
            let mode = match (given_prefix_k, segments, prefix_law) {
                (Some(k), _, _) => commands::EnumMode::Conditional(*k),
                (None, true, _) => commands::EnumMode::Segments,
                (None, false, true) => commands::EnumMode::PrefixLaw,
                _ => commands::EnumMode::Census,
            };
            (commands::enumerate(*n, mode, &ecfg)?, 0)
        }
        Command::Simulate {
            size,
            seed,
            trials,
            hard_cap,
            method,
            compare,
            truncate,
        } => {
            let opts = commands::SimOpts {
                seed: *seed,
                trials: *trials,
                hard_cap: *hard_cap,
                method: (*method).into(),
                compare: *compare,
                truncate: parse_box(truncate)?,
                threads: g.threads,
            };
            (commands::simulate(size.spec()?, &opts, &ecfg)?, 0)
        }
        Command::Verify {
            n,
            with_mc,
            seed,
            trials,
        } => {
            let range = verify::parse_range(n)?;
            let mc = with_mc.then_some((*seed, *trials));
            verify::verify(range, mc, &ecfg, g.threads)?
        }
    };

    let mut meta = io::stderr();
    match &g.output {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            render(&report, g.format, &mut out, &mut meta, !g.no_metadata)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            render(&report, g.format, &mut out, &mut meta, !g.no_metadata)?;
        }
    }
    if failures > 0 {
        return Err(CliError::VerifyFailed(failures));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("firstpat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
