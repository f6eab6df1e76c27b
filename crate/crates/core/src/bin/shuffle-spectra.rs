use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shuffle_spectra::experiment::{
    csv_schemas, list_experiments, run_experiment, ConfigFile, ExperimentKind, SizeSpec, TimeSpec,
};
use shuffle_spectra::Error;

const EXIT_INVALID_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

/// Simulate and check semi-random transposition shuffles.
#[derive(Parser)]
#[command(name = "shuffle-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Exit with status 3 if any acceptance check fails.
    #[arg(long)]
    check: bool,
    /// Deck size; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
}

#[derive(Args, Clone, Default)]
struct Times {
    /// Times such as `354`, `4n` or `0.05*n*ln(n)`, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_time)]
    times: Vec<TimeSpec>,
}

fn parse_time(s: &str) -> Result<TimeSpec, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Root of e^z - z - 1, eigenvalue and eigenfunction for each n.
    Spectra {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        branch: Option<u32>,
    },
    /// Monte Carlo moments of the test statistic.
    Moment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        branch: Option<u32>,
        #[command(flatten)]
        times: Times,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Lower bound and distinguisher advantage over time.
    Lowerbound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        branch: Option<u32>,
        #[command(flatten)]
        times: Times,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Coupling with independent single-card copies.
    Couple {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, value_parser = parse_time)]
        t: Option<TimeSpec>,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Card-marking strong uniform time.
    UniformTime {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, value_parser = parse_time)]
        cap: Option<TimeSpec>,
    },
    /// Exact total variation to uniform for n <= 8.
    ExactTv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_parser = parse_time)]
        horizon: Option<TimeSpec>,
        /// Times at which to dump the full distribution.
        #[arg(long, value_delimiter = ',', value_parser = parse_time)]
        dump_times: Vec<TimeSpec>,
    },
    /// Print the experiment catalog and CSV schemas as JSON.
    List {
        /// Show a single kind.
        kind: Option<String>,
    },
}

fn some_vec<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

fn overrides(common: &Common) -> ConfigFile {
    ConfigFile {
        out: common.out.clone(),
        seed: common.seed,
        n: match common.n.as_slice() {
            [] => None,
            [one] => Some(SizeSpec::One(*one)),
            many => Some(SizeSpec::Many(many.to_vec())),
        },
        ..Default::default()
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let (kind, common, top) = match cli.command {
        Command::List { kind } => {
            let value = match kind {
                Some(name) => serde_json::to_value(shuffle_spectra::experiment::find_experiment(&name)?)?,
                None => serde_json::json!({
                    "experiments": list_experiments(),
                    "csv_schemas": csv_schemas().into_iter().collect::<std::collections::BTreeMap<_, _>>(),
                }),
            };
            println!("{}", serde_json::to_string_pretty(&value)?);
            return Ok(true);
        }
        Command::Spectra { common, branch } => {
            let top = ConfigFile { branch, ..overrides(&common) };
            (ExperimentKind::Spectra, common, top)
        }
        Command::Moment { common, branch, times, replicas } => {
            let top = ConfigFile { branch, replicas, times: some_vec(times.times), ..overrides(&common) };
            (ExperimentKind::Moment, common, top)
        }
        Command::Lowerbound { common, branch, times, replicas } => {
            let top = ConfigFile { branch, replicas, times: some_vec(times.times), ..overrides(&common) };
            (ExperimentKind::Lowerbound, common, top)
        }
        Command::Couple { common, i, j, t, replicas } => {
            let top = ConfigFile { i, j, t, replicas, ..overrides(&common) };
            (ExperimentKind::Couple, common, top)
        }
        Command::UniformTime { common, rule, runs, cap } => {
            let top = ConfigFile { rule, runs, cap, ..overrides(&common) };
            (ExperimentKind::UniformTime, common, top)
        }
        Command::ExactTv { common, rule, threshold, horizon, dump_times } => {
            let top = ConfigFile { rule, threshold, horizon, dump_times: some_vec(dump_times), ..overrides(&common) };
            (ExperimentKind::ExactTv, common, top)
        }
    };
    let base = match &common.config {
        Some(path) => ConfigFile::from_path(path)?,
        None => ConfigFile::default(),
    };
    let config = base.overlay(top).resolve(kind)?;
    let manifest = run_experiment(&config, common.threads)?;
    for c in manifest.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    eprintln!(
        "{}: {} outputs in {} ({:.2} s)",
        kind,
        manifest.outputs.len(),
        config.out.display(),
        manifest.wall_time_s
    );
    Ok(!common.check || manifest.checks_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(Error::InvalidConfig(list)) => {
            eprintln!("invalid config:");
            for item in list {
                eprintln!("  - {item}");
            }
            ExitCode::from(EXIT_INVALID_CONFIG)
        }
        Err(e @ Error::UnknownExperiment { .. }) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_INVALID_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
