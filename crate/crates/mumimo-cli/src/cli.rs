//! Command-line entry point.
//!
//! Subcommands:
//! - `run --config <path> --out <path> [--format csv|jsonl] [--seed <u64>] [--trials <n>]`
//! - `sweep --config <path> --axis <name> --values <comma-list> --out <path> [...]`
//! - `validate --config <path>`
//!
//! Exit codes: 0 success, 1 usage error, 2 config error, 3 runtime error.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mumimo_core::montecarlo::{run_experiment, sweep, CorrelationCache, SweepAxis, SweepPoint};

use crate::config::{parse_config, ConfigFile};
use crate::output::{emit_results, OutputFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mumimo", about = "Massive MU-MIMO downlink link-level simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonl => OutputFormat::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
struct CommonRunArgs {
    /// Scenario config file.
    #[arg(long)]
    config: PathBuf,
    /// Output file for sample and summary rows.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and emit pooled metric samples.
    Run(CommonRunArgs),
    /// Run one experiment per axis value, sharing the master seed.
    Sweep {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Swept parameter; defaults to the config's [sweep] block.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values.
        #[arg(long)]
        values: Option<String>,
    },
    /// Parse the config and check invariants; no RNG, no numeric work.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<ConfigFile, i32> {
    parse_config(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn apply_overrides(file: &mut ConfigFile, args: &CommonRunArgs) {
    if let Some(seed) = args.seed {
        file.scenario.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        file.scenario.n_trials = trials;
    }
}

fn emit(points: &[SweepPoint], args: &CommonRunArgs) -> Result<(), i32> {
    emit_results(points, &args.out, args.format.into()).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_RUNTIME
    })
}

fn run_command(command: Command) -> i32 {
    match command {
        Command::Validate { config } => match load_config(&config) {
            Ok(_) => {
                println!("ok: {} is a valid configuration", config.display());
                EXIT_OK
            }
            Err(code) => code,
        },
        Command::Run(args) => {
            let mut file = match load_config(&args.config) {
                Ok(f) => f,
                Err(code) => return code,
            };
            apply_overrides(&mut file, &args);
            let cache = CorrelationCache::new();
            let result = match run_experiment(&file.scenario, &cache) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_RUNTIME;
                }
            };
            let points = vec![SweepPoint {
                label: "run".to_string(),
                axis_value: String::new(),
                result,
            }];
            match emit(&points, &args) {
                Ok(()) => EXIT_OK,
                Err(code) => code,
            }
        }
        Command::Sweep { common, axis, values } => {
            let mut file = match load_config(&common.config) {
                Ok(f) => f,
                Err(code) => return code,
            };
            apply_overrides(&mut file, &common);
            // Flags override the config's [sweep] block.
            let axis = match (axis, &file.sweep) {
                (Some(name), _) => match SweepAxis::from_str(&name) {
                    Ok(a) => a,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_USAGE;
                    }
                },
                (None, Some(spec)) => spec.axis,
                (None, None) => {
                    eprintln!("error: no --axis given and no [sweep] block in the config");
                    return EXIT_USAGE;
                }
            };
            let values: Vec<String> = match (values, &file.sweep) {
                (Some(list), _) => list
                    .split(',')
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect(),
                (None, Some(spec)) => spec.values.clone(),
                (None, None) => {
                    eprintln!("error: no --values given and no [sweep] block in the config");
                    return EXIT_USAGE;
                }
            };
            if values.is_empty() {
                eprintln!("error: empty sweep value list");
                return EXIT_USAGE;
            }
            let cache = CorrelationCache::new();
            let points = match sweep(&file.scenario, axis, &values, &cache) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_RUNTIME;
                }
            };
            match emit(&points, &common) {
                Ok(()) => EXIT_OK,
                Err(code) => code,
            }
        }
    }
}

/// Parse argv and run. Errors map to the documented exit codes with
/// diagnostics on stderr.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version as "errors"; keep exit 0 there.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run_command(cli.command)
}
