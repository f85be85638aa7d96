use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use msv_cli::{run, simulate_to_csv, Mode, RunSpec, SimulateSpec};
use msv_core::FlatDayPolicy;

/// Sequential estimation of multivariate stochastic volatility over a grid
/// of discount factors.
#[derive(Parser, Debug)]
#[command(name = "msv", version)]
struct Cli {
    /// CSV of returns or price levels (header row required).
    #[arg(long, required_unless_present = "simulate")]
    input: Option<PathBuf>,

    /// How to read the input columns: levels or returns.
    #[arg(long, default_value = "returns")]
    mode: Mode,

    /// Comma-separated discount factors in (2/3, 1).
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.75,0.8,0.85,0.9,0.95")]
    deltas: Vec<f64>,

    /// Discount factor every other row is compared against.
    #[arg(long, default_value_t = 0.95)]
    baseline: f64,

    /// Number of leading observations used for the prior scale.
    #[arg(long, default_value_t = 30)]
    prior_window: usize,

    /// Treatment of zero-return days in the likelihood: skip or floor.
    #[arg(long, default_value = "floor")]
    flat_day: FlatDayPolicy,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Multiply every return by this factor before estimation.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,

    /// Worker threads for grid rows.
    #[arg(long, default_value_t = 1)]
    threads: usize,

    /// Write a simulated path `p,N,delta` to OUT/simulated.csv instead of estimating.
    #[arg(long, value_name = "p,N,delta")]
    simulate: Option<SimulateSpec>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Some(sim) = cli.simulate {
        return match simulate_to_csv(sim, cli.seed, &cli.out) {
            Ok(path) => {
                println!("{}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        };
    }

    let spec = RunSpec {
        input: cli.input.expect("clap enforces --input"),
        mode: cli.mode,
        deltas: cli.deltas,
        baseline: cli.baseline,
        prior_window: cli.prior_window,
        flat_day: cli.flat_day,
        out_dir: cli.out,
        seed: cli.seed,
        scale: cli.scale,
        threads: cli.threads,
    };
    match run(&spec) {
        Ok(summary) => {
            print!("{}", summary.report.to_tsv());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
