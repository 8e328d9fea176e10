use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use acc_ids::harness::{parse_grid, write_sweep};
use acc_ids::safety::ROOT_TOL;
use acc_ids::trace::{detect_collision, read_trace, write_trace};
use acc_ids::{check_theorem, run_scenario, sweep_accuracy, Error, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "acc-ids",
    version,
    about = "ACC speed-spoofing simulator with IDS fail-safe"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv and theorem.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sweep IDS accuracy and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// start:stop:step, e.g. 0.1:1.0:0.05
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check the post-detection braking guarantee on a trace CSV.
    CheckTheorem {
        #[arg(long)]
        trace: PathBuf,
        /// Scenario config for physical and IDS parameters; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-step identity tolerance. CSV values carry 9 significant digits.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
}

enum Failure {
    Config(Error),
    Theorem,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn run(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let mut cfg = ScenarioConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let trace = run_scenario(&cfg)?;
    write_trace(&trace, create(out, "trace.csv")?)?;
    let report = check_theorem(&trace, &cfg.physical, &cfg.ids, ROOT_TOL);
    serde_json::to_writer_pretty(create(out, "theorem.json")?, &report).map_err(Error::from)?;
    match detect_collision(&trace) {
        Some(t) => println!("collision at step {t}"),
        None => println!("no collision in {} steps", cfg.horizon),
    }
    if let Some(t) = report.detection_step {
        println!("intrusion first flagged at step {t}");
    }
    println!("theorem check: {:?}", report.verdict);
    Ok(())
}

fn sweep(config: &Path, grid: &str, repeats: usize, out: &Path) -> Result<(), Failure> {
    let cfg = ScenarioConfig::load(config)?;
    let grid = parse_grid(grid)?;
    let results = sweep_accuracy(&cfg, &grid, repeats)?;
    write_sweep(&results, create(out, "sweep.csv")?)?;
    println!(
        "{} runs written to {}",
        results.len(),
        out.join("sweep.csv").display()
    );
    Ok(())
}

fn check(trace: &Path, config: Option<&Path>, tol: f64) -> Result<(), Failure> {
    let cfg = match config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::acc_ids(),
    };
    let rows = read_trace(File::open(trace).map_err(Error::from)?)?;
    let report = check_theorem(&rows, &cfg.physical, &cfg.ids, tol);
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(Error::from)?
    );
    if report.is_failure() {
        Err(Failure::Theorem)
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, out } => run(config, *seed, out),
        Command::Sweep {
            config,
            grid,
            repeats,
            out,
        } => sweep(config, grid, *repeats, out),
        Command::CheckTheorem { trace, config, tol } => check(trace, config.as_deref(), *tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Theorem) => {
            eprintln!("theorem check failed");
            ExitCode::from(2)
        }
    }
}
