use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bounce_lab::acceptance::{self, AcceptanceOptions, Status};
use bounce_lab::harness::{self, parse_grid, threads_from_env};
use bounce_lab::scenario::ScenarioConfig;
use bounce_lab::Error;

#[derive(Parser)]
#[command(name = "bounce-lab", version, about = "Fermi-Ulam and bouncing-ball collision experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Coords {
    Tv,
    Ty,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write events.csv and summary.json
    Simulate {
        config: PathBuf,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one simulation per grid cell and write sweep.csv
    Sweep {
        config: PathBuf,
        /// e.g. `t0=-0.5:-0.1:8,v0=10:20:8`; axes are t0, v0, g
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
        /// Worker threads; overrides BOUNCE_LAB_THREADS
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write section points of every trajectory to portrait.csv
    Portrait {
        config: PathBuf,
        #[arg(long, value_enum)]
        coords: Coords,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the acceptance suite
    Validate {
        /// Time tolerance handed to the engines
        #[arg(long)]
        t_tol: Option<f64>,
        /// Run only these criteria
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SINGULAR: u8 = 3;

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_FAILURE),
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Error> {
    ScenarioConfig::load(path)
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn simulate(config: &Path, out: &Path) -> Result<ExitCode, Error> {
    let cfg = load(config)?;
    cfg.build()?;
    let sim = harness::simulate(&cfg)?;
    write(out, "events.csv", &sim.events_csv()?)?;
    write(out, "summary.json", sim.summary.to_json().as_bytes())?;
    Ok(if sim.summary.is_singular() { ExitCode::from(EXIT_SINGULAR) } else { ExitCode::SUCCESS })
}

fn sweep(config: &Path, grid: &str, out: &Path, threads: Option<usize>) -> Result<ExitCode, Error> {
    let cfg = load(config)?;
    let axes = parse_grid(grid)?;
    let threads = match threads {
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    let rows = harness::sweep(&cfg, &axes, threads)?;
    let mut buf = Vec::new();
    harness::write_sweep_csv(&axes, &rows, &mut buf)?;
    write(out, "sweep.csv", &buf)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see the error column", rows.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn portrait(config: &Path, coords: Coords, out: &Path) -> Result<ExitCode, Error> {
    let cfg = load(config)?;
    let rows = harness::portrait(&cfg, matches!(coords, Coords::Ty))?;
    let mut buf = Vec::new();
    harness::write_portrait_csv(&rows, &mut buf)?;
    write(out, "portrait.csv", &buf)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(t_tol: Option<f64>, only: &[u32]) -> ExitCode {
    let mut options = AcceptanceOptions::default();
    if let Some(t) = t_tol {
        options.t_tol = t;
    }
    let mut all_passed = true;
    for c in acceptance::CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let result = acceptance::run_criterion(c, &options);
        println!("{result}");
        all_passed &= result.status == Status::Pass;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, out } => simulate(config, out),
        Command::Sweep { config, grid, out, threads } => sweep(config, grid, out, *threads),
        Command::Portrait { config, coords, out } => portrait(config, *coords, out),
        Command::Validate { t_tol, only } => return validate(*t_tol, only),
    };
    result.unwrap_or_else(fail)
}
