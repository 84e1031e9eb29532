use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use freespiral::cli::config::Experiment;
use freespiral::cli::verify::{run_suite, SuiteOptions, CRITERIA};
use freespiral::cli::{exit, exit_code, run_command, ScenarioConfig};

#[derive(Parser)]
#[command(name = "freespiral", version, about = "Free-spiral electron model simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario file (TOML); defaults apply to every missing key.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the scenario; default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the scenario).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// List the verification criteria without running them.
    #[arg(long, global = true)]
    list: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and monitor the conservation laws.
    Simulate,
    /// Compare an integrated free spiral with the closed forms.
    Spiral,
    /// Sweep the period of a periodic field.
    Resonance,
    /// Energy levels in a linear field.
    Spectrum,
    /// Monte Carlo transmission through a filter with cylindrical holes.
    Filter,
    /// Free-oscillation phase against the quasiclassical phase.
    Phase,
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        /// Run only these criteria (repeatable).
        #[arg(long, value_name = "ID")]
        only: Vec<u8>,
        /// Make the bounds of these criteria stricter (repeatable).
        #[arg(long, value_name = "ID")]
        tighten: Vec<u8>,
        /// Tightening factor.
        #[arg(long, default_value_t = 100.0)]
        factor: f64,
    },
}

fn verify(only: &[u8], tighten: Vec<u8>, factor: f64, list: bool) -> i32 {
    if let Some(bad) = only.iter().chain(&tighten).find(|id| !CRITERIA.iter().any(|c| c.id == **id)) {
        eprintln!("error: no criterion {bad}");
        return exit::CONFIG;
    }
    if factor.is_nan() || factor < 1.0 {
        eprintln!("error: --factor must be at least 1");
        return exit::CONFIG;
    }
    if list {
        for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
            println!("{:>2} {}", c.id, c.title);
        }
        return exit::OK;
    }
    let outcomes = run_suite(only, &SuiteOptions { tighten, factor });
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        exit::OK
    } else {
        exit::CHECK_FAILED
    }
}

fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return exit::CONFIG;
        }
    }
    let experiment = match cli.command {
        Command::Verify { only, tighten, factor } => return verify(&only, tighten, factor, cli.global.list),
        Command::Simulate => Experiment::Simulate,
        Command::Spiral => Experiment::Spiral,
        Command::Resonance => Experiment::Resonance,
        Command::Spectrum => Experiment::Spectrum,
        Command::Filter => Experiment::Filter,
        Command::Phase => Experiment::Phase,
    };
    if cli.global.list {
        eprintln!("error: --list applies to verify");
        return exit::CONFIG;
    }
    let config = match &cli.global.config {
        Some(path) => ScenarioConfig::load(path),
        None => Ok(ScenarioConfig::default()),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::CONFIG;
        }
    };
    let out = cli.global.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match run_command(experiment, &config, &out, cli.global.seed) {
        Ok(summary) => {
            for c in &summary.checks {
                println!("[{}] {}", if c.pass { "PASS" } else { "FAIL" }, c.describe());
            }
            println!("wrote {}", out.join("summary.json").display());
            if summary.pass {
                exit::OK
            } else {
                exit::CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(run(cli) as u8)
}
