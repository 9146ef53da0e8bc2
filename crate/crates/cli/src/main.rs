//! `vne-darboux`: run or sweep Darboux-dressing scenarios.
//!
//! Exit codes: 0 all checks pass, 1 a check or numerical failure,
//! 2 configuration error, 3 singular Darboux transformation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vne_darboux::scenario::pipeline::seed_dump;
use vne_darboux::scenario::{parse_config, parse_values, run_sweep, run_to_dir, ScenarioConfig, ScenarioError, SweepParam};

#[derive(Parser)]
#[command(name = "vne-darboux", version, about = "Darboux-dressed nonlinear von Neumann scenarios")]
struct Cli {
    /// Multiplier applied to every check tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Print the resolved seed matrices as JSON before running.
    #[arg(long, global = true)]
    seed_dump: bool,
    /// Sweep points evaluated concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory.csv, report.json and scenario.lock.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario per value of a parameter and write summary.csv.
    Sweep {
        config: PathBuf,
        /// mu, t_max or a
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated (`i,2i,1+i`) or a JSON array.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Schema(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| ScenarioError::Schema(format!("{}: {e}", path.display())))
}

fn dump(config: &ScenarioConfig, tol_scale: f64) -> Result<(), ScenarioError> {
    let d = seed_dump(config, tol_scale)?;
    println!("{}", serde_json::to_string_pretty(&d).expect("seed dump serializes"));
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32, ScenarioError> {
    match &cli.command {
        Command::Run { config, out } => {
            let config = load(config)?;
            if cli.seed_dump {
                dump(&config, cli.tol_scale)?;
            }
            let summary = run_to_dir(&config, out, cli.tol_scale)?;
            if let Some(t) = summary.singular_at {
                eprintln!("singular Darboux transformation at t = {t}");
            }
            for name in &summary.failed_checks {
                eprintln!("check failed: {name}");
            }
            println!(
                "{}: {} ({})",
                summary.id,
                if summary.overall { "pass" } else { "fail" },
                out.display()
            );
            Ok(summary.exit_code)
        }
        Command::Sweep { config, param, values, out } => {
            let config = load(config)?;
            if cli.seed_dump {
                dump(&config, cli.tol_scale)?;
            }
            let values = parse_values(*param, values).map_err(ScenarioError::Schema)?;
            let outcome = run_sweep(&config, *param, &values, out, cli.jobs, cli.tol_scale)?;
            for row in &outcome.rows {
                let status = match &row.result {
                    Ok(s) if s.overall => "pass".to_string(),
                    Ok(s) => format!("fail [{}]", s.failed_checks.join(", ")),
                    Err(e) => format!("error: {e}"),
                };
                println!("{param}={}: {status}", row.value);
            }
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
