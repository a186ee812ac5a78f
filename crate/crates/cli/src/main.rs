use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use swarmfp_cli::report::{parse_window, render_fit};
use swarmfp_cli::{fit_report, parse_config, preset, run_experiment, ExperimentSpec};
use swarmfp_core::{steady_masses, ModelParams, RateModel};

#[derive(Parser)]
#[command(name = "swarmfp", version, about = "Nonlocal Fokker-Planck swarm model: solver, diagnostics, particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named scenario: steady-check, convergence, particles-vs-pde, disc-vs-cont.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the stationary weights m1, m2.
    Masses {
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Fit a decay rate to one column of a diagnostics file.
    Rates {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        column: String,
        /// `t0:t1`
        #[arg(long)]
        window: String,
        #[arg(long, default_value = "exp")]
        model: String,
        /// Fit `|value - offset|` instead of the raw column.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
    },
}

fn execute(spec: ExperimentSpec, out: Option<PathBuf>, fallback: &str) -> Result<ExitCode> {
    let dir = out.or_else(|| spec.output_dir.clone()).unwrap_or_else(|| PathBuf::from(fallback));
    let report = run_experiment(&spec, &dir)?;
    print!("{}", report.summary.render());
    println!("output written to {}", dir.display());
    Ok(if report.hard_violations() == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main_inner() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, out } => execute(parse_config(&config)?, out, "swarmfp-out"),
        Command::Preset { name, out } => {
            let spec = preset(&name)?;
            execute(spec, out, &format!("swarmfp-out/{name}"))
        }
        Command::Masses { sigma2, delta } => {
            let p = ModelParams::new(1.0, 0.0, sigma2, delta, 0.0, 0.0)?;
            let m = steady_masses(&p)?;
            let (cont, mass) = m.residuals(sigma2, delta);
            println!("m1 = {:?}\nm2 = {:?}\ncontinuity_residual = {cont:e}\nmass_residual = {mass:e}", m.m1(), m.m2());
            Ok(ExitCode::SUCCESS)
        }
        Command::Rates { file, column, window, model, offset } => {
            let model: RateModel = model.parse()?;
            let fit = fit_report(&file, &column, parse_window(&window)?, model, offset)?;
            print!("{}", render_fit(&fit));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
