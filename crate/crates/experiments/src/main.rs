use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grating_core::optim::Termination;
use grating_core::shapegrad::{FD_GRADIENT_STEP, FD_HESSIAN_STEP};
use grating_experiments::config::ProfileFile;
use grating_experiments::output::{self, Series};
use grating_experiments::runs;
use grating_experiments::{ExperimentConfig, ExperimentError, Result};

/// Scattering and shape optimization of perfectly conducting gratings.
///
/// Set GRATING_THREADS to fix the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "grating", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diffraction efficiencies of the configured profile (flat when none).
    Solve { config: PathBuf },
    /// Run the configured optimizer and write its trace and final profile.
    Optimize {
        config: PathBuf,
        /// Leave the wall-clock column empty for byte-identical reruns.
        #[arg(long)]
        no_timing: bool,
    },
    /// Efficiency of the configured profile over a wavelength range.
    Sweep { config: PathBuf },
    /// Re-solve with every coefficient changed by a relative amount.
    Perturb {
        config: PathBuf,
        /// Relative change; defaults to `perturb.delta` of the configuration.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Compare adjoint derivatives with central finite differences.
    GradientCheck {
        config: PathBuf,
        /// Step of the first differences, in periods.
        #[arg(long, default_value_t = FD_GRADIENT_STEP)]
        gradient_step: f64,
        /// Step of the second differences, in periods.
        #[arg(long, default_value_t = FD_HESSIAN_STEP)]
        hessian_step: f64,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        config.method.seed = s;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<i32> {
    let out = &cli.out;
    match &cli.command {
        Command::Solve { config } => {
            let config = load(config, cli.seed)?;
            let r = runs::solve(&config)?;
            output::write(out, "solve.csv", &output::solve_csv(&r, &config.hash())?)?;
            println!("{:>5} {:>14} {:>14}", "mode", "efficiency", "|u_n|");
            for (i, n) in r.result.modes.iter().enumerate() {
                println!("{n:>5} {:>14.10} {:>14.10}", r.result.efficiencies[i], r.result.amplitudes[i].norm());
            }
            println!("elements {}  energy balance {:.3e}", r.elements, r.energy_balance() - 1.0);
            Ok(0)
        }
        Command::Optimize { config, no_timing } => {
            let config = load(config, cli.seed)?;
            let r = runs::optimize(&config)?;
            let hash = config.hash();
            output::write(out, "trace.csv", &output::trace_csv(&r, &hash, !no_timing)?)?;
            output::write(out, "profile.toml", &ProfileFile::from_profile(&r.profile).to_toml())?;
            if cli.plot {
                let f: Vec<(f64, f64)> = r.result.trace.iter().map(|t| (t.iteration as f64, t.value)).collect();
                let e: Vec<(f64, f64)> = r.efficiencies.iter().enumerate().map(|(i, e)| (i as f64, *e)).collect();
                let log = matches!(r.kind, grating_core::optim::ObjectiveKind::Target { .. });
                output::line_plot(&out.join("objective.svg"), &r.method, "iteration", "objective", &[Series { name: "f", points: f }], log)?;
                output::line_plot(&out.join("efficiency.svg"), &r.method, "iteration", "efficiency", &[Series { name: "e", points: e }], false)?;
            }
            println!(
                "{}: {} iterations, termination {:?}, objective {:.6e}, efficiency {:.6}, q {}",
                r.method,
                r.result.iterations(),
                r.result.termination,
                r.result.value,
                r.efficiency,
                r.rate.map_or("n/a".into(), |q| format!("{q:.3}"))
            );
            Ok(match r.result.termination {
                Termination::LineSearchFailure { backtracks } => {
                    eprintln!("{}", ExperimentError::LineSearch { backtracks });
                    4
                }
                _ => 0,
            })
        }
        Command::Sweep { config } => {
            let config = load(config, cli.seed)?;
            let r = runs::sweep(&config)?;
            for (l, m) in &r.anomalies {
                eprintln!("warning: skipped wavelength {l}: Rayleigh anomaly in mode {m}");
            }
            output::write(out, "sweep.csv", &output::sweep_csv(&r, &config.hash())?)?;
            if cli.plot {
                let pts = r.rows.iter().map(|row| (row.wavelength, row.efficiency)).collect();
                output::line_plot(&out.join("sweep.svg"), "efficiency", "wavelength", "efficiency", &[Series { name: "e", points: pts }], false)?;
            }
            if let Some(best) = r.rows.iter().max_by(|a, b| a.efficiency.total_cmp(&b.efficiency)) {
                println!("peak efficiency {:.6} at wavelength {}", best.efficiency, best.wavelength);
            }
            Ok(0)
        }
        Command::Perturb { config, delta } => {
            let config = load(config, cli.seed)?;
            let delta = match (delta, &config.perturb) {
                (Some(d), _) => *d,
                (None, Some(p)) => p.delta,
                (None, None) => return Err(ExperimentError::Config("perturb needs --delta or a [perturb] section".into())),
            };
            let r = runs::perturb(&config, delta)?;
            output::write(out, "perturb.csv", &output::perturb_csv(&r, &config.hash())?)?;
            println!("base efficiency {:.6}, worst case {:.6}", r.base, r.worst());
            Ok(0)
        }
        Command::GradientCheck { config, gradient_step, hessian_step } => {
            let config = load(config, cli.seed)?;
            let r = runs::gradient_check(&config, *gradient_step, *hessian_step)?;
            output::write(out, "gradient_check.csv", &output::gradient_check_csv(&r, &config.hash())?)?;
            println!("gradient relative error {:.3e}", r.gradient_error);
            println!("Hessian relative error  {:.3e}", r.hessian_error);
            println!("Hessian asymmetry       {:.3e}", r.asymmetry);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("GRATING_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: {e}");
                }
            }
            _ => {
                eprintln!("error: GRATING_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
