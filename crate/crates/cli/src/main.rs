use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dnls_cli::config::resolve_output;
use dnls_cli::error::Result;
use dnls_cli::{plot, simulate, sweep, verify, RunConfig, SweepConfig};

#[derive(Parser, Debug)]
#[command(
    name = "dnls",
    version,
    about = "Dissipative NLS simulations, profile extraction and asymptotics checks"
)]
struct Args {
    /// Highest derivative order of the monitors and the data constant.
    #[arg(long, global = true, default_value_t = 4)]
    max_order: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the solver and write norms, snapshots and monitors.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run, extract the profile and check the asymptotic statements.
    VerifyTheorem {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify every point of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Write plot-ready CSV tables for a run directory.
    PlotData {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to `<run>/plots`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(args: Args) -> Result<()> {
    match args.cmd {
        Cmd::Simulate { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = resolve_output(out.as_deref(), cfg.output.as_deref(), &config);
            let s = simulate::simulate(&cfg, &out, args.max_order)?;
            println!(
                "simulate: {} steps, {} snapshots, final time {:e}, mass monotone {} -> {}",
                s.steps,
                s.snapshots,
                s.final_time,
                s.mass_monotone,
                out.display()
            );
            if let Some(o) = &s.free_oracle {
                println!(
                    "free-evolution oracle: max relative error {:.2e} (tol {:.0e}) {}",
                    o.max_rel_error,
                    o.tol,
                    if o.pass { "pass" } else { "fail" }
                );
            }
        }
        Cmd::VerifyTheorem { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = resolve_output(out.as_deref(), cfg.output.as_deref(), &config);
            let v = verify::verify(&cfg, &out, args.max_order)?;
            for c in &v.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("verdict: {} -> {}", v.verdict.as_str(), out.display());
        }
        Cmd::Sweep { config, out, jobs } => {
            let cfg = SweepConfig::load(&config)?;
            let out = resolve_output(out.as_deref(), cfg.output.as_deref(), &config);
            let rows = sweep::sweep(&cfg, &out, jobs, args.max_order)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!(
                "sweep: {} runs, {failed} without a verdict -> {}",
                rows.len(),
                out.join("sweep.csv").display()
            );
        }
        Cmd::PlotData { run, out } => {
            let out = out.unwrap_or_else(|| run.join("plots"));
            for p in plot::plot_data(&run, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dnls: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
