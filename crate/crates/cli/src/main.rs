use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctsteps_cli::commands::{format_summary, write_summary, SUMMARY_FILE};
use ctsteps_cli::io::FileMeta;
use ctsteps_cli::{cmd_fit, cmd_simulate, cmd_study, summarize, CliResult, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "ctsteps",
    version,
    about = "Continuous-time step-and-turn movement model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Refined-grid time step (minutes).
    #[arg(long)]
    dt: Option<f64>,
    /// Retained sampler iterations after burn-in.
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Overrides {
            seed: self.seed,
            dt: self.dt,
            iterations: self.iterations,
            output_dir: self.out.clone(),
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a track and write it with the true parameters and path.
    Simulate(Common),
    /// Fit a track: posterior samples, path draws and diagnostics.
    Fit {
        /// Track file with columns time,x,y.
        #[arg(long)]
        track: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Credible intervals and means of a samples file.
    Summarize {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        level: f64,
        /// Also write the table, with a provenance header, to this file.
        #[arg(long)]
        write: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Repeated simulate-fit-summarize with a coverage report.
    Study {
        #[arg(long)]
        replicates: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.load()?;
            let track = cmd_simulate(&cfg)?;
            println!("wrote {}", track.display());
        }
        Command::Fit { track, common } => {
            let cfg = common.load()?;
            let fit = cmd_fit(&track, &cfg)?;
            let d = &fit.diagnostics;
            println!(
                "{} samples; parameter acceptance {:.3}, section acceptance {:.3}, {} constraint violations",
                fit.samples.len(),
                d.param_accept_rate(),
                d.section_accept_rate(),
                d.constraint_violations
            );
            println!("wrote {}", fit.samples_file.display());
        }
        Command::Summarize {
            samples,
            level,
            write,
            common,
        } => {
            let cfg = common.load()?;
            let intervals = summarize(&samples, level)?;
            print!("{}", format_summary(&intervals));
            if let Some(path) = write {
                let path = if path.is_dir() {
                    path.join(SUMMARY_FILE)
                } else {
                    path
                };
                write_summary(
                    &path,
                    &FileMeta {
                        config_hash: cfg.hash(),
                        seed: cfg.seed,
                    },
                    &intervals,
                )?;
            }
        }
        Command::Study { replicates, common } => {
            let mut cfg = common.load()?;
            if let Some(n) = replicates {
                cfg.study.replicates = n;
            }
            let report = cmd_study(&cfg)?;
            for r in &report.replicates {
                if let Err(msg) = &r.result {
                    eprintln!("replicate {} (seed {}) failed: {msg}", r.index, r.seed);
                }
            }
            print!("{}", report.format());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
