//! Command-line front end for the layer-dynamics experiments.
use clap::{Parser, Subcommand};
use metastable::error::Error;
use metastable::harness::commands::{self, Outcome};
use metastable::harness::RunConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out` in the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replace the pass/fail threshold of the subcommand
    #[arg(long, global = true)]
    tol_override: Option<f64>,

    /// Override a config key, e.g. `--set model.tau=5`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the reduced layer system
    RunOde,
    /// Integrate the full equation on a grid
    RunPde,
    /// Run both and compare the layer trajectories
    Compare,
    /// Reproduce one of the reference tables
    ReproduceTable {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
    },
    /// Distance to the classic dynamics over a list of relaxation times
    SweepTau,
}

impl Command {
    fn mode(&self) -> &'static str {
        match self {
            Command::RunOde => "ode",
            Command::RunPde => "pde",
            Command::Compare => "compare",
            Command::ReproduceTable { .. } => "table",
            Command::SweepTau => "sweep-tau",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let path = cli.config.as_deref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut overrides = cli.overrides.clone();
    overrides.push(format!("mode=\"{}\"", cli.command.mode()));
    RunConfig::load(path, &overrides)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| Path::new("out").to_path_buf())
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let tol = cli.tol_override;
    if let Command::ReproduceTable { id } = cli.command {
        return commands::table(id, &out_dir(cli, None), tol);
    }
    let cfg = load(cli)?;
    let out = out_dir(cli, Some(&cfg));
    match cli.command {
        Command::RunOde => commands::run_ode(&cfg, &out),
        Command::RunPde => commands::run_pde(&cfg, &out, tol),
        Command::Compare => commands::compare(&cfg, &out, tol),
        Command::SweepTau => commands::sweep(&cfg, &out, tol),
        Command::ReproduceTable { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    // usage errors exit with 1: code 2 is reserved for tolerance failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            match outcome.verdict {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("FAIL: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
