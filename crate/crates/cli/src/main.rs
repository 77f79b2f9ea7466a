//! Experiment runner: discretize a domain, evaluate energies, capacities and
//! the capacitary diagnostics, and write plot-ready reports.

mod config;
mod runner;
mod study;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use config::{load_config, Diagnostic, ExperimentConfig};
use runner::{file_tag, Outcome, Runner};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "Fractional-energy laboratory on grid domains")]
struct Cli {
    /// Path to a JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Name of a bundled configuration (cube_sp_lt_1, koch_slit_sp_eq_1,
    /// interval_hardy_critical).
    #[arg(long, global = true, conflicts_with = "config")]
    bundled: Option<String>,

    /// Output directory for reports (default: the config's out_dir, or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Seed for probe generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the domain at each resolution and emit domain files.
    Domain,
    /// Emit domain and Whitney decomposition files, with validation.
    Whitney,
    /// Evaluate the probe family energies (seminorm and zero extension).
    Energy,
    /// Solve the capacity of each compact set in the family.
    Capacity,
    /// Run a single diagnostic (mazya | quasi | zeroext | hardy | maximal | caplower).
    Report { diagnostic: String },
    /// Convergence study across the resolution ladder.
    Study,
    /// Execute every configured diagnostic at every resolution.
    Run,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let text = match (&cli.config, &cli.bundled) {
        (Some(path), _) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?,
        (None, Some(name)) => config::bundled(name)
            .ok_or_else(|| anyhow!("unknown bundled config `{name}`"))?
            .to_string(),
        (None, None) => bail!("either --config or --bundled is required"),
    };
    load_config(&text)
}

fn parse_diagnostic(name: &str) -> Result<Diagnostic> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| anyhow!("unknown diagnostic `{name}`"))
}

fn main() {
    let cli = Cli::parse();
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .expect("worker pool is configured once");
    }
    match dispatch(&cli) {
        Ok(outcome) => std::process::exit(outcome.exit_code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let mut config = load(cli)?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match &cli.command {
        Command::Domain | Command::Whitney => {
            let mut runner = Runner::new(&config, &out, cli.seed)?;
            runner.emit_all_geometry(matches!(cli.command, Command::Whitney))
        }
        Command::Energy => {
            let runner = Runner::new(&config, &out, cli.seed)?;
            runner.emit_energies()
        }
        Command::Capacity => {
            let runner = Runner::new(&config, &out, cli.seed)?;
            runner.emit_capacities()
        }
        Command::Report { diagnostic } => {
            config.diagnostics = vec![parse_diagnostic(diagnostic)?];
            let mut runner = Runner::new(&config, &out, cli.seed)?;
            runner.run()
        }
        Command::Study => {
            let runner = Runner::new(&config, &out, cli.seed)?;
            study::convergence_study(&runner)
        }
        Command::Run => {
            let mut runner = Runner::new(&config, &out, cli.seed)?;
            let outcome = runner.run()?;
            match outcome {
                Outcome::Ok => println!("ok: all checks passed"),
                Outcome::TrendUnverified => println!("trend unverified; see outcome.json"),
                Outcome::InvariantViolated => println!("invariant violated; see outcome.json"),
            }
            Ok(outcome)
        }
    }
}

impl Runner<'_> {
    fn emit_all_geometry(&mut self, with_whitney: bool) -> Result<Outcome> {
        let mut outcome = Outcome::Ok;
        for &h in &self.config.resolutions.clone() {
            let level = runner::build_level(self.config, h)?;
            if with_whitney {
                self.emit_geometry(&level)?;
                let v = level.whitney.validate();
                if v.eq_violations > 0 || !v.partition_exact {
                    outcome = Outcome::InvariantViolated;
                }
            } else {
                self.write_domain_only(&level)?;
            }
        }
        Ok(outcome)
    }

    fn emit_energies(mut self) -> Result<Outcome> {
        for &h in &self.config.resolutions.clone() {
            let level = runner::build_level(self.config, h)?;
            let records = self.energy_records(&level)?;
            self.write_named(&format!("energies_{}.json", file_tag(h)), &records)?;
        }
        Ok(Outcome::Ok)
    }

    fn emit_capacities(mut self) -> Result<Outcome> {
        for &h in &self.config.resolutions.clone() {
            let level = runner::build_level(self.config, h)?;
            let records = self.capacity_records(&level)?;
            self.write_named(&format!("capacity_{}.json", file_tag(h)), &records)?;
        }
        Ok(Outcome::Ok)
    }
}
