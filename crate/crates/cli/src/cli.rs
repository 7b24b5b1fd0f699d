//! Command-line surface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use uavsense_core::engine::Simulator;
use uavsense_core::sweep::{self, SweepRow, SweepSpec, PRESETS};

use crate::config::{ConfigFile, SweepSection};
use crate::output::{write_csv, RunManifest};
use crate::runner::{run_parallel, with_jobs};
use crate::selftest;

#[derive(Debug, Parser)]
#[command(name = "uavsense", version, about = "Half-duplex UAV distributed OFDM sensing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one Monte Carlo batch.
    Run(RunArgs),
    /// Run a parameter sweep from a preset or the config's [sweep] section.
    Sweep(SweepArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML (or JSON) configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// ls or capon.
    #[arg(long)]
    pub beamformer: Option<String>,
    /// avg or prenorm.
    #[arg(long)]
    pub fusion: Option<String>,
    #[arg(long, value_enum)]
    pub fast_path: Option<Switch>,
    /// Worker threads; 1 runs serially.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Δ tolerance reported (0, 1 or 2).
    #[arg(long)]
    pub delta: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    pub preset: Option<String>,
}

impl CommonArgs {
    /// Config file (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> anyhow::Result<ConfigFile> {
        let mut c = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        if let Some(t) = self.trials {
            c.run.trials = t;
        }
        if let Some(s) = self.seed {
            c.run.seed = s;
        }
        if let Some(b) = &self.beamformer {
            c.run.beamformer = b.clone();
        }
        if let Some(f) = &self.fusion {
            c.run.fusion = f.clone();
        }
        if let Some(s) = self.fast_path {
            c.run.fast_path = s == Switch::On;
        }
        Ok(c)
    }
}

fn emit(common: &CommonArgs, rows: &[SweepRow], manifest: &RunManifest) -> anyhow::Result<()> {
    let sink: Box<dyn Write> = match &common.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = sink;
    match common.format {
        Format::Csv => write_csv(rows, &mut sink)?,
        Format::Json => {
            if rows.is_empty() {
                bail!("no result rows to write");
            }
            writeln!(sink, "{}", manifest.to_json_string()?)?;
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn run(args: &RunArgs) -> anyhow::Result<()> {
    let mut file = args.common.resolve()?;
    if let Some(d) = args.delta {
        file.run.delta = d;
    }
    if file.run.delta > 2 {
        bail!("invalid value for `run.delta`: Δ = {} is not tracked, expected 0, 1 or 2", file.run.delta);
    }
    let config = file.scenario()?;
    let options = file.options()?;
    let fusion = file.fusion()?;
    let sim = Simulator::new(config, options)?;
    let stats = with_jobs(args.common.jobs, || run_parallel(&sim))??;
    let rows = sweep::rows_for(&stats, None, sim.config(), sim.options().beamformer, &[fusion], &[file.run.delta]);
    let manifest = RunManifest::new("run", None, &file, &rows, &[]);
    emit(&args.common, &rows, &manifest)
}

pub fn sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let mut file = args.common.resolve()?;
    let base = file.scenario()?;
    let mut spec: SweepSpec = match (&args.preset, &file.sweep) {
        (Some(name), _) => SweepSpec::preset(name, &base)?,
        (None, Some(section)) => section.spec()?,
        (None, None) => bail!("sweep needs --preset or a [sweep] section in the config"),
    };
    if args.common.beamformer.is_some() {
        spec.beamformers = vec![file.beamformer()?];
    }
    if args.common.fusion.is_some() {
        spec.fusions = vec![file.fusion()?];
    }
    file.sweep = Some(SweepSection::from_spec(&spec));
    let options = file.options()?;
    let table = with_jobs(args.common.jobs, || sweep::sweep_with(&spec, &base, &options, run_parallel))??;
    for p in &table.invalid {
        eprintln!("warning: sweep value {} is invalid: {}", p.value, p.error);
    }
    let manifest = RunManifest::new("sweep", args.preset.as_deref(), &file, &table.rows, &table.invalid);
    emit(&args.common, &table.rows, &manifest)
}

/// Prints one line per check; fails when any check fails.
pub fn selftest() -> anyhow::Result<()> {
    let results = selftest::run_all();
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        bail!("{failed} self-test check(s) failed");
    }
    Ok(())
}

pub fn run_command(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Selftest => selftest(),
    }
}
