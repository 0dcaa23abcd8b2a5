//! `quenchlab`: runs one experiment from a JSON configuration and writes the
//! CSV bundle plus `manifest.json`.

mod config;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use quenchlab_core::fockspace::FockBasis;
use quenchlab_core::pipeline::{self, Bundle, Outcome};

use config::{ConfigFile, Experiment};

const BUILD: &str = env!("QUENCHLAB_BUILD");

#[derive(Parser, Debug)]
#[command(
    name = "quenchlab",
    version,
    about = "Quench dynamics of few-site Bose-Hubbard models"
)]
struct Args {
    #[command(subcommand)]
    command: Run,
}

#[derive(Subcommand, Debug)]
enum Run {
    /// Matrix elements `⟨k|Â(t)|l⟩` of the dimer after a quench.
    DimerMatrixElements(Common),
    /// Out-of-time-order correlator of the dimer against its series.
    DimerOtoc(Common),
    /// Cumulants of an observable in the dimer and the Wick-factor check.
    DimerCumulants(Common),
    /// Trimer matrix elements and their collapse by excitation number.
    TrimerCollapse(Common),
    /// Bogoliubov spectra of the uniform ring state.
    MeanfieldStability(Common),
    /// Analytic prediction tables for the dimer.
    Predict(Common),
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Configuration file, or the `manifest.json` of an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV files and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write `plot.gp`, a gnuplot script for every CSV.
    #[arg(long)]
    emit_gnuplot: bool,
    /// Also write `basis.csv` (index, occupations) of the Fock basis.
    #[arg(long)]
    dump_basis: bool,
}

impl Run {
    fn split(&self) -> (Experiment, &Common) {
        match self {
            Run::DimerMatrixElements(c) => (Experiment::DimerMatrixElements, c),
            Run::DimerOtoc(c) => (Experiment::DimerOtoc, c),
            Run::DimerCumulants(c) => (Experiment::DimerCumulants, c),
            Run::TrimerCollapse(c) => (Experiment::TrimerCollapse, c),
            Run::MeanfieldStability(c) => (Experiment::MeanfieldStability, c),
            Run::Predict(c) => (Experiment::Predict, c),
        }
    }
}

fn main() {
    if let Err(e) = run(Args::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(args: Args) -> Result<()> {
    let (experiment, common) = args.command.split();
    if let Some(n) = common.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("setting up the worker pool")?;
    }
    let file = ConfigFile::load(&common.config)?;
    let section = file.section(experiment)?;
    for w in file.warnings(experiment) {
        eprintln!("warning: {w}");
    }
    let (mut bundle, report) = match experiment {
        Experiment::DimerMatrixElements => finish(pipeline::run_matrix_elements(
            file.matrix_elements()?,
            BUILD,
        )?)?,
        Experiment::DimerOtoc => finish(pipeline::run_otoc(file.otoc()?, BUILD)?)?,
        Experiment::DimerCumulants => finish(pipeline::run_cumulants(file.cumulants()?, BUILD)?)?,
        Experiment::TrimerCollapse => finish(pipeline::run_trimer(file.trimer()?, BUILD)?)?,
        Experiment::MeanfieldStability => {
            finish(pipeline::run_stability(file.stability()?, BUILD)?)?
        }
        Experiment::Predict => finish(pipeline::run_predict(file.predict()?, BUILD)?)?,
    };
    // The manifest carries a configuration file that reruns exactly this
    // experiment.
    bundle.manifest.config = section;
    write(&bundle, common, file.basis(experiment)?)?;
    println!("{report}");
    Ok(())
}

fn finish<R: Serialize>(o: Outcome<R>) -> Result<(Bundle, String)> {
    let report = serde_json::to_string_pretty(&o.report)?;
    Ok((o.bundle, report))
}

fn write(bundle: &Bundle, common: &Common, basis: Option<(usize, u32)>) -> Result<()> {
    let dir: &Path = &common.out;
    bundle
        .write(dir)
        .with_context(|| format!("writing the bundle to {}", dir.display()))?;
    if common.emit_gnuplot {
        std::fs::write(dir.join("plot.gp"), bundle.gnuplot_script())?;
    }
    if common.dump_basis {
        let (sites, particles) = basis
            .ok_or_else(|| anyhow::anyhow!("--dump-basis: this experiment has no Fock basis"))?;
        std::fs::write(
            dir.join("basis.csv"),
            FockBasis::new(sites, particles)?.to_csv(),
        )?;
    }
    Ok(())
}
