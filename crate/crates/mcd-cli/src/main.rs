//! `mcd` — fit reduced-rank multinomial models to tabular data.
//!
//! The binary wires three small modules together: `config` parses the TOML
//! model description, `ingest` turns the data file into observations and
//! design matrices, and `report` renders results as aligned text and CSV.
//! Four commands share that pipeline: `fit` estimates one model, `select`
//! runs the AIC stepwise search, `bootstrap` resamples for percentile
//! intervals, and `predict` reports fitted probabilities for the data rows.
//!
//! Every failure surfaces as an `error:` line (plus `caused by:` context) on
//! standard error with exit status 1; status 0 means the requested reports
//! were produced.

mod config;
mod ingest;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use mcd::fitter::FitOptions;
use mcd::select::{BootstrapOptions, StepwiseOptions};

use config::Config;
use ingest::Ingested;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CommandKind {
    /// Fit the configured model and report its coefficients.
    Fit,
    /// Stepwise AIC search downward from the configured model.
    Select,
    /// Case-resampling percentile intervals for the coefficients.
    Bootstrap,
    /// Fitted probabilities for every data row.
    Predict,
}

#[derive(Debug, Parser)]
#[command(
    name = "mcd",
    version,
    about = "Reduced-rank multinomial models for profile and category data"
)]
struct Cli {
    /// Data file: CSV with a header row.
    #[arg(long)]
    data: PathBuf,

    /// Model configuration file (TOML; schema documented in the README).
    #[arg(long)]
    config: PathBuf,

    /// Directory for CSV reports (created if missing). Without it, reports
    /// only go to standard output.
    #[arg(long)]
    out: Option<PathBuf>,

    /// What to run.
    #[arg(long, value_enum, default_value = "fit")]
    command: CommandKind,

    /// Bootstrap seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,

    /// Bootstrap replicate count (overrides the config).
    #[arg(long)]
    replicates: Option<usize>,

    /// Bootstrap confidence level in (0, 1) (overrides the config).
    #[arg(long)]
    level: Option<f64>,

    /// Print the per-iteration deviance trace (fit, select, predict).
    #[arg(long)]
    trace: bool,
}

/// Marker for a reader that went away (`mcd ... | head`): stop quietly with
/// a success status instead of reporting an error or panicking.
#[derive(Debug)]
struct PipeClosed;

impl std::fmt::Display for PipeClosed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("standard output was closed")
    }
}

impl std::error::Error for PipeClosed {}

/// The one gate for stdout. All report text flows through here so a closed
/// pipe surfaces as `PipeClosed` rather than a panic inside `println!`.
fn emit(text: &str) -> Result<()> {
    match io::stdout().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Err(anyhow::Error::new(PipeClosed)),
        Err(e) => Err(anyhow::Error::new(e).context("writing to standard output")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if err.is::<PipeClosed>() => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            for cause in err.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let config = config::load(&cli.config)?;
    let config_dir = cli.config.parent().unwrap_or_else(|| Path::new("."));
    let ing = ingest::ingest(&cli.data, &config, config_dir)
        .with_context(|| format!("ingesting {}", cli.data.display()))?;

    let out = match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)
                .with_context(|| format!("cannot create output directory {}", dir.display()))?;
            Some(dir.as_path())
        }
        None => None,
    };

    let mut fit_opts = config.fit.to_options()?;
    fit_opts.trace = cli.trace;

    match cli.command {
        CommandKind::Fit => cmd_fit(&config, &ing, &fit_opts, out, cli.trace),
        CommandKind::Select => cmd_select(&config, &ing, &fit_opts, out, cli.trace),
        CommandKind::Bootstrap => cmd_bootstrap(cli, &config, &ing, &fit_opts, out),
        CommandKind::Predict => cmd_predict(&config, &ing, &fit_opts, out, cli.trace),
    }
}

/// Prints the trace block (if recorded and requested) and mirrors it into
/// `trace.tsv` when an output directory is present.
fn emit_trace(fit: &mcd::FitResult, out: Option<&Path>, wanted: bool) -> Result<()> {
    if !wanted {
        return Ok(());
    }
    let Some(trace) = &fit.trace else { return Ok(()) };
    let text = report::trace_tsv(trace);
    if let Some(dir) = out {
        fs::write(dir.join("trace.tsv"), &text).context("writing trace.tsv")?;
    }
    emit(&text)?;
    emit("\n")
}

/// CSV reports every command with a fitted model writes.
fn write_fit_files(fit: &mcd::FitResult, ing: &Ingested, opts: &FitOptions, dir: &Path) -> Result<()> {
    report::write_csv(&dir.join("coefficients.csv"), &report::coefficients_csv(fit, ing))?;
    report::write_csv(&dir.join("summary.csv"), &report::summary_csv(fit, opts))?;
    if fit.coding.is_some() {
        report::write_csv(
            &dir.join("intercept_associations.csv"),
            &report::associations_csv(fit, ing)?,
        )?;
    } else {
        report::write_csv(&dir.join("intercepts.csv"), &report::intercepts_csv(fit, ing))?;
    }
    Ok(())
}

fn cmd_fit(
    config: &Config,
    ing: &Ingested,
    opts: &FitOptions,
    out: Option<&Path>,
    trace: bool,
) -> Result<()> {
    let fit = mcd::fit(&ing.g, &ing.d, config.model.s, opts).context("fitting the model")?;
    if let Some(dir) = out {
        write_fit_files(&fit, ing, opts, dir)?;
    }
    emit_trace(&fit, out, trace)?;
    emit(&format!("{}\n", report::fit_report(ing, &fit, opts)?))
}

fn cmd_select(
    _config: &Config,
    ing: &Ingested,
    opts: &FitOptions,
    out: Option<&Path>,
    trace: bool,
) -> Result<()> {
    let (Some(coding), Some(z_terms), Some(w_terms)) =
        (ing.d.coding, &ing.d.z_terms, &ing.d.w_terms)
    else {
        bail!("stepwise selection needs profile mode (term-based designs)");
    };
    let sw_opts = StepwiseOptions { fit: opts.clone(), forced_x: ing.forced_x.clone() };
    let result = mcd::stepwise(
        &ing.g,
        coding,
        z_terms,
        w_terms,
        &ing.d.x,
        &ing.d.x_labels,
        &sw_opts,
    )
    .context("running the stepwise search")?;

    if let Some(dir) = out {
        report::write_csv(&dir.join("selection.csv"), &report::selection_csv(&result, ing))?;
        write_fit_files(&result.final_fit, ing, opts, dir)?;
    }
    emit(&format!("{}\n", report::selection_report(&result, ing)))?;
    emit_trace(&result.final_fit, out, trace)?;
    emit(&format!("Final model\n\n{}\n", report::fit_report(ing, &result.final_fit, opts)?))
}

fn cmd_bootstrap(
    cli: &Cli,
    config: &Config,
    ing: &Ingested,
    fit_opts: &FitOptions,
    out: Option<&Path>,
) -> Result<()> {
    let section = &config.bootstrap;
    let opts = BootstrapOptions {
        replicates: cli.replicates.or(section.replicates).unwrap_or(200),
        level: cli.level.or(section.level).unwrap_or(0.95),
        seed: cli.seed.or(section.seed).unwrap_or(0),
        fit: FitOptions { trace: false, ..fit_opts.clone() },
    };
    let result = mcd::bootstrap(&ing.g, &ing.d, config.model.s, &opts)
        .context("running the bootstrap")?;
    if let Some(dir) = out {
        report::write_csv(&dir.join("intervals.csv"), &report::intervals_csv(&result, ing))?;
    }
    emit(&format!("{}\n", report::bootstrap_report(&result, ing)))
}

fn cmd_predict(
    config: &Config,
    ing: &Ingested,
    opts: &FitOptions,
    out: Option<&Path>,
    trace: bool,
) -> Result<()> {
    let fit = mcd::fit(&ing.g, &ing.d, config.model.s, opts).context("fitting the model")?;
    if let Some(dir) = out {
        report::write_csv(&dir.join("predictions.csv"), &report::predictions_csv(&fit, ing)?)?;
    }
    emit_trace(&fit, out, trace)?;
    emit(&format!("{}\n", report::prediction_report(&fit, ing)?))
}
