// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end.
//!
//! Exit codes are stable: `0` success, `1` usage, configuration or IO
//! error, `2` numerical or contract violation (including a failed `verify`).
//! Failures print one machine-readable line, `error[<Name>]: <message>`, on
//! stderr.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use crate::editor::{run_job, ErasureJob};
use crate::error::{Error, Result};
use crate::io::{
    emit_report, load_job, load_sweep, read_bundle, read_matrix, write_bundle, write_matrix,
    write_metrics_csv, write_spectrum_csv, ConceptSource, Dtype, SpectrumRow,
};
use crate::oracle::{harness_seed, make_concepts_with, sweep, trend};
use crate::projector::{build_projector, Role};
use crate::spectra::{expansion_f, spectral_energies, thin_svd, tikhonov_g, Alpha, EmbeddingMatrix};
use crate::verify::{render, run_suite, Perturbation, VerifyOptions};

/// Tolerance for the monotonicity verdict printed by `sweep`.
const TREND_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "spectral-unlearn", version, about = "Closed-form concept erasure for cross-attention weights")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Edit a weight bundle as described by a JSON job file.
    Erase(EraseArgs),
    /// Write the spectrum and filter values of one embedding matrix as CSV.
    Inspect(InspectArgs),
    /// Measure erasure metrics on a synthetic concept pair across α.
    Sweep(SweepArgs),
    /// Run the property suite; exits 0 only if every property holds.
    Verify(VerifyArgs),
}

#[derive(Debug, clap::Args)]
pub struct EraseArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct InspectArgs {
    /// `d × n` NPY matrix, one token embedding per column.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Real `>= 1` or `inf`.
    #[arg(long)]
    pub alpha: Alpha,
    /// Spectrum CSV: `i,sigma,r_i,f,g`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the `d × d` forget operator as NPY.
    #[arg(long)]
    pub projector_out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma separated, e.g. `1,2,5,inf`. Overrides the config's list.
    #[arg(long)]
    pub alphas: Option<AlphaGrid>,
    /// Metrics CSV: `alpha,suppression_residual,retention_error,shared_error`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    /// Inject a known defect to confirm the suite catches it.
    #[arg(long, value_enum)]
    pub perturb: Option<PerturbArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PerturbArg {
    AsymmetricForget,
}

/// A comma separated α list as one flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaGrid(pub Vec<Alpha>);

impl FromStr for AlphaGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let list = Alpha::parse_list(s).map_err(|e| e.to_string())?;
        if list.is_empty() {
            return Err("expected at least one alpha".into());
        }
        Ok(AlphaGrid(list))
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Erase(args) => cmd_erase(&args),
        Command::Inspect(args) => cmd_inspect(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Verify(args) => return cmd_verify(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            e.exit_code()
        }
    }
}

fn load_concepts(sources: &[ConceptSource]) -> Result<Vec<EmbeddingMatrix>> {
    sources
        .iter()
        .map(|src| EmbeddingMatrix::new(read_matrix(src.path())?, src.label()))
        .collect()
}

pub fn cmd_erase(args: &EraseArgs) -> Result<()> {
    let cfg = load_job(&args.config)?;
    let forget = load_concepts(&cfg.forget)?;
    let retain = cfg.retain.as_deref().map(load_concepts).transpose()?;
    let manifest = cfg.manifest.as_ref().map(|m| m.load()).transpose()?;
    let targets = read_bundle(&cfg.weights_in, manifest.as_ref())?;

    let job = ErasureJob {
        forget,
        retain,
        alpha: cfg.alpha,
        mode: cfg.mode,
        targets,
    };
    let (edited, report) = run_job(&job)?;
    write_bundle(&cfg.weights_out, &edited, cfg.out_dtype)?;
    emit_report(&report, &cfg.report_out)?;

    let e = &report.edit;
    println!(
        "edited {} matrices: {} of {} parameters ({:.4}%)",
        e.edited.len(),
        e.edited_params,
        e.total_params,
        e.percent()
    );
    println!("edit time {:.3} s (job {:.3} s)", e.seconds, report.wall_clock_seconds);
    println!("bundle: {}", cfg.weights_out.display());
    println!("report: {}", cfg.report_out.display());
    Ok(())
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".into())
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let e = EmbeddingMatrix::new(read_matrix(&args.embeddings)?, label_of(&args.embeddings))?;
    let factors = thin_svd(&e)?;
    let sigma: Vec<f64> = factors.sigma.iter().copied().collect();
    let energies = spectral_energies(&sigma)?;
    let rows = sigma
        .iter()
        .zip(&energies)
        .enumerate()
        .map(|(i, (&s, &r))| {
            // g has no α = ∞ form; report its limit, the same hard selector as f.
            let g = match args.alpha {
                Alpha::Infinite => expansion_f(r, Alpha::Infinite)?,
                a => tikhonov_g(r, a)?,
            };
            Ok(SpectrumRow {
                i,
                sigma: s,
                r_i: r,
                f: expansion_f(r, args.alpha)?,
                g,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_spectrum_csv(&args.out, &rows)?;
    println!(
        "{}: {}x{}, rank {}, alpha {}",
        e.label(),
        e.dim(),
        e.tokens(),
        factors.rank(),
        args.alpha
    );
    println!("spectrum: {}", args.out.display());
    if let Some(path) = &args.projector_out {
        let p = build_projector(&factors, args.alpha, Role::Forget)?;
        write_matrix(path, p.matrix(), Dtype::F64)?;
        println!("projector: {}", path.display());
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = load_sweep(&args.config)?;
    let alphas = args
        .alphas
        .clone()
        .map(|g| g.0)
        .or(cfg.alphas)
        .unwrap_or_else(|| Alpha::DEFAULT_GRID.to_vec());
    if alphas.is_empty() {
        return Err(Error::SchemaError {
            path: "alphas".into(),
            message: "empty alpha grid".into(),
        });
    }
    let pair = make_concepts_with(cfg.pair)?;
    let metrics = sweep(&pair, &alphas)?;
    write_metrics_csv(&args.out, &metrics)?;

    println!("{:>8} {:>22} {:>22} {:>22}", "alpha", "suppression_residual", "retention_error", "shared_error");
    for m in &metrics {
        println!(
            "{:>8} {:>22.6e} {:>22.6e} {:>22.6e}",
            m.alpha.to_string(),
            m.suppression_residual,
            m.retention_error,
            m.shared_error
        );
    }
    let t = trend(&metrics, TREND_TOL);
    let verdict = |ok: bool| if ok { "yes" } else { "no" };
    println!("suppression_residual non-increasing: {}", verdict(t.suppression_non_increasing));
    println!("retention_error non-decreasing: {}", verdict(t.retention_non_decreasing));
    println!("metrics: {}", args.out.display());
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> u8 {
    let opts = VerifyOptions {
        seed: harness_seed(),
        perturbation: args.perturb.map(|PerturbArg::AsymmetricForget| Perturbation::AsymmetricForget),
    };
    let outcomes = run_suite(&opts);
    print!("{}", render(&outcomes));
    if outcomes.iter().all(|o| o.passed) {
        0
    } else {
        2
    }
}
