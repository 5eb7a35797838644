//! `eigbound` — certify eigenpairs of periodic Schrödinger operators with
//! guaranteed, fully computable error bounds.
//!
//! Subcommands: `run` (full pipeline), `sweep` (several trial-space sizes),
//! `constants` (per-element constants only), `reference` (spectral oracle
//! only), `selftest` (built-in oracle checks).
//!
//! Exit codes: 0 on success, 1 when the computation finished but a bound or
//! effectivity check was violated (or a selftest check failed), 2 on errors
//! (bad configuration, I/O, numerical failure).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eigbound::mesh::{build_partition, build_quadrature};
use eigbound::report::EffectivityReport;
use eigbound::run::{run, selftest, sweep, RunConfig, RunOutcome};
use eigbound::spectral::{sample_on_quad, solve_reference};

#[derive(Parser)]
#[command(
    name = "eigbound",
    version,
    about = "Guaranteed a posteriori error bounds for periodic Schrödinger eigenproblems",
    long_about = "Discretizes -Δu + Vu = λu on a periodic box with an interior-penalty \
                  discontinuous Galerkin method over adaptive local basis functions, then \
                  certifies each computed eigenpair with fully computable upper and lower \
                  error bounds. Exit code 1 signals bound violations, 2 signals errors."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for one configuration.
    Run(RunArgs),
    /// Run several trial-space sizes and summarize convergence.
    Sweep(SweepArgs),
    /// Compute only the per-element constants table.
    Constants(ToolArgs),
    /// Solve only the reference problem; print eigenvalues and residuals.
    Reference(ToolArgs),
    /// Run the built-in oracle checks.
    Selftest(SelftestArgs),
}

/// Where the configuration comes from: a file or a built-in preset.
#[derive(Args)]
struct ConfigSource {
    /// Path to a TOML configuration file.
    #[arg(short, long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name: "paper-1d" or "paper-2d".
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.preset) {
            (Some(path), None) => {
                RunConfig::from_file(path).with_context(|| "loading configuration")
            }
            (None, Some(name)) => match name.as_str() {
                "paper-1d" => Ok(RunConfig::preset_1d()?),
                "paper-2d" => Ok(RunConfig::preset_2d()?),
                other => bail!("unknown preset {other:?}; available: paper-1d, paper-2d"),
            },
            (None, None) => bail!("provide a configuration with --config FILE or --preset NAME"),
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Output directory for artifact files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap on estimator worker threads (overrides EIGBOUND_THREADS and the
    /// config file; results are identical for every value).
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
    /// Skip the reference solve: estimators are still computed, but error,
    /// effectivity, and higher-order columns are unavailable.
    #[arg(long)]
    skip_reference: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = self.source.load()?;
        if let Some(dir) = &self.out {
            config.output = Some(dir.clone());
        }
        if let Some(threads) = self.threads.map(Ok).or_else(|| env_threads().transpose()) {
            config.threads = threads?;
        }
        if self.skip_reference {
            config.reference.skip = true;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also run per-pair error-representation diagnostics and record true
    /// trace factors (needs the reference).
    #[arg(long)]
    diagnostics: bool,
    /// Fill the theorem-form eigenvalue-bound columns in bounds.csv.
    #[arg(long)]
    theorem_bounds: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trial-space sizes to sweep, e.g. --N 6,10 (at least two).
    #[arg(long = "N", value_name = "N1,N2,...", value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
}

#[derive(Args)]
struct ToolArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Output directory (default: print to stdout).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// EIGBOUND_THREADS, if set and parsable.
fn env_threads() -> Result<Option<usize>> {
    match std::env::var("EIGBOUND_THREADS") {
        Ok(value) => {
            let parsed = value
                .parse::<usize>()
                .with_context(|| format!("EIGBOUND_THREADS={value:?} is not a thread count"))?;
            Ok(Some(parsed))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context("reading EIGBOUND_THREADS"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(clean) => {
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether the command finished without violations.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let mut config = args.common.load()?;
            config.diagnostics = config.diagnostics || args.diagnostics;
            config.theorem_bounds = config.theorem_bounds || args.theorem_bounds;
            let outcome = run(&config)?;
            print_run(&outcome);
            Ok(!outcome.report.has_violations())
        }
        Command::Sweep(args) => {
            let config = args.common.load()?;
            let outcome = sweep(&config, &args.sizes)?;
            let mut clean = true;
            for entry in &outcome.entries {
                println!("== N = {} ==", entry.n);
                print_run(&entry.outcome);
                clean &= !entry.outcome.report.has_violations();
                println!();
            }
            if let Some(path) = outcome.written.first() {
                println!("summary: {}", path.display());
            } else {
                print!("{}", outcome.summary_csv);
            }
            Ok(clean)
        }
        Command::Constants(args) => {
            let config = args.source.load()?;
            let spec = config.potential_spec()?;
            let partition = build_partition(&config.domain.lengths, &config.domain.elements)?;
            let quad = build_quadrature(&partition, config.quadrature.order)?;
            let basis = eigbound::basis::generate_alb(
                &partition,
                &quad,
                &spec,
                config.basis.per_element,
                config.basis.wavecount,
                config.basis.drop_tol,
            )?;
            let table = eigbound::constants::compute_constants(
                &partition,
                &quad,
                &basis,
                config.theta,
                Some(config.quadrature.p_fine),
            )?;
            emit(args.out.as_deref(), "constants.csv", &table.to_csv())?;
            Ok(true)
        }
        Command::Reference(args) => {
            let config = args.source.load()?;
            let spec = config.potential_spec()?;
            let partition = build_partition(&config.domain.lengths, &config.domain.elements)?;
            let quad = build_quadrature(&partition, config.quadrature.order)?;
            // Sampling validates that the potential fits the partition.
            sample_on_quad(&spec, &partition, &quad)?;
            let reference = solve_reference(
                &spec,
                &partition,
                &quad,
                config.reference.wavecount,
                config.pairs,
            )?;
            let mut csv = String::from("i,lambda,residual_norm\n");
            for (i, (lam, res)) in reference
                .eigenvalues
                .iter()
                .zip(&reference.residual_norms)
                .enumerate()
            {
                let _ = writeln!(csv, "{},{lam:.12e},{res:.12e}", i + 1);
            }
            emit(args.out.as_deref(), "reference.csv", &csv)?;
            Ok(true)
        }
        Command::Selftest(args) => {
            let checks = selftest(args.seed)?;
            let mut clean = true;
            for check in &checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                println!("{status}  {:<14} {}", check.name, check.detail);
                clean &= check.passed;
            }
            Ok(clean)
        }
    }
}

/// Write `contents` to `dir/name`, or print to stdout without a directory.
fn emit(dir: Option<&std::path::Path>, name: &str, contents: &str) -> Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn print_run(outcome: &RunOutcome) {
    print_table(&outcome.report);
    for warning in &outcome.report.warnings {
        eprintln!("warning: {warning}");
    }
    for violation in outcome.report.violations() {
        eprintln!("VIOLATION: {violation}");
    }
    for path in &outcome.written {
        println!("wrote {}", path.display());
    }
}

fn print_table(report: &EffectivityReport) {
    let meta = &report.metadata;
    let reference = meta
        .reference_wavecount
        .map(|wc| format!("reference wavecount {wc}"))
        .unwrap_or_else(|| "no reference".into());
    println!(
        "config {}  |  {}-d mesh {:?}, N = {}, {} pairs, quadrature {}  |  {}",
        meta.config_hash,
        meta.dim,
        meta.elements,
        meta.n_basis,
        meta.pairs,
        meta.quadrature_order,
        reference,
    );
    println!(
        "timings: solve {} ms, reference {} ms, estimate {} ms, total {} ms",
        meta.timings.solve_ms,
        meta.timings.reference_ms,
        meta.timings.estimate_ms,
        meta.timings.total_ms
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:>12.4e}")).unwrap_or_else(|| format!("{:>12}", "-"));
    let ratio = |v: Option<f64>| v.map(|x| format!("{x:>7.3}")).unwrap_or_else(|| format!("{:>7}", "-"));
    println!(
        "{:>4} {:>16} {:>16} {:>12} {:>12} {:>12} {:>7} {:>7}",
        "i", "lambda_dg", "lambda_ref", "err_energy", "eta", "xi", "C_eta", "C_xi"
    );
    for row in &report.rows {
        println!(
            "{:>4} {:>16.9e} {:>16} {} {:>12.4e} {:>12.4e} {} {}",
            row.index,
            row.lambda_dg,
            row.lambda_ref
                .map(|x| format!("{x:>16.9e}"))
                .unwrap_or_else(|| format!("{:>16}", "-")),
            opt(row.err_energy),
            row.eta,
            row.xi,
            ratio(row.c_eta),
            ratio(row.c_xi),
        );
    }
}
