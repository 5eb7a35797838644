//! End-to-end driver: configuration, presets, and artifact output.
//!
//! [`RunConfig`] is the single description of a computation — domain,
//! potential, discretization sizes, reference resolution, output location —
//! deserialized from TOML.  [`run`] executes the whole pipeline
//! (mesh → basis → constants → assembly → eigensolve → reference → align →
//! estimate → report) and, when an output directory is configured, writes
//! the artifact files: constants, per-element estimators, the effectivity
//! report, eigenvalue bounds, and plot data.  [`sweep`] repeats a run over
//! several trial-space sizes and summarizes convergence; [`selftest`] runs
//! quick built-in oracle checks.
//!
//! Everything downstream of the configuration is deterministic: running the
//! same configuration (and seed) twice produces bit-identical CSV output,
//! regardless of the worker-thread count.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{generate_alb, BasisSet};
use crate::constants::{compute_constants, ConstantsTable};
use crate::dg::{assemble, energy_norm, solve_eig, EigenSolution};
use crate::estimators::{
    eigenvalue_bounds, error_representation_check, estimate, AlignedPair, BubbleSolver,
    EigenvalueBounds, EstimatorBundle, PairEstimates,
};
use crate::fields::GridFunction;
use crate::mesh::{build_partition, build_quadrature, Partition, QuadGrid};
use crate::report::{
    align, build_report, config_hash, measure_errors, EffectivityReport, ReferenceComparison,
    RunMetadata, RunTimings,
};
use crate::spectral::{
    sample_on_quad, solve_reference, GaussianBump, PotentialOnGrid, PotentialSpec,
    ReferenceSolution,
};
use crate::{Error, Result};

/// Domain geometry: a periodic box and its uniform partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Box side lengths per dimension.
    pub lengths: Vec<f64>,
    /// Elements per dimension (at least 3 each, so patch neighbors are
    /// distinct).
    pub elements: Vec<usize>,
}

/// The potential, as Gaussian bumps over the domain box.  Periodicity is
/// realized by summing lattice images out to `image_radius`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// Gaussian bumps; empty means the free operator `-Δ`.
    #[serde(default)]
    pub bumps: Vec<GaussianBump>,
    /// Lattice image radius for periodization.
    #[serde(default = "default_image_radius")]
    pub image_radius: i32,
    /// Constant added to the potential everywhere.
    #[serde(default)]
    pub offset: f64,
}

/// Trial-space construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    /// Planewave count per dimension for the local solves (odd).
    pub wavecount: usize,
    /// Adaptive basis functions kept per element (`N`).
    pub per_element: usize,
    /// Relative magnitude below which projected local functions are dropped
    /// during orthonormalization.
    #[serde(default = "default_drop_tol")]
    pub drop_tol: f64,
}

/// Reference (spectral oracle) parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Planewave count per dimension for the global reference solve (odd).
    pub wavecount: usize,
    /// Skip the reference entirely: estimators are still produced, but
    /// errors, effectivities, and higher-order terms are unavailable.
    #[serde(default)]
    pub skip: bool,
}

/// Quadrature resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Lobatto–Legendre points per dimension per element.  Products of
    /// basis functions are integrated exactly when
    /// `order ≥ (basis.wavecount + 1) / 2`.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Fine-space polynomial degree for the trace-constant problems.
    #[serde(default = "default_p_fine")]
    pub p_fine: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { order: default_order(), p_fine: default_p_fine() }
    }
}

fn default_image_radius() -> i32 {
    2
}
fn default_drop_tol() -> f64 {
    1e-8
}
fn default_order() -> usize {
    17
}
fn default_p_fine() -> usize {
    16
}
fn default_pairs() -> usize {
    11
}
fn default_theta() -> f64 {
    1.0
}
fn default_threads() -> usize {
    1
}

/// Complete description of one computation.
///
/// Deserialized from TOML; see [`RunConfig::preset_1d`] and
/// [`RunConfig::preset_2d`] for complete examples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of eigenpairs to compute and certify.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Symmetrization parameter of the bilinear form.  The eigensolver
    /// requires the symmetric form, so this must be `1.0`.
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Seed for the randomized checks in [`selftest`]; the pipeline itself
    /// is deterministic and does not consume randomness.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for per-pair estimator evaluation.  Results are
    /// bit-identical for every thread count.
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Output directory for artifact files; `None` keeps everything in
    /// memory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Also run the per-pair error-representation diagnostic and record true
    /// trace factors (needs the reference).
    #[serde(default)]
    pub diagnostics: bool,
    /// Fill the theorem-form eigenvalue-bound columns in `bounds.csv`.
    #[serde(default)]
    pub theorem_bounds: bool,
    /// Domain geometry.
    pub domain: DomainConfig,
    /// Potential description.
    pub potential: PotentialConfig,
    /// Trial-space parameters.
    pub basis: BasisConfig,
    /// Reference oracle parameters.
    pub reference: ReferenceConfig,
    /// Quadrature parameters.
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

/// Triple-well potential on a periodic interval: seven elements, six
/// adaptive functions each, certified against a dense planewave reference.
const PRESET_1D: &str = r#"
pairs = 11
theta = 1.0
seed = 0
threads = 1

[domain]
lengths = [6.283185307179586]
elements = [7]

[[potential.bumps]]
center = [0.2827433388230814]
width = 0.3
magnitude = -40.0

[[potential.bumps]]
center = [2.167698930976957]
width = 0.3
magnitude = -60.0

[[potential.bumps]]
center = [4.052654523130833]
width = 0.3
magnitude = -50.0

[basis]
wavecount = 257
per_element = 6
drop_tol = 1e-3

[reference]
wavecount = 513

[quadrature]
order = 257
p_fine = 16
"#;

/// Four Gaussian wells on a periodic square: a 5×5 mesh with eleven adaptive
/// functions per element.
const PRESET_2D: &str = r#"
pairs = 11
theta = 1.0
seed = 0
threads = 1

[domain]
lengths = [6.283185307179586, 6.283185307179586]
elements = [5, 5]

[[potential.bumps]]
center = [1.7592918860102844, 1.9477874452256718]
width = 0.3
magnitude = -12.0

[[potential.bumps]]
center = [4.523893421169302, 1.5079644737231006]
width = 0.3
magnitude = -18.0

[[potential.bumps]]
center = [1.6336281798666925, 4.649557127312894]
width = 0.3
magnitude = -15.0

[[potential.bumps]]
center = [3.455751918948773, 3.7699111843077517]
width = 0.3
magnitude = -13.5

[basis]
wavecount = 33
per_element = 11
drop_tol = 1e-3

[reference]
wavecount = 51

[quadrature]
order = 33
p_fine = 16
"#;

impl RunConfig {
    /// Parse a configuration from TOML text and validate it.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read and parse a configuration file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Serialize back to TOML (the resolved form, all defaults filled in).
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serialization failed: {e}")))
    }

    /// The 1-D triple-well preset.
    pub fn preset_1d() -> Result<Self> {
        Self::from_toml(PRESET_1D)
    }

    /// The 2-D four-well preset.
    pub fn preset_2d() -> Result<Self> {
        Self::from_toml(PRESET_2D)
    }

    /// The preset TOML text by name (`"paper-1d"`, `"paper-2d"`), for
    /// writing example configuration files.
    pub fn preset_text(name: &str) -> Option<&'static str> {
        match name {
            "paper-1d" => Some(PRESET_1D.trim_start()),
            "paper-2d" => Some(PRESET_2D.trim_start()),
            _ => None,
        }
    }

    /// The potential over the configured domain.
    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let spec = PotentialSpec {
            lengths: self.domain.lengths.clone(),
            bumps: self.potential.bumps.clone(),
            image_radius: self.potential.image_radius,
            offset: self.potential.offset,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Check every invariant a well-formed configuration must satisfy.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let dim = self.domain.lengths.len();
        if dim == 0 || dim > 3 {
            return fail(format!("domain.lengths: dimension must be 1..=3, got {dim}"));
        }
        if self.domain.elements.len() != dim {
            return fail(format!(
                "domain.elements: got {} entries for a {dim}-dimensional domain",
                self.domain.elements.len()
            ));
        }
        if self.domain.lengths.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return fail("domain.lengths: all lengths must be positive and finite".into());
        }
        if self.domain.elements.iter().any(|&n| n < 3) {
            return fail("domain.elements: need at least 3 elements per dimension".into());
        }
        for (i, b) in self.potential.bumps.iter().enumerate() {
            if b.center.len() != dim {
                return fail(format!(
                    "potential.bumps[{i}].center: got {} coordinates in {dim} dimensions",
                    b.center.len()
                ));
            }
            if !(b.width.is_finite() && b.width > 0.0) {
                return fail(format!("potential.bumps[{i}].width: must be positive"));
            }
            if !b.magnitude.is_finite() {
                return fail(format!("potential.bumps[{i}].magnitude: must be finite"));
            }
        }
        if self.potential.image_radius < 1 {
            return fail("potential.image_radius: must be at least 1".into());
        }
        if self.pairs == 0 {
            return fail("pairs: must be positive".into());
        }
        if self.basis.per_element == 0 {
            return fail("basis.per_element: must be positive".into());
        }
        let dofs: usize =
            self.domain.elements.iter().product::<usize>() * self.basis.per_element;
        if self.pairs > dofs {
            return fail(format!(
                "pairs: requested {} eigenpairs but the trial space has only {dofs} \
                 degrees of freedom ({} elements × {} functions)",
                self.pairs,
                self.domain.elements.iter().product::<usize>(),
                self.basis.per_element
            ));
        }
        for (name, wc) in
            [("basis.wavecount", self.basis.wavecount), ("reference.wavecount", self.reference.wavecount)]
        {
            if wc < 3 || wc % 2 == 0 {
                return fail(format!("{name}: must be odd and at least 3, got {wc}"));
            }
        }
        if !(self.basis.drop_tol.is_finite() && self.basis.drop_tol > 0.0 && self.basis.drop_tol < 1.0)
        {
            return fail("basis.drop_tol: must lie in (0, 1)".into());
        }
        if self.quadrature.order < 2 {
            return fail("quadrature.order: must be at least 2".into());
        }
        if self.quadrature.p_fine < 2 {
            return fail("quadrature.p_fine: must be at least 2".into());
        }
        if self.theta != 1.0 {
            return fail(format!(
                "theta: the eigensolver supports only the symmetric form (theta = 1), got {}",
                self.theta
            ));
        }
        if self.threads == 0 {
            return fail("threads: must be at least 1".into());
        }
        if self.diagnostics && self.reference.skip {
            return fail("diagnostics: needs the reference; unset reference.skip".into());
        }
        Ok(())
    }
}

/// Prefix an error's message with the pipeline phase that produced it.
fn with_context(phase: &str, err: Error) -> Error {
    match err {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{phase}: {m}")),
        Error::ShapeMismatch(m) => Error::ShapeMismatch(format!("{phase}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{phase}: {m}")),
        Error::MissingData(m) => Error::MissingData(format!("{phase}: {m}")),
        Error::Config(m) => Error::Config(format!("{phase}: {m}")),
        Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{phase}: {e}"))),
    }
}

/// Everything a run produces, in memory.  Artifact files are additionally
/// written when the configuration names an output directory.
#[derive(Debug)]
pub struct RunOutcome {
    /// The effectivity report (rows, metadata, warnings).
    pub report: EffectivityReport,
    /// Per-pair, per-element estimator quantities.
    pub bundle: EstimatorBundle,
    /// Per-pair eigenvalue bounds.
    pub bounds: Vec<EigenvalueBounds>,
    /// The computed constants.
    pub table: ConstantsTable,
    /// The discrete solution, aligned against the reference when one ran.
    pub solution: EigenSolution,
    /// The reference solution, unless skipped.
    pub reference: Option<ReferenceSolution>,
    /// Measured errors, unless the reference was skipped.
    pub comparison: Option<ReferenceComparison>,
    /// Per-pair error-representation defects (diagnostics mode only).
    pub representation_defects: Option<Vec<f64>>,
    /// Artifact files written.
    pub written: Vec<PathBuf>,
}

fn ms_since(t: Instant) -> u64 {
    u64::try_from(t.elapsed().as_millis()).unwrap_or(u64::MAX)
}

/// Execute the full pipeline for one configuration.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let total_t = Instant::now();

    let spec = config.potential_spec()?;
    let partition = build_partition(&config.domain.lengths, &config.domain.elements)
        .map_err(|e| with_context("mesh", e))?;
    let quad = build_quadrature(&partition, config.quadrature.order)
        .map_err(|e| with_context("quadrature", e))?;
    let vgrid =
        sample_on_quad(&spec, &partition, &quad).map_err(|e| with_context("potential", e))?;

    let solve_t = Instant::now();
    let basis = generate_alb(
        &partition,
        &quad,
        &spec,
        config.basis.per_element,
        config.basis.wavecount,
        config.basis.drop_tol,
    )
    .map_err(|e| with_context("basis generation", e))?;
    let table = compute_constants(&partition, &quad, &basis, config.theta, Some(config.quadrature.p_fine))
        .map_err(|e| with_context("constants", e))?;
    let op = assemble(&partition, &quad, &basis, &vgrid, &table, config.theta)
        .map_err(|e| with_context("assembly", e))?;
    let sol = solve_eig(&partition, &quad, &basis, &op, config.pairs)
        .map_err(|e| with_context("eigensolve", e))?;
    let solve_ms = ms_since(solve_t);

    let (reference, reference_ms) = if config.reference.skip {
        (None, 0)
    } else {
        let t = Instant::now();
        let r = solve_reference(&spec, &partition, &quad, config.reference.wavecount, config.pairs)
            .map_err(|e| with_context("reference", e))?;
        (Some(r), ms_since(t))
    };

    let (solution, comparison) = match &reference {
        Some(r) => {
            let aligned = align(&quad, &sol, r).map_err(|e| with_context("alignment", e))?;
            let cmp = measure_errors(&partition, &quad, &aligned, r, &table, &vgrid)
                .map_err(|e| with_context("error measurement", e))?;
            (aligned, Some(cmp))
        }
        None => (sol, None),
    };

    let estimate_t = Instant::now();
    let bundle = estimate_pairs(
        &partition,
        &quad,
        &basis,
        &solution,
        &table,
        &spec,
        &vgrid,
        config.quadrature.order,
        reference.as_ref(),
        config.threads,
    )
    .map_err(|e| with_context("estimators", e))?;
    let estimate_ms = ms_since(estimate_t);

    let bounds: Vec<EigenvalueBounds> = bundle
        .pairs
        .iter()
        .enumerate()
        .map(|(i, pe)| {
            let terms = comparison.as_ref().and_then(|c| {
                let err = c.errors.get(i)?;
                let lam = *c.eigenvalues.get(i)?;
                Some((lam - vgrid.min, err.l2_err_sq))
            });
            eigenvalue_bounds(pe, &table, terms)
        })
        .collect();

    let representation_defects = if config.diagnostics {
        let r = reference.as_ref().expect("validated: diagnostics requires the reference");
        let mut defects = Vec::with_capacity(solution.eigenvalues.len());
        for i in 0..solution.eigenvalues.len() {
            defects.push(
                error_representation_check(
                    &partition,
                    &quad,
                    &basis,
                    &table,
                    &vgrid,
                    solution.eigenvalues[i],
                    &solution.fields[i],
                    r.eigenvalues[i],
                    &r.fields[i],
                    config.theta,
                )
                .map_err(|e| with_context("error representation", e))?,
            );
        }
        Some(defects)
    } else {
        None
    };

    let config_text = config.to_toml()?;
    let metadata = RunMetadata {
        config_hash: config_hash(&config_text),
        dim: partition.dim(),
        elements: config.domain.elements.clone(),
        n_basis: config.basis.per_element,
        pairs: config.pairs,
        quadrature_order: config.quadrature.order,
        theta: config.theta,
        reference_wavecount: (!config.reference.skip).then_some(config.reference.wavecount),
        basis_wavecount: config.basis.wavecount,
        timings: RunTimings {
            reference_ms,
            solve_ms,
            estimate_ms,
            total_ms: ms_since(total_t),
        },
    };
    let mut report = build_report(comparison.as_ref(), &bundle, metadata);
    let exact_order = (config.basis.wavecount + 1) / 2;
    if config.quadrature.order < exact_order {
        report.warnings.push(format!(
            "quadrature.order {} does not integrate trial-function products exactly \
             (needs {exact_order} for wavecount {}); expect aliasing in the assembled \
             operator",
            config.quadrature.order, config.basis.wavecount
        ));
    }

    let mut written = Vec::new();
    if let Some(dir) = &config.output {
        fs::create_dir_all(dir)?;
        let mut emit = |name: &str, contents: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, contents)?;
            written.push(path);
            Ok(())
        };
        emit("config.resolved.toml", config_text)?;
        emit("constants.csv", table.to_csv())?;
        emit("estimators.csv", bundle.to_csv())?;
        emit("estimators.json", bundle.to_json()?)?;
        emit("report.csv", report.to_csv())?;
        emit("report.json", report.to_json()?)?;
        emit("plot_errors.dat", report.to_plot_data())?;
        emit("bounds.csv", bounds_csv(&bounds, &bundle, config.theorem_bounds))?;
        if let Some(defects) = &representation_defects {
            let mut csv = String::from("i,representation_defect\n");
            for (i, d) in defects.iter().enumerate() {
                csv.push_str(&format!("{},{d:.12e}\n", i + 1));
            }
            emit("diagnostics.csv", csv)?;
        }
    }

    Ok(RunOutcome {
        report,
        bundle,
        bounds,
        table,
        solution,
        reference,
        comparison,
        representation_defects,
        written,
    })
}

/// CSV of per-pair eigenvalue bounds.  The theorem-form columns are filled
/// only when requested; the headline numerical bounds are always present.
fn bounds_csv(bounds: &[EigenvalueBounds], bundle: &EstimatorBundle, theorem: bool) -> String {
    let mut out = String::from(
        "i,lambda_dg,upper_numerical,lower_numerical,lower_theorem_lhs,upper_theorem,\
         upper_factor_proof,upper_factor_statement\n",
    );
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for (i, b) in bounds.iter().enumerate() {
        let (lhs, ub, fp, fs) = if theorem {
            (
                format!("{:.12e}", b.lower_theorem_lhs),
                cell(b.upper_theorem),
                format!("{:.12e}", b.upper_factor_proof),
                format!("{:.12e}", b.upper_factor_statement),
            )
        } else {
            (String::new(), String::new(), String::new(), String::new())
        };
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{lhs},{ub},{fp},{fs}\n",
            i + 1,
            bundle.pairs[i].lambda_n,
            b.upper_numerical,
            b.lower_numerical,
        ));
    }
    out
}

/// Evaluate the estimators for every pair, optionally across worker threads.
///
/// Pairs are independent, so the work is split per pair; each pair performs
/// exactly the same floating-point operations regardless of the thread
/// count, which keeps the output bit-identical.
#[allow(clippy::too_many_arguments)]
fn estimate_pairs(
    partition: &Partition,
    quad: &QuadGrid,
    basis: &BasisSet,
    sol: &EigenSolution,
    table: &ConstantsTable,
    spec: &PotentialSpec,
    vgrid: &PotentialOnGrid,
    bubble_modes: usize,
    reference: Option<&ReferenceSolution>,
    threads: usize,
) -> Result<EstimatorBundle> {
    let n = sol.eigenvalues.len();
    let ref_pairs: Option<Vec<AlignedPair>> = reference.map(|r| {
        (0..n)
            .map(|k| AlignedPair { lambda: r.eigenvalues[k], field: &r.fields[k] })
            .collect()
    });
    if threads <= 1 || n <= 1 {
        return estimate(
            partition,
            quad,
            basis,
            sol,
            table,
            spec,
            vgrid,
            bubble_modes,
            ref_pairs.as_deref(),
        );
    }

    let next = AtomicUsize::new(0);
    let workers = threads.min(n);
    let mut merged: Vec<Option<PairEstimates>> = (0..n).map(|_| None).collect();
    let ref_pairs = ref_pairs.as_deref();
    let chunks = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                let next = &next;
                scope.spawn(move || -> Result<Vec<(usize, PairEstimates)>> {
                    let mut out = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        if k >= n {
                            return Ok(out);
                        }
                        let sub = EigenSolution {
                            eigenvalues: vec![sol.eigenvalues[k]],
                            coefficients: DMatrix::from_columns(&[sol
                                .coefficients
                                .column(k)
                                .clone_owned()]),
                            fields: vec![sol.fields[k].clone()],
                        };
                        let mut bundle = estimate(
                            partition,
                            quad,
                            basis,
                            &sub,
                            table,
                            spec,
                            vgrid,
                            bubble_modes,
                            ref_pairs.map(|rp| &rp[k..k + 1]),
                        )?;
                        out.push((k, bundle.pairs.pop().expect("one pair per sub-solve")));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| Error::Numerical("estimator worker panicked".into()))?)
            .collect::<Result<Vec<_>>>()
    })?;
    for chunk in chunks {
        for (k, pe) in chunk {
            merged[k] = Some(pe);
        }
    }
    Ok(EstimatorBundle {
        pairs: merged.into_iter().map(|p| p.expect("every pair estimated")).collect(),
    })
}

/// One entry of a sweep over trial-space sizes.
#[derive(Debug)]
pub struct SweepEntry {
    /// Basis functions per element for this run.
    pub n: usize,
    /// The full outcome.
    pub outcome: RunOutcome,
}

/// Outcome of [`sweep`]: the per-size runs plus a convergence summary.
#[derive(Debug)]
pub struct SweepOutcome {
    /// One entry per requested trial-space size, in the given order.
    pub entries: Vec<SweepEntry>,
    /// Summary CSV (`N,i,err_lambda,err_energy,eta,xi,hot_ub,hot_lb`).
    pub summary_csv: String,
    /// Files written (per-run artifacts live in `N<size>/` subdirectories).
    pub written: Vec<PathBuf>,
}

/// Run the pipeline for several trial-space sizes `N` and summarize the
/// behaviour of errors, estimators, and higher-order terms against `N`.
/// Needs at least two sizes — a single size is an ordinary [`run`].
pub fn sweep(config: &RunConfig, n_values: &[usize]) -> Result<SweepOutcome> {
    if n_values.len() < 2 {
        return Err(Error::Config(format!(
            "sweep needs at least two trial-space sizes, got {n_values:?}; use `run` for one"
        )));
    }
    let mut entries = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut sub = config.clone();
        sub.basis.per_element = n;
        sub.output = config.output.as_ref().map(|d| d.join(format!("N{n}")));
        let outcome = run(&sub).map_err(|e| with_context(&format!("sweep N={n}"), e))?;
        entries.push(SweepEntry { n, outcome });
    }

    let mut summary = String::from("N,i,err_lambda,err_energy,eta,xi,hot_ub,hot_lb\n");
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for entry in &entries {
        for row in &entry.outcome.report.rows {
            summary.push_str(&format!(
                "{},{},{},{},{:.12e},{:.12e},{},{}\n",
                entry.n,
                row.index,
                cell(row.err_lambda),
                cell(row.err_energy),
                row.eta,
                row.xi,
                cell(row.hot_ub),
                cell(row.hot_lb),
            ));
        }
    }

    let mut written = Vec::new();
    if let Some(dir) = &config.output {
        fs::create_dir_all(dir)?;
        let path = dir.join("sweep_summary.csv");
        fs::write(&path, &summary)?;
        written.push(path);
    }
    Ok(SweepOutcome { entries, summary_csv: summary, written })
}

/// One built-in oracle check.
#[derive(Debug, Clone)]
pub struct SelftestCheck {
    /// Short identifier.
    pub name: String,
    /// Whether the check passed.
    pub passed: bool,
    /// Measured quantity vs. threshold, for the log.
    pub detail: String,
}

/// Quick built-in oracle checks: the free spectrum, coercivity of the
/// assembled form on random vectors, gauge alignment, and the bubble
/// solver's analytic solution.  `seed` feeds the randomized checks.
pub fn selftest(seed: u64) -> Result<Vec<SelftestCheck>> {
    let mut checks = Vec::new();
    let two_pi = 2.0 * std::f64::consts::PI;

    // Free operator on a periodic interval: eigenvalues 0, 1, 1, 4, 4.
    {
        let spec = PotentialSpec::free(vec![two_pi])?;
        let partition = build_partition(&[two_pi], &[3])?;
        let quad = build_quadrature(&partition, 17)?;
        let reference = solve_reference(&spec, &partition, &quad, 33, 5)?;
        let expected = [0.0, 1.0, 1.0, 4.0, 4.0];
        let worst = reference
            .eigenvalues
            .iter()
            .zip(expected)
            .map(|(got, want)| (got - want).abs())
            .fold(0.0, f64::max);
        checks.push(SelftestCheck {
            name: "free-spectrum".into(),
            passed: worst < 1e-12,
            detail: format!("max eigenvalue deviation {worst:.3e} (tolerance 1e-12)"),
        });
    }

    // Coercivity: a(v, v) − V_min‖v‖² ≥ ½⦀v⦀² for random trial functions
    // (the penalty lemma in its shift-robust form; for V ≥ 0 the shift
    // vanishes and this is the plain statement).
    {
        let spec = small_triple_well()?;
        let partition = build_partition(&[two_pi], &[3])?;
        let quad = build_quadrature(&partition, 33)?;
        let basis = generate_alb(&partition, &quad, &spec, 3, 65, 1e-3)?;
        let table = compute_constants(&partition, &quad, &basis, 1.0, Some(8))?;
        let vgrid = sample_on_quad(&spec, &partition, &quad)?;
        let op = assemble(&partition, &quad, &basis, &vgrid, &table, 1.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dofs = op.total();
        let mut worst_margin = f64::INFINITY;
        for _ in 0..100 {
            let coefs: Vec<f64> = (0..dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = nalgebra::DVector::from_column_slice(&coefs);
            let quad_form = (c.transpose() * &op.a * &c)[(0, 0)];
            let field = basis.field_from_coeffs(&partition, &quad, &coefs)?;
            let l2_sq = crate::fields::l2_norm_domain(&quad, &field).powi(2);
            let en_sq = energy_norm(&partition, &quad, &field, &table, &vgrid)?.powi(2);
            let margin = quad_form - vgrid.min * l2_sq - 0.5 * en_sq + 1e-9 * en_sq.max(1.0);
            worst_margin = worst_margin.min(margin);
        }
        checks.push(SelftestCheck {
            name: "coercivity".into(),
            passed: worst_margin >= 0.0,
            detail: format!(
                "worst margin of a(v,v) - V_min‖v‖² - ½⦀v⦀² over 100 vectors: {worst_margin:.3e}"
            ),
        });
    }

    // Alignment gauge fix: a sign flip is recovered exactly.
    {
        let partition = build_partition(&[two_pi], &[3])?;
        let quad = build_quadrature(&partition, 9)?;
        let s = 1.0 / std::f64::consts::PI.sqrt();
        let u = GridFunction::sample_analytic(
            &partition,
            &quad,
            &|x| s * x[0].cos(),
            &|x| vec![-s * x[0].sin()],
            &|x| -s * x[0].cos(),
        );
        let flipped = GridFunction::linear_combination(&[(-1.0, &u)])?;
        let sol = EigenSolution {
            eigenvalues: vec![1.0],
            coefficients: DMatrix::from_element(1, 1, -1.0),
            fields: vec![flipped],
        };
        let reference = ReferenceSolution {
            eigenvalues: vec![1.0],
            fields: vec![u.clone()],
            interpolants: Vec::new(),
            residual_norms: vec![0.0],
        };
        let aligned = align(&quad, &sol, &reference)?;
        let mut worst: f64 = 0.0;
        for e in 0..u.num_elements() {
            for (a, b) in aligned.fields[0].values(e).iter().zip(u.values(e)) {
                worst = worst.max((a - b).abs());
            }
        }
        checks.push(SelftestCheck {
            name: "alignment".into(),
            passed: worst < 1e-12,
            detail: format!("sign-flip recovery deviation {worst:.3e} (tolerance 1e-12)"),
        });
    }

    // Bubble solver: the lowest sine mode has the analytic solution
    // φ̂ = (h/π)² r̂.
    {
        let partition = build_partition(&[two_pi], &[3])?;
        let solver = BubbleSolver::new(&partition, 9)?;
        let elem = 0;
        let nodes = solver.nodes(&partition, elem);
        let h = two_pi / 3.0;
        let lo = 0.0;
        let samples: Vec<f64> =
            nodes.iter().map(|&x| (std::f64::consts::PI * (x - lo) / h).sin()).collect();
        let coeffs = solver.analyze(&samples)?;
        let solved = solver.solve(&coeffs);
        let want = (h / std::f64::consts::PI).powi(2);
        let mut worst = (solved[0] - want).abs();
        for &c in &solved[1..] {
            worst = worst.max(c.abs());
        }
        checks.push(SelftestCheck {
            name: "bubble-oracle".into(),
            passed: worst < 1e-10,
            detail: format!("lowest-mode solve deviation {worst:.3e} (tolerance 1e-10)"),
        });
    }

    Ok(checks)
}

fn small_triple_well() -> Result<PotentialSpec> {
    let l = 2.0 * std::f64::consts::PI;
    let c = 0.9 * l / 3.0;
    PotentialSpec::new(
        vec![l],
        vec![
            GaussianBump { center: vec![c * 0.15], width: 0.3, magnitude: -8.0 },
            GaussianBump { center: vec![c * 1.15], width: 0.3, magnitude: -12.0 },
            GaussianBump { center: vec![c * 2.15], width: 0.3, magnitude: -10.0 },
        ],
    )
}
