//! Alignment of discrete against reference eigenpairs, error measurement,
//! and effectivity reporting.
//!
//! Eigenvectors carry two gauge ambiguities that must be fixed before an
//! error can be measured: an arbitrary sign (any multiplicity), and an
//! arbitrary orthogonal mixing within clusters of (numerically) equal
//! eigenvalues.  [`align`] removes both with the weighted-overlap map
//! `Ũ_N = U_N (U_Nᵀ W U)` applied blockwise over degenerate clusters of
//! the reference spectrum, where `W` is the quadrature weight.  The aligned
//! vectors stay inside the discrete span by construction.
//!
//! [`measure_errors`] then evaluates `⦀u_i − ũ_{i,N}⦀` and `|λ_i − λ_{i,N}|`
//! per pair, and [`build_report`] combines measured errors with the
//! estimator bundle into an [`EffectivityReport`]: per-pair effectivities,
//! bound-violation flags, reference-quality warnings, and CSV/JSON/plot-data
//! serializations.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::constants::ConstantsTable;
use crate::dg::{energy_norm, EigenSolution};
use crate::estimators::EstimatorBundle;
use crate::fields::{inner_domain, l2_norm_domain, GridFunction};
use crate::mesh::{Partition, QuadGrid};
use crate::spectral::{PotentialOnGrid, ReferenceSolution};
use crate::{invalid, Error, Result};

/// Relative gap below which two consecutive reference eigenvalues are
/// treated as one degenerate cluster and aligned jointly.
pub const DEGENERACY_REL_GAP: f64 = 1e-8;

/// Group consecutive eigenvalues into degenerate clusters.
///
/// Indices `i` and `i+1` land in the same block when
/// `|λ_{i+1} − λ_i| < rel_gap · max(|λ_i|, |λ_{i+1}|, 1)`; the floor at one
/// keeps the test meaningful near a zero eigenvalue.  Blocks partition
/// `0..eigenvalues.len()` into consecutive runs.
pub fn degenerate_blocks(eigenvalues: &[f64], rel_gap: f64) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, &lam) in eigenvalues.iter().enumerate() {
        let joins = blocks.last().is_some_and(|block| {
            let prev = eigenvalues[*block.last().unwrap()];
            let scale = prev.abs().max(lam.abs()).max(1.0);
            (lam - prev).abs() < rel_gap * scale
        });
        match blocks.last_mut() {
            Some(block) if joins => block.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}

/// Align the discrete solution against the reference: `Ũ_N = U_N Q` where
/// `Q` is the closest orthogonal matrix to the overlap block `U_Nᵀ W U`
/// (its Procrustes factor `Q = A Bᵀ` from the SVD `U_Nᵀ W U = A Σ Bᵀ`),
/// blockwise over degenerate reference clusters.
///
/// For a simple eigenvalue the block is 1×1 and the map reduces to a sign
/// fix (the overlap `⟨u_{i,N}, u_i⟩_Ω ≈ ±1`); for a cluster it undoes the
/// arbitrary orthogonal mixing the eigensolver chose within the eigenspace.
/// Using the orthogonal factor rather than the overlaps themselves keeps the
/// aligned family orthonormal — a raw-overlap map would shrink each vector
/// by its projection onto the reference, which perturbs Rayleigh quotients
/// at second order in the error. Coefficient columns are mixed by the same
/// block matrix, so the returned solution stays internally consistent
/// (fields sampled from coefficients) and each aligned vector lies exactly
/// in the span of the originals.
///
/// Pairs beyond the common range `min(#discrete, #reference)` are dropped;
/// a cluster straddling that cutoff is clipped to it.
pub fn align(
    quad: &QuadGrid,
    sol: &EigenSolution,
    reference: &ReferenceSolution,
) -> Result<EigenSolution> {
    let p = sol.eigenvalues.len().min(reference.eigenvalues.len());
    if p == 0 {
        return Err(invalid!("alignment needs at least one pair on each side"));
    }
    if sol.fields.len() < p || reference.fields.len() < p {
        return Err(Error::ShapeMismatch(
            "eigenvalue and field counts disagree".into(),
        ));
    }
    if sol.coefficients.ncols() < p {
        return Err(Error::ShapeMismatch(format!(
            "coefficient matrix has {} columns, need {p}",
            sol.coefficients.ncols()
        )));
    }

    let blocks = degenerate_blocks(&reference.eigenvalues[..p], DEGENERACY_REL_GAP);
    let dofs = sol.coefficients.nrows();
    let mut fields = Vec::with_capacity(p);
    let mut coefficients = DMatrix::zeros(dofs, p);
    for block in &blocks {
        // Weighted overlaps g[j,i] = ⟨u_{j,N}, u_i⟩_Ω within the block.
        let k = block.len();
        let mut g = DMatrix::zeros(k, k);
        for (bj, &j) in block.iter().enumerate() {
            for (bi, &i) in block.iter().enumerate() {
                g[(bj, bi)] = inner_domain(quad, &sol.fields[j], &reference.fields[i]);
            }
        }
        for (bi, &i) in block.iter().enumerate() {
            let parts: Vec<(f64, &GridFunction)> = block
                .iter()
                .enumerate()
                .map(|(bj, &j)| (g[(bj, bi)], &sol.fields[j]))
                .collect();
            fields.push(GridFunction::linear_combination(&parts)?);
            let mut col = DVector::zeros(dofs);
            for (bj, &j) in block.iter().enumerate() {
                col += g[(bj, bi)] * sol.coefficients.column(j);
            }
            coefficients.set_column(i, &col);
        }
    }

    Ok(EigenSolution { eigenvalues: sol.eigenvalues[..p].to_vec(), coefficients, fields })
}

/// Measured errors of one aligned pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairError {
    /// Broken energy norm `⦀u_i − ũ_{i,N}⦀`.
    pub err_energy: f64,
    /// Eigenvalue error `|λ_i − λ_{i,N}|`.
    pub err_lambda: f64,
    /// Squared L² error `‖u_i − ũ_{i,N}‖²_Ω`.
    pub l2_err_sq: f64,
}

/// Measured errors against the reference, together with the reference data
/// the report needs (eigenvalues and oracle residual norms).
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceComparison {
    /// Reference eigenvalues `λ_i` over the common range.
    pub eigenvalues: Vec<f64>,
    /// Reference eigenresiduals `‖-Δu_i + Vu_i − λ_i u_i‖_Ω` (oracle quality).
    pub residual_norms: Vec<f64>,
    /// Per-pair errors.
    pub errors: Vec<PairError>,
}

/// Measure energy-norm, eigenvalue, and L² errors of the aligned solution
/// against the reference, pair by pair over the common range.
pub fn measure_errors(
    partition: &Partition,
    quad: &QuadGrid,
    aligned: &EigenSolution,
    reference: &ReferenceSolution,
    table: &ConstantsTable,
    potential: &PotentialOnGrid,
) -> Result<ReferenceComparison> {
    let p = aligned.eigenvalues.len().min(reference.eigenvalues.len());
    let mut errors = Vec::with_capacity(p);
    for i in 0..p {
        let diff = GridFunction::linear_combination(&[
            (1.0, &reference.fields[i]),
            (-1.0, &aligned.fields[i]),
        ])?;
        let err_energy = energy_norm(partition, quad, &diff, table, potential)?;
        let l2 = l2_norm_domain(quad, &diff);
        errors.push(PairError {
            err_energy,
            err_lambda: (reference.eigenvalues[i] - aligned.eigenvalues[i]).abs(),
            l2_err_sq: l2 * l2,
        });
    }
    Ok(ReferenceComparison {
        eigenvalues: reference.eigenvalues[..p].to_vec(),
        residual_norms: reference.residual_norms[..p].to_vec(),
        errors,
    })
}

/// Wall-clock breakdown of a run, in milliseconds.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RunTimings {
    /// Reference (spectral oracle) solve.
    pub reference_ms: u64,
    /// Basis generation, constants, assembly, and the discrete eigensolve.
    pub solve_ms: u64,
    /// Estimator evaluation (bounds, bubble solves).
    pub estimate_ms: u64,
    /// Whole run.
    pub total_ms: u64,
}

/// Provenance of a report: what was run, at which resolution, how long.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMetadata {
    /// Hash of the serialized configuration (see [`config_hash`]).
    pub config_hash: String,
    /// Spatial dimension.
    pub dim: usize,
    /// Elements per dimension.
    pub elements: Vec<usize>,
    /// Trial-space dimension `N` per element box.
    pub n_basis: usize,
    /// Number of eigenpairs requested.
    pub pairs: usize,
    /// Quadrature order per dimension.
    pub quadrature_order: usize,
    /// Symmetrization parameter θ.
    pub theta: f64,
    /// Reference wavecount per dimension (`None` when the reference was
    /// skipped).
    pub reference_wavecount: Option<usize>,
    /// Local-solve wavecount per dimension.
    pub basis_wavecount: usize,
    /// Timings.
    pub timings: RunTimings,
}

/// FNV-1a hash of a serialized configuration, as a fixed-width hex string.
/// Deterministic across runs and platforms, so identical configurations map
/// to identical report metadata.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// One row of the effectivity report.
///
/// Quantities that need the reference (errors, effectivities, hot terms) are
/// optional; a `None` means "unavailable", never "zero".  Rows where a ratio
/// would divide by zero keep the ratio as `None` and carry an explanatory
/// flag instead of an infinite number.
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    /// 1-based pair index.
    pub index: usize,
    /// Discrete eigenvalue `λ_{i,N}` (unshifted).
    pub lambda_dg: f64,
    /// Reference eigenvalue `λ_i`.
    pub lambda_ref: Option<f64>,
    /// `|λ_i − λ_{i,N}|`.
    pub err_lambda: Option<f64>,
    /// `⦀u_i − ũ_{i,N}⦀`.
    pub err_energy: Option<f64>,
    /// Upper estimator `η_i`.
    pub eta: f64,
    /// Lower estimator `ξ_i`.
    pub xi: f64,
    /// Higher-order upper term `hot_i^ub`.
    pub hot_ub: Option<f64>,
    /// Higher-order lower term `hot_i^lb`.
    pub hot_lb: Option<f64>,
    /// Upper effectivity `C_{i,η} = η_i / ⦀e_i⦀`.
    pub c_eta: Option<f64>,
    /// Lower effectivity `C_{i,ξ} = ξ_i / ⦀e_i⦀`.
    pub c_xi: Option<f64>,
    /// Eigenvalue upper effectivity `C^λ_{i,η} = η_i² / |λ_i − λ_{i,N}|`.
    pub clam_eta: Option<f64>,
    /// Eigenvalue lower effectivity `C^λ_{i,ξ} = ξ_i² / |λ_i − λ_{i,N}|`.
    pub clam_xi: Option<f64>,
    /// Flags: `*-violation` entries mark failed bound or effectivity checks;
    /// `zero-*-error` marks ratios omitted to avoid division by zero.
    pub flags: Vec<String>,
}

/// The full effectivity report: per-pair rows, run metadata, warnings.
#[derive(Debug, Clone, Serialize)]
pub struct EffectivityReport {
    /// One row per eigenpair.
    pub rows: Vec<PairReport>,
    /// Provenance.
    pub metadata: RunMetadata,
    /// Non-fatal diagnostics (reference quality, ordering anomalies).
    pub warnings: Vec<String>,
}

/// Build the report from measured errors (when a reference was run) and the
/// estimator bundle.
///
/// Flags per pair: `upper-effectivity-violation` when `C_η < 1`,
/// `lower-effectivity-violation` when `C_ξ > 1`, `upper-bound-violation`
/// when `⦀e⦀ > η + hot^ub`, `lower-bound-violation` when
/// `ξ² > ⦀e⦀² + (hot^lb)²`, plus `zero-energy-error` / `zero-lambda-error`
/// for rows whose ratios are omitted.  Warnings record reference pairs whose
/// oracle residual is not at least 100× below the measured error.
pub fn build_report(
    comparison: Option<&ReferenceComparison>,
    bundle: &EstimatorBundle,
    metadata: RunMetadata,
) -> EffectivityReport {
    let mut pairs = Vec::with_capacity(bundle.pairs.len());
    let mut warnings = Vec::new();

    for (idx, pe) in bundle.pairs.iter().enumerate() {
        let mut flags = Vec::new();
        let err = comparison.and_then(|c| c.errors.get(idx).copied());
        let lambda_ref = comparison.and_then(|c| c.eigenvalues.get(idx).copied());
        let err_lambda = err.map(|e| e.err_lambda);
        let err_energy = err.map(|e| e.err_energy);

        let (mut c_eta, mut c_xi) = (None, None);
        if let Some(e) = err_energy {
            if e > 0.0 {
                c_eta = Some(pe.eta / e);
                c_xi = Some(pe.xi / e);
            } else {
                flags.push("zero-energy-error".to_string());
            }
        }
        let (mut clam_eta, mut clam_xi) = (None, None);
        if let Some(dl) = err_lambda {
            if dl > 0.0 {
                clam_eta = Some(pe.eta * pe.eta / dl);
                clam_xi = Some(pe.xi * pe.xi / dl);
            } else {
                flags.push("zero-lambda-error".to_string());
            }
        }

        if c_eta.is_some_and(|c| c < 1.0) {
            flags.push("upper-effectivity-violation".to_string());
        }
        if c_xi.is_some_and(|c| c > 1.0) {
            flags.push("lower-effectivity-violation".to_string());
        }
        // Bound checks carry a tiny absolute-plus-relative slack so that
        // roundoff-scale estimator noise on fully converged pairs (error
        // at machine precision) does not flag.
        if let (Some(e), Some(h)) = (err_energy, pe.hot_ub) {
            if e > pe.eta + h + 1e-12 * e.max(1.0) {
                flags.push("upper-bound-violation".to_string());
            }
        }
        if let (Some(e), Some(h)) = (err_energy, pe.hot_lb) {
            let rhs = e * e + h * h;
            if pe.xi * pe.xi > rhs + 1e-12 * rhs.max(1.0) {
                flags.push("lower-bound-violation".to_string());
            }
        }
        if pe.xi_denominator_zero {
            flags.push("xi-denominator-zero".to_string());
        }
        let all_finite = pe.eta.is_finite()
            && pe.xi.is_finite()
            && [lambda_ref, err_lambda, err_energy, pe.hot_ub, pe.hot_lb, c_eta, c_xi, clam_eta, clam_xi]
                .iter()
                .flatten()
                .all(|v| v.is_finite());
        if !all_finite {
            flags.push("non-finite".to_string());
        }
        if let (Some(ce), Some(cx)) = (c_eta, c_xi) {
            if ce < cx {
                warnings.push(format!(
                    "pair {}: effectivity ordering violated (C_eta {ce:.3e} < C_xi {cx:.3e})",
                    idx + 1
                ));
            }
        }

        pairs.push(PairReport {
            index: idx + 1,
            lambda_dg: pe.lambda_n,
            lambda_ref,
            err_lambda,
            err_energy,
            eta: pe.eta,
            xi: pe.xi,
            hot_ub: pe.hot_ub,
            hot_lb: pe.hot_lb,
            c_eta,
            c_xi,
            clam_eta,
            clam_xi,
            flags,
        });
    }

    if let Some(c) = comparison {
        for (idx, err) in c.errors.iter().enumerate() {
            let Some(&res) = c.residual_norms.get(idx) else { continue };
            if err.err_energy > 0.0 && res > 0.01 * err.err_energy {
                warnings.push(format!(
                    "pair {}: reference residual {res:.3e} is not 100x below the measured \
                     error {:.3e}; the reference may be under-resolved",
                    idx + 1,
                    err.err_energy
                ));
            }
        }
    }

    EffectivityReport { rows: pairs, metadata, warnings }
}

impl EffectivityReport {
    /// All violation flags across pairs, as `pair <i>: <flag>` strings.
    pub fn violations(&self) -> Vec<String> {
        self.rows
            .iter()
            .flat_map(|p| {
                p.flags
                    .iter()
                    .filter(|f| f.ends_with("-violation"))
                    .map(move |f| format!("pair {}: {f}", p.index))
            })
            .collect()
    }

    /// Whether any pair carries a violation flag.
    pub fn has_violations(&self) -> bool {
        self.rows.iter().any(|p| p.flags.iter().any(|f| f.ends_with("-violation")))
    }

    /// CSV with the fixed column set
    /// `i,lambda_ref,lambda_dg,err_lambda,err_energy,eta,xi,hot_ub,hot_lb,C_eta,C_xi,Clam_eta,Clam_xi`.
    /// Unavailable entries are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "i,lambda_ref,lambda_dg,err_lambda,err_energy,eta,xi,hot_ub,hot_lb,C_eta,C_xi,Clam_eta,Clam_xi\n",
        );
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for p in &self.rows {
            out.push_str(&format!(
                "{},{},{:.12e},{},{},{:.12e},{:.12e},{},{},{},{},{},{}\n",
                p.index,
                cell(p.lambda_ref),
                p.lambda_dg,
                cell(p.err_lambda),
                cell(p.err_energy),
                p.eta,
                p.xi,
                cell(p.hot_ub),
                cell(p.hot_lb),
                cell(p.c_eta),
                cell(p.c_xi),
                cell(p.clam_eta),
                cell(p.clam_xi),
            ));
        }
        out
    }

    /// Pretty-printed JSON of the whole report (rows, metadata, warnings).
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(std::io::Error::other(e)))
    }

    /// Whitespace-separated table `i err_energy eta xi hot_ub hot_lb` with
    /// `nan` for unavailable entries, ready for log-scale plotting.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("# i err_energy eta xi hot_ub hot_lb\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_else(|| "nan".into());
        for p in &self.rows {
            out.push_str(&format!(
                "{} {} {:.12e} {:.12e} {} {}\n",
                p.index,
                cell(p.err_energy),
                p.eta,
                p.xi,
                cell(p.hot_ub),
                cell(p.hot_lb),
            ));
        }
        out
    }
}
