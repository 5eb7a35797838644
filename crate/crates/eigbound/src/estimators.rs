//! A posteriori error estimators.
//!
//! Upper bound: the residual-type terms `η_{R,κ}`, `η_{F,κ}`, `η_{J,κ}`
//! combine into `η = (Σ_κ [η_R + η_F + η_J]²)^½`, which dominates the broken
//! energy-norm error up to the high-order term `hot^ub`. Lower bound: a
//! bubble-function construction yields computable constants `c_{R,κ}`,
//! `c_{F,κ}`, `c_{J,κ}` such that `ξ_κ = (η_R + η_F + η_J)/(c_R + c_F + c_J)`
//! under-estimates the local error, with a global counterpart `ξ`. Squaring
//! the two global estimators gives the reported eigenvalue bounds.
//!
//! All energy-norm quantities use the shifted potential `V − V_m`; formulas
//! involving eigenvalues shift them accordingly (`λ̃ = λ − V_m`), while the
//! volume residual `R = λ_N u_N + Δu_N − V u_N` is shift-invariant and is
//! evaluated unshifted.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::basis::{project_n, BasisSet};
use crate::constants::ConstantsTable;
use crate::dg::{energy_norm, EigenSolution};
use crate::fields::{
    grad_norm_elem, inner_domain, jump_norm_sq_face, jump_normal_gradient, l2_norm_domain,
    l2_norm_elem, GridFunction,
};
use crate::fourier::EvalKind;
use crate::mesh::{Element, Partition, QuadGrid};
use crate::spectral::{PotentialOnGrid, PotentialSpec};
use crate::{invalid, Error, Result};

/// The bubble `g_κ(x) = ∏_j sin²(π (x_j − a_j)/h_j)` of element `elem`,
/// evaluated at flattened points `pts` (layout `point*dim + c`). It is
/// smooth, non-negative, equal to `1` at the element center, and vanishes on
/// `∂κ`.
pub fn bubble_values(elem: &Element, pts: &[f64]) -> Vec<f64> {
    let dim = elem.lo.len();
    pts.chunks(dim)
        .map(|x| {
            let mut g = 1.0;
            for j in 0..dim {
                let s = (PI * (x[j] - elem.lo[j]) / elem.widths[j]).sin();
                g *= s * s;
            }
            g
        })
        .collect()
}

/// Homogeneous-Dirichlet sine-spectral solver on the (uniform) element box:
/// `−Δφ = f`, `φ ∈ H¹₀(κ)` is diagonal in the tensor sine basis
/// `s_k(x) = ∏_j sin(k_j π (x_j − a_j)/h_j)`, `k_j = 1..modes`.
///
/// Right-hand sides are sampled on the interior equispaced tensor grid
/// `x_j = a_j + h_j·m/(modes+1)`; the forward transform is the DST-I, whose
/// matrix `S[k][m] = sin(kmπ/(n+1))` is symmetric with `S² = ((n+1)/2)·I`,
/// so analysis and synthesis share it.
#[derive(Debug, Clone)]
pub struct BubbleSolver {
    modes: usize,
    widths: Vec<f64>,
    sine: DMatrix<f64>,
    /// `ω_k = Σ_j (k_j π/h_j)²` per flattened tensor mode (row-major, last
    /// axis fastest).
    omega: Vec<f64>,
    /// Node fractions `m/(n+1)`, `m = 1..n`.
    fracs: Vec<f64>,
}

impl BubbleSolver {
    /// Set up the solver for the partition's element shape with `modes` sine
    /// modes per axis.
    pub fn new(partition: &Partition, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid!("sine solver needs at least one mode per axis"));
        }
        let widths = partition.element(0).widths.clone();
        let dim = widths.len();
        let n1 = (modes + 1) as f64;
        let sine = DMatrix::from_fn(modes, modes, |k, m| {
            (((k + 1) * (m + 1)) as f64 * PI / n1).sin()
        });
        let fracs: Vec<f64> = (1..=modes).map(|m| m as f64 / n1).collect();
        let total = modes.pow(dim as u32);
        let mut omega = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut w = 0.0;
            for j in (0..dim).rev() {
                let kj = (rest % modes + 1) as f64;
                rest /= modes;
                w += (kj * PI / widths[j]).powi(2);
            }
            omega.push(w);
        }
        Ok(Self { modes, widths, sine, omega, fracs })
    }

    /// Sine modes per axis.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Total number of interior grid nodes (= number of tensor modes).
    pub fn num_nodes(&self) -> usize {
        self.omega.len()
    }

    /// Flattened interior tensor nodes of element `e` (`point*dim + c`,
    /// row-major with the last axis fastest — the layout `analyze` expects).
    pub fn nodes(&self, partition: &Partition, e: usize) -> Vec<f64> {
        let elem = partition.element(e);
        let dim = self.widths.len();
        let n = self.modes;
        let total = self.num_nodes();
        let mut pts = Vec::with_capacity(total * dim);
        for idx in 0..total {
            let mut rest = idx;
            let mut coord = vec![0.0; dim];
            for j in (0..dim).rev() {
                coord[j] = elem.lo[j] + elem.widths[j] * self.fracs[rest % n];
                rest /= n;
            }
            pts.extend_from_slice(&coord);
        }
        pts
    }

    /// DST-I of samples on the interior grid: the coefficients of the sine
    /// interpolant through them.
    pub fn analyze(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} sine-grid samples, got {}",
                self.num_nodes(),
                samples.len()
            )));
        }
        let dim = self.widths.len();
        let n = self.modes;
        let mut data = samples.to_vec();
        for axis in 0..dim {
            self.apply_axis(&mut data, axis, dim);
        }
        let scale = (2.0 / (n + 1) as f64).powi(dim as i32);
        for v in &mut data {
            *v *= scale;
        }
        Ok(data)
    }

    fn apply_axis(&self, data: &mut Vec<f64>, axis: usize, dim: usize) {
        let n = self.modes;
        let pre = n.pow(axis as u32);
        let post = n.pow((dim - 1 - axis) as u32);
        let mut out = vec![0.0; data.len()];
        for p in 0..pre {
            for q in 0..post {
                for k in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += self.sine[(k, m)] * data[(p * n + m) * post + q];
                    }
                    out[(p * n + k) * post + q] = acc;
                }
            }
        }
        *data = out;
    }

    /// Solve `−Δφ = f` from the sine coefficients of `f`: divide by `ω_k`.
    pub fn solve(&self, rhs_coeffs: &[f64]) -> Vec<f64> {
        rhs_coeffs.iter().zip(&self.omega).map(|(c, w)| c / w).collect()
    }

    /// `‖∇v‖²_κ` of the sine series with the given coefficients:
    /// `Σ_k c_k² ω_k ∏_j (h_j/2)`.
    pub fn grad_norm_sq(&self, coeffs: &[f64]) -> f64 {
        let cell: f64 = self.widths.iter().map(|h| 0.5 * h).product();
        coeffs.iter().zip(&self.omega).map(|(c, w)| c * c * w).sum::<f64>() * cell
    }

    /// Evaluate the sine series at flattened points inside element `e`.
    pub fn eval_values(
        &self,
        partition: &Partition,
        e: usize,
        coeffs: &[f64],
        pts: &[f64],
    ) -> Vec<f64> {
        let elem = partition.element(e);
        let dim = self.widths.len();
        let n = self.modes;
        pts.chunks(dim)
            .map(|x| {
                let mut acc = 0.0;
                for (idx, c) in coeffs.iter().enumerate() {
                    let mut rest = idx;
                    let mut s = 1.0;
                    for j in (0..dim).rev() {
                        let kj = (rest % n + 1) as f64;
                        rest /= n;
                        s *= (kj * PI * (x[j] - elem.lo[j]) / elem.widths[j]).sin();
                    }
                    acc += c * s;
                }
                acc
            })
            .collect()
    }
}

/// The volume residual `R = λ_N u_N + Δu_N − V u_N` sampled on the element
/// quadrature grids (values only). `V` and `λ_N` enter unshifted; a constant
/// potential shift cancels between the two.
pub fn residual_field(
    partition: &Partition,
    quad: &QuadGrid,
    f: &GridFunction,
    lambda_n: f64,
    vgrid: &PotentialOnGrid,
) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(partition.num_elements());
    for e in 0..partition.num_elements() {
        let u = f.values(e);
        let lap = f.laplacians(e)?;
        let vv = &vgrid.elem_values[e];
        values.push(
            (0..u.len()).map(|k| lambda_n * u[k] + lap[k] - vv[k] * u[k]).collect::<Vec<f64>>(),
        );
    }
    GridFunction::new(partition, quad, values, None, None, None)
}

/// Per-element upper-bound terms `[η_{R,κ}, η_{F,κ}, η_{J,κ}]` and the
/// global estimator `η = (Σ_κ [η_R + η_F + η_J]²)^½`:
///
/// ```text
/// η_{R,κ} = a_κ ‖R‖_κ,    η_{F,κ} = (b_κ/2) ‖⟦∇u_N⟧‖_{∂κ},
/// η_{J,κ} = (b_κ γ̂_κ + c_κ/2) ‖⟦u_N⟧‖_{∂κ}.
/// ```
pub fn eta_terms(
    partition: &Partition,
    quad: &QuadGrid,
    u_n: &GridFunction,
    resid: &GridFunction,
    table: &ConstantsTable,
) -> Result<(Vec<[f64; 3]>, f64)> {
    let ne = partition.num_elements();
    if table.elems.len() != ne {
        return Err(Error::ShapeMismatch("constants table does not match the partition".into()));
    }
    let mut terms = Vec::with_capacity(ne);
    for e in 0..ne {
        let lc = &table.elems[e];
        let mut flux_sq = 0.0;
        let mut jump_sq = 0.0;
        for &fid in partition.elem_faces(e) {
            let jn = jump_normal_gradient(partition, u_n, fid)?;
            let w = quad.face_weights(fid);
            flux_sq += w.iter().zip(&jn).map(|(w, j)| w * j * j).sum::<f64>();
            jump_sq += jump_norm_sq_face(partition, quad, u_n, fid)?;
        }
        let eta_r = lc.a * l2_norm_elem(quad, resid, e);
        let eta_f = 0.5 * lc.b * flux_sq.max(0.0).sqrt();
        let eta_j = (lc.b * lc.gamma_hat + 0.5 * lc.c) * jump_sq.max(0.0).sqrt();
        terms.push([eta_r, eta_f, eta_j]);
    }
    let eta = terms.iter().map(|t| (t[0] + t[1] + t[2]).powi(2)).sum::<f64>().sqrt();
    Ok((terms, eta))
}

/// `‖∇(g_κ R − φ_κ)‖_κ` where `φ_κ ∈ H¹₀(κ)` solves `−Δφ_κ = V g_κ R`: the
/// residual `R` of the eigenpair is evaluated on the solver's interior sine
/// grid through the pair's local Fourier representation `interp`, masked by
/// the bubble, and the Dirichlet problem is solved sine-spectrally.
pub fn bubble_defect(
    partition: &Partition,
    spec: &PotentialSpec,
    solver: &BubbleSolver,
    e: usize,
    interp: &crate::fourier::TrigInterpolant,
    lambda_n: f64,
) -> Result<f64> {
    let pts = solver.nodes(partition, e);
    let un = interp.eval_points(&pts, EvalKind::Value);
    let lap = interp.eval_points(&pts, EvalKind::Laplacian);
    let vv = spec.sample_points(&pts);
    let g = bubble_values(partition.element(e), &pts);
    let n = un.len();
    let mut gr = Vec::with_capacity(n);
    let mut vgr = Vec::with_capacity(n);
    for k in 0..n {
        let r = lambda_n * un[k] + lap[k] - vv[k] * un[k];
        gr.push(g[k] * r);
        vgr.push(vv[k] * g[k] * r);
    }
    let b = solver.analyze(&gr)?;
    let phi = solver.solve(&solver.analyze(&vgr)?);
    let diff: Vec<f64> = b.iter().zip(&phi).map(|(b, p)| b - p).collect();
    Ok(solver.grad_norm_sq(&diff).max(0.0).sqrt())
}

/// The exact trace constant `d_κ^u(u_N) = ‖∇(u−u_N)·n‖_{∂κ} / ‖∇(u−u_N)‖_κ`
/// of the error field `err = u − u_N`, or `None` when the denominator
/// vanishes. A diagnostic: production estimators replace it by the
/// computable surrogate in the constants table.
pub fn d_u_true(
    partition: &Partition,
    quad: &QuadGrid,
    err: &GridFunction,
    e: usize,
) -> Result<Option<f64>> {
    let denom = grad_norm_elem(quad, err, e)?;
    if denom == 0.0 {
        return Ok(None);
    }
    let dim = partition.dim();
    let mut num_sq = 0.0;
    for &fid in partition.elem_faces(e) {
        let side = partition.face_side(fid, e)?;
        let axis = partition.face(fid).axis;
        let tr = err.trace(fid)?;
        let w = quad.face_weights(fid);
        num_sq += w
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let gn = tr.gradients[side][k * dim + axis];
                w * gn * gn
            })
            .sum::<f64>();
    }
    Ok(Some(num_sq.max(0.0).sqrt() / denom))
}

/// Patch energy norm squared
/// `⦀v⦀²_{ω(κ)} = (1/|ω|) Σ_{κ'∈ω} ‖∇v‖²_{κ'} + (γ_κ/2) ‖⟦v⟧‖²_{∂κ}`
/// over the patch `ω(κ)` of `κ` and its face neighbors.
pub fn patch_energy_norm_sq(
    partition: &Partition,
    quad: &QuadGrid,
    f: &GridFunction,
    table: &ConstantsTable,
    e: usize,
) -> Result<f64> {
    let patch = partition.patch(e);
    let mut grad = 0.0;
    for &ep in patch {
        grad += grad_norm_elem(quad, f, ep)?.powi(2);
    }
    let mut jump = 0.0;
    for &fid in partition.elem_faces(e) {
        jump += jump_norm_sq_face(partition, quad, f, fid)?;
    }
    Ok(grad / patch.len() as f64 + 0.5 * table.elems[e].gamma * jump)
}

/// The high-order upper-bound term
/// `hot^ub = ((λ̃ + λ̃_N)/2) · ‖u − u_N‖²_Ω / ⦀u − u_N⦀` with shifted
/// eigenvalues `λ̃ = λ − V_m`. Returns `0` when the energy error vanishes.
pub fn hot_ub(lambda_sh: f64, lambda_n_sh: f64, l2_err_sq: f64, energy_err: f64) -> f64 {
    if energy_err <= 0.0 {
        return 0.0;
    }
    0.5 * (lambda_sh + lambda_n_sh) * l2_err_sq / energy_err
}

/// A reference eigenpair already aligned (sign/subspace) with the discrete
/// pair it is compared against.
#[derive(Debug, Clone, Copy)]
pub struct AlignedPair<'a> {
    /// Reference eigenvalue (unshifted).
    pub lambda: f64,
    /// Aligned reference eigenfunction.
    pub field: &'a GridFunction,
}

/// All per-element estimator quantities for one eigenpair.
#[derive(Debug, Clone, Serialize)]
pub struct ElementEstimates {
    /// Residual term `η_{R,κ} = a_κ‖R‖_κ`.
    pub eta_r: f64,
    /// Flux term `η_{F,κ} = (b_κ/2)‖⟦∇u_N⟧‖_{∂κ}`.
    pub eta_f: f64,
    /// Jump term `η_{J,κ} = (b_κγ̂_κ + c_κ/2)‖⟦u_N⟧‖_{∂κ}`.
    pub eta_j: f64,
    /// `c_{R,κ} = a_κ‖R‖_κ‖∇(g_κR − φ_κ)‖_κ / ‖g_κ^½R‖²_κ` (0 when flagged).
    pub c_r: f64,
    /// `c_{F,κ} = b_κ √(|ω(κ)|/2) · max_{κ'∈ω(κ)} d^u_{κ'}` (surrogate).
    pub c_f: f64,
    /// `c_{J,κ} = √(2/γ_κ)(b_κγ̂_κ + c_κ/2)`.
    pub c_j: f64,
    /// Robust local lower estimator `ξ_κ = Ση/Σc`.
    pub xi: f64,
    /// `‖R‖_κ`.
    pub r_norm: f64,
    /// `‖g_κ^½ R‖_κ`.
    pub g_half_r_norm: f64,
    /// `‖g_κ R‖_κ`.
    pub g_r_norm: f64,
    /// `‖∇(g_κ R − φ_κ)‖_κ`.
    pub grad_bubble_defect: f64,
    /// Patch boundary constant `b²_{ω(κ)}`.
    pub b_patch_sq: f64,
    /// `hot_κ^lb = ‖λ_Nu_N − λu‖_κ · ‖g_κR‖_κ / ‖∇(g_κR − φ_κ)‖_κ` (needs a
    /// reference).
    pub hot_lb: Option<f64>,
    /// Exact `d_κ^u(u_N)` diagnostic (needs a reference).
    pub d_u_true: Option<f64>,
    /// `‖g_κ^½R‖_κ = 0`: the element has a vanishing residual and `c_{R,κ}`
    /// was set to zero.
    pub zero_residual: bool,
}

/// Global estimator quantities for one eigenpair.
#[derive(Debug, Clone, Serialize)]
pub struct PairEstimates {
    /// Discrete eigenvalue (unshifted).
    pub lambda_n: f64,
    /// Per-element terms.
    pub elements: Vec<ElementEstimates>,
    /// Upper estimator `η = (Σ_κ[η_R+η_F+η_J]²)^½`.
    pub eta: f64,
    /// Global lower estimator `ξ` from
    /// `ξ² = Σ_κ[η_R+η_F+η_J]² / (3 max_κ(c_R² + b²_{ω(κ)}(d^u)² + c_J²))`.
    pub xi: f64,
    /// `hot^ub` (needs a reference).
    pub hot_ub: Option<f64>,
    /// `hot^lb = (Σ_κ (hot_κ^lb)²)^½` (needs a reference).
    pub hot_lb: Option<f64>,
    /// The `ξ` denominator vanished and `ξ` was set to zero.
    pub xi_denominator_zero: bool,
}

/// Estimator bundle across eigenpairs, exportable as CSV (one row per
/// pair/element) and JSON (nested).
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorBundle {
    pub pairs: Vec<PairEstimates>,
}

impl EstimatorBundle {
    /// One CSV row per (pair, element) with every local quantity; optional
    /// columns are empty when no reference was supplied.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "pair,element,eta_r,eta_f,eta_j,c_r,c_f,c_j,xi,r_norm,g_half_r_norm,g_r_norm,\
             grad_bubble_defect,b_patch_sq,hot_lb,d_u_true,zero_residual\n",
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for (i, pair) in self.pairs.iter().enumerate() {
            for (e, el) in pair.elements.iter().enumerate() {
                out.push_str(&format!(
                    "{i},{e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},\
                     {:.12e},{:.12e},{:.12e},{:.12e},{},{},{}\n",
                    el.eta_r,
                    el.eta_f,
                    el.eta_j,
                    el.c_r,
                    el.c_f,
                    el.c_j,
                    el.xi,
                    el.r_norm,
                    el.g_half_r_norm,
                    el.g_r_norm,
                    el.grad_bubble_defect,
                    el.b_patch_sq,
                    opt(el.hot_lb),
                    opt(el.d_u_true),
                    el.zero_residual,
                ));
            }
        }
        out
    }

    /// Nested JSON export.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

/// Compute the full estimator bundle for every pair in `sol`.
///
/// `bubble_modes` sets the sine resolution per axis (the element LGL order
/// is the conventional choice). When `reference` is given (aligned pairs,
/// at least as many as `sol` holds), the high-order terms and the exact
/// `d_κ^u` diagnostics are filled in; they are `None` otherwise.
#[allow(clippy::too_many_arguments)]
pub fn estimate(
    partition: &Partition,
    quad: &QuadGrid,
    basis: &BasisSet,
    sol: &EigenSolution,
    table: &ConstantsTable,
    spec: &PotentialSpec,
    vgrid: &PotentialOnGrid,
    bubble_modes: usize,
    reference: Option<&[AlignedPair]>,
) -> Result<EstimatorBundle> {
    let ne = partition.num_elements();
    let npairs = sol.eigenvalues.len();
    if let Some(refs) = reference {
        if refs.len() < npairs {
            return Err(invalid!(
                "reference holds {} pairs but {npairs} are being estimated",
                refs.len()
            ));
        }
    }
    let solver = BubbleSolver::new(partition, bubble_modes)?;
    let mut pairs = Vec::with_capacity(npairs);
    for k in 0..npairs {
        let lambda_n = sol.eigenvalues[k];
        let u_n = &sol.fields[k];
        let col: Vec<f64> = sol.coefficients.column(k).iter().copied().collect();
        let resid = residual_field(partition, quad, u_n, lambda_n, vgrid)?;
        let (etas, eta) = eta_terms(partition, quad, u_n, &resid, table)?;

        let rpair = reference.map(|refs| refs[k]);
        let err = match rpair {
            Some(rp) => {
                Some(GridFunction::linear_combination(&[(1.0, rp.field), (-1.0, u_n)])?)
            }
            None => None,
        };

        let mut elements = Vec::with_capacity(ne);
        let mut denom_max = 0.0_f64;
        for e in 0..ne {
            let lc = &table.elems[e];
            let interp = basis.elems[e].rep.interpolant_for(basis.elem_coefs(e, &col))?;
            let grad_defect = bubble_defect(partition, spec, &solver, e, &interp, lambda_n)?;

            let g = bubble_values(partition.element(e), quad.elem_nodes(e));
            let rv = resid.values(e);
            let w = quad.elem_weights(e);
            let mut g_half_sq = 0.0;
            let mut g_sq = 0.0;
            for i in 0..w.len() {
                g_half_sq += w[i] * g[i] * rv[i] * rv[i];
                g_sq += w[i] * g[i] * g[i] * rv[i] * rv[i];
            }
            let r_norm = l2_norm_elem(quad, &resid, e);
            let g_half_r_norm = g_half_sq.max(0.0).sqrt();
            let g_r_norm = g_sq.max(0.0).sqrt();
            let zero_residual = g_half_sq == 0.0;
            let c_r = if zero_residual { 0.0 } else { lc.a * r_norm * grad_defect / g_half_sq };

            let patch = partition.patch(e);
            let d_max =
                patch.iter().map(|&ep| table.elems[ep].d_u_surrogate).fold(0.0, f64::max);
            let c_f = lc.b * (patch.len() as f64 / 2.0).sqrt() * d_max;
            let c_j = (2.0 / lc.gamma).sqrt() * (lc.b * lc.gamma_hat + 0.5 * lc.c);

            let [eta_r, eta_f, eta_j] = etas[e];
            let csum = c_r + c_f + c_j;
            let xi = if csum == 0.0 { 0.0 } else { (eta_r + eta_f + eta_j) / csum };

            let (hot_lb, du) = match (&err, rpair) {
                (Some(err), Some(rp)) => {
                    let uv = rp.field.values(e);
                    let un = u_n.values(e);
                    let mut mis_sq = 0.0;
                    for i in 0..w.len() {
                        let m = lambda_n * un[i] - rp.lambda * uv[i];
                        mis_sq += w[i] * m * m;
                    }
                    let hot = if grad_defect == 0.0 {
                        0.0
                    } else {
                        mis_sq.max(0.0).sqrt() * g_r_norm / grad_defect
                    };
                    (Some(hot), d_u_true(partition, quad, err, e)?)
                }
                _ => (None, None),
            };

            let b_patch_sq = table.b_patch_sq(partition, e);
            denom_max =
                denom_max.max(c_r * c_r + b_patch_sq * lc.d_u_surrogate.powi(2) + c_j * c_j);
            elements.push(ElementEstimates {
                eta_r,
                eta_f,
                eta_j,
                c_r,
                c_f,
                c_j,
                xi,
                r_norm,
                g_half_r_norm,
                g_r_norm,
                grad_bubble_defect: grad_defect,
                b_patch_sq,
                hot_lb,
                d_u_true: du,
                zero_residual,
            });
        }

        let numer: f64 = etas.iter().map(|t| (t[0] + t[1] + t[2]).powi(2)).sum();
        let xi_denominator_zero = denom_max == 0.0;
        let xi = if xi_denominator_zero { 0.0 } else { (numer / (3.0 * denom_max)).sqrt() };

        let (hub, hlb) = match (&err, rpair) {
            (Some(err), Some(rp)) => {
                let energy_err = energy_norm(partition, quad, err, table, vgrid)?;
                let l2_sq = l2_norm_domain(quad, err).powi(2);
                let hub = hot_ub(
                    rp.lambda - vgrid.min,
                    lambda_n - vgrid.min,
                    l2_sq,
                    energy_err,
                );
                let hlb = elements
                    .iter()
                    .map(|el| el.hot_lb.unwrap_or(0.0).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (Some(hub), Some(hlb))
            }
            _ => (None, None),
        };

        pairs.push(PairEstimates {
            lambda_n,
            elements,
            eta,
            xi,
            hot_ub: hub,
            hot_lb: hlb,
            xi_denominator_zero,
        });
    }
    Ok(EstimatorBundle { pairs })
}

/// Eigenvalue error bounds derived from one pair's estimators.
#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueBounds {
    /// Headline numerical upper bound `η²` (the `C₁ = 1` convention).
    pub upper_numerical: f64,
    /// Headline numerical lower bound `ξ²` (the `C₂ = 1` convention).
    pub lower_numerical: f64,
    /// Left-hand side `½ξ²` of the theorem-form lower bound
    /// `½ξ² ≤ |λ_N − λ| + λ̃‖u−u_N‖²_Ω + ½(hot^lb)²`.
    pub lower_theorem_lhs: f64,
    /// Theorem-form upper bound
    /// `max_κ(1 + d^u_κ|1+θ|/(8γ_κ)^½)·(η + hot^ub)² + λ̃‖u−u_N‖²_Ω`
    /// (needs a reference for the last term).
    pub upper_theorem: Option<f64>,
    /// The proof-form prefactor `max_κ(1 + d^u_κ|1+θ|/(8γ_κ)^½)`.
    pub upper_factor_proof: f64,
    /// A second, more conservative prefactor variant
    /// `max_κ(1 + d^u_κ|1+θ|/(2γ_κ^½))`; both variants are reported so the
    /// sharper one can be checked against the safer one.
    pub upper_factor_statement: f64,
}

/// Assemble eigenvalue bounds from a pair's global estimators. The optional
/// reference terms are `(λ̃ = λ − V_m, ‖u − u_N‖²_Ω)`; without them only the
/// reference-free numerical bounds are filled in.
pub fn eigenvalue_bounds(
    pair: &PairEstimates,
    table: &ConstantsTable,
    reference_terms: Option<(f64, f64)>,
) -> EigenvalueBounds {
    let tf = (1.0 + table.theta).abs();
    let factor = |den: &dyn Fn(f64) -> f64| {
        table
            .elems
            .iter()
            .map(|lc| 1.0 + lc.d_u_surrogate * tf / den(lc.gamma))
            .fold(1.0, f64::max)
    };
    let upper_factor_proof = factor(&|g: f64| (8.0 * g).sqrt());
    let upper_factor_statement = factor(&|g: f64| 2.0 * g.sqrt());
    let upper_theorem = reference_terms.map(|(lambda_sh, l2_err_sq)| {
        upper_factor_proof * (pair.eta + pair.hot_ub.unwrap_or(0.0)).powi(2)
            + lambda_sh * l2_err_sq
    });
    EigenvalueBounds {
        upper_numerical: pair.eta * pair.eta,
        lower_numerical: pair.xi * pair.xi,
        lower_theorem_lhs: 0.5 * pair.xi * pair.xi,
        upper_theorem,
        upper_factor_proof,
        upper_factor_statement,
    }
}

/// Evaluate both sides of the error representation equation
///
/// ```text
/// ⦀u−u_N⦀ = Σ_κ [ (R, ψ)_κ − ½(⟦∇u_N⟧, ψ)_{∂κ} − ({γ}⟦u_N⟧, ψ n_κ)_{∂κ}
///                 − ½(⟦u_N⟧, (∇φ + θ∇φ_N)·n_κ)_{∂κ} ] + hot^ub,
/// ```
///
/// with `φ = (u−u_N)/⦀u−u_N⦀`, `φ_N = Π_N^κ φ`, `ψ = φ − φ_N`, and the exact
/// `hot^ub = (λ̃u − λ̃_N u_N, φ)_Ω`, and return `|RHS − ⦀u−u_N⦀|`. A
/// correctness self-test of every convention in the estimator chain; `u`
/// must be aligned with `u_N`. Returns `0` when the error norm vanishes.
#[allow(clippy::too_many_arguments)]
pub fn error_representation_check(
    partition: &Partition,
    quad: &QuadGrid,
    basis: &BasisSet,
    table: &ConstantsTable,
    vgrid: &PotentialOnGrid,
    lambda_n: f64,
    u_n: &GridFunction,
    lambda: f64,
    u: &GridFunction,
    theta: f64,
) -> Result<f64> {
    let (rhs, en) = representation_rhs(
        partition, quad, basis, table, vgrid, lambda_n, u_n, lambda, u, theta, 1.0,
    )?;
    Ok((rhs - en).abs())
}

/// The representation right-hand side and the energy error, with the
/// penalty-average term scaled by `gamma_scale` (1 for the true identity;
/// other values support sensitivity checks).
#[allow(clippy::too_many_arguments)]
fn representation_rhs(
    partition: &Partition,
    quad: &QuadGrid,
    basis: &BasisSet,
    table: &ConstantsTable,
    vgrid: &PotentialOnGrid,
    lambda_n: f64,
    u_n: &GridFunction,
    lambda: f64,
    u: &GridFunction,
    theta: f64,
    gamma_scale: f64,
) -> Result<(f64, f64)> {
    let err = GridFunction::linear_combination(&[(1.0, u), (-1.0, u_n)])?;
    let en = energy_norm(partition, quad, &err, table, vgrid)?;
    if en == 0.0 {
        return Ok((0.0, 0.0));
    }
    let phi = GridFunction::linear_combination(&[(1.0 / en, &err)])?;
    let resid = residual_field(partition, quad, u_n, lambda_n, vgrid)?;
    let dim = partition.dim();
    let mut rhs = 0.0;
    for e in 0..partition.num_elements() {
        let eb = &basis.elems[e];
        let coefs = project_n(eb, quad, e, phi.values(e), phi.gradients(e)?);
        let cs = coefs.as_slice();
        let phin = eb.combine_values(cs);

        let w = quad.elem_weights(e);
        let rv = resid.values(e);
        let pv = phi.values(e);
        for i in 0..w.len() {
            rhs += w[i] * rv[i] * (pv[i] - phin[i]);
        }

        for (lf, &fid) in partition.elem_faces(e).iter().enumerate() {
            let side = partition.face_side(fid, e)?;
            let face = partition.face(fid);
            let sgn = partition.outward_sign(fid, e)?;
            let wf = quad.face_weights(fid);
            let tr_un = u_n.trace(fid)?;
            let tr_phi = phi.trace(fid)?;
            let jng = jump_normal_gradient(partition, u_n, fid)?;
            let phin_face = eb.combine_face_values(lf, cs);
            let phin_fgrad = eb.combine_face_gradients(lf, cs);
            let gbar = gamma_scale
                * 0.5
                * (table.elems[face.elems[0]].gamma + table.elems[face.elems[1]].gamma);
            for k in 0..wf.len() {
                let jump_own = tr_un.values[side][k] - tr_un.values[1 - side][k];
                let psi = tr_phi.values[side][k] - phin_face[k];
                let dn_phi = sgn * tr_phi.gradients[side][k * dim + face.axis];
                let dn_phin = sgn * phin_fgrad[k * dim + face.axis];
                rhs += wf[k]
                    * (-0.5 * jng[k] * psi - gbar * jump_own * psi
                        - 0.5 * jump_own * (dn_phi + theta * dn_phin));
            }
        }
    }
    // Exact high-order term (λ̃u − λ̃_N u_N, φ)_Ω with shifted eigenvalues.
    let scaled = GridFunction::linear_combination(&[
        (lambda - vgrid.min, u),
        (-(lambda_n - vgrid.min), u_n),
    ])?;
    rhs += inner_domain(quad, &scaled, &phi);
    Ok((rhs, en))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::generate_alb;
    use crate::constants::compute_constants;
    use crate::dg::{assemble, energy_norm_sq_elem, solve_eig};
    use crate::mesh::{build_partition, build_quadrature};
    use crate::spectral::{sample_on_quad, solve_reference, GaussianBump, PotentialSpec};
    use approx::assert_abs_diff_eq;

    fn triple_well() -> PotentialSpec {
        let l = 2.0 * PI;
        let c = 0.9 * l / 3.0;
        PotentialSpec::new(
            vec![l],
            vec![
                GaussianBump { center: vec![c * 0.15], width: 0.3, magnitude: -8.0 },
                GaussianBump { center: vec![c * 1.15], width: 0.3, magnitude: -12.0 },
                GaussianBump { center: vec![c * 2.15], width: 0.3, magnitude: -10.0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn bubble_peaks_at_center_and_vanishes_on_boundary() {
        let p = build_partition(&[2.0 * PI, 2.0], &[3, 3]).unwrap();
        let elem = p.element(4);
        let center: Vec<f64> =
            elem.lo.iter().zip(&elem.widths).map(|(lo, h)| lo + 0.5 * h).collect();
        let corner = elem.lo.clone();
        let edge = vec![elem.lo[0] + 0.3 * elem.widths[0], elem.lo[1]];
        let pts: Vec<f64> = [center, corner, edge].concat();
        let g = bubble_values(elem, &pts);
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[2], 0.0, epsilon = 1e-14);
        assert!(g.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sine_solver_single_mode_oracle() {
        // rhs = sin(πx/h) → φ = (h/π)² sin(πx/h): one diagonal entry.
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let solver = BubbleSolver::new(&p, 17).unwrap();
        let e = 2;
        let elem = p.element(e);
        let h = elem.widths[0];
        let pts = solver.nodes(&p, e);
        let rhs: Vec<f64> = pts.iter().map(|x| (PI * (x - elem.lo[0]) / h).sin()).collect();
        let coeffs = solver.analyze(&rhs).unwrap();
        assert_abs_diff_eq!(coeffs[0], 1.0, epsilon = 1e-12);
        assert!(coeffs[1..].iter().all(|c| c.abs() < 1e-12));
        let phi = solver.solve(&coeffs);
        assert_abs_diff_eq!(phi[0], (h / PI).powi(2), epsilon = 1e-12);
        // ‖∇φ‖² = φ̂₁²·(π/h)²·h/2 for the single mode.
        let grad_sq = solver.grad_norm_sq(&phi);
        assert_abs_diff_eq!(
            grad_sq,
            (h / PI).powi(4) * (PI / h).powi(2) * h / 2.0,
            epsilon = 1e-12
        );

        // 2D mixed mode (1,2): φ̂ = 1/ω with ω = (π/h₀)² + (2π/h₁)².
        let p2 = build_partition(&[2.0 * PI, 2.0], &[3, 3]).unwrap();
        let solver2 = BubbleSolver::new(&p2, 9).unwrap();
        let elem2 = p2.element(1);
        let (h0, h1) = (elem2.widths[0], elem2.widths[1]);
        let pts2 = solver2.nodes(&p2, 1);
        let rhs2: Vec<f64> = pts2
            .chunks(2)
            .map(|x| {
                (PI * (x[0] - elem2.lo[0]) / h0).sin()
                    * (2.0 * PI * (x[1] - elem2.lo[1]) / h1).sin()
            })
            .collect();
        let phi2 = solver2.solve(&solver2.analyze(&rhs2).unwrap());
        let omega = (PI / h0).powi(2) + (2.0 * PI / h1).powi(2);
        // Mode (1,2) sits at flattened index 0·9 + 1 (last axis fastest).
        assert_abs_diff_eq!(phi2[1], 1.0 / omega, epsilon = 1e-12);
        let rest: f64 =
            phi2.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, c)| c.abs()).sum();
        assert!(rest < 1e-11, "spurious modes: {rest:.3e}");
    }

    #[test]
    fn sine_solver_fd_oracle() {
        // Smooth rhs from low sine modes; the solved φ must satisfy
        // −Δφ = rhs pointwise, checked with a 4th-order finite-difference
        // Laplacian — machinery-independent of the spectral solve.
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let solver = BubbleSolver::new(&p, 17).unwrap();
        let e = 4;
        let elem = p.element(e);
        let h = elem.widths[0];
        let pts = solver.nodes(&p, e);
        let rhs_of = |x: f64| {
            let t = PI * (x - elem.lo[0]) / h;
            0.7 * t.sin() - 0.4 * (2.0 * t).sin() + 0.2 * (3.0 * t).sin()
        };
        let rhs: Vec<f64> = pts.iter().map(|&x| rhs_of(x)).collect();
        let phi = solver.solve(&solver.analyze(&rhs).unwrap());
        let d = 1e-3;
        for frac in [0.23, 0.5, 0.77] {
            let x = elem.lo[0] + frac * h;
            let stencil = [x - 2.0 * d, x - d, x, x + d, x + 2.0 * d];
            let v = solver.eval_values(&p, e, &phi, &stencil);
            let lap =
                (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * d * d);
            assert!(
                (-lap - rhs_of(x)).abs() <= 1e-8,
                "FD residual {:.3e} at x = {x:.4}",
                (-lap - rhs_of(x)).abs()
            );
        }
    }

    #[test]
    fn residual_vanishes_for_free_ground_state() {
        let spec = PotentialSpec::free(vec![2.0 * PI]).unwrap();
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let q = build_quadrature(&p, 17).unwrap();
        let basis = generate_alb(&p, &q, &spec, 6, 65, 1e-8).unwrap();
        let table = compute_constants(&p, &q, &basis, 1.0, None).unwrap();
        let vgrid = sample_on_quad(&spec, &p, &q).unwrap();
        let op = assemble(&p, &q, &basis, &vgrid, &table, 1.0).unwrap();
        let sol = solve_eig(&p, &q, &basis, &op, 2).unwrap();
        // Ground state is the constant with λ₁ = 0: R ≡ 0.
        let r = residual_field(&p, &q, &sol.fields[0], sol.eigenvalues[0], &vgrid).unwrap();
        for e in 0..p.num_elements() {
            for v in r.values(e) {
                assert!(v.abs() < 1e-8, "free ground-state residual {v:.3e}");
            }
        }
        // Missing Laplacians are an error, not a panic.
        let bare = GridFunction::new(
            &p,
            &q,
            (0..p.num_elements()).map(|e| sol.fields[0].values(e).to_vec()).collect(),
            None,
            None,
            None,
        )
        .unwrap();
        assert!(residual_field(&p, &q, &bare, 0.0, &vgrid).is_err());
    }

    #[test]
    fn eta_vanishes_for_globally_smooth_field() {
        // cos(7x) lies in the N = 7 free basis and is globally C¹-periodic:
        // the flux and jump estimator terms degenerate to round-off and the
        // global η reduces to the residual column.
        let spec = PotentialSpec::free(vec![2.0 * PI]).unwrap();
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let q = build_quadrature(&p, 17).unwrap();
        let basis = generate_alb(&p, &q, &spec, 7, 65, 1e-8).unwrap();
        let table = compute_constants(&p, &q, &basis, 1.0, None).unwrap();
        let vgrid = sample_on_quad(&spec, &p, &q).unwrap();
        let mut coefs = vec![0.0; basis.total()];
        for e in 0..p.num_elements() {
            let nodes = q.elem_nodes(e);
            let w = q.elem_weights(e);
            let eb = &basis.elems[e];
            for j in 0..eb.count {
                coefs[basis.offset(e) + j] = (0..w.len())
                    .map(|k| w[k] * (7.0 * nodes[k]).cos() * eb.values[j][k])
                    .sum();
            }
        }
        let field = basis.field_from_coeffs(&p, &q, &coefs).unwrap();
        let resid = residual_field(&p, &q, &field, 49.0, &vgrid).unwrap();
        let (terms, eta) = eta_terms(&p, &q, &field, &resid, &table).unwrap();
        let mut r_only = 0.0;
        for t in &terms {
            assert!(t[1] < 1e-9, "η_F = {:.3e} for a C¹ field", t[1]);
            assert!(t[2] < 1e-9, "η_J = {:.3e} for a C¹ field", t[2]);
            r_only += t[0] * t[0];
        }
        assert_abs_diff_eq!(eta, r_only.sqrt(), epsilon = 1e-8);

        // A sign flip on one element produces jump terms exactly on that
        // element and its neighbors.
        let flip = GridFunction::sample_piecewise(
            &p,
            &q,
            &|e, _x| if e == 3 { -1.0 } else { 1.0 },
            &|_, x| vec![0.0; x.len()],
            &|_, _| 0.0,
        );
        let zero = residual_field(&p, &q, &flip, 0.0, &vgrid).unwrap();
        let (jt, _) = eta_terms(&p, &q, &flip, &zero, &table).unwrap();
        for (e, t) in jt.iter().enumerate() {
            let touches = (2..=4).contains(&e);
            assert_eq!(t[2] > 1e-3, touches, "element {e}: η_J = {:.3e}", t[2]);
        }
    }

    #[test]
    fn lower_constant_formulas_wire_through() {
        let spec = triple_well();
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let q = build_quadrature(&p, 17).unwrap();
        let basis = generate_alb(&p, &q, &spec, 4, 65, 1e-3).unwrap();
        let table = compute_constants(&p, &q, &basis, 1.0, None).unwrap();
        let vgrid = sample_on_quad(&spec, &p, &q).unwrap();
        let op = assemble(&p, &q, &basis, &vgrid, &table, 1.0).unwrap();
        let sol = solve_eig(&p, &q, &basis, &op, 2).unwrap();
        let bundle =
            estimate(&p, &q, &basis, &sol, &table, &spec, &vgrid, q.order(), None).unwrap();
        for (e, el) in bundle.pairs[0].elements.iter().enumerate() {
            let lc = &table.elems[e];
            // c_J by direct substitution.
            let c_j = (2.0 / lc.gamma).sqrt() * (lc.b * lc.gamma_hat + 0.5 * lc.c);
            assert_abs_diff_eq!(el.c_j, c_j, epsilon = 1e-13);
            // 1D patch has three elements: c_F = b √(3/2) max d^u.
            let dmax = p
                .patch(e)
                .iter()
                .map(|&ep| table.elems[ep].d_u_surrogate)
                .fold(0.0, f64::max);
            assert_abs_diff_eq!(el.c_f, lc.b * 1.5_f64.sqrt() * dmax, epsilon = 1e-13);
            assert!(el.hot_lb.is_none() && el.d_u_true.is_none());
        }
        // Without a reference the global hot terms stay empty.
        assert!(bundle.pairs[0].hot_ub.is_none());
        // CSV/JSON exports stay in sync with the element count.
        let csv = bundle.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * p.num_elements());
        assert!(bundle.to_json().unwrap().contains("\"eta\""));
    }

    #[test]
    fn free_constant_takes_degenerate_path() {
        // The exactly represented constant: R ≡ 0 everywhere, all jumps
        // vanish, everything flags or collapses to zero.
        let spec = PotentialSpec::free(vec![2.0 * PI]).unwrap();
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let q = build_quadrature(&p, 17).unwrap();
        let basis = generate_alb(&p, &q, &spec, 6, 65, 1e-8).unwrap();
        let table = compute_constants(&p, &q, &basis, 1.0, None).unwrap();
        let vgrid = sample_on_quad(&spec, &p, &q).unwrap();
        let op = assemble(&p, &q, &basis, &vgrid, &table, 1.0).unwrap();
        let sol = solve_eig(&p, &q, &basis, &op, 1).unwrap();
        let bundle =
            estimate(&p, &q, &basis, &sol, &table, &spec, &vgrid, q.order(), None).unwrap();
        let pair = &bundle.pairs[0];
        assert!(pair.eta < 1e-7, "η = {:.3e} for an exact eigenpair", pair.eta);
        for el in &pair.elements {
            assert!(el.zero_residual || el.r_norm < 1e-7);
            if el.zero_residual {
                assert_eq!(el.c_r, 0.0);
            }
        }
        let bounds = eigenvalue_bounds(pair, &table, None);
        assert!(bounds.upper_numerical < 1e-13);
        assert!(bounds.lower_numerical <= bounds.upper_numerical);
        assert!(bounds.upper_theorem.is_none());
    }

    /// Production-config estimates: the committed triple-well setup at the
    /// bandwidth-resolving quadrature order, against the spectral reference.
    #[test]
    fn production_config_bounds_and_effectivities() {
        let spec = triple_well();
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let q = build_quadrature(&p, 129).unwrap();
        let basis = generate_alb(&p, &q, &spec, 6, 257, 1e-3).unwrap();
        let table = compute_constants(&p, &q, &basis, 1.0, Some(16)).unwrap();
        let vgrid = sample_on_quad(&spec, &p, &q).unwrap();
        let op = assemble(&p, &q, &basis, &vgrid, &table, 1.0).unwrap();
        let m = 3;
        let sol = solve_eig(&p, &q, &basis, &op, m).unwrap();
        let reference = solve_reference(&spec, &p, &q, 513, m).unwrap();

        // Sign-align the reference against the discrete pairs.
        let mut aligned_fields = Vec::with_capacity(m);
        for k in 0..m {
            let s = if inner_domain(&q, &reference.fields[k], &sol.fields[k]) < 0.0 {
                -1.0
            } else {
                1.0
            };
            aligned_fields
                .push(GridFunction::linear_combination(&[(s, &reference.fields[k])]).unwrap());
        }
        let aligned: Vec<AlignedPair> = (0..m)
            .map(|k| AlignedPair { lambda: reference.eigenvalues[k], field: &aligned_fields[k] })
            .collect();

        let bundle = estimate(
            &p,
            &q,
            &basis,
            &sol,
            &table,
            &spec,
            &vgrid,
            q.order(),
            Some(&aligned),
        )
        .unwrap();

        for k in 0..m {
            let pair = &bundle.pairs[k];
            let err = GridFunction::linear_combination(&[
                (1.0, &aligned_fields[k]),
                (-1.0, &sol.fields[k]),
            ])
            .unwrap();
            let en = energy_norm(&p, &q, &err, &table, &vgrid).unwrap();
            let hub = pair.hot_ub.unwrap();
            let hlb = pair.hot_lb.unwrap();

            // Upper and lower bound inequalities, as stated.
            assert!(
                en <= pair.eta + hub,
                "pair {k}: ⦀e⦀ = {en:.6e} exceeds η + hot^ub = {:.6e}",
                pair.eta + hub
            );
            assert!(
                pair.xi * pair.xi <= en * en + hlb * hlb,
                "pair {k}: ξ² = {:.6e} exceeds ⦀e⦀² + (hot^lb)² = {:.6e}",
                pair.xi * pair.xi,
                en * en + hlb * hlb
            );

            // Effectivity windows for the committed 1D setup.
            let c_eta = pair.eta / en;
            let c_xi = pair.xi / en;
            assert!((1.0..=6.0).contains(&c_eta), "pair {k}: C_η = {c_eta:.3}");
            assert!((0.1..1.0).contains(&c_xi), "pair {k}: C_ξ = {c_xi:.3}");

            // High-order terms are genuinely subdominant here.
            assert!(hub < 0.2 * pair.eta, "pair {k}: hot^ub = {hub:.3e} vs η = {:.3e}", pair.eta);
            assert!(hlb < 0.2 * pair.xi, "pair {k}: hot^lb = {hlb:.3e} vs ξ = {:.3e}", pair.xi);

            // Numerical eigenvalue bounds with the C₁ = C₂ = 1 convention,
            // and the theorem-form upper bound.
            let dl = (sol.eigenvalues[k] - reference.eigenvalues[k]).abs();
            let l2_sq = l2_norm_domain(&q, &err).powi(2);
            let bounds = eigenvalue_bounds(
                pair,
                &table,
                Some((reference.eigenvalues[k] - vgrid.min, l2_sq)),
            );
            assert!(
                bounds.upper_numerical >= dl,
                "pair {k}: η² = {:.6e} < |Δλ| = {dl:.6e}",
                bounds.upper_numerical
            );
            assert!(
                bounds.lower_numerical <= dl,
                "pair {k}: ξ² = {:.6e} > |Δλ| = {dl:.6e}",
                bounds.lower_numerical
            );
            assert!(bounds.upper_theorem.unwrap() >= dl);
            assert!(bounds.upper_factor_proof >= 1.0);
            assert!(bounds.upper_factor_statement >= 1.0);
            assert!(
                bounds.lower_theorem_lhs
                    <= dl + (reference.eigenvalues[k] - vgrid.min) * l2_sq
                        + 0.5 * hlb * hlb
                        + 1e-12
            );

            // Local lower bounds with the exact d^u (diagnostics mode).
            for (e, el) in pair.elements.iter().enumerate() {
                let lc = &table.elems[e];
                let en_k = energy_norm_sq_elem(&p, &q, &err, &table, &vgrid, e)
                    .unwrap()
                    .max(0.0)
                    .sqrt();
                let slack = 1e-12 * en_k.max(1.0);
                assert!(
                    el.eta_j / el.c_j <= en_k + slack,
                    "pair {k} elem {e}: η_J/c_J = {:.6e} vs ⦀e⦀_κ = {en_k:.6e}",
                    el.eta_j / el.c_j
                );
                if el.c_r > 0.0 {
                    let hot_k = el.hot_lb.unwrap();
                    assert!(
                        el.eta_r / el.c_r <= en_k + hot_k + slack,
                        "pair {k} elem {e}: η_R/c_R = {:.6e}",
                        el.eta_r / el.c_r
                    );
                }
                let du_max = p
                    .patch(e)
                    .iter()
                    .map(|&ep| {
                        d_u_true(&p, &q, &err, ep).unwrap().unwrap_or(0.0)
                    })
                    .fold(0.0, f64::max);
                if du_max > 0.0 {
                    let c_f_true = lc.b * (p.patch(e).len() as f64 / 2.0).sqrt() * du_max;
                    let en_patch =
                        patch_energy_norm_sq(&p, &q, &err, &table, e).unwrap().max(0.0).sqrt();
                    assert!(
                        el.eta_f / c_f_true <= en_patch + slack,
                        "pair {k} elem {e}: η_F/c_F(true) = {:.6e} vs ⦀e⦀_ω = {en_patch:.6e}",
                        el.eta_f / c_f_true
                    );
                }

                // Mediant inequality: the robust ξ_κ never beats the best
                // single ratio.
                let mut best = 0.0_f64;
                if el.c_r > 0.0 {
                    best = best.max(el.eta_r / el.c_r);
                }
                best = best.max(el.eta_f / el.c_f).max(el.eta_j / el.c_j);
                assert!(el.xi <= best + 1e-13, "pair {k} elem {e}: ξ_κ > max ratio");
                for v in [
                    el.eta_r, el.eta_f, el.eta_j, el.c_r, el.c_f, el.c_j, el.xi, el.r_norm,
                    el.g_half_r_norm, el.g_r_norm, el.grad_bubble_defect, el.b_patch_sq,
                ] {
                    assert!(v.is_finite() && v >= 0.0, "negative or non-finite quantity");
                }
            }
            assert!(!pair.xi_denominator_zero);
        }

        // Error representation: both sides agree to quadrature accuracy.
        let en0 = {
            let err = GridFunction::linear_combination(&[
                (1.0, &aligned_fields[0]),
                (-1.0, &sol.fields[0]),
            ])
            .unwrap();
            energy_norm(&p, &q, &err, &table, &vgrid).unwrap()
        };
        let defect = error_representation_check(
            &p,
            &q,
            &basis,
            &table,
            &vgrid,
            sol.eigenvalues[0],
            &sol.fields[0],
            reference.eigenvalues[0],
            &aligned_fields[0],
            1.0,
        )
        .unwrap();
        assert!(
            defect <= 1e-6 * en0,
            "representation defect {defect:.3e} vs ⦀e⦀ = {en0:.3e}"
        );

        // Sensitivity: scaling the penalty-average term by 1.1 moves the
        // right-hand side by one tenth of that term's magnitude.
        let (rhs1, en) = representation_rhs(
            &p, &q, &basis, &table, &vgrid, sol.eigenvalues[0], &sol.fields[0],
            reference.eigenvalues[0], &aligned_fields[0], 1.0, 1.0,
        )
        .unwrap();
        let (rhs2, _) = representation_rhs(
            &p, &q, &basis, &table, &vgrid, sol.eigenvalues[0], &sol.fields[0],
            reference.eigenvalues[0], &aligned_fields[0], 1.0, 2.0,
        )
        .unwrap();
        let (rhs11, _) = representation_rhs(
            &p, &q, &basis, &table, &vgrid, sol.eigenvalues[0], &sol.fields[0],
            reference.eigenvalues[0], &aligned_fields[0], 1.0, 1.1,
        )
        .unwrap();
        let gamma_term = rhs2 - rhs1;
        assert!(gamma_term.abs() > 1e-12, "penalty term unexpectedly absent");
        let grown = (rhs11 - en).abs();
        assert!(
            grown >= 0.05 * gamma_term.abs() && grown <= 0.2 * gamma_term.abs(),
            "perturbed defect {grown:.3e} vs term magnitude {:.3e}",
            gamma_term.abs()
        );
    }
}

