//! Local scaling constants `d_κ`, `a_κ`, `b_κ` and the penalties derived
//! from them.
//!
//! Three constants control every bound in the library, all defined as
//! suprema of norm ratios against `⟨⟨v⟩⟩² = (1/|κ|)(∫v)² + ‖∇v‖²_κ`:
//!
//! * `d_κ = sup ‖∇v·n‖_{∂κ} / ⟨⟨v⟩⟩` **over the local basis span** — a small
//!   generalized eigenvalue problem on the `N_κ × N_κ` Gram matrices;
//! * `a_κ = sup ‖v‖_κ / ⟨⟨v⟩⟩` and `b_κ = sup ‖v‖_{∂κ} / ⟨⟨v⟩⟩` **over the
//!   `⟨⟨·,·⟩⟩`-orthogonal complement of the span** inside a rich local
//!   *fine space* of tensor Lagrange polynomials on the element's LGL grid.
//!
//! The complement problems are solved by a symmetric transform: with
//! `S` the `⟨⟨·,·⟩⟩` Gram of the fine space, pass to `y = S^{1/2}x`
//! coordinates where `⟨⟨·,·⟩⟩` is the Euclidean product, project out the
//! embedded span, and take the largest eigenvalue of the deflated,
//! transformed mass (or boundary-mass) matrix. The deflation acts
//! symmetrically on the quadratic form, so the problem stays symmetric.
//!
//! From `d_κ` follow the penalty `γ_κ = ½(1+θ)² d_κ²` (the sharp coercivity
//! threshold, used with equality), the face-averaged `γ̂_κ`, and
//! `c_κ = d_κ^u-surrogate + d_κ|θ|` where the unknown `d_κ^u` is replaced by
//! `d_κ` itself.

use crate::basis::{BasisSet, ElementBasis};
use crate::linalg::{gen_sym_eigen, spd_sqrt_factors, sym_eigen_max};
use crate::mesh::lgl;
use crate::mesh::{Partition, QuadGrid};
use crate::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Target embedding defect of the local span into the fine space:
/// `max |EᵀSE − G|` where `E` interpolates the basis onto the fine grid and
/// `G` is the exact `⟨⟨·,·⟩⟩` Gram. The defect is recorded per element in
/// [`ConstantsTable::embed_defects`]; [`ConstantsTable::embed_ok`] compares
/// against this threshold. Spectral basis functions on an extended element
/// carry a high-frequency tail (the potential is discontinuous under
/// periodization of the extended element), so with a tight `drop_tol` the
/// defect can sit well above this target no matter the fine degree; raise
/// `drop_tol` to restore it.
pub const EMBED_TOL: f64 = 1e-8;

/// Values of the Lagrange cardinal functions of `nodes` at `pts`
/// (barycentric form; `out[(q, j)] = ℓ_j(pts[q])`).
fn lagrange_values(nodes: &[f64], pts: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let mut c = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                c[j] /= nodes[j] - nodes[k];
            }
        }
    }
    let scale = nodes[n - 1] - nodes[0];
    let mut out = DMatrix::zeros(pts.len(), n);
    for (q, &x) in pts.iter().enumerate() {
        if let Some(j) = nodes.iter().position(|&t| (x - t).abs() <= 1e-14 * scale) {
            out[(q, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..n).map(|j| c[j] / (x - nodes[j])).collect();
        let denom: f64 = terms.iter().sum();
        for j in 0..n {
            out[(q, j)] = terms[j] / denom;
        }
    }
    out
}

/// Kronecker product of a list of per-axis matrices, earlier axes slowest
/// (matching the mesh's row-major, last-dimension-fastest node ordering).
fn kron_all(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for m in mats {
        acc = acc.kronecker(m);
    }
    acc
}

/// A rich local discretization of `H¹(κ)`: tensor Lagrange polynomials of
/// degree `p` per axis on the element's LGL grid, with the quadratic forms
/// needed by the complement eigenproblems preassembled. The partition is
/// uniform, so one fine space serves every element (the matrices are
/// translation invariant); only the node positions shift per element.
#[derive(Debug, Clone)]
pub struct FineSpace {
    degree: usize,
    dim: usize,
    /// Per-axis node coordinates relative to the element's low corner.
    axis_nodes_ref: Vec<Vec<f64>>,
    mass: DMatrix<f64>,
    bdry: DMatrix<f64>,
    bdry_normal_grad: DMatrix<f64>,
    s_mat: DMatrix<f64>,
    s_half: DMatrix<f64>,
    m_tilde: DMatrix<f64>,
    b_tilde: DMatrix<f64>,
}

impl FineSpace {
    /// Polynomial degree per axis.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Total number of fine degrees of freedom (`(degree+1)^d`).
    pub fn dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// Per-axis fine node coordinates of element `e`.
    pub fn axis_nodes(&self, partition: &Partition, e: usize) -> Vec<Vec<f64>> {
        let elem = partition.element(e);
        (0..self.dim)
            .map(|a| self.axis_nodes_ref[a].iter().map(|&t| elem.lo[a] + t).collect())
            .collect()
    }

    /// The `(·,·)_κ` (mass) matrix.
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// The `(·,·)_{∂κ}` (boundary mass) matrix.
    pub fn bdry(&self) -> &DMatrix<f64> {
        &self.bdry
    }

    /// The `(∇·n, ∇·n)_{∂κ}` (boundary normal-gradient) matrix.
    pub fn bdry_normal_grad(&self) -> &DMatrix<f64> {
        &self.bdry_normal_grad
    }

    /// The `⟨⟨·,·⟩⟩` Gram matrix `S = K + (1/|κ|) w wᵀ`.
    pub fn s_mat(&self) -> &DMatrix<f64> {
        &self.s_mat
    }

    /// Symmetric square root `S^{1/2}`.
    pub fn s_half(&self) -> &DMatrix<f64> {
        &self.s_half
    }
}

/// Build the fine space for a (uniform) partition at polynomial degree
/// `degree` per axis.
pub fn build_fine_space(partition: &Partition, degree: usize) -> Result<FineSpace> {
    if degree < 1 {
        return Err(invalid!("fine space degree must be at least 1, got {degree}"));
    }
    let dim = partition.dim();
    let widths = partition.element(0).widths.clone();

    // Per-axis 1-D building blocks: nodal Lagrange basis at degree+1 LGL
    // points, integrated exactly with a degree+3 point rule.
    let n = degree + 1;
    let (tn, _) = lgl::lgl_rule(n)?;
    let (tq, wq) = lgl::lgl_rule(n + 2)?;
    let mut axis_nodes_ref = Vec::with_capacity(dim);
    let mut mass1 = Vec::with_capacity(dim);
    let mut stiff1 = Vec::with_capacity(dim);
    let mut integ1 = Vec::with_capacity(dim);
    let mut dmat1 = Vec::with_capacity(dim);
    for a in 0..dim {
        let h = widths[a];
        let (nodes, _) = lgl::map_rule(&tn, &vec![0.0; n], 0.0, h);
        let (qx, qw) = lgl::map_rule(&tq, &wq, 0.0, h);
        let p = lagrange_values(&nodes, &qx);
        let d = lgl::differentiation_matrix(&nodes);
        let pd = &p * &d;
        let w = DMatrix::from_diagonal(&DVector::from_vec(qw));
        mass1.push(p.transpose() * &w * &p);
        stiff1.push(pd.transpose() * &w * &pd);
        integ1.push(p.transpose() * w.diagonal());
        dmat1.push(d);
        axis_nodes_ref.push(nodes);
    }

    let volume: f64 = widths.iter().product();
    let mass = kron_all(&mass1);
    let dofs = mass.nrows();

    let mut stiff = DMatrix::zeros(dofs, dofs);
    let mut bdry = DMatrix::zeros(dofs, dofs);
    let mut bdry_ng = DMatrix::zeros(dofs, dofs);
    for a in 0..dim {
        let mut factors: Vec<DMatrix<f64>> = mass1.clone();
        factors[a] = stiff1[a].clone();
        stiff += kron_all(&factors);
        for side in 0..2 {
            let end = if side == 0 { 0 } else { n - 1 };
            // Face value form: nodal basis, so the endpoint trace picks one
            // coefficient.
            let mut face_val = DMatrix::zeros(n, n);
            face_val[(end, end)] = 1.0;
            let mut factors = mass1.clone();
            factors[a] = face_val;
            bdry += kron_all(&factors);
            // Face normal-gradient form: outer product of the endpoint row of
            // the differentiation matrix (the sign of the normal squares
            // away).
            let drow = dmat1[a].row(end);
            let face_grad = drow.transpose() * drow;
            let mut factors = mass1.clone();
            factors[a] = face_grad;
            bdry_ng += kron_all(&factors);
        }
    }

    let integ = {
        let mut acc = DVector::from_element(1, 1.0);
        for v in &integ1 {
            acc = acc.kronecker(v);
        }
        acc
    };
    let s_mat = &stiff + &integ * integ.transpose() / volume;

    let (s_half, s_inv_half) = spd_sqrt_factors(&s_mat, 1e-13)?;
    let m_tilde = symmetrize(&s_inv_half * &mass * &s_inv_half);
    let b_tilde = symmetrize(&s_inv_half * &bdry * &s_inv_half);

    Ok(FineSpace {
        degree,
        dim,
        axis_nodes_ref,
        mass,
        bdry,
        bdry_normal_grad: bdry_ng,
        s_mat,
        s_half,
        m_tilde,
        b_tilde,
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}

/// `d_κ` from precomputed quadratic forms: the square root of the largest
/// generalized eigenvalue of the boundary normal-gradient form against the
/// `⟨⟨·,·⟩⟩` Gram, together with the maximizing coefficient vector.
pub fn d_from_forms(
    boundary_form: &DMatrix<f64>,
    gram: &DMatrix<f64>,
) -> Result<(f64, DVector<f64>)> {
    let (values, vectors) = gen_sym_eigen(boundary_form, gram)?;
    let lam = *values.last().ok_or_else(|| Error::Numerical("empty pencil".into()))?;
    if !lam.is_finite() {
        return Err(Error::Numerical("degenerate Gram matrix in trace constant".into()));
    }
    let v = vectors.column(vectors.ncols() - 1).into_owned();
    Ok((lam.max(0.0).sqrt(), v))
}

/// The boundary normal-gradient Gram `(∇ψ_i·n, ∇ψ_j·n)_{∂κ}` of an element
/// basis.
pub fn normal_grad_form(
    partition: &Partition,
    quad: &QuadGrid,
    e: usize,
    basis: &ElementBasis,
) -> DMatrix<f64> {
    let dim = partition.dim();
    let nf = basis.count;
    let mut form = DMatrix::zeros(nf, nf);
    for (lf, &fid) in partition.elem_faces(e).iter().enumerate() {
        let axis = partition.face(fid).axis;
        let w = quad.face_weights(fid);
        for i in 0..nf {
            for j in i..nf {
                let mut acc = 0.0;
                for (k, &wk) in w.iter().enumerate() {
                    acc += wk
                        * basis.face_gradients[i][lf][k * dim + axis]
                        * basis.face_gradients[j][lf][k * dim + axis];
                }
                form[(i, j)] += acc;
                form[(j, i)] = form[(i, j)];
            }
        }
    }
    form
}

/// `d_κ` for element `e`: the trace inverse inequality constant of its local
/// basis span.
pub fn compute_d(
    partition: &Partition,
    quad: &QuadGrid,
    e: usize,
    basis: &ElementBasis,
) -> Result<f64> {
    let form = normal_grad_form(partition, quad, e, basis);
    d_from_forms(&form, &basis.gram_h1).map(|(d, _)| d)
}

/// Orthogonal projector (in `S^{1/2}` coordinates) onto the complement of
/// the embedded span. Errors when the complement is empty — the fine space
/// must be strictly richer than the span.
pub fn complement_projector(fine: &FineSpace, embed: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = fine.dofs();
    if embed.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "embedding has {} rows, fine space has {n} dofs",
            embed.nrows()
        )));
    }
    let y = &fine.s_half * embed;
    let qr = y.col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let rmax = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rank = r.diagonal().iter().filter(|v| v.abs() > 1e-12 * rmax).count();
    if rank >= n {
        return Err(Error::Numerical(
            "empty complement: fine space not richer than the local span (increase its degree)"
                .into(),
        ));
    }
    let qk = q.columns(0, rank);
    let mut proj = DMatrix::identity(n, n);
    proj -= &qk * qk.transpose();
    Ok(proj)
}

/// `(a_κ, b_κ)` from an explicit embedding matrix (fine nodal values of the
/// span's basis, one column per function).
pub fn ab_from_embedding(fine: &FineSpace, embed: &DMatrix<f64>) -> Result<(f64, f64)> {
    let proj = complement_projector(fine, embed)?;
    let a_sq = sym_eigen_max(&symmetrize(&proj * &fine.m_tilde * &proj))?;
    let b_sq = sym_eigen_max(&symmetrize(&proj * &fine.b_tilde * &proj))?;
    Ok((a_sq.max(0.0).sqrt(), b_sq.max(0.0).sqrt()))
}

/// Interpolate an element basis onto the fine grid (one column per
/// function).
pub fn embed_basis(
    fine: &FineSpace,
    partition: &Partition,
    e: usize,
    basis: &ElementBasis,
) -> DMatrix<f64> {
    let coords = fine.axis_nodes(partition, e);
    let vals = basis.rep.values_on_grid(&coords);
    DMatrix::from_fn(fine.dofs(), basis.count, |i, j| vals[j][i])
}

/// `(a_κ, b_κ)` for element `e`: complement norm-equivalence constants of
/// its local basis span inside the fine space.
pub fn compute_ab(
    fine: &FineSpace,
    partition: &Partition,
    e: usize,
    basis: &ElementBasis,
) -> Result<(f64, f64)> {
    ab_from_embedding(fine, &embed_basis(fine, partition, e, basis))
}

/// Worst-case defect of the fine-space embedding of a basis: the `⟨⟨·,·⟩⟩`
/// Gram recomputed through the interpolation, compared entrywise against the
/// exact Gram.
pub fn embedding_defect(fine: &FineSpace, embed: &DMatrix<f64>, gram: &DMatrix<f64>) -> f64 {
    let through = embed.transpose() * &fine.s_mat * embed;
    (through - gram).amax()
}

/// The per-element constants feeding assembly and the estimators.
#[derive(Debug, Clone, Copy)]
pub struct LocalConstants {
    /// Complement `L²` constant `a_κ`.
    pub a: f64,
    /// Complement boundary constant `b_κ`.
    pub b: f64,
    /// Trace inverse inequality constant `d_κ` of the local span.
    pub d: f64,
    /// Penalty `γ_κ = ½(1+θ)² d_κ²` (the sharp coercivity threshold).
    pub gamma: f64,
    /// `γ̂_κ`: maximum over `∂κ` of the face average `{γ}`.
    pub gamma_hat: f64,
    /// `c_κ = d_κ^u-surrogate + d_κ|θ|`.
    pub c: f64,
    /// The surrogate standing in for the uncomputable `d_κ^u` (defaults to
    /// `d_κ`).
    pub d_u_surrogate: f64,
}

/// All local constants over the partition, plus the embedding diagnostics.
#[derive(Debug, Clone)]
pub struct ConstantsTable {
    /// Symmetrization parameter the penalties were derived for.
    pub theta: f64,
    /// Fine-space polynomial degree used for `a_κ, b_κ`.
    pub fine_degree: usize,
    /// Per-element constants.
    pub elems: Vec<LocalConstants>,
    /// Per-element embedding defect of the span into the fine space.
    pub embed_defects: Vec<f64>,
}

impl ConstantsTable {
    /// Patch boundary constant `b²_{ω(κ)} = max_{F ∈ ∂κ} ½(b_κ² + b_κ'²)`
    /// over the faces of element `e`.
    pub fn b_patch_sq(&self, partition: &Partition, e: usize) -> f64 {
        partition
            .elem_faces(e)
            .iter()
            .map(|&fid| {
                let [e0, e1] = partition.face(fid).elems;
                0.5 * (self.elems[e0].b.powi(2) + self.elems[e1].b.powi(2))
            })
            .fold(0.0, f64::max)
    }

    /// Largest per-element defect of the fine-space embedding.
    pub fn max_embed_defect(&self) -> f64 {
        self.embed_defects.iter().fold(0.0, |m, &d| m.max(d))
    }

    /// Whether every element's span embeds into the fine space to within
    /// [`EMBED_TOL`]. A `false` here means `a_κ, b_κ` were computed from a
    /// perturbed copy of the span and should be treated as approximate;
    /// raising the basis `drop_tol` restores the guarantee.
    pub fn embed_ok(&self) -> bool {
        self.max_embed_defect() <= EMBED_TOL
    }

    /// Render the table as CSV (`element,a,b,d,gamma,gamma_hat,c`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element,a,b,d,gamma,gamma_hat,c\n");
        for (e, lc) in self.elems.iter().enumerate() {
            out.push_str(&format!(
                "{e},{},{},{},{},{},{}\n",
                lc.a, lc.b, lc.d, lc.gamma, lc.gamma_hat, lc.c
            ));
        }
        out
    }
}

/// `γ_κ` from the trace constant: the coercivity threshold `½(1+θ)² d_κ²`,
/// used with equality.
pub fn compute_gamma(d: f64, theta: f64) -> f64 {
    0.5 * (1.0 + theta).powi(2) * d * d
}

/// `c_κ` from the `d_κ^u` surrogate: `c_κ = surrogate + d_κ|θ|`.
pub fn c_kappa(d_u_surrogate: f64, d: f64, theta: f64) -> f64 {
    d_u_surrogate + d * theta.abs()
}

/// Compute every local constant for a basis. `fine_degree` defaults to
/// `quadrature order − 1`. The per-element embedding defect is recorded in
/// the returned table rather than enforced; check
/// [`ConstantsTable::embed_ok`] when the `a_κ, b_κ` guarantee matters.
pub fn compute_constants(
    partition: &Partition,
    quad: &QuadGrid,
    basis: &BasisSet,
    theta: f64,
    fine_degree: Option<usize>,
) -> Result<ConstantsTable> {
    let degree = fine_degree.unwrap_or_else(|| quad.order().saturating_sub(1));
    let fine = build_fine_space(partition, degree)?;
    let ne = partition.num_elements();

    let mut ds = Vec::with_capacity(ne);
    let mut abs = Vec::with_capacity(ne);
    let mut defects = Vec::with_capacity(ne);
    for e in 0..ne {
        let eb = &basis.elems[e];
        let embed = embed_basis(&fine, partition, e, eb);
        defects.push(embedding_defect(&fine, &embed, &eb.gram_h1));
        ds.push(compute_d(partition, quad, e, eb)?);
        abs.push(ab_from_embedding(&fine, &embed)?);
    }

    let gammas: Vec<f64> = ds.iter().map(|&d| compute_gamma(d, theta)).collect();
    let mut elems = Vec::with_capacity(ne);
    for e in 0..ne {
        let gamma_hat = partition
            .elem_faces(e)
            .iter()
            .map(|&fid| {
                let [e0, e1] = partition.face(fid).elems;
                0.5 * (gammas[e0] + gammas[e1])
            })
            .fold(0.0, f64::max);
        let (a, b) = abs[e];
        elems.push(LocalConstants {
            a,
            b,
            d: ds[e],
            gamma: gammas[e],
            gamma_hat,
            c: c_kappa(ds[e], ds[e], theta),
            d_u_surrogate: ds[e],
        });
    }
    Ok(ConstantsTable { theta, fine_degree: degree, elems, embed_defects: defects })
}
