//! Adaptive local basis (ALB) functions and per-element projections.
//!
//! For each element `κ` the basis is built by solving the operator on the
//! *extended element* `κ̃` — the 3^d block of `κ` and its neighbors — with
//! planewave collocation, restricting the lowest `N` eigenfunctions to `κ`,
//! appending the constant function, and orthonormalizing in `L²(κ)` while
//! dropping linearly dependent candidates. The result is a small per-element
//! space adapted to the potential: where `V` digs a well, the basis functions
//! already look like the bound states, so a handful per element capture the
//! global eigenfunctions to high accuracy.
//!
//! Every retained function is stored twice over:
//!
//! * nodal samples (values, gradients, Laplacians, two-sided face traces) on
//!   the element's quadrature — what assembly and the estimators consume;
//! * its exact Fourier representation on `κ̃` (candidate interpolants plus
//!   the combination matrix) — what anything needing *other* grids consumes:
//!   finer fine-space grids, bubble interior grids, serialization.
//!
//! The projections live here too: `Π₀^κ` (the mean) and the `⟨⟨·,·⟩⟩`-best
//! approximation `Π_N^κ` onto the local span, where
//! `⟨⟨v, w⟩⟩ = (Π₀v, Π₀w)_κ + (∇v, ∇w)_κ`. The Gram matrix of `⟨⟨·,·⟩⟩` is
//! factorized once per element and reused by every projection.

use crate::fourier::{EvalKind, TrigInterpolant};
use crate::mesh::{Partition, QuadGrid};
use crate::spectral::{solve_planewave, GaussianBump, PotentialSpec};
use crate::fields::{FaceTrace, GridFunction};
use crate::{invalid, Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Fourier-side representation of one element's basis: the candidate
/// interpolants on the extended element and the combination matrix taking
/// candidates to the orthonormal basis.
#[derive(Debug, Clone)]
pub struct ElementBasisRep {
    /// Candidate interpolants (extended-element eigenfunctions, then the
    /// constant), all on the same grid.
    pub interpolants: Vec<TrigInterpolant>,
    /// `n_candidates × N_κ` matrix: basis function `j` is
    /// `Σ_c combo[(c, j)] · candidate_c`.
    pub combo: DMatrix<f64>,
}

impl ElementBasisRep {
    /// Fourier representation of the combination `Σ_j coefs[j] ψ_j` — a
    /// single interpolant, evaluable anywhere on the extended element.
    pub fn interpolant_for(&self, coefs: &[f64]) -> Result<TrigInterpolant> {
        if coefs.len() != self.combo.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                self.combo.ncols(),
                coefs.len()
            )));
        }
        let weights = &self.combo * DVector::from_column_slice(coefs);
        let parts: Vec<(f64, &TrigInterpolant)> =
            weights.iter().zip(&self.interpolants).map(|(&w, ti)| (w, ti)).collect();
        TrigInterpolant::linear_combination(&parts)
    }

    /// Values of every basis function on an arbitrary tensor grid (`[func]
    /// [point]`), for consumers that need grids other than the element
    /// quadrature (finer fine-space grids, convergence gates).
    pub fn values_on_grid(&self, axis_coords: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let cand: Vec<Vec<f64>> =
            self.interpolants.iter().map(|ti| ti.eval_grid(axis_coords, EvalKind::Value)).collect();
        let npts = cand.first().map_or(0, |v| v.len());
        (0..self.combo.ncols())
            .map(|j| {
                let mut out = vec![0.0; npts];
                for (c, cv) in cand.iter().enumerate() {
                    let w = self.combo[(c, j)];
                    if w != 0.0 {
                        for (o, v) in out.iter_mut().zip(cv) {
                            *o += w * v;
                        }
                    }
                }
                out
            })
            .collect()
    }
}

/// The orthonormal basis of one element, fully sampled on its quadrature.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    /// Number of retained functions `N_κ`.
    pub count: usize,
    /// `[func][node]` values on the element grid.
    pub values: Vec<Vec<f64>>,
    /// `[func][node*dim + c]` gradients.
    pub gradients: Vec<Vec<f64>>,
    /// `[func][node]` Laplacians.
    pub laplacians: Vec<Vec<f64>>,
    /// `[func][local_face][face_node]` values on the element's faces, local
    /// faces ordered as in `Partition::elem_faces`.
    pub face_values: Vec<Vec<Vec<f64>>>,
    /// `[func][local_face][face_node*dim + c]` gradients on the faces.
    pub face_gradients: Vec<Vec<Vec<f64>>>,
    /// `∫_κ ψ_j` per function.
    pub integrals: Vec<f64>,
    /// Element volume `|κ|`.
    pub volume: f64,
    /// Gram matrix of `⟨⟨·,·⟩⟩` on the span.
    pub gram_h1: DMatrix<f64>,
    /// Candidate indices dropped as linearly dependent.
    pub dropped: Vec<usize>,
    /// Fourier-side representation.
    pub rep: ElementBasisRep,
    chol_h1: Cholesky<f64, Dyn>,
}

impl ElementBasis {
    /// Combine `[func][k]`-indexed sample arrays with coefficients.
    fn combine(arrays: &[Vec<f64>], coefs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; arrays.first().map_or(0, |a| a.len())];
        for (c, arr) in coefs.iter().zip(arrays) {
            if *c != 0.0 {
                for (o, v) in out.iter_mut().zip(arr) {
                    *o += c * v;
                }
            }
        }
        out
    }

    /// Nodal values of `Σ coefs[j] ψ_j` on the element grid.
    pub fn combine_values(&self, coefs: &[f64]) -> Vec<f64> {
        Self::combine(&self.values, coefs)
    }

    /// Nodal gradients of the combination.
    pub fn combine_gradients(&self, coefs: &[f64]) -> Vec<f64> {
        Self::combine(&self.gradients, coefs)
    }

    /// Nodal Laplacians of the combination.
    pub fn combine_laplacians(&self, coefs: &[f64]) -> Vec<f64> {
        Self::combine(&self.laplacians, coefs)
    }

    /// Face values of the combination on local face `lf`.
    pub fn combine_face_values(&self, lf: usize, coefs: &[f64]) -> Vec<f64> {
        let arrays: Vec<Vec<f64>> = self.face_values.iter().map(|f| f[lf].clone()).collect();
        Self::combine(&arrays, coefs)
    }

    /// Face gradients of the combination on local face `lf`.
    pub fn combine_face_gradients(&self, lf: usize, coefs: &[f64]) -> Vec<f64> {
        let arrays: Vec<Vec<f64>> = self.face_gradients.iter().map(|f| f[lf].clone()).collect();
        Self::combine(&arrays, coefs)
    }

    /// Solve the `⟨⟨·,·⟩⟩` Gram system for projection coefficients.
    pub fn solve_gram(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol_h1.solve(rhs)
    }
}

/// The adaptive local basis over the whole partition.
#[derive(Debug, Clone)]
pub struct BasisSet {
    /// Per-element bases.
    pub elems: Vec<ElementBasis>,
    offsets: Vec<usize>,
    total: usize,
}

impl BasisSet {
    /// Assemble from per-element bases.
    pub fn from_elements(elems: Vec<ElementBasis>) -> Self {
        let mut offsets = Vec::with_capacity(elems.len());
        let mut total = 0;
        for e in &elems {
            offsets.push(total);
            total += e.count;
        }
        Self { elems, offsets, total }
    }

    /// Total degrees of freedom `Σ_κ N_κ`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Offset of element `e`'s block in global coefficient vectors.
    pub fn offset(&self, e: usize) -> usize {
        self.offsets[e]
    }

    /// Per-element function counts `N_κ`.
    pub fn counts(&self) -> Vec<usize> {
        self.elems.iter().map(|e| e.count).collect()
    }

    /// Element `e`'s slice of a global coefficient vector.
    pub fn elem_coefs<'a>(&self, e: usize, global: &'a [f64]) -> &'a [f64] {
        &global[self.offsets[e]..self.offsets[e] + self.elems[e].count]
    }

    /// Build the broken-field sampling (values, gradients, Laplacians, and
    /// two-sided face traces) of the function with global coefficients
    /// `coefs`.
    pub fn field_from_coeffs(
        &self,
        partition: &Partition,
        quad: &QuadGrid,
        coefs: &[f64],
    ) -> Result<GridFunction> {
        if coefs.len() != self.total {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                self.total,
                coefs.len()
            )));
        }
        let ne = partition.num_elements();
        let mut values = Vec::with_capacity(ne);
        let mut gradients = Vec::with_capacity(ne);
        let mut laplacians = Vec::with_capacity(ne);
        for e in 0..ne {
            let c = self.elem_coefs(e, coefs);
            values.push(self.elems[e].combine_values(c));
            gradients.push(self.elems[e].combine_gradients(c));
            laplacians.push(self.elems[e].combine_laplacians(c));
        }
        let mut traces = Vec::with_capacity(partition.num_faces());
        for fid in 0..partition.num_faces() {
            let face = partition.face(fid);
            let mut tr = FaceTrace { values: [Vec::new(), Vec::new()], gradients: [Vec::new(), Vec::new()] };
            for side in 0..2 {
                let e = face.elems[side];
                let lf = partition
                    .elem_faces(e)
                    .iter()
                    .position(|&f| f == fid)
                    .expect("face listed in its element's face list");
                let c = self.elem_coefs(e, coefs);
                tr.values[side] = self.elems[e].combine_face_values(lf, c);
                tr.gradients[side] = self.elems[e].combine_face_gradients(lf, c);
            }
            traces.push(tr);
        }
        GridFunction::new(partition, quad, values, Some(gradients), Some(laplacians), Some(traces))
    }
}

/// Weighted Gram–Schmidt orthonormalization with rank detection.
///
/// Candidates are nodal sample vectors; the inner product is
/// `⟨a, b⟩ = Σ_i weights[i] a_i b_i`. Candidates are processed in order, so
/// earlier ones take precedence: when two candidates span the same
/// direction, the later one is dropped. A candidate is dropped when its
/// residual norm after orthogonalization falls below `drop_tol` times the
/// largest candidate norm — the rank-revealing criterion, so `drop_tol`
/// plays the role of a relative singular-value cutoff. Every accepted
/// candidate is orthogonalized twice (re-orthogonalized Gram–Schmidt), so
/// the output Gram matrix stays at the 1e-12 level even for ill-conditioned
/// candidate sets.
///
/// Returns the orthonormalized samples, the kept candidate indices, and the
/// combination matrix (`n_candidates × n_kept`) expressing each output in
/// terms of the inputs.
pub fn orthonormalize(
    candidates: &[Vec<f64>],
    weights: &[f64],
    drop_tol: f64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, DMatrix<f64>)> {
    let n = candidates.len();
    if n == 0 {
        return Err(invalid!("orthonormalize needs at least one candidate"));
    }
    let len = weights.len();
    if candidates.iter().any(|c| c.len() != len) {
        return Err(Error::ShapeMismatch("candidate samples and weights disagree in length".into()));
    }
    let ip = |a: &[f64], b: &[f64]| -> f64 { weights.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum() };

    let scale = candidates
        .iter()
        .map(|c| ip(c, c).max(0.0).sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Numerical("all candidates are zero".into()));
    }

    let mut kept_idx = Vec::new();
    let mut kept_samples: Vec<Vec<f64>> = Vec::new();
    let mut kept_coefs: Vec<Vec<f64>> = Vec::new();

    for c in 0..n {
        let mut r = candidates[c].clone();
        let mut rc = vec![0.0; n];
        rc[c] = 1.0;
        // Two Gram–Schmidt sweeps; bail out as soon as the residual drops
        // below the rank tolerance.
        let mut norm = ip(&r, &r).max(0.0).sqrt();
        let mut dependent = norm < drop_tol * scale;
        if !dependent {
            for _ in 0..2 {
                for (q, qc) in kept_samples.iter().zip(&kept_coefs) {
                    let proj = ip(&r, q);
                    for (a, b) in r.iter_mut().zip(q) {
                        *a -= proj * b;
                    }
                    for (a, b) in rc.iter_mut().zip(qc) {
                        *a -= proj * b;
                    }
                }
                norm = ip(&r, &r).max(0.0).sqrt();
                if norm < drop_tol * scale {
                    dependent = true;
                    break;
                }
            }
        }
        if dependent {
            continue;
        }
        for v in &mut r {
            *v /= norm;
        }
        for v in &mut rc {
            *v /= norm;
        }
        kept_idx.push(c);
        kept_samples.push(r);
        kept_coefs.push(rc);
    }

    let k = kept_idx.len();
    let mut combo = DMatrix::zeros(n, k);
    for (j, kc) in kept_coefs.iter().enumerate() {
        for c in 0..n {
            combo[(c, j)] = kc[c];
        }
    }
    Ok((kept_samples, kept_idx, combo))
}

/// The extended-box-periodic closure of the potential for one local solve:
/// every bump image whose center falls inside the box, re-imaged with the
/// box's own periods (when the box covers the whole domain this reproduces
/// the global potential exactly). Restricting the globally periodic
/// potential to the extended box and imposing periodicity by sampling alone
/// leaves a derivative kink at the wrap point, and the local eigenfunctions
/// then inherit algebraic Fourier tails that pollute Laplacian evaluations
/// of the basis; closing the box with its own smooth periodic bump
/// configuration keeps the candidates analytic with exponentially decaying
/// coefficients.
fn localized_potential(spec: &PotentialSpec, origin: &[f64], lengths: &[f64]) -> PotentialSpec {
    let dim = lengths.len();
    let mut bumps = Vec::new();
    'bump: for b in &spec.bumps {
        let mut center = vec![0.0; dim];
        for a in 0..dim {
            let l = spec.lengths[a];
            // The unique lattice image with origin ≤ c + m·l < origin + l,
            // kept only when it also lies left of origin + length.
            let m = ((origin[a] - b.center[a]) / l).ceil();
            let c = b.center[a] + m * l;
            if c < origin[a] || c >= origin[a] + lengths[a] {
                continue 'bump;
            }
            center[a] = c;
        }
        bumps.push(GaussianBump { center, width: b.width, magnitude: b.magnitude });
    }
    PotentialSpec {
        lengths: lengths.to_vec(),
        bumps,
        image_radius: spec.image_radius,
        offset: spec.offset,
    }
}

/// Extended element `κ̃` of element `e`: the element grown by one element
/// width in every direction (`3^d` elements worth of box). Returns
/// `(origin, lengths)`.
pub fn extended_box(partition: &Partition, e: usize) -> (Vec<f64>, Vec<f64>) {
    let elem = partition.element(e);
    let origin: Vec<f64> = elem.lo.iter().zip(&elem.widths).map(|(lo, h)| lo - h).collect();
    let lengths: Vec<f64> = elem.widths.iter().map(|h| 3.0 * h).collect();
    (origin, lengths)
}

/// Generate the adaptive local basis: per element, the `n` lowest
/// eigenfunctions of `-Δ + V` on the extended element (solved with
/// `wavecount` planewaves per dimension), restricted to the element, plus the
/// constant, orthonormalized in `L²(κ)` with rank tolerance `drop_tol`.
///
/// The quadrature grid must resolve the expansion: an order of at least
/// `(wavecount + 1) / 2` integrates products of basis functions exactly.
/// Coarser rules still produce a usable basis, but quadrature aliasing of
/// the highest modes then leaks into assembled matrices and residuals.
pub fn generate_alb(
    partition: &Partition,
    quad: &QuadGrid,
    spec: &PotentialSpec,
    n: usize,
    wavecount: usize,
    drop_tol: f64,
) -> Result<BasisSet> {
    if n < 2 {
        return Err(invalid!("need at least 2 basis functions per element, got {n}"));
    }
    let dim = partition.dim();
    let mut elems = Vec::with_capacity(partition.num_elements());
    for e in 0..partition.num_elements() {
        let (origin, lengths) = extended_box(partition, e);
        let vloc = localized_potential(spec, &origin, &lengths);
        let sol = solve_planewave(&vloc, &origin, &lengths, wavecount, n)?;
        let mut interpolants = sol.interpolants;
        // The dense eigensolve leaves a flat coefficient noise floor of
        // roughly machine epsilon times the Hamiltonian norm. Candidates
        // that barely survive the orthonormalization drop test get scaled
        // up by as much as 1/drop_tol, so that floor must be removed here
        // or it dominates Laplacians of the assembled basis.
        for ti in &mut interpolants {
            ti.truncate_small(1e-12);
        }
        interpolants.push(TrigInterpolant::constant_on_grid(
            &origin,
            &lengths,
            &vec![wavecount; dim],
            1.0,
        )?);

        let coords = quad.elem_axis_coords(e);
        let cand_values: Vec<Vec<f64>> =
            interpolants.iter().map(|ti| ti.eval_grid(coords, EvalKind::Value)).collect();

        let weights = quad.elem_weights(e);
        let (_, kept, combo) = orthonormalize(&cand_values, weights, drop_tol)?;
        if kept.is_empty() {
            return Err(Error::Numerical(format!("element {e}: all basis candidates degenerate")));
        }
        let dropped: Vec<usize> =
            (0..interpolants.len()).filter(|c| !kept.contains(c)).collect();
        let count = kept.len();

        // All retained data = combo applied to candidate samples, so values,
        // gradients, and Laplacians stay exactly consistent.
        let apply = |cand: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..count)
                .map(|j| {
                    let mut out = vec![0.0; cand[0].len()];
                    for (c, cv) in cand.iter().enumerate() {
                        let w = combo[(c, j)];
                        if w != 0.0 {
                            for (o, v) in out.iter_mut().zip(cv) {
                                *o += w * v;
                            }
                        }
                    }
                    out
                })
                .collect()
        };

        let values = apply(&cand_values);
        let cand_laps: Vec<Vec<f64>> =
            interpolants.iter().map(|ti| ti.eval_grid(coords, EvalKind::Laplacian)).collect();
        let laplacians = apply(&cand_laps);
        let mut grad_comps = Vec::with_capacity(dim);
        for c in 0..dim {
            let cand_g: Vec<Vec<f64>> =
                interpolants.iter().map(|ti| ti.eval_grid(coords, EvalKind::Gradient(c))).collect();
            grad_comps.push(apply(&cand_g));
        }
        let nn = quad.n_elem_nodes();
        let gradients: Vec<Vec<f64>> = (0..count)
            .map(|j| {
                let mut g = vec![0.0; nn * dim];
                for c in 0..dim {
                    for i in 0..nn {
                        g[i * dim + c] = grad_comps[c][j][i];
                    }
                }
                g
            })
            .collect();

        // Face traces from this element's side.
        let nfn = quad.n_face_nodes();
        let mut face_values = vec![Vec::with_capacity(2 * dim); count];
        let mut face_gradients = vec![Vec::with_capacity(2 * dim); count];
        for &fid in partition.elem_faces(e) {
            let side = partition.face_side(fid, e)?;
            let fcoords = quad.face_axis_coords(partition, fid, side);
            let cand_v: Vec<Vec<f64>> =
                interpolants.iter().map(|ti| ti.eval_grid(&fcoords, EvalKind::Value)).collect();
            let fv = apply(&cand_v);
            let mut fg_comps = Vec::with_capacity(dim);
            for c in 0..dim {
                let cand_g: Vec<Vec<f64>> =
                    interpolants.iter().map(|ti| ti.eval_grid(&fcoords, EvalKind::Gradient(c))).collect();
                fg_comps.push(apply(&cand_g));
            }
            for j in 0..count {
                face_values[j].push(fv[j].clone());
                let mut g = vec![0.0; nfn * dim];
                for c in 0..dim {
                    for i in 0..nfn {
                        g[i * dim + c] = fg_comps[c][j][i];
                    }
                }
                face_gradients[j].push(g);
            }
        }

        let volume = partition.element(e).volume();
        let integrals: Vec<f64> =
            values.iter().map(|v| weights.iter().zip(v).map(|(w, x)| w * x).sum()).collect();
        let mut gram_h1 = DMatrix::zeros(count, count);
        for i in 0..count {
            for j in i..count {
                let mut grad_ip = 0.0;
                for (k, &w) in weights.iter().enumerate() {
                    let mut dot = 0.0;
                    for c in 0..dim {
                        dot += gradients[i][k * dim + c] * gradients[j][k * dim + c];
                    }
                    grad_ip += w * dot;
                }
                let v = integrals[i] * integrals[j] / volume + grad_ip;
                gram_h1[(i, j)] = v;
                gram_h1[(j, i)] = v;
            }
        }
        let chol_h1 = gram_h1
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("element {e}: H¹ Gram not positive definite")))?;

        elems.push(ElementBasis {
            count,
            values,
            gradients,
            laplacians,
            face_values,
            face_gradients,
            integrals,
            volume,
            gram_h1,
            dropped,
            rep: ElementBasisRep { interpolants, combo },
            chol_h1,
        });
    }
    Ok(BasisSet::from_elements(elems))
}

/// `Π₀^κ v`: the mean of `v` over element `e`.
pub fn project_constant(quad: &QuadGrid, e: usize, values: &[f64]) -> f64 {
    let w = quad.elem_weights(e);
    let vol: f64 = w.iter().sum();
    w.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / vol
}

/// `Π_N^κ v`: coefficients of the `⟨⟨·,·⟩⟩`-orthogonal projection of `v`
/// (given by nodal values and gradients on element `e`) onto the local span.
pub fn project_n(
    basis: &ElementBasis,
    quad: &QuadGrid,
    e: usize,
    values: &[f64],
    gradients: &[f64],
) -> DVector<f64> {
    let dim = quad.dim();
    let w = quad.elem_weights(e);
    let integral: f64 = w.iter().zip(values).map(|(w, v)| w * v).sum();
    let mut rhs = DVector::zeros(basis.count);
    for j in 0..basis.count {
        let mut grad_ip = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            let mut dot = 0.0;
            for c in 0..dim {
                dot += gradients[k * dim + c] * basis.gradients[j][k * dim + c];
            }
            grad_ip += wk * dot;
        }
        rhs[j] = integral * basis.integrals[j] / basis.volume + grad_ip;
    }
    basis.solve_gram(&rhs)
}
