//! Element-wise ("broken") functions on a partition and their trace algebra.
//!
//! A [`GridFunction`] stores nodal values — and optionally gradients,
//! Laplacians, and two-sided face traces — of a function that is smooth
//! inside each element but may jump across faces. All jump/average operators
//! and broken norms live here.
//!
//! # Jump conventions
//!
//! For a face `F` shared by elements `κ⁰ = elems[0]` and `κ¹ = elems[1]`
//! with outward normals `n⁰ = -n¹ = normal_sign · e_axis`:
//!
//! * the *value jump* is the vector `⟦v⟧ = v⁰ n⁰ + v¹ n¹`; being normal to
//!   the face it is stored as its `e_axis` component `normal_sign (v⁰ - v¹)`;
//! * the *normal-gradient jump* is the scalar
//!   `⟦∇v⟧ = ∇v⁰·n⁰ + ∇v¹·n¹ = normal_sign (∂v⁰ - ∂v¹)`;
//! * averages are plain means `{v} = (v⁰ + v¹)/2`.
//!
//! Both jumps are orientation-free: swapping the roles of the two sides
//! leaves them unchanged, so no code downstream depends on which element got
//! the lower id.
//!
//! Integrals over an element boundary `∂κ` always use the trace taken from
//! `κ`'s own side; sums over all element boundaries therefore visit every
//! face twice, which is the `½ Σ_κ (…)_{∂κ}` convention the bilinear form and
//! the piecewise integration-by-parts identity
//! ([`check_integration_by_parts`]) are written in.

use crate::fourier::{EvalKind, TrigInterpolant};
use crate::mesh::{Partition, QuadGrid};
use crate::{invalid, Error, Result};

/// Two-sided trace data of a grid function on one face.
#[derive(Debug, Clone)]
pub struct FaceTrace {
    /// Values per side (`side` indexes `Face::elems`), `n_face_nodes` each.
    pub values: [Vec<f64>; 2],
    /// Gradients per side, flattened `node*dim + c`.
    pub gradients: [Vec<f64>; 2],
}

/// Nodal data of a broken function on every element (and optionally every
/// face) of a partition.
#[derive(Debug, Clone)]
pub struct GridFunction {
    values: Vec<Vec<f64>>,
    gradients: Option<Vec<Vec<f64>>>,
    laplacians: Option<Vec<Vec<f64>>>,
    traces: Option<Vec<FaceTrace>>,
}

impl GridFunction {
    /// Assemble a grid function from raw nodal arrays, validating shapes.
    pub fn new(
        partition: &Partition,
        quad: &QuadGrid,
        values: Vec<Vec<f64>>,
        gradients: Option<Vec<Vec<f64>>>,
        laplacians: Option<Vec<Vec<f64>>>,
        traces: Option<Vec<FaceTrace>>,
    ) -> Result<Self> {
        let (ne, nn, nf, nfn, dim) = (
            partition.num_elements(),
            quad.n_elem_nodes(),
            partition.num_faces(),
            quad.n_face_nodes(),
            partition.dim(),
        );
        if values.len() != ne || values.iter().any(|v| v.len() != nn) {
            return Err(invalid!("values must be {ne} elements × {nn} nodes"));
        }
        if let Some(g) = &gradients {
            if g.len() != ne || g.iter().any(|v| v.len() != nn * dim) {
                return Err(invalid!("gradients must be {ne} elements × {nn}·{dim} entries"));
            }
        }
        if let Some(l) = &laplacians {
            if l.len() != ne || l.iter().any(|v| v.len() != nn) {
                return Err(invalid!("laplacians must be {ne} elements × {nn} nodes"));
            }
        }
        if let Some(t) = &traces {
            let ok = t.len() == nf
                && t.iter().all(|tr| {
                    tr.values.iter().all(|v| v.len() == nfn)
                        && tr.gradients.iter().all(|g| g.len() == nfn * dim)
                });
            if !ok {
                return Err(invalid!("traces must cover {nf} faces × {nfn} nodes per side"));
            }
        }
        Ok(Self { values, gradients, laplacians, traces })
    }

    /// Sample element-dependent closures (value, gradient, Laplacian) at all
    /// element and face nodes. The element id is passed through so the
    /// sampled function may be genuinely discontinuous across faces; traces
    /// on each side of a face use that side's element id.
    pub fn sample_piecewise(
        partition: &Partition,
        quad: &QuadGrid,
        f: &dyn Fn(usize, &[f64]) -> f64,
        grad: &dyn Fn(usize, &[f64]) -> Vec<f64>,
        lap: &dyn Fn(usize, &[f64]) -> f64,
    ) -> Self {
        let dim = partition.dim();
        let nn = quad.n_elem_nodes();
        let mut values = Vec::with_capacity(partition.num_elements());
        let mut gradients = Vec::with_capacity(partition.num_elements());
        let mut laplacians = Vec::with_capacity(partition.num_elements());
        for e in 0..partition.num_elements() {
            let nodes = quad.elem_nodes(e);
            let mut vals = Vec::with_capacity(nn);
            let mut grads = Vec::with_capacity(nn * dim);
            let mut laps = Vec::with_capacity(nn);
            for i in 0..nn {
                let x = &nodes[i * dim..(i + 1) * dim];
                vals.push(f(e, x));
                grads.extend(grad(e, x));
                laps.push(lap(e, x));
            }
            values.push(vals);
            gradients.push(grads);
            laplacians.push(laps);
        }
        let mut traces = Vec::with_capacity(partition.num_faces());
        for fid in 0..partition.num_faces() {
            let face = partition.face(fid);
            let mut tr = FaceTrace {
                values: [Vec::new(), Vec::new()],
                gradients: [Vec::new(), Vec::new()],
            };
            for side in 0..2 {
                let e = face.elems[side];
                let nodes = quad.face_nodes(fid, side);
                for i in 0..quad.n_face_nodes() {
                    let x = &nodes[i * dim..(i + 1) * dim];
                    tr.values[side].push(f(e, x));
                    tr.gradients[side].extend(grad(e, x));
                }
            }
            traces.push(tr);
        }
        Self { values, gradients: Some(gradients), laplacians: Some(laplacians), traces: Some(traces) }
    }

    /// Sample globally smooth closures (a continuous function of space).
    pub fn sample_analytic(
        partition: &Partition,
        quad: &QuadGrid,
        f: &dyn Fn(&[f64]) -> f64,
        grad: &dyn Fn(&[f64]) -> Vec<f64>,
        lap: &dyn Fn(&[f64]) -> f64,
    ) -> Self {
        Self::sample_piecewise(partition, quad, &|_, x| f(x), &|_, x| grad(x), &|_, x| lap(x))
    }

    /// Sample a periodic Fourier representation (values, gradients,
    /// Laplacians, and traces) onto the partition's quadrature.
    ///
    /// The interpolant must cover the whole domain; wrap-around faces are
    /// handled by periodicity.
    pub fn from_trig(partition: &Partition, quad: &QuadGrid, interp: &TrigInterpolant) -> Self {
        let dim = partition.dim();
        let mut values = Vec::with_capacity(partition.num_elements());
        let mut gradients = Vec::with_capacity(partition.num_elements());
        let mut laplacians = Vec::with_capacity(partition.num_elements());
        for e in 0..partition.num_elements() {
            let coords = quad.elem_axis_coords(e);
            values.push(interp.eval_grid(coords, EvalKind::Value));
            laplacians.push(interp.eval_grid(coords, EvalKind::Laplacian));
            let comps: Vec<Vec<f64>> =
                (0..dim).map(|c| interp.eval_grid(coords, EvalKind::Gradient(c))).collect();
            gradients.push(interleave(&comps));
        }
        let mut traces = Vec::with_capacity(partition.num_faces());
        for fid in 0..partition.num_faces() {
            let mut tr = FaceTrace {
                values: [Vec::new(), Vec::new()],
                gradients: [Vec::new(), Vec::new()],
            };
            for side in 0..2 {
                let coords = quad.face_axis_coords(partition, fid, side);
                tr.values[side] = interp.eval_grid(&coords, EvalKind::Value);
                let comps: Vec<Vec<f64>> =
                    (0..dim).map(|c| interp.eval_grid(&coords, EvalKind::Gradient(c))).collect();
                tr.gradients[side] = interleave(&comps);
            }
            traces.push(tr);
        }
        Self { values, gradients: Some(gradients), laplacians: Some(laplacians), traces: Some(traces) }
    }

    /// Linear combination `Σ cᵢ fᵢ`. Optional data (gradients, Laplacians,
    /// traces) is combined when *all* inputs carry it and dropped otherwise.
    pub fn linear_combination(parts: &[(f64, &GridFunction)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| invalid!("empty linear combination"))?;
        let ne = first.values.len();
        if parts.iter().any(|(_, f)| f.values.len() != ne) {
            return Err(Error::ShapeMismatch("grid functions cover different meshes".into()));
        }

        let mut values = vec![vec![0.0; first.values[0].len()]; ne];
        for (c, f) in parts {
            for e in 0..ne {
                for (acc, v) in values[e].iter_mut().zip(&f.values[e]) {
                    *acc += c * v;
                }
            }
        }
        let combine = |get: &dyn Fn(&GridFunction) -> Option<&Vec<Vec<f64>>>| -> Option<Vec<Vec<f64>>> {
            if parts.iter().any(|(_, f)| get(f).is_none()) {
                return None;
            }
            let mut out = vec![vec![0.0; get(first).unwrap()[0].len()]; ne];
            for (c, f) in parts {
                let data = get(f).unwrap();
                for e in 0..ne {
                    for (acc, v) in out[e].iter_mut().zip(&data[e]) {
                        *acc += c * v;
                    }
                }
            }
            Some(out)
        };
        let gradients = combine(&|f| f.gradients.as_ref());
        let laplacians = combine(&|f| f.laplacians.as_ref());

        let traces = if parts.iter().all(|(_, f)| f.traces.is_some()) {
            let nf = first.traces.as_ref().unwrap().len();
            let mut out: Vec<FaceTrace> = (0..nf)
                .map(|fid| {
                    let t0 = &first.traces.as_ref().unwrap()[fid];
                    FaceTrace {
                        values: [vec![0.0; t0.values[0].len()], vec![0.0; t0.values[1].len()]],
                        gradients: [vec![0.0; t0.gradients[0].len()], vec![0.0; t0.gradients[1].len()]],
                    }
                })
                .collect();
            for (c, f) in parts {
                for (acc, tr) in out.iter_mut().zip(f.traces.as_ref().unwrap()) {
                    for s in 0..2 {
                        for (a, v) in acc.values[s].iter_mut().zip(&tr.values[s]) {
                            *a += c * v;
                        }
                        for (a, v) in acc.gradients[s].iter_mut().zip(&tr.gradients[s]) {
                            *a += c * v;
                        }
                    }
                }
            }
            Some(out)
        } else {
            None
        };

        Ok(Self { values, gradients, laplacians, traces })
    }

    /// Nodal values on element `e`.
    pub fn values(&self, e: usize) -> &[f64] {
        &self.values[e]
    }

    /// Nodal gradients on element `e` (`node*dim + c`), if stored.
    pub fn gradients(&self, e: usize) -> Result<&[f64]> {
        self.gradients
            .as_ref()
            .map(|g| g[e].as_slice())
            .ok_or_else(|| Error::MissingData("grid function has no gradients".into()))
    }

    /// Nodal Laplacians on element `e`, if stored.
    pub fn laplacians(&self, e: usize) -> Result<&[f64]> {
        self.laplacians
            .as_ref()
            .map(|l| l[e].as_slice())
            .ok_or_else(|| Error::MissingData("grid function has no laplacians".into()))
    }

    /// Two-sided trace on face `f`, if stored.
    pub fn trace(&self, f: usize) -> Result<&FaceTrace> {
        self.traces
            .as_ref()
            .map(|t| &t[f])
            .ok_or_else(|| Error::MissingData("grid function has no face traces".into()))
    }

    /// Whether face traces are stored.
    pub fn has_traces(&self) -> bool {
        self.traces.is_some()
    }

    /// Number of elements covered.
    pub fn num_elements(&self) -> usize {
        self.values.len()
    }
}

/// Interleave per-component arrays `[c][node]` into `node*dim + c` layout.
fn interleave(comps: &[Vec<f64>]) -> Vec<f64> {
    let dim = comps.len();
    let n = comps[0].len();
    let mut out = vec![0.0; n * dim];
    for (c, comp) in comps.iter().enumerate() {
        for (i, &v) in comp.iter().enumerate() {
            out[i * dim + c] = v;
        }
    }
    out
}

/// The `e_axis` component of the vector value jump `⟦v⟧` at the nodes of
/// face `f`: `normal_sign (v⁰ - v¹)`.
pub fn jump_value(partition: &Partition, f: &GridFunction, fid: usize) -> Result<Vec<f64>> {
    let face = partition.face(fid);
    let tr = f.trace(fid)?;
    Ok(tr.values[0]
        .iter()
        .zip(&tr.values[1])
        .map(|(a, b)| face.normal_sign * (a - b))
        .collect())
}

/// The value average `{v} = (v⁰ + v¹)/2` at the nodes of face `f`.
pub fn avg_value(f: &GridFunction, fid: usize) -> Result<Vec<f64>> {
    let tr = f.trace(fid)?;
    Ok(tr.values[0].iter().zip(&tr.values[1]).map(|(a, b)| 0.5 * (a + b)).collect())
}

/// The scalar normal-gradient jump `⟦∇v⟧ = ∇v⁰·n⁰ + ∇v¹·n¹` at the nodes of
/// face `f`.
pub fn jump_normal_gradient(partition: &Partition, f: &GridFunction, fid: usize) -> Result<Vec<f64>> {
    let face = partition.face(fid);
    let tr = f.trace(fid)?;
    let dim = partition.dim();
    let n = tr.values[0].len();
    Ok((0..n)
        .map(|i| {
            face.normal_sign
                * (tr.gradients[0][i * dim + face.axis] - tr.gradients[1][i * dim + face.axis])
        })
        .collect())
}

/// The `e_axis` component of the gradient average `{∇v}` at the nodes of
/// face `f`.
pub fn avg_gradient_axis(partition: &Partition, f: &GridFunction, fid: usize) -> Result<Vec<f64>> {
    let face = partition.face(fid);
    let tr = f.trace(fid)?;
    let dim = partition.dim();
    let n = tr.values[0].len();
    Ok((0..n)
        .map(|i| 0.5 * (tr.gradients[0][i * dim + face.axis] + tr.gradients[1][i * dim + face.axis]))
        .collect())
}

/// `‖v‖_{L²(κ)}` on element `e`.
pub fn l2_norm_elem(quad: &QuadGrid, f: &GridFunction, e: usize) -> f64 {
    quad.inner_elem(e, f.values(e), f.values(e)).max(0.0).sqrt()
}

/// `‖∇v‖_{L²(κ)}` on element `e`.
pub fn grad_norm_elem(quad: &QuadGrid, f: &GridFunction, e: usize) -> Result<f64> {
    let dim = quad.dim();
    let g = f.gradients(e)?;
    let w = quad.elem_weights(e);
    let mut acc = 0.0;
    for i in 0..w.len() {
        let mut g2 = 0.0;
        for c in 0..dim {
            g2 += g[i * dim + c] * g[i * dim + c];
        }
        acc += w[i] * g2;
    }
    Ok(acc.max(0.0).sqrt())
}

/// `‖v‖_{L²(Ω)}` over the whole broken domain.
pub fn l2_norm_domain(quad: &QuadGrid, f: &GridFunction) -> f64 {
    let mut acc = 0.0;
    for e in 0..f.num_elements() {
        let v = f.values(e);
        acc += quad.inner_elem(e, v, v);
    }
    acc.max(0.0).sqrt()
}

/// `(u, v)_Ω` over the whole broken domain.
pub fn inner_domain(quad: &QuadGrid, u: &GridFunction, v: &GridFunction) -> f64 {
    (0..u.num_elements()).map(|e| quad.inner_elem(e, u.values(e), v.values(e))).sum()
}

/// `∫_F |⟦v⟧|²` on face `f` (the squared L² norm of the vector value jump).
pub fn jump_norm_sq_face(partition: &Partition, quad: &QuadGrid, f: &GridFunction, fid: usize) -> Result<f64> {
    let j = jump_value(partition, f, fid)?;
    let w = quad.face_weights(fid);
    Ok(w.iter().zip(&j).map(|(w, j)| w * j * j).sum())
}

/// `‖v‖_{L²(∂κ)}` over the whole boundary of element `e`, using traces from
/// `e`'s own side.
pub fn l2_norm_elem_boundary(partition: &Partition, quad: &QuadGrid, f: &GridFunction, e: usize) -> Result<f64> {
    let mut acc = 0.0;
    for &fid in partition.elem_faces(e) {
        let side = partition.face_side(fid, e)?;
        let tr = f.trace(fid)?;
        let w = quad.face_weights(fid);
        acc += w.iter().zip(&tr.values[side]).map(|(w, v)| w * v * v).sum::<f64>();
    }
    Ok(acc.max(0.0).sqrt())
}

/// Residual of the piecewise integration-by-parts identity
///
/// ```text
/// Σ_κ [ (Δv, w)_κ + (∇v, ∇w)_κ ]
///   = ½ Σ_κ [ (⟦∇v⟧, w)_{∂κ} + (∇v, ⟦w⟧)_{∂κ} ]
/// ```
///
/// evaluated by quadrature; returns `|lhs - rhs|`. For data whose products
/// the quadrature integrates exactly (or to round-off) this is a strong
/// consistency check of the trace conventions, orientation signs, and face
/// rules — a sign error anywhere makes it O(1).
pub fn check_integration_by_parts(
    partition: &Partition,
    quad: &QuadGrid,
    v: &GridFunction,
    w: &GridFunction,
) -> Result<f64> {
    let dim = partition.dim();
    let mut lhs = 0.0;
    for e in 0..partition.num_elements() {
        let lap = v.laplacians(e)?;
        let wv = w.values(e);
        let gv = v.gradients(e)?;
        let gw = w.gradients(e)?;
        let wts = quad.elem_weights(e);
        for i in 0..wts.len() {
            let mut dot = 0.0;
            for c in 0..dim {
                dot += gv[i * dim + c] * gw[i * dim + c];
            }
            lhs += wts[i] * (lap[i] * wv[i] + dot);
        }
    }

    let mut rhs = 0.0;
    for e in 0..partition.num_elements() {
        for &fid in partition.elem_faces(e) {
            let face = partition.face(fid);
            let side = partition.face_side(fid, e)?;
            let wts = quad.face_weights(fid);
            let jump_gv = jump_normal_gradient(partition, v, fid)?;
            let jump_w = jump_value(partition, w, fid)?;
            let tr_w = w.trace(fid)?;
            let tr_v = v.trace(fid)?;
            for i in 0..wts.len() {
                // (⟦∇v⟧, w)_{∂κ}: scalar jump times κ's own trace of w.
                let t1 = jump_gv[i] * tr_w.values[side][i];
                // (∇v, ⟦w⟧)_{∂κ}: κ's own ∇v dotted with the vector jump,
                // which points along e_axis.
                let t2 = tr_v.gradients[side][i * dim + face.axis] * jump_w[i];
                rhs += 0.5 * wts[i] * (t1 + t2);
            }
        }
    }
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_partition, build_quadrature};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn setup_1d() -> (Partition, QuadGrid) {
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let q = build_quadrature(&p, 17).unwrap();
        (p, q)
    }

    #[test]
    fn continuous_function_has_no_jumps() {
        let (p, q) = setup_1d();
        let f = GridFunction::sample_analytic(
            &p,
            &q,
            &|x| x[0].sin(),
            &|x| vec![x[0].cos()],
            &|x| -x[0].sin(),
        );
        for fid in 0..p.num_faces() {
            // sin is periodic: value and gradient jumps vanish on every face,
            // including the wrap-around one.
            for j in jump_value(&p, &f, fid).unwrap() {
                assert_abs_diff_eq!(j, 0.0, epsilon = 1e-13);
            }
            for j in jump_normal_gradient(&p, &f, fid).unwrap() {
                assert_abs_diff_eq!(j, 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn wrap_face_jump_of_non_periodic_function() {
        // v(x) = x is smooth inside Ω but jumps by the period across the
        // wrap-around face: the jump magnitude there is 2π.
        let (p, q) = setup_1d();
        let f = GridFunction::sample_analytic(&p, &q, &|x| x[0], &|_| vec![1.0], &|_| 0.0);
        let wrap = p
            .faces()
            .iter()
            .position(|face| face.is_wrap())
            .expect("1-D periodic mesh has exactly one wrap face");
        let j = jump_value(&p, &f, wrap).unwrap();
        // normal_sign on the wrap face is -1 and v⁰ - v¹ = 0 - 2π.
        assert_abs_diff_eq!(j[0], 2.0 * PI, epsilon = 1e-12);
        // Interior faces carry no jump.
        for fid in 0..p.num_faces() {
            if fid != wrap {
                assert_abs_diff_eq!(jump_value(&p, &f, fid).unwrap()[0], 0.0, epsilon = 1e-12);
            }
        }
        // The gradient of x is continuous everywhere.
        for fid in 0..p.num_faces() {
            assert_abs_diff_eq!(jump_normal_gradient(&p, &f, fid).unwrap()[0], 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn kink_function_jumps_in_gradient_only() {
        // v(x) = |x - c| with c an element corner: continuous, gradient jumps
        // by ±2 exactly at the kink face.
        let p = build_partition(&[1.0], &[4]).unwrap();
        let q = build_quadrature(&p, 9).unwrap();
        let c = 0.5;
        // The piecewise sampler lets each side of the kink report its own
        // one-sided gradient (∓1), which a plain closure of x could not.
        let f = GridFunction::sample_piecewise(
            &p,
            &q,
            &|_, x| (x[0] - c).abs(),
            &|e, _| vec![if e >= 2 { 1.0 } else { -1.0 }],
            &|_, _| 0.0,
        );
        let kink = p.elem_faces(1)[1]; // face between elements 1 and 2 at x = 0.5
        let jg = jump_normal_gradient(&p, &f, kink).unwrap();
        // ⟦∇v⟧ = n⁰·(∂v⁰ - ∂v¹) = (+1)((-1) - (+1)) = -2 at the kink.
        assert_abs_diff_eq!(jg[0], -2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(jump_value(&p, &f, kink).unwrap()[0], 0.0, epsilon = 1e-13);
        // The average of the two one-sided values is still |x - c| = 0 there.
        assert_abs_diff_eq!(avg_value(&f, kink).unwrap()[0], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn norms_match_closed_forms() {
        let (p, q) = setup_1d();
        let f = GridFunction::sample_analytic(
            &p,
            &q,
            &|x| x[0].sin(),
            &|x| vec![x[0].cos()],
            &|x| -x[0].sin(),
        );
        assert_abs_diff_eq!(l2_norm_domain(&q, &f), PI.sqrt(), epsilon = 1e-12);
        let mut grad_sq = 0.0;
        for e in 0..p.num_elements() {
            grad_sq += grad_norm_elem(&q, &f, e).unwrap().powi(2);
        }
        assert_abs_diff_eq!(grad_sq.sqrt(), PI.sqrt(), epsilon = 1e-12);
        // Boundary norm of element 0: |sin| at its two endpoint faces.
        let e0 = p.element(0);
        let b = l2_norm_elem_boundary(&p, &q, &f, 0).unwrap();
        let expect = (e0.lo[0].sin().powi(2) + (e0.lo[0] + e0.widths[0]).sin().powi(2)).sqrt();
        assert_abs_diff_eq!(b, expect, epsilon = 1e-12);
    }

    #[test]
    fn integration_by_parts_smooth_periodic() {
        let (p, q) = setup_1d();
        let v = GridFunction::sample_analytic(
            &p,
            &q,
            &|x| (2.0 * x[0]).sin(),
            &|x| vec![2.0 * (2.0 * x[0]).cos()],
            &|x| -4.0 * (2.0 * x[0]).sin(),
        );
        let w = GridFunction::sample_analytic(
            &p,
            &q,
            &|x| x[0].cos(),
            &|x| vec![-x[0].sin()],
            &|x| -x[0].cos(),
        );
        let r = check_integration_by_parts(&p, &q, &v, &w).unwrap();
        assert!(r < 1e-10, "IBP residual {r} too large for smooth pair");
    }

    #[test]
    fn integration_by_parts_discontinuous_pair() {
        // Per-element quadratics with exact gradients/Laplacians: quadrature
        // is exact, so only a convention error could make the residual big.
        let p = build_partition(&[2.0, 3.0], &[3, 3]).unwrap();
        let q = build_quadrature(&p, 6).unwrap();
        let v = GridFunction::sample_piecewise(
            &p,
            &q,
            &|e, x| (x[0] - 0.3 * e as f64).powi(2) + 0.5 * x[1] * x[1] + e as f64,
            &|e, x| vec![2.0 * (x[0] - 0.3 * e as f64), x[1]],
            &|_, _| 3.0,
        );
        let w = GridFunction::sample_piecewise(
            &p,
            &q,
            &|e, x| x[0] * x[1] + (e % 2) as f64 * x[0],
            &|e, x| vec![x[1] + (e % 2) as f64, x[0]],
            &|_, _| 0.0,
        );
        let r = check_integration_by_parts(&p, &q, &v, &w).unwrap();
        assert!(r < 1e-12, "IBP residual {r} too large for piecewise pair");
    }

    #[test]
    fn linear_combination_subtracts() {
        let (p, q) = setup_1d();
        let a = GridFunction::sample_analytic(&p, &q, &|x| x[0].sin(), &|x| vec![x[0].cos()], &|x| {
            -x[0].sin()
        });
        let b = GridFunction::sample_analytic(&p, &q, &|x| 0.5 * x[0].sin(), &|x| {
            vec![0.5 * x[0].cos()]
        }, &|x| -0.5 * x[0].sin());
        let diff = GridFunction::linear_combination(&[(1.0, &a), (-2.0, &b)]).unwrap();
        assert!(l2_norm_domain(&q, &diff) < 1e-13);
        let tr = diff.trace(0).unwrap();
        assert!(tr.values[0].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn from_trig_matches_direct_sampling() {
        let (p, q) = setup_1d();
        let f = |x: &[f64]| (3.0 * x[0]).sin() + 0.25 * x[0].cos();
        let sizes = [9];
        let nodal: Vec<f64> = (0..9).map(|j| f(&[j as f64 * 2.0 * PI / 9.0])).collect();
        let ti = TrigInterpolant::from_nodal(&[0.0], &[2.0 * PI], &sizes, &nodal).unwrap();
        let gf = GridFunction::from_trig(&p, &q, &ti);
        let direct = GridFunction::sample_analytic(
            &p,
            &q,
            &f,
            &|x| vec![3.0 * (3.0 * x[0]).cos() - 0.25 * x[0].sin()],
            &|x| -9.0 * (3.0 * x[0]).sin() - 0.25 * x[0].cos(),
        );
        for e in 0..p.num_elements() {
            for (a, b) in gf.values(e).iter().zip(direct.values(e)) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-11);
            }
            for (a, b) in gf.laplacians(e).unwrap().iter().zip(direct.laplacians(e).unwrap()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
        let r = check_integration_by_parts(&p, &q, &gf, &direct).unwrap();
        assert!(r < 1e-9);
    }

    #[test]
    fn missing_data_is_reported() {
        let (p, q) = setup_1d();
        let vals = vec![vec![0.0; q.n_elem_nodes()]; p.num_elements()];
        let f = GridFunction::new(&p, &q, vals, None, None, None).unwrap();
        assert!(matches!(f.gradients(0), Err(crate::Error::MissingData(_))));
        assert!(matches!(f.trace(0), Err(crate::Error::MissingData(_))));
        assert!(!f.has_traces());
    }
}
