//! Planewave (Fourier collocation) solves of `-Δu + Vu = λu` on periodic
//! boxes, and the Gaussian-bump potentials they are driven by.
//!
//! The same solver serves two roles:
//!
//! * [`solve_reference`] computes the global spectrum on `Ω` to near machine
//!   precision — the "exact" oracle every error in the reports is measured
//!   against; eigenresiduals are recorded so reports can verify the oracle is
//!   genuinely finer than what it judges.
//! * [`solve_planewave`] on an *extended element* (an element plus its
//!   neighbor shell) produces the local eigenfunctions that the basis module
//!   restricts and orthonormalizes into the adaptive local basis. There the
//!   potential is the restriction of the global `V`, which is generally not
//!   periodic on the sub-box; the collocation simply treats its samples as
//!   periodic data. The resulting Gibbs layer hugs the sub-box boundary and
//!   is irrelevant after restriction to the central element.
//!
//! Collocation on a uniform grid with an odd number of points per dimension
//! makes the Hamiltonian real symmetric: the kinetic part is the circulant
//! `T[i,j] = (2/M) Σ_{k=1}^{K} g_k² cos(2πk(i-j)/M)` per dimension
//! (`g_k = 2πk/L`, `K = (M-1)/2`) extended by tensor sum, and the potential
//! is diagonal. Eigenvectors are nodal values of trigonometric polynomials;
//! they convert losslessly to [`TrigInterpolant`]s for later evaluation.

use crate::fields::GridFunction;
use crate::fourier::TrigInterpolant;
use crate::linalg;
use crate::mesh::{Partition, QuadGrid};
use crate::{invalid, Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// One periodic Gaussian well (or peak) of the potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianBump {
    /// Center of the bump inside the box.
    pub center: Vec<f64>,
    /// Standard-deviation-like width `σ` in `exp(-r²/(2σ²))`.
    pub width: f64,
    /// Signed magnitude (negative for wells).
    pub magnitude: f64,
}

/// A smooth periodic potential: a sum of Gaussian bumps, periodized by
/// summing over translated images, plus an optional constant offset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Period lengths of the box.
    pub lengths: Vec<f64>,
    /// The Gaussian bumps.
    pub bumps: Vec<GaussianBump>,
    /// Image-sum radius: images `n ∈ [-r, r]^d` are summed. With bump widths
    /// far below the period, radius 2 puts neglected images below 1e-14.
    #[serde(default = "default_image_radius")]
    pub image_radius: i32,
    /// Constant added to the potential everywhere (used e.g. by the
    /// shift-covariance checks; defaults to zero).
    #[serde(default)]
    pub offset: f64,
}

fn default_image_radius() -> i32 {
    2
}

impl PotentialSpec {
    /// A potential with the given bumps on a box with the given periods.
    pub fn new(lengths: Vec<f64>, bumps: Vec<GaussianBump>) -> Result<Self> {
        let spec = Self { lengths, bumps, image_radius: default_image_radius(), offset: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    /// The free potential `V ≡ 0`.
    pub fn free(lengths: Vec<f64>) -> Result<Self> {
        Self::new(lengths, Vec::new())
    }

    /// Check widths, lengths, and dimensions.
    pub fn validate(&self) -> Result<()> {
        let dim = self.lengths.len();
        if dim == 0 || dim > 3 {
            return Err(invalid!("potential dimension must be 1..=3, got {dim}"));
        }
        if self.lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(invalid!("period lengths must be positive and finite"));
        }
        if self.image_radius < 0 {
            return Err(invalid!("image radius must be non-negative"));
        }
        for (i, b) in self.bumps.iter().enumerate() {
            if b.center.len() != dim {
                return Err(invalid!("bump {i} center has wrong dimension"));
            }
            if !(b.width.is_finite() && b.width > 0.0) {
                return Err(invalid!("bump {i} width must be positive, got {}", b.width));
            }
            if !b.magnitude.is_finite() {
                return Err(invalid!("bump {i} magnitude must be finite"));
            }
        }
        Ok(())
    }

    /// A copy with `c` added to the potential everywhere.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.offset += c;
        out
    }

    /// Evaluate `V` at a point (any coordinates; the image sum covers points
    /// a neighbor-shell away from the fundamental box).
    pub fn value(&self, x: &[f64]) -> f64 {
        let dim = self.lengths.len();
        let mut total = self.offset;
        let r = self.image_radius as i64;
        for b in &self.bumps {
            // Sum over image offsets n ∈ [-r, r]^d, odometer-style.
            let mut n = vec![-r; dim];
            'images: loop {
                let mut dist_sq = 0.0;
                for a in 0..dim {
                    let d = x[a] - b.center[a] - n[a] as f64 * self.lengths[a];
                    dist_sq += d * d;
                }
                total += b.magnitude * (-dist_sq / (2.0 * b.width * b.width)).exp();
                for a in (0..dim).rev() {
                    n[a] += 1;
                    if n[a] <= r {
                        continue 'images;
                    }
                    n[a] = -r;
                    if a == 0 {
                        break 'images;
                    }
                }
                if dim == 0 {
                    break;
                }
            }
        }
        total
    }

    /// Evaluate `V` at flattened points (`point*dim + c` layout).
    pub fn sample_points(&self, pts: &[f64]) -> Vec<f64> {
        let dim = self.lengths.len();
        pts.chunks(dim).map(|x| self.value(x)).collect()
    }
}

/// The potential sampled on every element quadrature grid, with its minimum
/// `V_m` over all nodes. All energy norms and estimators use the shifted
/// potential `V - V_m ≥ 0`; eigenvalues stay unshifted.
#[derive(Debug, Clone)]
pub struct PotentialOnGrid {
    /// `[e][node]` values of `V`.
    pub elem_values: Vec<Vec<f64>>,
    /// `min` of `V` over all element quadrature nodes.
    pub min: f64,
}

/// Sample the potential on all element quadrature grids of the partition.
pub fn sample_on_quad(spec: &PotentialSpec, partition: &Partition, quad: &QuadGrid) -> Result<PotentialOnGrid> {
    spec.validate()?;
    if spec.lengths != partition.lengths() {
        return Err(Error::ShapeMismatch(
            "potential period lengths disagree with the partition domain".into(),
        ));
    }
    let mut elem_values = Vec::with_capacity(partition.num_elements());
    let mut min = f64::INFINITY;
    for e in 0..partition.num_elements() {
        let vals = spec.sample_points(quad.elem_nodes(e));
        for &v in &vals {
            min = min.min(v);
        }
        elem_values.push(vals);
    }
    Ok(PotentialOnGrid { elem_values, min })
}

/// The lowest eigenpairs of `-Δ + V` on one periodic box, as Fourier data.
#[derive(Debug, Clone)]
pub struct BoxSolution {
    /// Eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenfunctions, `L²(box)`-normalized, as trigonometric
    /// interpolants (evaluate anywhere, derivatives included).
    pub interpolants: Vec<TrigInterpolant>,
}

/// Solve `-Δu + Vu = λu` by Fourier collocation on the periodic box
/// `[origin, origin + lengths]` with `wavecount` modes per dimension (odd),
/// returning the `m` lowest eigenpairs.
///
/// The potential is evaluated through `spec` at the box's uniform grid — for
/// sub-boxes of the domain this is the restriction of the global potential,
/// which need not be periodic on the sub-box.
pub fn solve_planewave(
    spec: &PotentialSpec,
    origin: &[f64],
    lengths: &[f64],
    wavecount: usize,
    m: usize,
) -> Result<BoxSolution> {
    spec.validate()?;
    let dim = lengths.len();
    if origin.len() != dim {
        return Err(invalid!("origin/lengths dimension mismatch"));
    }
    if wavecount % 2 == 0 || wavecount < 3 {
        return Err(invalid!("wavecount must be odd and at least 3, got {wavecount}"));
    }
    if m < 1 {
        return Err(invalid!("need at least one eigenpair, got m = {m}"));
    }
    let total = wavecount.pow(dim as u32);
    if m > total {
        return Err(invalid!("requested {m} eigenpairs from a basis of {total} planewaves"));
    }

    // Per-dimension circulant kinetic stencil t_a[r].
    let half = (wavecount - 1) / 2;
    let mut stencils = Vec::with_capacity(dim);
    for a in 0..dim {
        let mut t = vec![0.0; wavecount];
        for (r, tr) in t.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 1..=half {
                let g = 2.0 * std::f64::consts::PI * k as f64 / lengths[a];
                let phase = 2.0 * std::f64::consts::PI * (k * r) as f64 / wavecount as f64;
                acc += 2.0 * g * g * phase.cos();
            }
            *tr = acc / wavecount as f64;
        }
        stencils.push(t);
    }

    // Uniform grid, row-major, last dimension fastest (matching from_nodal).
    let mut strides = vec![1usize; dim];
    for a in (0..dim.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * wavecount;
    }
    let grid_index = |flat: usize, a: usize| (flat / strides[a]) % wavecount;

    let mut vpot = Vec::with_capacity(total);
    let mut x = vec![0.0; dim];
    for i in 0..total {
        for a in 0..dim {
            x[a] = origin[a] + grid_index(i, a) as f64 * lengths[a] / wavecount as f64;
        }
        vpot.push(spec.value(&x));
    }

    // Dense Hamiltonian: kinetic tensor sum + diagonal potential.
    let mut h = DMatrix::zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            let mut hij = 0.0;
            for a in 0..dim {
                let mut same_others = true;
                for b in 0..dim {
                    if b != a && grid_index(i, b) != grid_index(j, b) {
                        same_others = false;
                        break;
                    }
                }
                if same_others {
                    let r = (grid_index(i, a) + wavecount - grid_index(j, a)) % wavecount;
                    hij += stencils[a][r];
                }
            }
            h[(i, j)] = hij;
        }
        h[(i, i)] += vpot[i];
    }

    let (values, vectors) = linalg::sym_eigen(&h)?;
    let vol: f64 = lengths.iter().product();
    let scale = (total as f64 / vol).sqrt();
    let mut interpolants = Vec::with_capacity(m);
    for k in 0..m {
        // Euclidean-normalized nodal vector → L²-normalized function: the
        // uniform-grid quadrature is exact for bandlimited data (Parseval).
        let col = vectors.column(k);
        let nodal: Vec<f64> = col.iter().map(|&v| v * scale).collect();
        interpolants.push(TrigInterpolant::from_nodal(origin, lengths, &vec![wavecount; dim], &nodal)?);
    }
    Ok(BoxSolution { eigenvalues: values[..m].to_vec(), interpolants })
}

/// The reference spectrum on the whole domain, sampled onto the partition.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    /// Eigenvalues `λ_1 ≤ … ≤ λ_m`.
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions on the mesh (values, gradients, Laplacians, traces),
    /// `‖u_i‖_Ω = 1`.
    pub fields: Vec<GridFunction>,
    /// The same eigenfunctions as Fourier interpolants.
    pub interpolants: Vec<TrigInterpolant>,
    /// Quadrature eigenresiduals `‖-Δu_i + Vu_i - λ_i u_i‖_Ω` — the quality
    /// certificate of the oracle.
    pub residual_norms: Vec<f64>,
}

/// Solve the global reference problem and sample it onto the partition's
/// quadrature. `wavecount` is per dimension and must be odd.
pub fn solve_reference(
    spec: &PotentialSpec,
    partition: &Partition,
    quad: &QuadGrid,
    wavecount: usize,
    m: usize,
) -> Result<ReferenceSolution> {
    if spec.lengths != partition.lengths() {
        return Err(Error::ShapeMismatch(
            "potential period lengths disagree with the partition domain".into(),
        ));
    }
    let origin = vec![0.0; partition.dim()];
    let sol = solve_planewave(spec, &origin, partition.lengths(), wavecount, m)?;
    let vgrid = sample_on_quad(spec, partition, quad)?;

    let mut fields = Vec::with_capacity(m);
    let mut residual_norms = Vec::with_capacity(m);
    for k in 0..m {
        let field = GridFunction::from_trig(partition, quad, &sol.interpolants[k]);
        // r = -Δu + Vu - λu on every element node, measured by quadrature.
        let mut acc = 0.0;
        for e in 0..partition.num_elements() {
            let vals = field.values(e);
            let laps = field.laplacians(e)?;
            let w = quad.elem_weights(e);
            let v = &vgrid.elem_values[e];
            for i in 0..w.len() {
                let r = -laps[i] + v[i] * vals[i] - sol.eigenvalues[k] * vals[i];
                acc += w[i] * r * r;
            }
        }
        residual_norms.push(acc.max(0.0).sqrt());
        fields.push(field);
    }
    Ok(ReferenceSolution {
        eigenvalues: sol.eigenvalues,
        fields,
        interpolants: sol.interpolants,
        residual_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::EvalKind;
    use crate::fields;
    use crate::mesh::{build_partition, build_quadrature};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn triple_well() -> PotentialSpec {
        let l = 2.0 * PI;
        let bumps = vec![
            GaussianBump { center: vec![0.9 * l / 3.0 * 0.15], width: 0.3, magnitude: -8.0 },
            GaussianBump { center: vec![0.9 * l / 3.0 * 1.15], width: 0.3, magnitude: -12.0 },
            GaussianBump { center: vec![0.9 * l / 3.0 * 2.15], width: 0.3, magnitude: -10.0 },
        ];
        PotentialSpec::new(vec![l], bumps).unwrap()
    }

    #[test]
    fn potential_is_periodic_and_matches_direct_sum() {
        let spec = triple_well();
        let l = 2.0 * PI;
        for &x in &[0.0, 0.7, 3.3, 5.9] {
            assert_abs_diff_eq!(spec.value(&[x]), spec.value(&[x + l]), epsilon = 1e-12);
            assert_abs_diff_eq!(spec.value(&[x]), spec.value(&[x - l]), epsilon = 1e-12);
            // Independent direct summation oracle.
            let mut oracle = 0.0;
            for b in &spec.bumps {
                for n in -2i32..=2 {
                    let d = x - b.center[0] - n as f64 * l;
                    oracle += b.magnitude * (-d * d / (2.0 * b.width * b.width)).exp();
                }
            }
            assert_abs_diff_eq!(spec.value(&[x]), oracle, epsilon = 1e-13);
        }
    }

    #[test]
    fn single_bump_value_at_center() {
        let l = 10.0;
        let spec = PotentialSpec::new(
            vec![l],
            vec![GaussianBump { center: vec![4.0], width: 0.5, magnitude: -1.0 }],
        )
        .unwrap();
        // At the center the value is -1 minus the (tiny) image tails.
        let tails: f64 = [-2i32, -1, 1, 2]
            .iter()
            .map(|&n| -(-(n as f64 * l).powi(2) / (2.0 * 0.25)).exp())
            .sum();
        assert_abs_diff_eq!(spec.value(&[4.0]), -1.0 + tails, epsilon = 1e-15);
        assert!((spec.value(&[4.0]) + 1.0).abs() < 1e-15, "image tails negligible here");
    }

    #[test]
    fn zero_magnitude_gives_free_potential() {
        let spec = PotentialSpec::new(
            vec![1.0, 1.0],
            vec![GaussianBump { center: vec![0.5, 0.5], width: 0.1, magnitude: 0.0 }],
        )
        .unwrap();
        assert_eq!(spec.value(&[0.3, 0.9]), 0.0);
    }

    #[test]
    fn rejects_bad_bumps() {
        assert!(PotentialSpec::new(
            vec![1.0],
            vec![GaussianBump { center: vec![0.0], width: 0.0, magnitude: 1.0 }]
        )
        .is_err());
        assert!(PotentialSpec::new(
            vec![1.0],
            vec![GaussianBump { center: vec![0.0, 0.0], width: 0.1, magnitude: 1.0 }]
        )
        .is_err());
    }

    #[test]
    fn free_spectrum_one_dimensional() {
        let spec = PotentialSpec::free(vec![2.0 * PI]).unwrap();
        let sol = solve_planewave(&spec, &[0.0], &[2.0 * PI], 31, 11).unwrap();
        let expect = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0, 16.0, 16.0, 25.0, 25.0];
        for (a, b) in sol.eigenvalues.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn free_spectrum_two_dimensional() {
        let l = 2.0 * PI;
        let spec = PotentialSpec::free(vec![l, l]).unwrap();
        let sol = solve_planewave(&spec, &[0.0, 0.0], &[l, l], 9, 9).unwrap();
        // |k|² over Z²: 0, then 1 four times, then 2 four times.
        let expect = [0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0];
        for (a, b) in sol.eigenvalues.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_shift_covariance() {
        let spec = triple_well();
        let shifted = spec.shifted(5.5);
        let a = solve_planewave(&spec, &[0.0], &[2.0 * PI], 81, 4).unwrap();
        let b = solve_planewave(&shifted, &[0.0], &[2.0 * PI], 81, 4).unwrap();
        let pts: Vec<f64> = (0..13).map(|i| i as f64 * 0.47).collect();
        for k in 0..4 {
            assert_abs_diff_eq!(b.eigenvalues[k] - a.eigenvalues[k], 5.5, epsilon = 1e-10);
            let ua = a.interpolants[k].eval_points(&pts, EvalKind::Value);
            let ub = b.interpolants[k].eval_points(&pts, EvalKind::Value);
            for (x, y) in ua.iter().zip(&ub) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interpolants_are_normalized_eigenfunctions() {
        let spec = triple_well();
        let sol = solve_planewave(&spec, &[0.0], &[2.0 * PI], 129, 3).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(sol.interpolants[k].l2_norm_sq(), 1.0, epsilon = 1e-12);
        }
        // Pointwise eigenequation residual at a few arbitrary points.
        let pts = [0.4, 2.0, 4.4];
        for k in 0..3 {
            let u = sol.interpolants[k].eval_points(&pts, EvalKind::Value);
            let lap = sol.interpolants[k].eval_points(&pts, EvalKind::Laplacian);
            for (i, &x) in pts.iter().enumerate() {
                let r = -lap[i] + spec.value(&[x]) * u[i] - sol.eigenvalues[k] * u[i];
                assert!(r.abs() < 1e-9, "pointwise residual {r} at x={x}");
            }
        }
    }

    #[test]
    fn reference_solution_gates() {
        let spec = triple_well();
        let p = build_partition(&[2.0 * PI], &[7]).unwrap();
        let q = build_quadrature(&p, 17).unwrap();
        let r = solve_reference(&spec, &p, &q, 129, 5).unwrap();
        // W-orthonormality through the broken quadrature inner product.
        for i in 0..5 {
            for j in 0..5 {
                let ip = fields::inner_domain(&q, &r.fields[i], &r.fields[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, expect, epsilon = 1e-10);
            }
        }
        for &res in &r.residual_norms {
            assert!(res < 1e-8, "reference residual {res} too large");
        }
        // Triple well keeps its negative states below the free spectrum.
        assert!(r.eigenvalues[0] < 0.0);
    }

    #[test]
    fn rejects_even_wavecount_and_oversized_m() {
        let spec = PotentialSpec::free(vec![1.0]).unwrap();
        assert!(solve_planewave(&spec, &[0.0], &[1.0], 8, 1).is_err());
        assert!(solve_planewave(&spec, &[0.0], &[1.0], 5, 6).is_err());
    }
}
