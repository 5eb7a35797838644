//! Trigonometric interpolation on periodic boxes.
//!
//! A [`TrigInterpolant`] stores the Fourier coefficients of a real function
//! sampled on a uniform tensor grid over a box `[o_1, o_1+L_1] × …` that the
//! function is assumed to be periodic on. Odd per-dimension grid sizes are
//! required so frequencies come in symmetric pairs `k = -(M-1)/2 … (M-1)/2`
//! with no unmatched Nyquist mode; interpolants of real data are then exactly
//! real and differentiation is unambiguous.
//!
//! Evaluation is exact spectral arithmetic: gradients multiply coefficients
//! by `i g`, Laplacians by `-|g|²`, where `g = 2πk/L`. The workhorse is
//! [`TrigInterpolant::eval_grid`], which evaluates on a tensor product of
//! per-axis coordinates by dimension-wise contraction — this covers element
//! quadrature grids, face grids (one axis pinned to a single coordinate), and
//! the uniform interior grids used by the bubble solves. Grids are the common
//! case; [`TrigInterpolant::eval_points`] handles scattered points at
//! `O(points · modes)` cost for tests and diagnostics.
//!
//! Sizes here are modest (≤ 513 modes per dimension, dimension ≤ 3), so the
//! forward transform in [`TrigInterpolant::from_nodal`] is a dense DFT matrix
//! applied per dimension; no FFT is needed at these scales.

use crate::{invalid, Result};
use nalgebra::Complex;

/// Which derived quantity to evaluate from a Fourier representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalKind {
    /// Function values.
    Value,
    /// One Cartesian component of the gradient.
    Gradient(usize),
    /// The Laplacian `Δf`.
    Laplacian,
}

/// Fourier representation of a real periodic function on a box.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    origin: Vec<f64>,
    lengths: Vec<f64>,
    sizes: Vec<usize>,
    /// Row-major (last dimension fastest) complex coefficients; linear index
    /// `i` along a dimension of size `M` carries frequency `i` for
    /// `i ≤ (M-1)/2` and `i - M` beyond.
    coeffs: Vec<Complex<f64>>,
}

/// Signed frequency carried by linear index `i` in a dimension of odd size `m`.
fn freq(i: usize, m: usize) -> i64 {
    if i <= (m - 1) / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

impl TrigInterpolant {
    /// Interpolate nodal samples on the uniform grid
    /// `x_j = origin + j·L/M` (row-major, last dimension fastest, `j_a = 0 … M_a-1`).
    ///
    /// All `sizes` must be odd and `nodal.len()` must equal their product.
    pub fn from_nodal(origin: &[f64], lengths: &[f64], sizes: &[usize], nodal: &[f64]) -> Result<Self> {
        let dim = lengths.len();
        if dim == 0 || dim > 3 {
            return Err(invalid!("interpolant dimension must be 1..=3, got {dim}"));
        }
        if origin.len() != dim || sizes.len() != dim {
            return Err(invalid!("origin/lengths/sizes dimension mismatch"));
        }
        if let Some(&m) = sizes.iter().find(|&&m| m % 2 == 0 || m == 0) {
            return Err(invalid!("grid sizes must be odd and positive, got {m}"));
        }
        let total: usize = sizes.iter().product();
        if nodal.len() != total {
            return Err(invalid!("expected {total} nodal values, got {}", nodal.len()));
        }

        let mut data: Vec<Complex<f64>> = nodal.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut shape = sizes.to_vec();
        for axis in 0..dim {
            let m = sizes[axis];
            // DFT matrix row k, column j: exp(-i 2π k j / M) / M.
            let mut mat = vec![Complex::new(0.0, 0.0); m * m];
            for k in 0..m {
                let kk = freq(k, m) as f64;
                for j in 0..m {
                    let phase = -2.0 * std::f64::consts::PI * kk * j as f64 / m as f64;
                    mat[k * m + j] = Complex::new(phase.cos() / m as f64, phase.sin() / m as f64);
                }
            }
            data = apply_along(&data, &mut shape, axis, &mat, m);
        }
        Ok(Self { origin: origin.to_vec(), lengths: lengths.to_vec(), sizes: sizes.to_vec(), coeffs: data })
    }

    /// The interpolant of a constant (a single zero-frequency mode).
    pub fn constant(origin: &[f64], lengths: &[f64], value: f64) -> Result<Self> {
        let dim = lengths.len();
        TrigInterpolant::from_nodal(origin, lengths, &vec![1; dim], &[value])
    }

    /// The interpolant of a constant on a grid of the given `sizes`: all
    /// coefficients are exactly zero except the zero-frequency one. Shapes
    /// then match other interpolants on the same grid, so coefficient arrays
    /// can be combined linearly.
    pub fn constant_on_grid(origin: &[f64], lengths: &[f64], sizes: &[usize], value: f64) -> Result<Self> {
        let mut ti = TrigInterpolant::from_nodal(
            origin,
            lengths,
            sizes,
            &vec![0.0; sizes.iter().product()],
        )?;
        ti.coeffs[0] = Complex::new(value, 0.0);
        Ok(ti)
    }

    /// Linear combination `Σ wᵢ fᵢ` of interpolants sharing one grid (same
    /// box, origin, and sizes).
    pub fn linear_combination(parts: &[(f64, &TrigInterpolant)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| invalid!("empty linear combination"))?;
        for (_, ti) in parts {
            if ti.sizes != first.sizes || ti.lengths != first.lengths || ti.origin != first.origin {
                return Err(crate::Error::ShapeMismatch(
                    "interpolants in a linear combination must share their grid".into(),
                ));
            }
        }
        let mut coeffs = vec![Complex::new(0.0, 0.0); first.coeffs.len()];
        for (w, ti) in parts {
            for (acc, c) in coeffs.iter_mut().zip(&ti.coeffs) {
                *acc += *w * c;
            }
        }
        Ok(Self {
            origin: first.origin.clone(),
            lengths: first.lengths.clone(),
            sizes: first.sizes.clone(),
            coeffs,
        })
    }

    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    /// Box origin.
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Box side lengths (the periods).
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Modes per dimension.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Raw coefficients (row-major, last dimension fastest).
    pub fn coeffs(&self) -> &[Complex<f64>] {
        &self.coeffs
    }

    /// Zero every coefficient smaller than `rel_tol` times the largest
    /// magnitude. Spectrally accurate fields decay exponentially and cross
    /// any such threshold within a few modes, so this strips a flat solver
    /// noise floor without altering the field; left in place, that floor is
    /// amplified by `|k|²` in Laplacian evaluations near the bandwidth edge.
    pub fn truncate_small(&mut self, rel_tol: f64) {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = rel_tol * max;
        for c in &mut self.coeffs {
            if c.norm() < cut {
                *c = Complex::new(0.0, 0.0);
            }
        }
    }

    /// `‖f‖²_{L²(box)} = |box| Σ_k |c_k|²` (Parseval).
    pub fn l2_norm_sq(&self) -> f64 {
        let vol: f64 = self.lengths.iter().product();
        vol * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Angular frequency vector `g = 2πk/L` of the coefficient with
    /// row-major linear index `idx`.
    fn freq_vector(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for a in (0..self.sizes.len()).rev() {
            let m = self.sizes[a];
            let i = rem % m;
            rem /= m;
            out[a] = 2.0 * std::f64::consts::PI * freq(i, m) as f64 / self.lengths[a];
        }
    }

    /// Coefficients with the spectral weight of `kind` applied.
    fn weighted_coeffs(&self, kind: EvalKind) -> Vec<Complex<f64>> {
        let dim = self.dim();
        if let EvalKind::Gradient(c) = kind {
            assert!(c < dim, "gradient component {c} out of range for dimension {dim}");
        }
        let mut g = vec![0.0; dim];
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                self.freq_vector(idx, &mut g);
                match kind {
                    EvalKind::Value => c,
                    EvalKind::Gradient(comp) => Complex::new(0.0, g[comp]) * c,
                    EvalKind::Laplacian => {
                        let g2: f64 = g.iter().map(|&gi| gi * gi).sum();
                        -g2 * c
                    }
                }
            })
            .collect()
    }

    /// Evaluate on the tensor grid spanned by `axis_coords` (global
    /// coordinates, one list per dimension). The result is row-major with the
    /// last dimension fastest — the same ordering the mesh quadrature uses.
    ///
    /// Coordinates need not lie inside the box; the evaluation is periodic.
    pub fn eval_grid(&self, axis_coords: &[Vec<f64>], kind: EvalKind) -> Vec<f64> {
        let dim = self.dim();
        assert_eq!(axis_coords.len(), dim, "coordinate lists must match dimension");
        let mut data = self.weighted_coeffs(kind);
        let mut shape = self.sizes.clone();
        for axis in 0..dim {
            let m = self.sizes[axis];
            let pts = &axis_coords[axis];
            let mut mat = vec![Complex::new(0.0, 0.0); pts.len() * m];
            for (p, &x) in pts.iter().enumerate() {
                let t = x - self.origin[axis];
                for i in 0..m {
                    let g = 2.0 * std::f64::consts::PI * freq(i, m) as f64 / self.lengths[axis];
                    let phase = g * t;
                    mat[p * m + i] = Complex::new(phase.cos(), phase.sin());
                }
            }
            data = apply_along(&data, &mut shape, axis, &mat, pts.len());
        }
        data.into_iter().map(|c| c.re).collect()
    }

    /// Evaluate at scattered points (`pts` flattened as `point*dim + c`).
    ///
    /// Cost is `O(points · modes)`; meant for spot checks, not bulk sampling.
    pub fn eval_points(&self, pts: &[f64], kind: EvalKind) -> Vec<f64> {
        let dim = self.dim();
        assert_eq!(pts.len() % dim, 0, "flattened points must be a multiple of dim");
        let weighted = self.weighted_coeffs(kind);
        let npts = pts.len() / dim;
        let mut out = Vec::with_capacity(npts);
        let mut g = vec![0.0; dim];
        for p in 0..npts {
            let x = &pts[p * dim..(p + 1) * dim];
            let mut acc = Complex::new(0.0, 0.0);
            for (idx, &c) in weighted.iter().enumerate() {
                self.freq_vector(idx, &mut g);
                let phase: f64 = (0..dim).map(|a| g[a] * (x[a] - self.origin[a])).sum();
                acc += c * Complex::new(phase.cos(), phase.sin());
            }
            out.push(acc.re);
        }
        out
    }
}

/// Contract `mat` (`p_count × shape[axis]`, row-major) against `data` along
/// `axis`. Returns the new flat array and updates `shape[axis] = p_count`.
fn apply_along(
    data: &[Complex<f64>],
    shape: &mut [usize],
    axis: usize,
    mat: &[Complex<f64>],
    p_count: usize,
) -> Vec<Complex<f64>> {
    let m_count = shape[axis];
    let pre: usize = shape[..axis].iter().product();
    let post: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex::new(0.0, 0.0); pre * p_count * post];
    for a in 0..pre {
        for p in 0..p_count {
            let ob = (a * p_count + p) * post;
            for m in 0..m_count {
                let c = mat[p * m_count + m];
                let ib = (a * m_count + m) * post;
                for q in 0..post {
                    out[ob + q] += c * data[ib + q];
                }
            }
        }
    }
    shape[axis] = p_count;
    out
}
