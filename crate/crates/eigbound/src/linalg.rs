//! Small dense linear-algebra helpers shared across the crate.
//!
//! Everything here wraps `nalgebra` with the conventions the rest of the
//! code relies on: eigenvalues sorted ascending, eigenvectors in columns with
//! a deterministic sign, and errors instead of panics when a factorization
//! encounters data that is not symmetric positive definite. Determinism
//! matters — two runs with the same configuration must produce bit-identical
//! reports, so nothing here depends on hash ordering or threading.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Largest absolute asymmetry `max |A_ij - A_ji|`.
pub fn symmetry_defect(a: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Fix the sign of every column so its entry of largest magnitude (lowest
/// index on ties) is positive. Symmetric eigensolvers return eigenvectors
/// with arbitrary signs; this makes them reproducible.
pub fn canonical_sign_columns(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let col = m.column(j);
        let mut best = 0;
        let mut best_abs = 0.0;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues ascending,
/// eigenvectors as matching orthonormal columns with canonical signs.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let eig = a.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("symmetric eigensolve produced non-finite eigenvalues".into()));
    }
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    canonical_sign_columns(&mut vectors);
    Ok((values, vectors))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_eigen_max(a: &DMatrix<f64>) -> Result<f64> {
    let (values, _) = sym_eigen(a)?;
    values.last().copied().ok_or_else(|| Error::Numerical("empty matrix".into()))
}

/// Generalized symmetric-definite eigenproblem `A x = λ B x` with `B`
/// symmetric positive definite, via the Cholesky reduction
/// `B = L Lᵀ`, `C = L⁻¹ A L⁻ᵀ`, `x = L⁻ᵀ y`.
///
/// Returns eigenvalues ascending and eigenvectors as columns, normalized so
/// `Xᵀ B X = I`, with canonical signs.
pub fn gen_sym_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "pencil matrices disagree: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("right-hand matrix of the pencil is not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    // z = L⁻¹ Aᵀ L⁻ᵀ = C for symmetric A; symmetrize to shed round-off.
    let c = 0.5 * (&z + z.transpose());
    let (values, yvecs) = sym_eigen(&c)?;
    let mut x = l
        .transpose()
        .solve_upper_triangular(&yvecs)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    canonical_sign_columns(&mut x);
    Ok((values, x))
}

/// Symmetric positive-definite square-root factors `(S^{1/2}, S^{-1/2})` via
/// eigendecomposition. Fails if the spectrum is not safely positive
/// (`λ_min ≤ rel_tol · λ_max`).
pub fn spd_sqrt_factors(s: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (values, q) = sym_eigen(s)?;
    let max = values.last().copied().unwrap_or(0.0);
    let min = values.first().copied().unwrap_or(0.0);
    if !(max > 0.0) || min <= rel_tol * max {
        return Err(Error::Numerical(format!(
            "matrix is not safely positive definite (λ_min = {min:.3e}, λ_max = {max:.3e})"
        )));
    }
    let n = s.nrows();
    let mut half = DMatrix::zeros(n, n);
    let mut inv_half = DMatrix::zeros(n, n);
    for k in 0..n {
        let r = values[k].sqrt();
        for i in 0..n {
            for j in 0..n {
                let qq = q[(i, k)] * q[(j, k)];
                half[(i, j)] += r * qq;
                inv_half[(i, j)] += qq / r;
            }
        }
    }
    Ok((half, inv_half))
}

/// `‖A x - λ B x‖_∞` for one generalized eigenpair (with `B = I` if `None`).
pub fn pencil_residual(a: &DMatrix<f64>, b: Option<&DMatrix<f64>>, lambda: f64, x: &DVector<f64>) -> f64 {
    let ax = a * x;
    let bx = match b {
        Some(b) => b * x,
        None => x.clone(),
    };
    (ax - lambda * bx).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eigen(&a).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-14);
        let s = 0.5f64.sqrt();
        // Canonical signs: first (lowest-index) dominant entry positive.
        assert_abs_diff_eq!(vecs[(0, 0)], s, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(1, 0)], -s, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(0, 1)], s, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(1, 1)], s, epsilon = 1e-14);
    }

    #[test]
    fn random_symmetric_eigen_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = 0.5 * (&raw + raw.transpose());
        let (vals, vecs) = sym_eigen(&a).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]), "eigenvalues sorted");
        for k in 0..n {
            let r = pencil_residual(&a, None, vals[k], &DVector::from(vecs.column(k).into_owned()));
            assert!(r < 1e-12, "residual {r} too large");
        }
        // Orthonormal columns.
        let gram = vecs.transpose() * &vecs;
        assert!((gram - DMatrix::identity(n, n)).amax() < 1e-12);
    }

    #[test]
    fn generalized_diagonal_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = gen_sym_eigen(&a, &b).unwrap();
        assert_abs_diff_eq!(vals[0], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-14);
        // B-orthonormal: xᵀ B x = 1 → first vector is (1/2, 0).
        assert_abs_diff_eq!(vecs[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(1, 1)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn generalized_random_pencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 25;
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = 0.5 * (&raw + raw.transpose());
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = &m * m.transpose() + DMatrix::identity(n, n);
        let (vals, vecs) = gen_sym_eigen(&a, &b).unwrap();
        for k in 0..n {
            let x = DVector::from(vecs.column(k).into_owned());
            let r = pencil_residual(&a, Some(&b), vals[k], &x);
            assert!(r < 1e-11, "pencil residual {r}");
        }
        let gram = vecs.transpose() * &b * &vecs;
        assert!((gram - DMatrix::identity(n, n)).amax() < 1e-11, "B-orthonormality");
    }

    #[test]
    fn rejects_indefinite_b() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(gen_sym_eigen(&a, &b), Err(Error::Numerical(_))));
    }

    #[test]
    fn sqrt_factors_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let s = &m * m.transpose() + 0.5 * DMatrix::identity(n, n);
        let (half, inv_half) = spd_sqrt_factors(&s, 1e-13).unwrap();
        assert!((&half * &half - &s).amax() < 1e-10);
        assert!((&half * &inv_half - DMatrix::identity(n, n)).amax() < 1e-10);
        // Singular input is rejected.
        let sing = DMatrix::from_fn(n, n, |i, j| if i == j && i > 0 { 1.0 } else { 0.0 });
        assert!(spd_sqrt_factors(&sing, 1e-13).is_err());
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        let mut a = DMatrix::identity(3, 3);
        assert_eq!(symmetry_defect(&a), 0.0);
        a[(0, 2)] = 1e-3;
        assert_abs_diff_eq!(symmetry_defect(&a), 1e-3, epsilon = 1e-18);
    }
}
