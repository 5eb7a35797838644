//! Gauss–Lobatto–Legendre (LGL) rules and nodal differentiation.
//!
//! An `n`-point LGL rule on `[-1, 1]` uses both endpoints plus the roots of
//! `P'_{n-1}`, and integrates polynomials up to degree `2n - 3` exactly.
//! Including the endpoints is what makes the rule attractive here: traces of
//! the nodal polynomial space on an element face are again nodal values, so
//! face quadrature and fine-space boundary forms need no interpolation.

use crate::{invalid, Result};
use nalgebra::DMatrix;

/// Nodes and weights of the `n`-point LGL rule on `[-1, 1]`, nodes ascending.
///
/// Requires `n >= 2`. Nodes are symmetric about the origin and weights are
/// positive; the rule is exact for polynomials of degree `<= 2n - 3`.
pub fn lgl_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(invalid!("LGL rule needs at least 2 nodes, got {n}"));
    }
    let deg = n - 1; // polynomial degree of P_{n-1}

    // Newton iteration on the interior extrema of P_{n-1}, starting from the
    // Chebyshev–Gauss–Lobatto points (descending; we flip to ascending last).
    let mut x: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * i as f64 / deg as f64).cos())
        .collect();
    let mut p_last = vec![0.0; n]; // P_{n-1}(x_i)
    for _ in 0..200 {
        let mut shift_max: f64 = 0.0;
        for i in 0..n {
            // Legendre recurrence up to P_{n-1}.
            let xi = x[i];
            let (mut pm, mut p) = (1.0, xi); // P_0, P_1
            for k in 2..=deg {
                let pk = ((2 * k - 1) as f64 * xi * p - (k - 1) as f64 * pm) / k as f64;
                pm = p;
                p = pk;
            }
            if deg == 1 {
                p = xi;
                pm = 1.0;
            }
            // Newton step for the equation (1 - x^2) P'_{n-1}(x) = 0 in the
            // fixed-point form of von Winckel's classic lglnodes routine.
            let step = (xi * p - pm) / (n as f64 * p);
            x[i] = xi - step;
            shift_max = shift_max.max(step.abs());
            p_last[i] = p;
        }
        if shift_max < 1e-15 {
            break;
        }
    }
    // Recompute P_{n-1} at the converged nodes for the weights.
    for i in 0..n {
        let xi = x[i];
        let (mut pm, mut p) = (1.0, xi);
        for k in 2..=deg {
            let pk = ((2 * k - 1) as f64 * xi * p - (k - 1) as f64 * pm) / k as f64;
            pm = p;
            p = pk;
        }
        let _ = pm;
        if deg == 1 {
            p = xi;
        }
        p_last[i] = p;
    }

    let mut w: Vec<f64> = (0..n)
        .map(|i| 2.0 / ((deg * n) as f64 * p_last[i] * p_last[i]))
        .collect();

    // Enforce exact symmetry (the iteration is symmetric only up to round-off).
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let mid = 0.5 * (x[i] - x[j]);
        x[i] = mid;
        x[j] = -mid;
        let wm = 0.5 * (w[i] + w[j]);
        w[i] = wm;
        w[j] = wm;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x.reverse();
    w.reverse();
    x[0] = -1.0;
    x[n - 1] = 1.0;
    Ok((x, w))
}

/// Map a rule on `[-1, 1]` to the interval `[a, b]`.
pub fn map_rule(nodes: &[f64], weights: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let x = nodes.iter().map(|&t| mid + half * t).collect();
    let w = weights.iter().map(|&w| w * half).collect();
    (x, w)
}

/// Differentiation matrix `D[i][j] = ℓ_j'(x_i)` of the Lagrange basis on the
/// given (distinct) nodes, via barycentric weights with the negative-sum
/// trick on the diagonal.
///
/// `D * f_nodes` returns nodal values of the derivative of the interpolant.
pub fn differentiation_matrix(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    // Barycentric weights c_j = 1 / prod_{k != j} (x_j - x_k).
    let mut c = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                c[j] *= nodes[j] - nodes[k];
            }
        }
        c[j] = 1.0 / c[j];
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (c[j] / c[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    d
}
