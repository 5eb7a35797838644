//! Tensor-product LGL quadrature on every element and face of a partition.
//!
//! Element rules are the `order`-point LGL rule per dimension; face rules are
//! the same rule restricted to the `d-1` tangential dimensions. In 1-D a face
//! rule degenerates to a single point with weight 1, so "integrals" over ∂κ
//! reduce to sums of point values — the convention all jump and trace norms
//! in this crate rely on.
//!
//! Node ordering is row-major over dimensions with the last dimension
//! fastest, both on elements and (over the tangential dimensions) on faces.
//! Since LGL nodes include the interval endpoints, the nodes of a face are
//! exactly the element nodes whose `axis` index is first or last; see
//! [`QuadGrid::elem_face_node_indices`].

use super::{lgl, Partition};
use crate::{invalid, Result};

/// Quadrature nodes and weights for every element and face of a [`Partition`].
#[derive(Debug, Clone)]
pub struct QuadGrid {
    order: usize,
    dim: usize,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    /// `[e][axis][i]`: the 1-D node coordinates of element `e` along `axis`.
    elem_axis_coords: Vec<Vec<Vec<f64>>>,
    /// `[e][node*dim + c]`: flattened element nodes.
    elem_nodes: Vec<Vec<f64>>,
    /// `[e][node]`: element weights.
    elem_weights: Vec<Vec<f64>>,
    /// `[f][side][node*dim + c]`: face nodes as seen from each side's chart.
    face_nodes: Vec<[Vec<f64>; 2]>,
    /// `[f][node]`: face weights (shared by both sides).
    face_weights: Vec<Vec<f64>>,
}

/// Build tensor LGL quadrature of the given 1-D `order` on each element and
/// face of the partition. Requires `order >= 2`.
pub fn build_quadrature(partition: &Partition, order: usize) -> Result<QuadGrid> {
    if order < 2 {
        return Err(invalid!("quadrature order must be at least 2, got {order}"));
    }
    let dim = partition.dim();
    let (ref_nodes, ref_weights) = lgl::lgl_rule(order)?;

    let mut elem_axis_coords = Vec::with_capacity(partition.num_elements());
    let mut elem_nodes = Vec::with_capacity(partition.num_elements());
    let mut elem_weights = Vec::with_capacity(partition.num_elements());
    for elem in partition.elements() {
        let mut axis_coords = Vec::with_capacity(dim);
        let mut axis_weights = Vec::with_capacity(dim);
        for a in 0..dim {
            let (x, w) =
                lgl::map_rule(&ref_nodes, &ref_weights, elem.lo[a], elem.lo[a] + elem.widths[a]);
            axis_coords.push(x);
            axis_weights.push(w);
        }
        let (nodes, weights) = tensorize(&axis_coords, &axis_weights);
        elem_axis_coords.push(axis_coords);
        elem_nodes.push(nodes);
        elem_weights.push(weights);
    }

    let mut face_nodes = Vec::with_capacity(partition.num_faces());
    let mut face_weights = Vec::with_capacity(partition.num_faces());
    for face in partition.faces() {
        // Tangential rule: full rule on every dimension except the axis,
        // where the "rule" is the single face coordinate with weight 1.
        let mut sides: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut weights = Vec::new();
        for side in 0..2 {
            let mut axis_coords = Vec::with_capacity(dim);
            let mut axis_weights = Vec::with_capacity(dim);
            for a in 0..dim {
                if a == face.axis {
                    axis_coords.push(vec![face.pos[side]]);
                    axis_weights.push(vec![1.0]);
                } else {
                    let (x, w) =
                        lgl::map_rule(&ref_nodes, &ref_weights, face.lo[a], face.lo[a] + face.widths[a]);
                    axis_coords.push(x);
                    axis_weights.push(w);
                }
            }
            let (nodes, w) = tensorize(&axis_coords, &axis_weights);
            sides[side] = nodes;
            if side == 0 {
                weights = w;
            }
        }
        face_nodes.push(sides);
        face_weights.push(weights);
    }

    Ok(QuadGrid {
        order,
        dim,
        ref_nodes,
        ref_weights,
        elem_axis_coords,
        elem_nodes,
        elem_weights,
        face_nodes,
        face_weights,
    })
}

/// Row-major tensor product of per-axis nodes and weights (last axis fastest).
fn tensorize(axis_coords: &[Vec<f64>], axis_weights: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = axis_coords.len();
    let total: usize = axis_coords.iter().map(|c| c.len()).product();
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for a in 0..dim {
            nodes.push(axis_coords[a][idx[a]]);
            w *= axis_weights[a][idx[a]];
        }
        weights.push(w);
        // Increment the multi-index, last dimension fastest.
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < axis_coords[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    (nodes, weights)
}

impl QuadGrid {
    /// 1-D rule order `n` (nodes per dimension).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reference LGL nodes on `[-1, 1]`.
    pub fn ref_nodes(&self) -> &[f64] {
        &self.ref_nodes
    }

    /// Reference LGL weights on `[-1, 1]`.
    pub fn ref_weights(&self) -> &[f64] {
        &self.ref_weights
    }

    /// Nodes per element: `order^d`.
    pub fn n_elem_nodes(&self) -> usize {
        self.order.pow(self.dim as u32)
    }

    /// Nodes per face: `order^(d-1)` (one point in 1-D).
    pub fn n_face_nodes(&self) -> usize {
        self.order.pow(self.dim as u32 - 1)
    }

    /// Flattened nodes of element `e` (`node*dim + c` layout).
    pub fn elem_nodes(&self, e: usize) -> &[f64] {
        &self.elem_nodes[e]
    }

    /// Quadrature weights of element `e`.
    pub fn elem_weights(&self, e: usize) -> &[f64] {
        &self.elem_weights[e]
    }

    /// Per-axis 1-D node coordinates of element `e` (for tensor evaluation).
    pub fn elem_axis_coords(&self, e: usize) -> &[Vec<f64>] {
        &self.elem_axis_coords[e]
    }

    /// Flattened nodes of face `f` in the chart of side `side`.
    pub fn face_nodes(&self, f: usize, side: usize) -> &[f64] {
        &self.face_nodes[f][side]
    }

    /// Quadrature weights of face `f`.
    pub fn face_weights(&self, f: usize) -> &[f64] {
        &self.face_weights[f]
    }

    /// Per-axis coordinates of face `f` from side `side` (the `axis` entry is
    /// a single coordinate), for tensor evaluation of traces.
    pub fn face_axis_coords(&self, partition: &Partition, f: usize, side: usize) -> Vec<Vec<f64>> {
        let face = partition.face(f);
        (0..self.dim)
            .map(|a| {
                if a == face.axis {
                    vec![face.pos[side]]
                } else {
                    lgl::map_rule(&self.ref_nodes, &self.ref_weights, face.lo[a], face.lo[a] + face.widths[a]).0
                }
            })
            .collect()
    }

    /// Indices into the element node grid of the nodes lying on the face
    /// normal to `axis` (low side if `positive_side` is false), in face node
    /// order. LGL rules contain the endpoints, so traces of nodal data are
    /// exact restrictions.
    pub fn elem_face_node_indices(&self, axis: usize, positive_side: bool) -> Vec<usize> {
        let n = self.order;
        let fixed = if positive_side { n - 1 } else { 0 };
        let total = self.n_elem_nodes();
        let mut out = Vec::with_capacity(self.n_face_nodes());
        // Strides of the element grid, last dimension fastest.
        let mut stride = vec![1usize; self.dim];
        for a in (0..self.dim.saturating_sub(1)).rev() {
            stride[a] = stride[a + 1] * n;
        }
        for i in 0..total {
            if (i / stride[axis]) % n == fixed {
                out.push(i);
            }
        }
        out
    }

    /// `∫_κ v` for nodal values `v` on element `e`.
    pub fn integrate_elem(&self, e: usize, values: &[f64]) -> f64 {
        self.elem_weights[e].iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `(u, v)_κ` for nodal values on element `e`.
    pub fn inner_elem(&self, e: usize, u: &[f64], v: &[f64]) -> f64 {
        self.elem_weights[e].iter().zip(u.iter().zip(v)).map(|(w, (a, b))| w * a * b).sum()
    }

    /// `∫_F v` for nodal values `v` on face `f`.
    pub fn integrate_face(&self, f: usize, values: &[f64]) -> f64 {
        self.face_weights[f].iter().zip(values).map(|(w, v)| w * v).sum()
    }
}
