//! Uniform periodic tensor-product partitions and their quadrature.
//!
//! The domain is a periodic box `Ω = [0, L_1] × … × [0, L_d]` (`d ≤ 3`),
//! split into an axis-aligned uniform grid of rectangular elements. Because
//! the problem is periodic there is no boundary: every element face is an
//! interior face shared by exactly two elements (wrap-around faces pair the
//! last element of a row with the first).
//!
//! # Conventions
//!
//! * Elements are numbered lexicographically by multi-index, last dimension
//!   fastest (C order).
//! * Each face is normal to a coordinate axis and stores its two elements as
//!   `elems = [lower id, higher id]`. The unit normal used by jump and
//!   average operators is the outward normal of `elems[0]`, which is
//!   `normal_sign * e_axis`; `normal_sign` is `+1` except on wrap-around
//!   faces, where the lower-id element touches the face from the right and
//!   the sign is `-1`.
//! * The patch `ω(κ)` of an element is the element together with its
//!   face-sharing neighbors: 3 elements in 1-D, 5 in 2-D, 7 in 3-D. At least
//!   3 elements per dimension are required so that the two neighbors along an
//!   axis are distinct from the element itself.

pub mod lgl;
mod quadrature;

pub use quadrature::{build_quadrature, QuadGrid};

use crate::{invalid, Result};

/// One rectangular element `κ = [lo_1, lo_1 + h_1] × …`.
#[derive(Debug, Clone)]
pub struct Element {
    /// Lower corner of the element box.
    pub lo: Vec<f64>,
    /// Side lengths `h_j` of the element box.
    pub widths: Vec<f64>,
    /// Multi-index of the element in the grid.
    pub index: Vec<usize>,
}

impl Element {
    /// Volume `|κ|` of the element.
    pub fn volume(&self) -> f64 {
        self.widths.iter().product()
    }

    /// Longest side of the element.
    pub fn diameter_max(&self) -> f64 {
        self.widths.iter().cloned().fold(0.0, f64::max)
    }
}

/// An interior face shared by two elements, normal to a coordinate axis.
#[derive(Debug, Clone)]
pub struct Face {
    /// Coordinate axis the face is normal to.
    pub axis: usize,
    /// The two adjacent element ids, `elems[0] < elems[1]`.
    pub elems: [usize; 2],
    /// Outward normal of `elems[0]` is `normal_sign * e_axis`.
    pub normal_sign: f64,
    /// Axis coordinate of the face as seen from each side's chart. The two
    /// entries agree except on wrap-around faces, where they differ by the
    /// domain period along `axis`.
    pub pos: [f64; 2],
    /// Lower corner of the face box (entry `axis` equals `pos[0]`).
    pub lo: Vec<f64>,
    /// Face box side lengths (entry `axis` is zero).
    pub widths: Vec<f64>,
    /// Surface measure `|F|`: product of the tangential widths (1 in 1-D).
    pub measure: f64,
}

impl Face {
    /// Whether this face wraps around the periodic boundary.
    pub fn is_wrap(&self) -> bool {
        self.pos[0] != self.pos[1]
    }
}

/// A uniform periodic tensor partition of the box `[0, L_1] × … × [0, L_d]`.
#[derive(Debug, Clone)]
pub struct Partition {
    lengths: Vec<f64>,
    counts: Vec<usize>,
    elements: Vec<Element>,
    faces: Vec<Face>,
    /// Per element: face ids ordered `[axis0−, axis0+, axis1−, axis1+, …]`.
    elem_faces: Vec<Vec<usize>>,
    /// Per element: sorted ids of the patch `ω(κ)` (element + face neighbors).
    patches: Vec<Vec<usize>>,
}

/// Build a uniform periodic partition of `[0, L_1] × … × [0, L_d]`.
///
/// `lengths` are the box side lengths (positive), `counts` the number of
/// elements per dimension (at least 3 each). Dimensions 1 through 3 are
/// supported.
pub fn build_partition(lengths: &[f64], counts: &[usize]) -> Result<Partition> {
    let dim = lengths.len();
    if dim == 0 || dim > 3 {
        return Err(invalid!("partition dimension must be 1..=3, got {dim}"));
    }
    if counts.len() != dim {
        return Err(invalid!(
            "lengths ({dim} dims) and counts ({} dims) disagree",
            counts.len()
        ));
    }
    if let Some(bad) = lengths.iter().find(|&&l| !(l.is_finite() && l > 0.0)) {
        return Err(invalid!("domain lengths must be positive and finite, got {bad}"));
    }
    if let Some(&bad) = counts.iter().find(|&&c| c < 3) {
        return Err(invalid!(
            "need at least 3 elements per dimension so patch neighbors are distinct, got {bad}"
        ));
    }

    let widths: Vec<f64> = lengths.iter().zip(counts).map(|(&l, &c)| l / c as f64).collect();
    let num_elems: usize = counts.iter().product();

    // Strides with the last dimension fastest.
    let mut strides = vec![1usize; dim];
    for a in (0..dim.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * counts[a + 1];
    }

    let mut elements = Vec::with_capacity(num_elems);
    for e in 0..num_elems {
        let mut index = vec![0usize; dim];
        let mut rem = e;
        for a in 0..dim {
            index[a] = rem / strides[a];
            rem %= strides[a];
        }
        let lo: Vec<f64> = (0..dim).map(|a| index[a] as f64 * widths[a]).collect();
        elements.push(Element { lo, widths: widths.clone(), index });
    }

    // One face per element and axis: the face on the element's + side.
    let mut faces = Vec::with_capacity(dim * num_elems);
    let mut elem_faces = vec![vec![usize::MAX; 2 * dim]; num_elems];
    for e in 0..num_elems {
        for axis in 0..dim {
            let elem = &elements[e];
            let wraps = elem.index[axis] + 1 == counts[axis];
            let mut nb_index = elem.index.clone();
            nb_index[axis] = (nb_index[axis] + 1) % counts[axis];
            let nb: usize = nb_index.iter().zip(&strides).map(|(i, s)| i * s).sum();

            let hi_pos = elem.lo[axis] + widths[axis];
            let (pair, normal_sign, pos) = if wraps {
                // Wrap face: the neighbor (id 0 of the row) is the lower id
                // and touches the face at its own lower edge (coordinate 0).
                ([nb, e], -1.0, [elements[nb].lo[axis], hi_pos])
            } else {
                ([e, nb], 1.0, [hi_pos, hi_pos])
            };

            let mut lo = elements[pair[0]].lo.clone();
            lo[axis] = pos[0];
            let mut fwidths = widths.clone();
            fwidths[axis] = 0.0;
            let measure: f64 = (0..dim).filter(|&a| a != axis).map(|a| widths[a]).product();

            let fid = faces.len();
            faces.push(Face { axis, elems: pair, normal_sign, pos, lo, widths: fwidths, measure });
            // This face is the + face of `e` and the − face of `nb`.
            elem_faces[e][2 * axis + 1] = fid;
            elem_faces[nb][2 * axis] = fid;
        }
    }

    let mut patches = Vec::with_capacity(num_elems);
    for e in 0..num_elems {
        let mut patch: Vec<usize> = vec![e];
        for &fid in &elem_faces[e] {
            let f = &faces[fid];
            patch.push(if f.elems[0] == e { f.elems[1] } else { f.elems[0] });
        }
        patch.sort_unstable();
        patch.dedup();
        patches.push(patch);
    }

    Ok(Partition { lengths: lengths.to_vec(), counts: counts.to_vec(), elements, faces, elem_faces, patches })
}

impl Partition {
    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    /// Domain side lengths.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Elements per dimension.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of elements.
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Total number of (interior) faces: `d` times the element count.
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Element by id.
    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    /// All elements.
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Face by id.
    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    /// All faces.
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face ids bounding element `e`, ordered `[axis0−, axis0+, axis1−, …]`.
    pub fn elem_faces(&self, e: usize) -> &[usize] {
        &self.elem_faces[e]
    }

    /// The patch `ω(κ)`: sorted ids of element `e` and its face neighbors.
    pub fn patch(&self, e: usize) -> &[usize] {
        &self.patches[e]
    }

    /// Which side (0 or 1) of face `f` element `e` is on.
    pub fn face_side(&self, f: usize, e: usize) -> Result<usize> {
        let face = &self.faces[f];
        if face.elems[0] == e {
            Ok(0)
        } else if face.elems[1] == e {
            Ok(1)
        } else {
            Err(invalid!("element {e} is not adjacent to face {f}"))
        }
    }

    /// Outward unit normal component of element `e` on face `f` (the normal
    /// is `± e_axis`; this returns the sign).
    pub fn outward_sign(&self, f: usize, e: usize) -> Result<f64> {
        let side = self.face_side(f, e)?;
        let face = &self.faces[f];
        Ok(if side == 0 { face.normal_sign } else { -face.normal_sign })
    }

    /// Total domain volume `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
}
