//! Structured triangulations of rectangular domains.
//!
//! Nodes are numbered row by row from the lower-left corner, so node `(i, j)`
//! of the `(nx + 1) x (ny + 1)` grid has index `j * (nx + 1) + i`. Every grid
//! cell is split into two counterclockwise triangles.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Side of the rectangle a boundary facet lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Top,
    Bottom,
    Left,
    Right,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Top,
        BoundaryTag::Bottom,
        BoundaryTag::Left,
        BoundaryTag::Right,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Top => "top",
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Left => "left",
            BoundaryTag::Right => "right",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "top" => Some(BoundaryTag::Top),
            "bottom" => Some(BoundaryTag::Bottom),
            "left" => Some(BoundaryTag::Left),
            "right" => Some(BoundaryTag::Right),
            _ => None,
        }
    }

    /// Outward unit normal of the side.
    pub fn normal(&self) -> Vec2 {
        match self {
            BoundaryTag::Top => Vec2::new(0.0, 1.0),
            BoundaryTag::Bottom => Vec2::new(0.0, -1.0),
            BoundaryTag::Left => Vec2::new(-1.0, 0.0),
            BoundaryTag::Right => Vec2::new(1.0, 0.0),
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How grid cells are cut into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalPattern {
    /// Every cell is cut along the diagonal from its lower-left to upper-right corner.
    #[default]
    Uniform,
    /// Cut direction alternates in a checkerboard; mirror symmetric about the
    /// vertical (horizontal) midline when `nx` (`ny`) is even.
    Alternating,
}

impl DiagonalPattern {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagonalPattern::Uniform => "uniform",
            DiagonalPattern::Alternating => "alternating",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "uniform" => Some(DiagonalPattern::Uniform),
            "alternating" => Some(DiagonalPattern::Alternating),
            _ => None,
        }
    }
}

/// A boundary edge: its two nodes (in the counterclockwise order of the
/// owning element), the owning element and the side it lies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub nodes: [usize; 2],
    pub element: usize,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Vec2>,
    pub elements: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub pattern: DiagonalPattern,
}

/// Generates the `nx x ny` structured triangulation of `[0, lx] x [0, ly]`.
pub fn generate_rect_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh, MeshError> {
    Mesh::rectangle(lx, ly, nx, ny, DiagonalPattern::Uniform)
}

impl Mesh {
    pub fn rectangle(
        lx: f64,
        ly: f64,
        nx: usize,
        ny: usize,
        pattern: DiagonalPattern,
    ) -> Result<Mesh, MeshError> {
        if !(lx.is_finite() && lx > 0.0) || !(ly.is_finite() && ly > 0.0) {
            return Err(MeshError::InvalidArgument(format!(
                "extents must be positive and finite, got {lx} x {ly}"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(MeshError::InvalidArgument(format!(
                "subdivisions must be at least 1, got {nx} x {ny}"
            )));
        }

        let stride = nx + 1;
        let mut nodes = Vec::with_capacity(stride * (ny + 1));
        for j in 0..=ny {
            // pin the last row/column to the exact extent
            let y = if j == ny { ly } else { ly * j as f64 / ny as f64 };
            for i in 0..=nx {
                let x = if i == nx { lx } else { lx * i as f64 / nx as f64 };
                nodes.push(Vec2::new(x, y));
            }
        }

        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let n00 = j * stride + i;
                let n10 = n00 + 1;
                let n01 = n00 + stride;
                let n11 = n01 + 1;
                let forward = match pattern {
                    DiagonalPattern::Uniform => true,
                    DiagonalPattern::Alternating => (i + j) % 2 == 0,
                };
                if forward {
                    elements.push([n00, n10, n11]);
                    elements.push([n00, n11, n01]);
                } else {
                    elements.push([n00, n10, n01]);
                    elements.push([n10, n11, n01]);
                }
            }
        }

        let mut mesh = Mesh {
            nodes,
            elements,
            facets: Vec::new(),
            lx,
            ly,
            nx,
            ny,
            pattern,
        };
        mesh.facets = mesh.find_boundary_facets()?;
        Ok(mesh)
    }

    /// Boundary edges are the edges owned by exactly one element; each is
    /// tagged by comparing its coordinates with the domain extents.
    fn find_boundary_facets(&self) -> Result<Vec<Facet>, MeshError> {
        let mut owners: HashMap<(usize, usize), (usize, [usize; 2], usize)> = HashMap::new();
        for (e, tri) in self.elements.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                owners
                    .entry(key)
                    .and_modify(|entry| entry.2 += 1)
                    .or_insert((e, [a, b], 1));
            }
        }

        let tol = 1e-12 * self.lx.max(self.ly);
        let mut facets: Vec<Facet> = Vec::new();
        for (element, nodes, count) in owners.into_values() {
            if count != 1 {
                continue;
            }
            let pa = self.nodes[nodes[0]];
            let pb = self.nodes[nodes[1]];
            let on = |f: &dyn Fn(Vec2) -> bool| f(pa) && f(pb);
            let tag = if on(&|p| (p.y - self.ly).abs() <= tol) {
                BoundaryTag::Top
            } else if on(&|p| p.y.abs() <= tol) {
                BoundaryTag::Bottom
            } else if on(&|p| p.x.abs() <= tol) {
                BoundaryTag::Left
            } else if on(&|p| (p.x - self.lx).abs() <= tol) {
                BoundaryTag::Right
            } else {
                return Err(MeshError::InvalidArgument(format!(
                    "boundary edge ({}, {}) does not lie on a side of the rectangle",
                    nodes[0], nodes[1]
                )));
            };
            facets.push(Facet {
                nodes,
                element,
                tag,
            });
        }
        facets.sort_by_key(|f| (f.tag, f.nodes[0].min(f.nodes[1]), f.nodes[0].max(f.nodes[1])));
        Ok(facets)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn element_coords(&self, e: usize) -> [Vec2; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_coords(e);
        0.5 * (b - a).perp(&(c - a))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.signed_area(e)).sum()
    }

    pub fn centroid(&self, e: usize) -> Vec2 {
        let [a, b, c] = self.element_coords(e);
        (a + b + c) / 3.0
    }

    pub fn facets_with_tag(&self, tag: BoundaryTag) -> Vec<&Facet> {
        self.facets.iter().filter(|f| f.tag == tag).collect()
    }

    /// Sorted, deduplicated nodes lying on the facets of a side.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .facets
            .iter()
            .filter(|f| f.tag == tag)
            .flat_map(|f| f.nodes)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn facet_length(&self, facet: &Facet) -> f64 {
        (self.nodes[facet.nodes[1]] - self.nodes[facet.nodes[0]]).norm()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let tol = 1e-12 * self.lx.max(self.ly);
        p.x >= -tol && p.x <= self.lx + tol && p.y >= -tol && p.y <= self.ly + tol
    }

    /// Finds the element containing `p` and the barycentric coordinates of `p`
    /// in it. Uses the grid structure, so this is O(1).
    pub fn locate(&self, p: Vec2) -> Option<(usize, [f64; 3])> {
        if !self.contains(p) {
            return None;
        }
        let hx = self.lx / self.nx as f64;
        let hy = self.ly / self.ny as f64;
        let i = ((p.x / hx).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((p.y / hy).floor().max(0.0) as usize).min(self.ny - 1);
        let cell = j * self.nx + i;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for e in [2 * cell, 2 * cell + 1] {
            let bary = self.barycentric(e, p);
            let worst = bary.iter().cloned().fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, _, w)| worst > w) {
                best = Some((e, bary, worst));
            }
        }
        best.map(|(e, bary, _)| (e, bary))
    }

    pub fn barycentric(&self, e: usize, p: Vec2) -> [f64; 3] {
        let [a, b, c] = self.element_coords(e);
        let det = (b - a).perp(&(c - a));
        let l1 = (p - a).perp(&(c - a)) / det;
        let l2 = (b - a).perp(&(p - a)) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Interpolates a nodal field at an arbitrary point of the domain.
    pub fn interpolate(&self, field: &[f64], p: Vec2) -> Option<f64> {
        let (e, bary) = self.locate(p)?;
        let tri = self.elements[e];
        Some((0..3).map(|k| bary[k] * field[tri[k]]).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_mesh() {
        let m = generate_rect_mesh(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.facets.len(), 4);
        assert_eq!(m.facets_with_tag(BoundaryTag::Top).len(), 1);
    }

    #[test]
    fn counting_identity() {
        let m = generate_rect_mesh(1e-3, 1e-3, 10, 10).unwrap();
        assert_eq!(m.n_nodes(), 121);
        assert_eq!(m.n_elements(), 200);
        assert_eq!(m.facets_with_tag(BoundaryTag::Bottom).len(), 10);
    }

    #[test]
    fn area_sums_to_rectangle() {
        for pattern in [DiagonalPattern::Uniform, DiagonalPattern::Alternating] {
            let m = Mesh::rectangle(0.012, 0.006, 24, 12, pattern).unwrap();
            let expected = 0.012 * 0.006;
            assert!(((m.total_area() - expected) / expected).abs() < 1e-12);
            assert!((0..m.n_elements()).all(|e| m.signed_area(e) > 0.0));
        }
    }

    #[test]
    fn tagged_facets_lie_on_their_side() {
        let m = generate_rect_mesh(2.0, 3.0, 5, 7).unwrap();
        for f in m.facets_with_tag(BoundaryTag::Top) {
            for n in f.nodes {
                assert!((m.nodes[n].y - 3.0).abs() <= 1e-14);
            }
        }
        for f in m.facets_with_tag(BoundaryTag::Right) {
            for n in f.nodes {
                assert!((m.nodes[n].x - 2.0).abs() <= 1e-14);
            }
        }
        assert_eq!(m.facets_with_tag(BoundaryTag::Left).len(), 7);
        assert_eq!(m.nodes_with_tag(BoundaryTag::Left).len(), 8);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_rect_mesh(0.0, 1.0, 1, 1).is_err());
        assert!(generate_rect_mesh(1.0, -1.0, 1, 1).is_err());
        assert!(generate_rect_mesh(1.0, 1.0, 0, 1).is_err());
        assert!(generate_rect_mesh(f64::NAN, 1.0, 1, 1).is_err());
    }

    #[test]
    fn locate_and_interpolate_affine() {
        let m = generate_rect_mesh(2.0, 1.0, 4, 3).unwrap();
        let field: Vec<f64> = m.nodes.iter().map(|p| 1.0 + 2.0 * p.x - 3.0 * p.y).collect();
        for p in [Vec2::new(0.3, 0.7), Vec2::new(2.0, 1.0), Vec2::new(0.0, 0.0), Vec2::new(1.234, 0.5)] {
            let v = m.interpolate(&field, p).unwrap();
            assert!((v - (1.0 + 2.0 * p.x - 3.0 * p.y)).abs() < 1e-12);
        }
        assert!(m.locate(Vec2::new(2.1, 0.5)).is_none());
    }
}
