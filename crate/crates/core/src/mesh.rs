//! Structured triangular meshes on axis-aligned rectangles.
//!
//! Nodes are numbered row-major: node `(i, j)` of an `nx × ny` cell grid has
//! index `j·(nx+1) + i` and sits at `(x0 + i·dx, y0 + j·dy)`. Every cell is
//! split along the diagonal from its lower-left to its upper-right corner,
//! producing two counterclockwise triangles.

use serde::{Deserialize, Serialize};

/// An axis-aligned rectangle used for the domain, subdomain selections and
/// geometry features. Containment is closed on all edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        assert!(x0 <= x1 && y0 <= y1, "region bounds must be ordered: [{x0}, {x1}] x [{y0}, {y1}]");
        Region { x0, x1, y0, y1 }
    }

    /// Closed-interval membership test.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.x0 <= p[0] && p[0] <= self.x1 && self.y0 <= p[1] && p[1] <= self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Intersection with another region, or `None` when it is degenerate
    /// (empty interior).
    pub fn intersect(&self, other: &Region) -> Option<Region> {
        let x0 = self.x0.max(other.x0);
        let x1 = self.x1.min(other.x1);
        let y0 = self.y0.max(other.y0);
        let y1 = self.y1.min(other.y1);
        if x0 < x1 && y0 < y1 {
            Some(Region { x0, x1, y0, y1 })
        } else {
            None
        }
    }

    /// Whether the two regions overlap on a set of positive area.
    pub fn overlaps(&self, other: &Region) -> bool {
        self.intersect(other).is_some()
    }
}

/// Which side of the rectangle a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// An edge of the mesh lying on the domain boundary.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    /// Endpoint node indices, ordered along a counterclockwise traversal of
    /// the boundary.
    pub nodes: [usize; 2],
    pub side: Side,
}

/// A structured triangulation of a rectangle.
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Region,
    nx: usize,
    ny: usize,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

/// Builds the structured mesh with `nx × ny` cells (two triangles each).
pub fn build_structured_mesh(domain: Region, nx: usize, ny: usize) -> Mesh {
    assert!(nx > 0 && ny > 0, "need at least one cell in each direction");
    assert!(domain.area() > 0.0, "mesh domain must have positive area");
    let dx = domain.width() / nx as f64;
    let dy = domain.height() / ny as f64;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([domain.x0 + i as f64 * dx, domain.y0 + j as f64 * dy]);
        }
    }

    let node_at = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = node_at(i, j);
            let v10 = node_at(i + 1, j);
            let v01 = node_at(i, j + 1);
            let v11 = node_at(i + 1, j + 1);
            // Split along the lower-left to upper-right diagonal.
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { nodes: [node_at(i, 0), node_at(i + 1, 0)], side: Side::Bottom });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { nodes: [node_at(nx, j), node_at(nx, j + 1)], side: Side::Right });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge { nodes: [node_at(i + 1, ny), node_at(i, ny)], side: Side::Top });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge { nodes: [node_at(0, j + 1), node_at(0, j)], side: Side::Left });
    }

    Mesh { domain, nx, ny, nodes, triangles, boundary_edges }
}

impl Mesh {
    pub fn domain(&self) -> Region {
        self.domain
    }

    pub fn cells(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        self.nodes[idx]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Vertex coordinates of a triangle.
    pub fn triangle_coords(&self, t: &[usize; 3]) -> [[f64; 2]; 3] {
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    /// Signed area of a triangle (positive for counterclockwise vertices).
    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn triangle_centroid(&self, t: &[usize; 3]) -> [f64; 2] {
        let [a, b, c] = self.triangle_coords(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let a = self.nodes[e.nodes[0]];
        let b = self.nodes[e.nodes[1]];
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    pub fn edge_midpoint(&self, e: &BoundaryEdge) -> [f64; 2] {
        let a = self.nodes[e.nodes[0]];
        let b = self.nodes[e.nodes[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_cell_mesh() {
        let mesh = build_structured_mesh(Region::new(0.0, 1.0, 0.0, 1.0), 1, 1);
        assert_eq!(mesh.n_nodes(), 4);
        assert_eq!(mesh.triangles().len(), 2);
        assert_eq!(mesh.boundary_edges().len(), 4);
    }

    #[test]
    fn node_ordering_is_row_major() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 4, 2);
        // Node (i, j) = j*(nx+1) + i at (x0 + i dx, y0 + j dy).
        assert_eq!(mesh.node(0), [0.0, 0.0]);
        assert_eq!(mesh.node(3), [1.5, 0.0]);
        assert_eq!(mesh.node(5), [0.0, 0.5]);
        assert_eq!(mesh.node(7), [1.0, 0.5]);
        assert_eq!(mesh.node(14), [2.0, 1.0]);
    }

    #[test]
    fn benchmark_scale_mesh_counts() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 400, 200);
        assert_eq!(mesh.n_nodes(), 80_601);
        assert_eq!(mesh.triangles().len(), 160_000);
    }

    #[test]
    fn triangles_are_counterclockwise_and_tile_the_domain() {
        let mesh = build_structured_mesh(Region::new(-1.0, 3.0, 0.5, 2.0), 7, 5);
        let expected_each = (4.0 / 7.0) * (1.5 / 5.0) / 2.0;
        let mut total = 0.0;
        for t in mesh.triangles() {
            let area = mesh.triangle_area(t);
            assert!(area > 0.0, "triangle {t:?} is not counterclockwise");
            assert!((area - expected_each).abs() <= 1e-12 * expected_each);
            total += area;
        }
        assert!((total - mesh.domain().area()).abs() <= 1e-12 * mesh.domain().area());
    }

    #[test]
    fn boundary_edges_cover_the_perimeter() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 10, 4);
        assert_eq!(mesh.boundary_edges().len(), 2 * (10 + 4));
        let perimeter: f64 = mesh.boundary_edges().iter().map(|e| mesh.edge_length(e)).sum();
        assert!((perimeter - 6.0).abs() <= 1e-12);
        // Counterclockwise traversal: each edge ends where the next begins.
        let edges = mesh.boundary_edges();
        for k in 0..edges.len() {
            let next = &edges[(k + 1) % edges.len()];
            assert_eq!(edges[k].nodes[1], next.nodes[0]);
        }
        for e in edges {
            let mid = mesh.edge_midpoint(e);
            let on = match e.side {
                Side::Bottom => mid[1] == 0.0,
                Side::Top => mid[1] == 1.0,
                Side::Left => mid[0] == 0.0,
                Side::Right => mid[0] == 2.0,
            };
            assert!(on, "edge {:?} mislabeled {:?}", e.nodes, e.side);
        }
    }

    #[test]
    fn region_intersection_flags_degenerate_overlap() {
        let a = Region::new(0.0, 1.0, 0.0, 1.0);
        let b = Region::new(1.0, 2.0, 0.0, 1.0);
        assert!(a.intersect(&b).is_none(), "shared edge has no area");
        let c = Region::new(0.5, 1.5, 0.25, 0.75);
        let i = a.intersect(&c).unwrap();
        assert_eq!(i, Region::new(0.5, 1.0, 0.25, 0.75));
        assert!(a.contains([1.0, 1.0]), "containment is closed");
    }

    proptest! {
        #[test]
        fn structured_mesh_invariants(nx in 1usize..12, ny in 1usize..12) {
            let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), nx, ny);
            prop_assert_eq!(mesh.n_nodes(), (nx + 1) * (ny + 1));
            prop_assert_eq!(mesh.triangles().len(), 2 * nx * ny);
            prop_assert_eq!(mesh.boundary_edges().len(), 2 * (nx + ny));
            let total: f64 = mesh.triangles().iter().map(|t| mesh.triangle_area(t)).sum();
            prop_assert!((total - 2.0).abs() <= 1e-12 * 2.0);
            for t in mesh.triangles() {
                prop_assert!(mesh.triangle_area(t) > 0.0);
            }
        }
    }
}
