//! P1 finite element assembly on structured triangulations.
//!
//! All element integrals are closed-form for affine triangles, so no
//! quadrature error enters the operators:
//!
//! * stiffness: `K_ab = (b_a b_b + c_a c_b) / (4|T|)` from the barycentric
//!   gradient coefficients,
//! * mass: `|T|/6` on the diagonal, `|T|/12` off it,
//! * element load: `|T|/3` per vertex,
//! * boundary edge mass: `[[h/3, h/6], [h/6, h/3]]`, edge load `h/2` per node.
//!
//! Subdomain operators select triangles by centroid membership and boundary
//! edges by midpoint membership. On meshes that resolve the region boundary
//! this equals exact intersection.

use crate::mesh::{Mesh, Region};
use crate::sparse::CsrMatrix;
use nalgebra::DVector;

/// Stiffness matrix `∫ ∇φ_i · ∇φ_j` over the triangles whose centroid lies
/// in `region`.
pub fn assemble_stiffness(mesh: &Mesh, region: &Region) -> CsrMatrix {
    let mut triplets = Vec::new();
    for t in mesh.triangles() {
        if !region.contains(mesh.triangle_centroid(t)) {
            continue;
        }
        let [p0, p1, p2] = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        let b = [p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]];
        let c = [p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]];
        for a in 0..3 {
            for d in 0..3 {
                triplets.push((t[a], t[d], (b[a] * b[d] + c[a] * c[d]) / (4.0 * area)));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &triplets)
}

/// Mass matrix `∫ φ_i φ_j` over the triangles whose centroid lies in `region`.
pub fn assemble_mass(mesh: &Mesh, region: &Region) -> CsrMatrix {
    let mut triplets = Vec::new();
    for t in mesh.triangles() {
        if !region.contains(mesh.triangle_centroid(t)) {
            continue;
        }
        let area = mesh.triangle_area(t);
        for a in 0..3 {
            for d in 0..3 {
                let v = if a == d { area / 6.0 } else { area / 12.0 };
                triplets.push((t[a], t[d], v));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &triplets)
}

/// Load vector `∫ φ_i` over the triangles whose centroid lies in `region`.
pub fn assemble_load(mesh: &Mesh, region: &Region) -> DVector<f64> {
    let mut v = DVector::zeros(mesh.n_nodes());
    for t in mesh.triangles() {
        if !region.contains(mesh.triangle_centroid(t)) {
            continue;
        }
        let third = mesh.triangle_area(t) / 3.0;
        for &node in t {
            v[node] += third;
        }
    }
    v
}

/// Boundary mass matrix `∫_Γ φ_i φ_j` over the boundary edges whose midpoint
/// lies in `segment`.
pub fn assemble_boundary_mass(mesh: &Mesh, segment: &Region) -> CsrMatrix {
    let mut triplets = Vec::new();
    for e in mesh.boundary_edges() {
        if !segment.contains(mesh.edge_midpoint(e)) {
            continue;
        }
        let h = mesh.edge_length(e);
        let [a, b] = e.nodes;
        triplets.push((a, a, h / 3.0));
        triplets.push((a, b, h / 6.0));
        triplets.push((b, a, h / 6.0));
        triplets.push((b, b, h / 3.0));
    }
    CsrMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &triplets)
}

/// Boundary load vector `∫_Γ φ_i` over the boundary edges whose midpoint lies
/// in `segment`.
pub fn assemble_boundary_load(mesh: &Mesh, segment: &Region) -> DVector<f64> {
    let mut v = DVector::zeros(mesh.n_nodes());
    for e in mesh.boundary_edges() {
        if !segment.contains(mesh.edge_midpoint(e)) {
            continue;
        }
        let half = mesh.edge_length(e) / 2.0;
        v[e.nodes[0]] += half;
        v[e.nodes[1]] += half;
    }
    v
}

/// The full H1 inner product matrix `∫ ∇u·∇v + ∫ u v` on the whole domain.
pub fn h1_product(mesh: &Mesh) -> CsrMatrix {
    let domain = mesh.domain();
    assemble_stiffness(mesh, &domain).add(&assemble_mass(mesh, &domain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    fn unit_square() -> Mesh {
        build_structured_mesh(Region::new(0.0, 1.0, 0.0, 1.0), 1, 1)
    }

    #[test]
    fn unit_square_stiffness_matches_hand_integration() {
        let mesh = unit_square();
        let k = assemble_stiffness(&mesh, &mesh.domain()).to_dense();
        // Hand integration over the two CCW triangles gives unit diagonal
        // entries for every node of the single-cell mesh.
        for i in 0..4 {
            assert!((k[(i, i)] - 1.0).abs() <= 1e-15, "diag {i}: {}", k[(i, i)]);
        }
        // Horizontal and vertical neighbors couple with -1/2 ...
        assert!((k[(0, 1)] + 0.5).abs() <= 1e-15);
        assert!((k[(0, 2)] + 0.5).abs() <= 1e-15);
        assert!((k[(1, 3)] + 0.5).abs() <= 1e-15);
        // ... while the coupling across the diagonal edge cancels exactly on
        // right triangles, and opposite corners share no triangle.
        assert_eq!(k[(0, 3)], 0.0);
        assert_eq!(k[(1, 2)], 0.0);
    }

    #[test]
    fn element_mass_is_area_sixth_and_twelfth() {
        let mesh = unit_square();
        let m = assemble_mass(&mesh, &mesh.domain()).to_dense();
        // Node 1 belongs to one triangle of area 1/2.
        assert!((m[(1, 1)] - 0.5 / 6.0).abs() <= 1e-15);
        // Nodes 0 and 1 share exactly one triangle.
        assert!((m[(0, 1)] - 0.5 / 12.0).abs() <= 1e-15);
        // Nodes 0 and 3 share both triangles.
        assert!((m[(0, 3)] - 2.0 * 0.5 / 12.0).abs() <= 1e-15);
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 9, 5);
        let k = assemble_stiffness(&mesh, &mesh.domain());
        let ones = DVector::from_element(mesh.n_nodes(), 1.0);
        let sums = k.mul_vec(&ones);
        for i in 0..mesh.n_nodes() {
            assert!(sums[i].abs() <= 1e-12, "row {i} sums to {}", sums[i]);
        }
    }

    #[test]
    fn mass_entries_sum_to_region_area() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 8, 4);
        let ones = DVector::from_element(mesh.n_nodes(), 1.0);
        let full = assemble_mass(&mesh, &mesh.domain());
        assert!((full.bilinear(&ones, &ones) - 2.0).abs() <= 1e-12 * 2.0);
        // Grid-aligned subregion: centroid selection equals exact intersection.
        let half = Region::new(0.0, 1.0, 0.0, 1.0);
        let m = assemble_mass(&mesh, &half);
        assert!((m.bilinear(&ones, &ones) - 1.0).abs() <= 1e-12);
        let load = assemble_load(&mesh, &half);
        assert!((load.sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn centroid_membership_decides_offgrid_regions() {
        // dx = 0.5: the first cell's two triangles have centroid x = 1/3 and
        // 1/6, so a region ending at x = 0.3 picks exactly one of them per row.
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 4, 2);
        let strip = Region::new(0.0, 0.3, 0.0, 1.0);
        let load = assemble_load(&mesh, &strip);
        let per_triangle = mesh.triangle_area(&mesh.triangles()[0]);
        assert!((load.sum() - 2.0 * per_triangle).abs() <= 1e-14);
    }

    #[test]
    fn boundary_load_sums_to_perimeter() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 10, 5);
        let whole = mesh.domain();
        let r = assemble_boundary_load(&mesh, &whole);
        assert!((r.sum() - 6.0).abs() <= 1e-12);
        let m = assemble_boundary_mass(&mesh, &whole);
        let ones = DVector::from_element(mesh.n_nodes(), 1.0);
        assert!((m.bilinear(&ones, &ones) - 6.0).abs() <= 1e-12);
    }

    #[test]
    fn boundary_segment_selected_by_midpoint() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 10, 5);
        // Thin strip along the bottom-left: edges with midpoint x <= 0.6.
        let seg = Region::new(0.0, 0.6, 0.0, 0.0);
        let r = assemble_boundary_load(&mesh, &seg);
        assert!((r.sum() - 0.6).abs() <= 1e-12);
    }

    #[test]
    fn operators_are_bitwise_symmetric() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 7, 3);
        for m in [
            assemble_stiffness(&mesh, &mesh.domain()),
            assemble_mass(&mesh, &Region::new(0.3, 1.7, 0.2, 0.9)),
            assemble_boundary_mass(&mesh, &mesh.domain()),
            h1_product(&mesh),
        ] {
            let d = m.to_dense();
            assert_eq!(d, d.transpose(), "assembly must be exactly symmetric");
        }
    }

    #[test]
    fn empty_region_assembles_zero_operator() {
        let mesh = build_structured_mesh(Region::new(0.0, 2.0, 0.0, 1.0), 4, 2);
        let outside = Region::new(5.0, 6.0, 5.0, 6.0);
        assert_eq!(assemble_stiffness(&mesh, &outside).nnz(), 0);
        assert_eq!(assemble_load(&mesh, &outside).sum(), 0.0);
    }
}
