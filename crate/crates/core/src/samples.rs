//! Ready-made small models for tests, demos and validation runs.

use crate::assemble::{
    assemble_boundary_load, assemble_boundary_mass, assemble_load, assemble_mass, assemble_stiffness, h1_product,
};
use crate::mesh::{build_structured_mesh, Mesh, Region};
use crate::model::{AffineMatrix, AffineVector, FullOrderModel, ParameterBox, ThetaFunction, ThetaTerm};
use nalgebra::DVector;

/// A parameter-free Robin problem on the unit square whose exact solution is
/// the constant ambient value: `-Δu = 0`, `∇u·n = u_out - u` on the whole
/// boundary. Useful as a sanity anchor: the discrete solution is exactly
/// `u ≡ u_out`.
pub fn constant_robin_model(nx: usize, ny: usize, u_out: f64) -> FullOrderModel {
    let mesh = build_structured_mesh(Region::new(0.0, 1.0, 0.0, 1.0), nx, ny);
    let domain = mesh.domain();
    let a = AffineMatrix::new(vec![(
        ThetaFunction::constant(1.0, 0),
        assemble_stiffness(&mesh, &domain).add(&assemble_boundary_mass(&mesh, &domain)),
    )]);
    let l = AffineVector::new(vec![(
        ThetaFunction::constant(u_out, 0),
        assemble_boundary_load(&mesh, &domain),
    )]);
    let j = AffineVector::new(vec![(ThetaFunction::constant(1.0, 0), DVector::zeros(mesh.n_nodes()))]);
    let k = AffineMatrix::new(vec![(
        ThetaFunction::constant(0.5, 0),
        assemble_mass(&mesh, &domain),
    )]);
    let theta_term = ThetaTerm::new(1.0, DVector::zeros(0), DVector::zeros(0), 1.0);
    let bounds = ParameterBox::new(DVector::zeros(0), DVector::zeros(0));
    FullOrderModel::assemble(a, l, j, k, theta_term, h1_product(&mesh), bounds, DVector::zeros(0))
        .expect("sample model is well formed")
}

/// A two-parameter diffusion/source model on the unit square.
///
/// * `μ₀ ∈ [0.1, 10]` scales the diffusion on the right half,
/// * `μ₁ ∈ [0, 5]` scales a volume source on the right half,
/// * Robin coupling to an ambient value of 1 on the whole boundary,
/// * the output functional tracks the mean state on the left half.
pub fn two_parameter_unit_square(nx: usize, ny: usize) -> FullOrderModel {
    let mesh = build_structured_mesh(Region::new(0.0, 1.0, 0.0, 1.0), nx, ny);
    let p = 2;
    let left = Region::new(0.0, 0.5, 0.0, 1.0);
    let right = Region::new(0.5, 1.0, 0.0, 1.0);
    let domain = mesh.domain();
    let robin = assemble_boundary_mass(&mesh, &domain);
    let a = AffineMatrix::new(vec![
        (ThetaFunction::constant(1.0, p), assemble_stiffness(&mesh, &left).add(&robin)),
        (ThetaFunction::coordinate(0, p), assemble_stiffness(&mesh, &right)),
    ]);
    let l = AffineVector::new(vec![
        (ThetaFunction::constant(1.0, p), assemble_boundary_load(&mesh, &domain)),
        (ThetaFunction::coordinate(1, p), assemble_load(&mesh, &right)),
    ]);
    let mass_left = assemble_mass(&mesh, &left);
    // Track the zero state on the left half with weight 1: j = 0, k = M/2.
    let j = AffineVector::new(vec![(ThetaFunction::constant(1.0, p), DVector::zeros(mesh.n_nodes()))]);
    let k = AffineMatrix::new(vec![(ThetaFunction::constant(0.5, p), mass_left)]);
    let theta_term = ThetaTerm::new(1.0, DVector::from_element(p, 1e-2), DVector::from_element(p, 1.0), 1.0);
    let bounds = ParameterBox::new(DVector::from_vec(vec![0.1, 0.0]), DVector::from_vec(vec![10.0, 5.0]));
    let mu_ref = bounds.midpoint();
    FullOrderModel::assemble(a, l, j, k, theta_term, h1_product(&mesh), bounds, mu_ref)
        .expect("sample model is well formed")
}

/// The mesh used by [`two_parameter_unit_square`], for tests that need
/// coordinates.
pub fn unit_square_mesh(nx: usize, ny: usize) -> Mesh {
    build_structured_mesh(Region::new(0.0, 1.0, 0.0, 1.0), nx, ny)
}
