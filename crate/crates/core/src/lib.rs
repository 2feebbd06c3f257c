//! Certified reduced-basis surrogates and trust-region optimization for
//! parametrized elliptic PDEs.
//!
//! The crate builds the full pipeline for PDE-constrained parameter
//! optimization with reduced-order surrogates:
//!
//! * structured triangular meshes and P1 finite element assembly ([`mesh`],
//!   [`assemble`]),
//! * affinely parametrized full-order models with coercivity and continuity
//!   bounds ([`model`]),
//! * full-order primal/dual solves, objectives and adjoint gradients ([`fom`]),
//! * Galerkin and Petrov-Galerkin reduced models with residual-based error
//!   estimates ([`rom`]),
//! * goal-oriented greedy basis generation ([`greedy`]),
//! * projected BFGS for box constraints ([`optimizer`]),
//! * an adaptive trust-region loop driven by the reduced model and its error
//!   estimator ([`trust_region`]),
//! * a thermal-block style benchmark with doors, heaters, walls and windows
//!   ([`benchmark`]).

pub mod assemble;
pub mod benchmark;
pub mod fom;
pub mod greedy;
pub mod mesh;
pub mod model;
pub mod optimizer;
pub mod rom;
pub mod samples;
pub mod sparse;
pub mod trust_region;

#[cfg(test)]
pub(crate) mod test_oracles;
