//! Lagrange finite element spaces on triangles.

pub mod lagrange;
pub mod quadrature;
mod space;

use thiserror::Error;

pub use lagrange::{lagrange_eval, lagrange_grad, n_basis, reference_nodes, Tabulation};
pub use quadrature::{gauss_legendre, quadrature, QuadratureRule};
pub use space::{build_space, interpolate_scalar, interpolate_vector, Family, FeSpace, ValueRank};

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    #[error("unsupported Lagrange degree {0} (supported: 0..=3)")]
    UnsupportedDegree(usize),
    #[error("unsupported quadrature exactness {0} (supported: 1..=20)")]
    UnsupportedQuadrature(usize),
    #[error("unsupported space {family:?} of degree {degree}")]
    UnsupportedSpace { family: Family, degree: usize },
    #[error("expected a {expected:?} space, got {found:?}")]
    WrongRank {
        expected: ValueRank,
        found: ValueRank,
    },
    #[error("coefficient vector has length {found}, space has {expected} dofs")]
    LengthMismatch { expected: usize, found: usize },
}
