//! Assembly of the coupled five-field system for the four formulations.
//!
//! Global unknown order is `u | e | s | λ | μ`; vector fields are stored
//! component-major inside their block. Rows of λ and μ are negated unless
//! the symmetric variant is requested, which makes the matrix
//! `[[A, Bᵀ], [-B, C]]` with `A`, `C` symmetric.

mod assemble;
mod data;
mod energy;
mod params;

use thiserror::Error;

use crate::elements::ElementError;
use crate::mesh::BoundaryTag;
use crate::solver::SparseMatrix;

pub use assemble::{apply_dirichlet, assemble, assemble_with, AssemblyOptions};
pub use data::{constant, BoundaryCondition, ProblemData, ScalarFn, TraceFn, VectorData, VectorFn};
pub use energy::{energy_norms, triple_norm_squared, EnergyNorms};
pub use params::{
    stabilization_lengths, Field, FieldSpaces, Formulation, FormulationKind, LengthScale,
    StabilizationParams,
};

#[derive(Debug, Error)]
pub enum FormsError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unsupported degree parameter k = {0} (supported: 0, 1, 2)")]
    InvalidDegree(usize),
    #[error("boundary tag {0} has no boundary condition")]
    MissingBoundaryCondition(BoundaryTag),
    #[error("{name} has {found} element values, mesh has {expected} elements")]
    DataLength {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("conflicting Dirichlet values {a} and {b} at dof {dof}")]
    ConflictingDirichlet { dof: usize, a: f64, b: f64 },
    #[error("coefficient vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Element(#[from] ElementError),
}

/// Sparse matrix and right-hand side over `u | e | s | λ | μ`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub spaces: FieldSpaces,
    /// Start of each field, followed by the total size.
    pub block_offsets: [usize; 6],
    /// Constrained dofs and their values; empty before Dirichlet application.
    pub dirichlet: Vec<(usize, f64)>,
    pub symmetric: bool,
}

impl BlockSystem {
    pub fn n_dofs(&self) -> usize {
        self.block_offsets[5]
    }

    pub fn field_range(&self, field: Field) -> std::ops::Range<usize> {
        self.block_offsets[field.index()]..self.block_offsets[field.index() + 1]
    }

    /// Negates the multiplier rows of the skew form, giving the symmetric
    /// variant. The solution is unchanged.
    pub fn into_symmetric(mut self) -> Self {
        if self.symmetric {
            return self;
        }
        let first_dual = self.block_offsets[Field::Lambda.index()];
        let row_ptr = self.matrix.row_ptr().to_vec();
        let values = self.matrix.values_mut();
        let n = self.block_offsets[5];
        for r in first_dual..n {
            for v in &mut values[row_ptr[r]..row_ptr[r + 1]] {
                *v = -*v;
            }
            self.rhs[r] = -self.rhs[r];
        }
        self.symmetric = true;
        self
    }
}

/// Coefficient vectors of the five fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Solution {
    pub fn split(spaces: &FieldSpaces, x: &[f64]) -> Result<Self, FormsError> {
        let o = spaces.offsets();
        if x.len() != o[5] {
            return Err(FormsError::LengthMismatch {
                expected: o[5],
                found: x.len(),
            });
        }
        Ok(Solution {
            u: x[o[0]..o[1]].to_vec(),
            e: x[o[1]..o[2]].to_vec(),
            s: x[o[2]..o[3]].to_vec(),
            lambda: x[o[3]..o[4]].to_vec(),
            mu: x[o[4]..o[5]].to_vec(),
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        [&self.u, &self.e, &self.s, &self.lambda, &self.mu]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn field(&self, field: Field) -> &[f64] {
        match field {
            Field::U => &self.u,
            Field::E => &self.e,
            Field::S => &self.s,
            Field::Lambda => &self.lambda,
            Field::Mu => &self.mu,
        }
    }
}
