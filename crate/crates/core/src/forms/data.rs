use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::FormsError;
use crate::mesh::{BoundaryTag, Mesh, Point};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
/// Normal trace data, called with a boundary point and the outward unit normal.
pub type TraceFn = Arc<dyn Fn(Point, [f64; 2]) -> f64 + Send + Sync>;

pub fn constant(v: f64) -> ScalarFn {
    Arc::new(move |_| v)
}

/// A data field given either as a function or as one value per element.
#[derive(Clone)]
pub enum VectorData {
    Pointwise(VectorFn),
    Elementwise(Vec<[f64; 2]>),
}

impl VectorData {
    pub fn constant(v: [f64; 2]) -> Self {
        VectorData::Pointwise(Arc::new(move |_| v))
    }

    /// Value inside element `t` at physical point `p`.
    pub fn eval(&self, t: usize, p: Point) -> [f64; 2] {
        match self {
            VectorData::Pointwise(f) => f(p),
            VectorData::Elementwise(v) => v[t],
        }
    }
}

impl fmt::Debug for VectorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorData::Pointwise(_) => f.write_str("Pointwise(..)"),
            VectorData::Elementwise(v) => write!(f, "Elementwise({} values)", v.len()),
        }
    }
}

#[derive(Clone)]
pub enum BoundaryCondition {
    /// Strong values for u and λ.
    Dirichlet { u: ScalarFn, lambda: ScalarFn },
    /// Prescribed normal traces s·n and μ·n.
    Neumann { s_n: TraceFn, mu_n: TraceFn },
}

impl BoundaryCondition {
    pub fn homogeneous_dirichlet() -> Self {
        BoundaryCondition::Dirichlet {
            u: constant(0.0),
            lambda: constant(0.0),
        }
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Dirichlet { .. } => f.write_str("Dirichlet"),
            BoundaryCondition::Neumann { .. } => f.write_str("Neumann"),
        }
    }
}

/// Coefficients, sources, data fields and boundary data of one problem.
#[derive(Clone)]
pub struct ProblemData {
    pub kappa: f64,
    pub zeta: ScalarFn,
    pub q: ScalarFn,
    /// Auxiliary source on the λ/μ balance, zero outside verification runs.
    pub f: ScalarFn,
    pub e_tilde: VectorData,
    pub s_tilde: VectorData,
    pub boundary: BTreeMap<BoundaryTag, BoundaryCondition>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("kappa", &self.kappa)
            .field("e_tilde", &self.e_tilde)
            .field("s_tilde", &self.s_tilde)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Zero sources and data, κ = 1, ζ = 0, homogeneous Dirichlet on `tags`.
    pub fn zero(tags: &[BoundaryTag]) -> Self {
        ProblemData {
            kappa: 1.0,
            zeta: constant(0.0),
            q: constant(0.0),
            f: constant(0.0),
            e_tilde: VectorData::constant([0.0; 2]),
            s_tilde: VectorData::constant([0.0; 2]),
            boundary: tags
                .iter()
                .map(|&t| (t, BoundaryCondition::homogeneous_dirichlet()))
                .collect(),
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<(), FormsError> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(FormsError::InvalidParameter {
                name: "kappa",
                value: self.kappa,
                reason: "must be > 0",
            });
        }
        for tag in mesh.boundary_tags() {
            if !self.boundary.contains_key(&tag) {
                return Err(FormsError::MissingBoundaryCondition(tag));
            }
        }
        for (name, data) in [("e_tilde", &self.e_tilde), ("s_tilde", &self.s_tilde)] {
            if let VectorData::Elementwise(v) = data {
                if v.len() != mesh.n_triangles() {
                    return Err(FormsError::DataLength {
                        name,
                        expected: mesh.n_triangles(),
                        found: v.len(),
                    });
                }
            }
        }
        Ok(())
    }
}
