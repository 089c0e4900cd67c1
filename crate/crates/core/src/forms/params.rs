use std::fmt;

use super::FormsError;
use crate::elements::{build_space, ElementError, Family, FeSpace, ValueRank};
use crate::mesh::{mesh_size, Mesh};

/// How the stabilization length scales are chosen on each element.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LengthScale {
    /// Element diameter h_K.
    #[default]
    PerElement,
    /// The global mesh size, identical on every element.
    GlobalH,
    Fixed(f64),
}

/// Coefficients of the augmented Lagrangian terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationParams {
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub theta: f64,
    pub beta: f64,
    pub ell_s: LengthScale,
    pub ell_mu: LengthScale,
}

impl StabilizationParams {
    pub const NONE: StabilizationParams = StabilizationParams {
        alpha: 0.0,
        gamma: 0.0,
        eta: 0.0,
        theta: 0.0,
        beta: 0.0,
        ell_s: LengthScale::PerElement,
        ell_mu: LengthScale::PerElement,
    };

    pub fn validate(&self) -> Result<(), FormsError> {
        let fields = [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("theta", self.theta),
            ("beta", self.beta),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(FormsError::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and >= 0",
                });
            }
        }
        if self.gamma >= 1.0 {
            return Err(FormsError::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                reason: "must be < 1",
            });
        }
        if self.eta >= 1.0 {
            return Err(FormsError::InvalidParameter {
                name: "eta",
                value: self.eta,
                reason: "must be < 1",
            });
        }
        if self.alpha > 0.25 {
            return Err(FormsError::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must be <= 1/4",
            });
        }
        for (name, ell) in [("ell_s", self.ell_s), ("ell_mu", self.ell_mu)] {
            if let LengthScale::Fixed(v) = ell {
                if !v.is_finite() || v < 0.0 {
                    return Err(FormsError::InvalidParameter {
                        name,
                        value: v,
                        reason: "must be finite and >= 0",
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulationKind {
    /// CG_{k+1} scalars, DG_k vectors, no stabilization.
    Natural,
    EqualOrderUnstabilized,
    EqualOrderMinimal,
    EqualOrderFull,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 4] = [
        FormulationKind::Natural,
        FormulationKind::EqualOrderUnstabilized,
        FormulationKind::EqualOrderMinimal,
        FormulationKind::EqualOrderFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulationKind::Natural => "natural",
            FormulationKind::EqualOrderUnstabilized => "eo_unstab",
            FormulationKind::EqualOrderMinimal => "eo_min",
            FormulationKind::EqualOrderFull => "eo_full",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_equal_order(self) -> bool {
        self != FormulationKind::Natural
    }

    /// The coefficient set prescribed for this kind.
    pub fn default_params(self) -> StabilizationParams {
        match self {
            FormulationKind::Natural | FormulationKind::EqualOrderUnstabilized => {
                StabilizationParams::NONE
            }
            FormulationKind::EqualOrderMinimal => StabilizationParams {
                alpha: 0.125,
                eta: 0.5,
                ..StabilizationParams::NONE
            },
            FormulationKind::EqualOrderFull => StabilizationParams {
                alpha: 0.125,
                gamma: 0.125,
                eta: 0.5,
                theta: 0.5,
                beta: 0.5,
                ..StabilizationParams::NONE
            },
        }
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A formulation kind with its degree parameter `k` and coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Formulation {
    pub kind: FormulationKind,
    pub k: usize,
    pub params: StabilizationParams,
}

impl Formulation {
    pub fn new(kind: FormulationKind, k: usize) -> Result<Self, FormsError> {
        Self::with_params(kind, k, kind.default_params())
    }

    pub fn with_params(
        kind: FormulationKind,
        k: usize,
        params: StabilizationParams,
    ) -> Result<Self, FormsError> {
        if k > 2 {
            return Err(FormsError::InvalidDegree(k));
        }
        params.validate()?;
        Ok(Formulation { kind, k, params })
    }

    /// Degree of the scalar (u, λ) space.
    pub fn scalar_degree(&self) -> usize {
        self.k + 1
    }

    /// Family and degree of the vector (e, s, μ) space.
    pub fn vector_space(&self) -> (Family, usize) {
        match self.kind {
            FormulationKind::Natural => (Family::Dg, self.k),
            _ => (Family::Cg, self.k + 1),
        }
    }

    pub fn spaces(&self, mesh: &Mesh) -> Result<FieldSpaces, ElementError> {
        let scalar = build_space(mesh, Family::Cg, self.scalar_degree(), ValueRank::Scalar)?;
        let (family, degree) = self.vector_space();
        let vector = build_space(mesh, family, degree, ValueRank::Vector2)?;
        Ok(FieldSpaces { scalar, vector })
    }
}

/// The five unknown fields in global order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    U,
    E,
    S,
    Lambda,
    Mu,
}

impl Field {
    pub const ALL: [Field; 5] = [Field::U, Field::E, Field::S, Field::Lambda, Field::Mu];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_primal(self) -> bool {
        matches!(self, Field::U | Field::E | Field::S)
    }
}

/// u and λ share the scalar space; e, s and μ share the vector space.
#[derive(Debug, Clone)]
pub struct FieldSpaces {
    pub scalar: FeSpace,
    pub vector: FeSpace,
}

impl FieldSpaces {
    pub fn space(&self, field: Field) -> &FeSpace {
        match field {
            Field::U | Field::Lambda => &self.scalar,
            _ => &self.vector,
        }
    }

    /// Start of each field in the global vector, plus the total length.
    pub fn offsets(&self) -> [usize; 6] {
        let (ns, nv) = (self.scalar.n_dofs(), self.vector.n_dofs());
        [
            0,
            ns,
            ns + nv,
            ns + 2 * nv,
            2 * ns + 2 * nv,
            2 * ns + 3 * nv,
        ]
    }

    pub fn n_dofs(&self) -> usize {
        self.offsets()[5]
    }

    /// Group id per global unknown: all unknowns sitting on one node of the
    /// scalar space share a group, likewise for the vector space. When both
    /// spaces have the same nodes, the two groupings coincide.
    pub fn node_groups(&self) -> Vec<usize> {
        let ns = self.scalar.n_scalar_dofs();
        let nv = self.vector.n_scalar_dofs();
        let shared = self.scalar.family() == self.vector.family()
            && self.scalar.degree() == self.vector.degree()
            && self.scalar.node_coords() == self.vector.node_coords();
        let vector_base = if shared { 0 } else { ns };
        let mut groups = Vec::with_capacity(self.n_dofs());
        let scalar = 0..ns;
        let vector = || (0..2).flat_map(|_| 0..nv).map(|d| vector_base + d);
        groups.extend(scalar.clone());
        groups.extend(vector());
        groups.extend(vector());
        groups.extend(scalar);
        groups.extend(vector());
        groups
    }
}

/// Per-element length scales `(ell_s, ell_mu)`.
pub fn stabilization_lengths(mesh: &Mesh, params: &StabilizationParams) -> Vec<(f64, f64)> {
    let h = mesh_size(mesh).unwrap_or(0.0);
    let pick = |mode: LengthScale, t: usize| match mode {
        LengthScale::PerElement => mesh.geometry(t).diameter,
        LengthScale::GlobalH => h,
        LengthScale::Fixed(v) => v,
    };
    (0..mesh.n_triangles())
        .map(|t| (pick(params.ell_s, t), pick(params.ell_mu, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    #[test]
    fn prescribed_coefficients() {
        let full = FormulationKind::EqualOrderFull.default_params();
        assert_eq!(
            (full.alpha, full.gamma, full.eta, full.theta, full.beta),
            (0.125, 0.125, 0.5, 0.5, 0.5)
        );
        let min = FormulationKind::EqualOrderMinimal.default_params();
        assert_eq!(
            (min.alpha, min.gamma, min.eta, min.theta, min.beta),
            (0.125, 0.0, 0.5, 0.0, 0.0)
        );
        assert_eq!(
            FormulationKind::Natural.default_params(),
            StabilizationParams::NONE
        );
    }

    #[test]
    fn parameter_bounds() {
        let ok = FormulationKind::EqualOrderFull.default_params();
        assert!(ok.validate().is_ok());
        for bad in [
            StabilizationParams { gamma: 1.0, ..ok },
            StabilizationParams { eta: 1.0, ..ok },
            StabilizationParams { alpha: 0.3, ..ok },
            StabilizationParams { beta: -0.1, ..ok },
            StabilizationParams {
                theta: f64::NAN,
                ..ok
            },
            StabilizationParams {
                ell_s: LengthScale::Fixed(-1.0),
                ..ok
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(Formulation::new(FormulationKind::Natural, 3).is_err());
    }

    #[test]
    fn length_scales() {
        let m = unit_square_mesh(4).unwrap();
        let mut p = StabilizationParams {
            ell_s: LengthScale::GlobalH,
            ..StabilizationParams::NONE
        };
        let global = stabilization_lengths(&m, &p);
        assert!(global
            .iter()
            .all(|l| (l.0 - 2f64.sqrt() / 4.0).abs() < 1e-15));
        p.ell_s = LengthScale::PerElement;
        let local = stabilization_lengths(&m, &p);
        assert!(local
            .iter()
            .zip(&global)
            .all(|(a, b)| (a.0 - b.0).abs() < 1e-15));
        p.ell_mu = LengthScale::Fixed(0.0);
        assert!(stabilization_lengths(&m, &p).iter().all(|l| l.1 == 0.0));
    }

    #[test]
    fn space_layout() {
        let m = unit_square_mesh(2).unwrap();
        let nat = Formulation::new(FormulationKind::Natural, 0)
            .unwrap()
            .spaces(&m)
            .unwrap();
        assert_eq!(nat.scalar.n_dofs(), 9);
        assert_eq!(nat.vector.n_dofs(), 16);
        assert_eq!(nat.offsets(), [0, 9, 25, 41, 50, 66]);
        let eo = Formulation::new(FormulationKind::EqualOrderFull, 1)
            .unwrap()
            .spaces(&m)
            .unwrap();
        assert_eq!(eo.vector.n_dofs(), 2 * eo.scalar.n_dofs());
    }
}
