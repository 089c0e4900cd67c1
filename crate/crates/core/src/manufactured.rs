//! Closed-form fields for the three verification cases and a
//! finite-difference check of the strong optimality system.
//!
//! Every case satisfies
//!   ζλ + ∇·μ = f,  e + μ = ẽ,  κs − ∇λ = κs̃,  ζu + ∇·s = q,  ∇u = e.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::forms::{BoundaryCondition, ProblemData, VectorData};
use crate::mesh::{opening_angle, BoundaryTag, Point};

#[derive(Debug, Error, PartialEq)]
pub enum ManufacturedError {
    #[error("field is singular at the corner ({0}, {1})")]
    SingularPoint(f64, f64),
    #[error("invalid sector angle phi = {0}")]
    InvalidAngle(f64),
    #[error("invalid parameter {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseId {
    /// Smooth fields on the unit square with a cubic flux law.
    Case1,
    /// Corner singularity on a sector with re-entrant angle `2π − phi`.
    Case2 { phi: f64 },
    /// Smooth fields on the unit square with a linear flux law and λ = 0.
    Case3,
}

/// All field values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValues {
    pub u: f64,
    pub e: [f64; 2],
    pub s: [f64; 2],
    pub lambda: f64,
    pub grad_lambda: [f64; 2],
    pub mu: [f64; 2],
    pub e_tilde: [f64; 2],
    pub s_tilde: [f64; 2],
    pub q: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub id: CaseId,
    pub kappa: f64,
    pub zeta: f64,
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(k: f64, a: [f64; 2]) -> [f64; 2] {
    [k * a[0], k * a[1]]
}

// λ and the ẽ perturbation shared by cases 1 and 2.
fn shared_lambda(p: Point) -> f64 {
    -((2.0 * PI * p[0]).cos() + (2.0 * PI * p[1]).cos()) / (40.0 * PI)
}

fn shared_grad_lambda(p: Point) -> [f64; 2] {
    [
        (2.0 * PI * p[0]).sin() / 20.0,
        (2.0 * PI * p[1]).sin() / 20.0,
    ]
}

fn shared_mu(p: Point) -> [f64; 2] {
    [
        (4.0 * PI * p[0]).sin() / 20.0,
        (4.0 * PI * p[1]).sin() / 20.0,
    ]
}

fn shared_div_mu(p: Point) -> f64 {
    PI / 5.0 * ((4.0 * PI * p[0]).cos() + (4.0 * PI * p[1]).cos())
}

impl ManufacturedCase {
    pub fn case1() -> Self {
        ManufacturedCase {
            id: CaseId::Case1,
            kappa: 1.0,
            zeta: 1.0,
        }
    }

    pub fn case2(phi: f64) -> Result<Self, ManufacturedError> {
        if !(phi > 0.0 && phi < PI) {
            return Err(ManufacturedError::InvalidAngle(phi));
        }
        Ok(ManufacturedCase {
            id: CaseId::Case2 { phi },
            kappa: 1.0,
            zeta: 1.0,
        })
    }

    pub fn case3() -> Self {
        ManufacturedCase {
            id: CaseId::Case3,
            kappa: 1.0,
            zeta: 1.0,
        }
    }

    pub fn with_params(self, kappa: f64, zeta: f64) -> Result<Self, ManufacturedError> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(ManufacturedError::InvalidParameter("kappa"));
        }
        if !zeta.is_finite() {
            return Err(ManufacturedError::InvalidParameter("zeta"));
        }
        Ok(ManufacturedCase {
            kappa,
            zeta,
            ..self
        })
    }

    /// Singularity exponent `ν = π/ψ` of case 2.
    pub fn nu(&self) -> Option<f64> {
        match self.id {
            CaseId::Case2 { phi } => Some(PI / opening_angle(phi)),
            _ => None,
        }
    }

    // Polar angle in [0, ψ], continued slightly below 0 for points just
    // outside the first wedge edge.
    fn angle(&self, p: Point) -> f64 {
        let CaseId::Case2 { phi } = self.id else {
            unreachable!()
        };
        let psi = opening_angle(phi);
        let mut theta = p[1].atan2(p[0]);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        if theta > psi + 0.5 * phi {
            theta -= 2.0 * PI;
        }
        theta
    }

    pub fn u(&self, p: Point) -> f64 {
        let (x, y) = (p[0], p[1]);
        match self.id {
            CaseId::Case1 => (PI * x).cos() * (PI * y).cos(),
            CaseId::Case2 { .. } => {
                let nu = self.nu().unwrap();
                let r = x.hypot(y);
                if r == 0.0 {
                    0.0
                } else {
                    r.powf(nu) * (nu * self.angle(p)).sin()
                }
            }
            CaseId::Case3 => (PI * x).sin() * (PI * y).sin(),
        }
    }

    pub fn e(&self, p: Point) -> Result<[f64; 2], ManufacturedError> {
        let (x, y) = (p[0], p[1]);
        Ok(match self.id {
            CaseId::Case1 => [
                -PI * (PI * x).sin() * (PI * y).cos(),
                -PI * (PI * x).cos() * (PI * y).sin(),
            ],
            CaseId::Case2 { .. } => {
                let nu = self.nu().unwrap();
                let r2 = x * x + y * y;
                if r2 == 0.0 {
                    return Err(ManufacturedError::SingularPoint(x, y));
                }
                let (sn, cs) = (nu * self.angle(p)).sin_cos();
                let k = nu * r2.powf(0.5 * nu - 1.0);
                [k * (x * sn - y * cs), k * (y * sn + x * cs)]
            }
            CaseId::Case3 => [
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ],
        })
    }

    pub fn s(&self, p: Point) -> Result<[f64; 2], ManufacturedError> {
        let e = self.e(p)?;
        Ok(match self.id {
            CaseId::Case1 => {
                let n2 = e[0] * e[0] + e[1] * e[1];
                scale(-(1.0 - n2 / 40.0), e)
            }
            _ => scale(-1.0, e),
        })
    }

    pub fn lambda(&self, p: Point) -> f64 {
        match self.id {
            CaseId::Case3 => 0.0,
            _ => shared_lambda(p),
        }
    }

    pub fn grad_lambda(&self, p: Point) -> [f64; 2] {
        match self.id {
            CaseId::Case3 => [0.0; 2],
            _ => shared_grad_lambda(p),
        }
    }

    pub fn mu(&self, p: Point) -> [f64; 2] {
        match self.id {
            CaseId::Case3 => [0.0; 2],
            _ => shared_mu(p),
        }
    }

    pub fn e_tilde(&self, p: Point) -> Result<[f64; 2], ManufacturedError> {
        Ok(add(self.e(p)?, self.mu(p)))
    }

    pub fn s_tilde(&self, p: Point) -> Result<[f64; 2], ManufacturedError> {
        Ok(add(
            self.s(p)?,
            scale(-1.0 / self.kappa, self.grad_lambda(p)),
        ))
    }

    /// `ζu + ∇·s`.
    pub fn q(&self, p: Point) -> f64 {
        let (x, y) = (p[0], p[1]);
        let u = self.u(p);
        let div_s = match self.id {
            CaseId::Case1 => {
                // ∇·s = −Δu (1 − |e|²/40) + eᵀ H e / 20, H the Hessian of u
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let e = [-PI * sx * cy, -PI * cx * sy];
                let n2 = e[0] * e[0] + e[1] * e[1];
                let hd = -PI * PI * u;
                let ho = PI * PI * sx * sy;
                let lap = 2.0 * hd;
                let ehe = hd * (e[0] * e[0] + e[1] * e[1]) + 2.0 * ho * e[0] * e[1];
                -lap * (1.0 - n2 / 40.0) + ehe / 20.0
            }
            CaseId::Case2 { .. } => 0.0,
            CaseId::Case3 => 2.0 * PI * PI * u,
        };
        self.zeta * u + div_s
    }

    /// `ζλ + ∇·μ`.
    pub fn f(&self, p: Point) -> f64 {
        match self.id {
            CaseId::Case3 => 0.0,
            _ => self.zeta * shared_lambda(p) + shared_div_mu(p),
        }
    }

    /// `∇·e = Δu`.
    pub fn div_e(&self, p: Point) -> f64 {
        match self.id {
            CaseId::Case2 { .. } => 0.0,
            _ => -2.0 * PI * PI * self.u(p),
        }
    }

    pub fn div_s(&self, p: Point) -> f64 {
        self.q(p) - self.zeta * self.u(p)
    }

    pub fn div_mu(&self, p: Point) -> f64 {
        self.f(p) - self.zeta * self.lambda(p)
    }

    pub fn evaluate(&self, p: Point) -> Result<FieldValues, ManufacturedError> {
        Ok(FieldValues {
            u: self.u(p),
            e: self.e(p)?,
            s: self.s(p)?,
            lambda: self.lambda(p),
            grad_lambda: self.grad_lambda(p),
            mu: self.mu(p),
            e_tilde: self.e_tilde(p)?,
            s_tilde: self.s_tilde(p)?,
            q: self.q(p),
            f: self.f(p),
        })
    }

    /// Boundary tags of the domain and the condition kind on each:
    /// case 1 is Dirichlet left/right and Neumann bottom/top, the other
    /// cases are pure Dirichlet.
    pub fn boundary_conditions(&self) -> BTreeMap<BoundaryTag, BoundaryCondition> {
        let dirichlet = || {
            let (a, b) = (*self, *self);
            BoundaryCondition::Dirichlet {
                u: Arc::new(move |p| a.u(p)),
                lambda: Arc::new(move |p| b.lambda(p)),
            }
        };
        let tags: &[BoundaryTag] = match self.id {
            CaseId::Case2 { .. } => &[
                BoundaryTag::WedgeEdge0,
                BoundaryTag::WedgeEdge1,
                BoundaryTag::Arc,
            ],
            _ => &[
                BoundaryTag::Left,
                BoundaryTag::Right,
                BoundaryTag::Bottom,
                BoundaryTag::Top,
            ],
        };
        let mut out = BTreeMap::new();
        for &tag in tags {
            let neumann =
                self.id == CaseId::Case1 && matches!(tag, BoundaryTag::Bottom | BoundaryTag::Top);
            let bc = if neumann {
                let (a, b) = (*self, *self);
                BoundaryCondition::Neumann {
                    s_n: Arc::new(move |p, n| {
                        let s = a.s(p).unwrap_or([f64::NAN; 2]);
                        s[0] * n[0] + s[1] * n[1]
                    }),
                    mu_n: Arc::new(move |p, n| {
                        let m = b.mu(p);
                        m[0] * n[0] + m[1] * n[1]
                    }),
                }
            } else {
                dirichlet()
            };
            out.insert(tag, bc);
        }
        out
    }

    /// Problem data with exact pointwise data fields.
    pub fn problem_data(&self) -> ProblemData {
        let c = *self;
        ProblemData {
            kappa: self.kappa,
            zeta: crate::forms::constant(self.zeta),
            q: Arc::new(move |p| c.q(p)),
            f: Arc::new(move |p| c.f(p)),
            e_tilde: VectorData::Pointwise(Arc::new(move |p| {
                c.e_tilde(p).unwrap_or([f64::NAN; 2])
            })),
            s_tilde: VectorData::Pointwise(Arc::new(move |p| {
                c.s_tilde(p).unwrap_or([f64::NAN; 2])
            })),
            boundary: self.boundary_conditions(),
        }
    }
}

/// Largest absolute residual of each strong equation, in the order
/// `ζλ + ∇·μ − f`, `e + μ − ẽ`, `κs − ∇λ − κs̃`, `ζu + ∇·s − q`, `∇u − e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongResiduals(pub [f64; 5]);

impl StrongResiduals {
    pub fn max(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Halton point in the unit square.
pub fn halton(i: usize) -> [f64; 2] {
    let radical = |mut n: usize, base: usize| {
        let mut x = 0.0;
        let mut f = 1.0 / base as f64;
        while n > 0 {
            x += f * (n % base) as f64;
            n /= base;
            f /= base as f64;
        }
        x
    };
    [radical(i + 1, 2), radical(i + 1, 3)]
}

/// Quasi-random sample points inside the case domain, kept `margin` away
/// from the boundary (and at radius ≥ 0.1 for the corner case).
pub fn sample_points(case: &ManufacturedCase, n: usize, margin: f64) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let [a, b] = halton(i);
            match case.id {
                CaseId::Case2 { phi } => {
                    let psi = opening_angle(phi);
                    let r = 0.1 + (0.9 - 2.0 * margin) * a;
                    let dt = 2.0 * margin / r;
                    let theta = dt + (psi - 2.0 * dt) * b;
                    [r * theta.cos(), r * theta.sin()]
                }
                _ => [
                    margin + (1.0 - 2.0 * margin) * a,
                    margin + (1.0 - 2.0 * margin) * b,
                ],
            }
        })
        .collect()
}

/// Evaluates the strong equations with central differences at `n_samples`
/// quasi-random interior points.
pub fn verify_strong_system(
    case: &ManufacturedCase,
    n_samples: usize,
    fd_step: f64,
) -> Result<StrongResiduals, ManufacturedError> {
    let h = fd_step;
    let grad = |g: &dyn Fn(Point) -> f64, p: Point| {
        [
            (g([p[0] + h, p[1]]) - g([p[0] - h, p[1]])) / (2.0 * h),
            (g([p[0], p[1] + h]) - g([p[0], p[1] - h])) / (2.0 * h),
        ]
    };
    let div = |g: &dyn Fn(Point) -> Result<[f64; 2], ManufacturedError>,
               p: Point|
     -> Result<f64, ManufacturedError> {
        Ok(
            (g([p[0] + h, p[1]])?[0] - g([p[0] - h, p[1]])?[0]) / (2.0 * h)
                + (g([p[0], p[1] + h])?[1] - g([p[0], p[1] - h])?[1]) / (2.0 * h),
        )
    };
    let (k, z) = (case.kappa, case.zeta);
    let mut res = [0.0f64; 5];
    for p in sample_points(case, n_samples, 2.0 * h) {
        let v = case.evaluate(p)?;
        let div_mu = div(&|x| Ok(case.mu(x)), p)?;
        let div_s = div(&|x| case.s(x), p)?;
        let gl = grad(&|x| case.lambda(x), p);
        let gu = grad(&|x| case.u(x), p);
        let r = [
            (z * v.lambda + div_mu - v.f).abs(),
            (v.e[0] + v.mu[0] - v.e_tilde[0])
                .abs()
                .max((v.e[1] + v.mu[1] - v.e_tilde[1]).abs()),
            (k * v.s[0] - gl[0] - k * v.s_tilde[0])
                .abs()
                .max((k * v.s[1] - gl[1] - k * v.s_tilde[1]).abs()),
            (z * v.u + div_s - v.q).abs(),
            (gu[0] - v.e[0]).abs().max((gu[1] - v.e[1]).abs()),
        ];
        for (acc, x) in res.iter_mut().zip(r) {
            *acc = acc.max(x);
        }
    }
    Ok(StrongResiduals(res))
}
