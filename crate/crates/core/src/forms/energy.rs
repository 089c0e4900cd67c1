use super::{FieldSpaces, FormsError, Solution};
use crate::elements::{quadrature, Tabulation};
use crate::mesh::Mesh;

/// Squared L2 norms of the pieces that make up the stability norm.
/// Divergences are taken elementwise.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyNorms {
    pub grad_u: f64,
    pub e: f64,
    pub s: f64,
    pub grad_lambda: f64,
    pub mu: f64,
    pub div_s: f64,
    pub div_mu: f64,
}

pub fn energy_norms(
    mesh: &Mesh,
    spaces: &FieldSpaces,
    z: &[f64],
) -> Result<EnergyNorms, FormsError> {
    let sol = Solution::split(spaces, z)?;
    let (sc, vc) = (&spaces.scalar, &spaces.vector);
    let rule = quadrature(2 * sc.degree().max(vc.degree()).max(1))?;
    let ts = Tabulation::new(sc.degree(), &rule.points)?;
    let tv = Tabulation::new(vc.degree(), &rule.points)?;
    let nvs = vc.n_scalar_dofs();
    let mut out = EnergyNorms::default();
    for t in 0..mesh.n_triangles() {
        let geo = mesh.geometry(t);
        let sd = sc.cell_scalar_dofs(t);
        let vd = vc.cell_scalar_dofs(t);
        for (q, w) in rule.weights.iter().enumerate() {
            let w = w * geo.jacobian_det.abs();
            let mut gu = [0.0; 2];
            let mut gl = [0.0; 2];
            for (i, &d) in sd.iter().enumerate() {
                let g = geo.map_gradient(ts.grads(q)[i]);
                for c in 0..2 {
                    gu[c] += sol.u[d] * g[c];
                    gl[c] += sol.lambda[d] * g[c];
                }
            }
            let (mut e, mut s, mut mu) = ([0.0; 2], [0.0; 2], [0.0; 2]);
            let (mut div_s, mut div_mu) = (0.0, 0.0);
            for (i, &d) in vd.iter().enumerate() {
                let v = tv.values(q)[i];
                let g = geo.map_gradient(tv.grads(q)[i]);
                for c in 0..2 {
                    let k = c * nvs + d;
                    e[c] += sol.e[k] * v;
                    s[c] += sol.s[k] * v;
                    mu[c] += sol.mu[k] * v;
                    div_s += sol.s[k] * g[c];
                    div_mu += sol.mu[k] * g[c];
                }
            }
            let sq = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
            out.grad_u += w * sq(gu);
            out.grad_lambda += w * sq(gl);
            out.e += w * sq(e);
            out.s += w * sq(s);
            out.mu += w * sq(mu);
            out.div_s += w * div_s * div_s;
            out.div_mu += w * div_mu * div_mu;
        }
    }
    Ok(out)
}

/// `‖∇u‖² + ‖e‖² + κ‖s‖² + ‖∇λ‖²/κ + ‖μ‖² + κh²‖∇·s‖²_h + h²‖∇·μ‖²_h`.
pub fn triple_norm_squared(
    mesh: &Mesh,
    spaces: &FieldSpaces,
    z: &[f64],
    kappa: f64,
    h: f64,
) -> Result<f64, FormsError> {
    let n = energy_norms(mesh, spaces, z)?;
    Ok(n.grad_u
        + n.e
        + kappa * n.s
        + n.grad_lambda / kappa
        + n.mu
        + kappa * h * h * n.div_s
        + h * h * n.div_mu)
}
