//! Nodal Lagrange bases on the reference triangle, built on the uniform
//! barycentric node lattice.
//!
//! Local node order: the three vertices, then the interior nodes of edges
//! (v0,v1), (v1,v2), (v2,v0) running from the first to the second vertex,
//! then cell-interior nodes.

use super::ElementError;
use crate::mesh::Point;

pub const MAX_DEGREE: usize = 3;

/// Number of basis functions of degree `k`.
pub fn n_basis(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Barycentric multi-indices `(a0, a1, a2)`, `a0 + a1 + a2 = k`, in local order.
pub fn lattice(k: usize) -> Vec<[usize; 3]> {
    if k == 0 {
        return vec![[0, 0, 0]];
    }
    let mut nodes = vec![[k, 0, 0], [0, k, 0], [0, 0, k]];
    for i in 1..k {
        nodes.push([k - i, i, 0]);
    }
    for i in 1..k {
        nodes.push([0, k - i, i]);
    }
    for i in 1..k {
        nodes.push([i, 0, k - i]);
    }
    for a2 in 1..k {
        for a1 in 1..k {
            if a1 + a2 < k {
                nodes.push([k - a1 - a2, a1, a2]);
            }
        }
    }
    nodes
}

/// Reference coordinates of the nodes; degree 0 has its node at the centroid.
pub fn reference_nodes(k: usize) -> Vec<Point> {
    if k == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    lattice(k)
        .into_iter()
        .map(|[_, a1, a2]| [a1 as f64 / k as f64, a2 as f64 / k as f64])
        .collect()
}

fn check_degree(k: usize) -> Result<(), ElementError> {
    if k > MAX_DEGREE {
        return Err(ElementError::UnsupportedDegree(k));
    }
    Ok(())
}

// P_a(t) = prod_{i<a} (t - i) / (i + 1) and its derivative.
fn shape_factor(a: usize, t: f64) -> (f64, f64) {
    let mut value = 1.0;
    let mut deriv = 0.0;
    for i in 0..a {
        let scale = 1.0 / (i + 1) as f64;
        let f = (t - i as f64) * scale;
        deriv = deriv * f + value * scale;
        value *= f;
    }
    (value, deriv)
}

fn barycentric(p: Point) -> [f64; 3] {
    [1.0 - p[0] - p[1], p[0], p[1]]
}

/// Basis values at a reference point.
pub fn lagrange_eval(k: usize, point: Point) -> Result<Vec<f64>, ElementError> {
    check_degree(k)?;
    let mut out = vec![0.0; n_basis(k)];
    eval_into(k, point, &mut out);
    Ok(out)
}

/// Reference-coordinate basis gradients at a reference point.
pub fn lagrange_grad(k: usize, point: Point) -> Result<Vec<[f64; 2]>, ElementError> {
    check_degree(k)?;
    let mut out = vec![[0.0; 2]; n_basis(k)];
    grad_into(k, point, &mut out);
    Ok(out)
}

pub(crate) fn eval_into(k: usize, point: Point, out: &mut [f64]) {
    let l = barycentric(point);
    let kf = k as f64;
    for (o, a) in out.iter_mut().zip(lattice(k)) {
        *o = (0..3).map(|m| shape_factor(a[m], kf * l[m]).0).product();
    }
}

pub(crate) fn grad_into(k: usize, point: Point, out: &mut [[f64; 2]]) {
    let l = barycentric(point);
    let kf = k as f64;
    for (o, a) in out.iter_mut().zip(lattice(k)) {
        let f: [(f64, f64); 3] = std::array::from_fn(|m| shape_factor(a[m], kf * l[m]));
        // derivatives with respect to the barycentric coordinates
        let d0 = kf * f[0].1 * f[1].0 * f[2].0;
        let d1 = kf * f[0].0 * f[1].1 * f[2].0;
        let d2 = kf * f[0].0 * f[1].0 * f[2].1;
        *o = [d1 - d0, d2 - d0];
    }
}

/// Basis values and reference gradients at a fixed set of points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_basis: usize,
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn new(k: usize, points: &[Point]) -> Result<Self, ElementError> {
        check_degree(k)?;
        let nb = n_basis(k);
        let mut values = vec![0.0; nb * points.len()];
        let mut grads = vec![[0.0; 2]; nb * points.len()];
        for (q, &p) in points.iter().enumerate() {
            eval_into(k, p, &mut values[q * nb..(q + 1) * nb]);
            grad_into(k, p, &mut grads[q * nb..(q + 1) * nb]);
        }
        Ok(Tabulation {
            n_basis: nb,
            values,
            grads,
        })
    }

    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_basis..(q + 1) * self.n_basis]
    }

    pub fn grads(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.n_basis..(q + 1) * self.n_basis]
    }
}
