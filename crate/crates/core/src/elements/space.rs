use super::lagrange::{self, n_basis};
use super::{quadrature, ElementError};
use crate::dense;
use crate::mesh::{Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Continuous Lagrange.
    Cg,
    /// Discontinuous Lagrange.
    Dg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueRank {
    Scalar,
    Vector2,
}

impl ValueRank {
    pub fn components(self) -> usize {
        match self {
            ValueRank::Scalar => 1,
            ValueRank::Vector2 => 2,
        }
    }
}

/// A scalar or two-component Lagrange space with its global numbering.
///
/// Vector spaces are numbered component-major: scalar dof `i` of component
/// `c` has global index `c * n_scalar_dofs + i`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    family: Family,
    degree: usize,
    value_rank: ValueRank,
    n_scalar: usize,
    n_local: usize,
    cell_dofs: Vec<usize>,
    node_coords: Vec<Point>,
}

/// Builds a space on `mesh`.
///
/// CG numbering: vertices, then edge nodes, then cell-interior nodes.
/// DG numbering: blocked by element.
pub fn build_space(
    mesh: &Mesh,
    family: Family,
    degree: usize,
    value_rank: ValueRank,
) -> Result<FeSpace, ElementError> {
    let ok = match family {
        Family::Cg => (1..=3).contains(&degree),
        Family::Dg => degree <= 2,
    };
    if !ok {
        return Err(ElementError::UnsupportedSpace { family, degree });
    }
    let n_local = n_basis(degree);
    let nt = mesh.n_triangles();
    let ref_nodes = lagrange::reference_nodes(degree);
    let mut cell_dofs = Vec::with_capacity(nt * n_local);
    let n_scalar = match family {
        Family::Dg => {
            cell_dofs.extend(0..nt * n_local);
            nt * n_local
        }
        Family::Cg => {
            let k = degree;
            let nv = mesh.n_vertices();
            let per_edge = k - 1;
            let n_interior = n_local - 3 - 3 * per_edge;
            let interior_base = nv + mesh.n_edges() * per_edge;
            for (t, tri) in mesh.triangles().iter().enumerate() {
                cell_dofs.extend_from_slice(tri);
                let edges = mesh.triangle_edges(t);
                for l in 0..3 {
                    let g = edges[l];
                    let forward = mesh.edges()[g][0] == tri[l];
                    for i in 1..k {
                        let pos = if forward { i - 1 } else { k - 1 - i };
                        cell_dofs.push(nv + g * per_edge + pos);
                    }
                }
                for j in 0..n_interior {
                    cell_dofs.push(interior_base + t * n_interior + j);
                }
            }
            interior_base + nt * n_interior
        }
    };
    let mut node_coords = vec![[0.0; 2]; n_scalar];
    for t in 0..nt {
        let geo = mesh.geometry(t);
        for (l, &xi) in ref_nodes.iter().enumerate() {
            node_coords[cell_dofs[t * n_local + l]] = geo.map(xi);
        }
    }
    Ok(FeSpace {
        family,
        degree,
        value_rank,
        n_scalar,
        n_local,
        cell_dofs,
        node_coords,
    })
}

impl FeSpace {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value_rank(&self) -> ValueRank {
        self.value_rank
    }

    pub fn components(&self) -> usize {
        self.value_rank.components()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_scalar * self.components()
    }

    pub fn n_scalar_dofs(&self) -> usize {
        self.n_scalar
    }

    /// Scalar basis functions per element.
    pub fn n_local_scalar(&self) -> usize {
        self.n_local
    }

    /// Local dofs per element, all components.
    pub fn n_local(&self) -> usize {
        self.n_local * self.components()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_dofs.len() / self.n_local
    }

    /// Scalar dofs of element `t`, in local node order.
    pub fn cell_scalar_dofs(&self, t: usize) -> &[usize] {
        &self.cell_dofs[t * self.n_local..(t + 1) * self.n_local]
    }

    /// All global dofs of element `t`, local index `c * n_local_scalar + l`.
    pub fn cell_dofs(&self, t: usize) -> Vec<usize> {
        let scalar = self.cell_scalar_dofs(t);
        (0..self.components())
            .flat_map(|c| scalar.iter().map(move |&d| c * self.n_scalar + d))
            .collect()
    }

    /// Physical location of every scalar node.
    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    /// Scalar dofs of the nodes lying on local edge `l` of element `t`
    /// (both vertices and the edge-interior nodes). Empty for DG spaces.
    pub fn edge_scalar_dofs(&self, t: usize, l: usize) -> Vec<usize> {
        if self.family == Family::Dg {
            return Vec::new();
        }
        let k = self.degree;
        let dofs = self.cell_scalar_dofs(t);
        let mut out = vec![dofs[l], dofs[(l + 1) % 3]];
        out.extend((0..k - 1).map(|i| dofs[3 + l * (k - 1) + i]));
        out
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<(), ElementError> {
        if coeffs.len() != self.n_dofs() {
            return Err(ElementError::LengthMismatch {
                expected: self.n_dofs(),
                found: coeffs.len(),
            });
        }
        Ok(())
    }

    fn expect_rank(&self, rank: ValueRank) -> Result<(), ElementError> {
        if self.value_rank != rank {
            return Err(ElementError::WrongRank {
                expected: rank,
                found: self.value_rank,
            });
        }
        Ok(())
    }

    /// Value of a scalar field at reference point `xi` of element `t`.
    pub fn eval_scalar(&self, coeffs: &[f64], t: usize, xi: Point) -> Result<f64, ElementError> {
        self.expect_rank(ValueRank::Scalar)?;
        self.check_len(coeffs)?;
        let mut phi = vec![0.0; self.n_local];
        lagrange::eval_into(self.degree, xi, &mut phi);
        Ok(self
            .cell_scalar_dofs(t)
            .iter()
            .zip(&phi)
            .map(|(&d, p)| coeffs[d] * p)
            .sum())
    }

    /// Physical gradient of a scalar field.
    pub fn grad_scalar(
        &self,
        mesh: &Mesh,
        coeffs: &[f64],
        t: usize,
        xi: Point,
    ) -> Result<[f64; 2], ElementError> {
        self.expect_rank(ValueRank::Scalar)?;
        self.check_len(coeffs)?;
        let mut dphi = vec![[0.0; 2]; self.n_local];
        lagrange::grad_into(self.degree, xi, &mut dphi);
        let mut g = [0.0; 2];
        for (&d, rg) in self.cell_scalar_dofs(t).iter().zip(&dphi) {
            g[0] += coeffs[d] * rg[0];
            g[1] += coeffs[d] * rg[1];
        }
        Ok(mesh.geometry(t).map_gradient(g))
    }

    /// Value of a vector field.
    pub fn eval_vector(
        &self,
        coeffs: &[f64],
        t: usize,
        xi: Point,
    ) -> Result<[f64; 2], ElementError> {
        self.expect_rank(ValueRank::Vector2)?;
        self.check_len(coeffs)?;
        let mut phi = vec![0.0; self.n_local];
        lagrange::eval_into(self.degree, xi, &mut phi);
        let mut v = [0.0; 2];
        for (&d, p) in self.cell_scalar_dofs(t).iter().zip(&phi) {
            v[0] += coeffs[d] * p;
            v[1] += coeffs[self.n_scalar + d] * p;
        }
        Ok(v)
    }

    /// Elementwise divergence of a vector field.
    pub fn div_vector(
        &self,
        mesh: &Mesh,
        coeffs: &[f64],
        t: usize,
        xi: Point,
    ) -> Result<f64, ElementError> {
        self.expect_rank(ValueRank::Vector2)?;
        self.check_len(coeffs)?;
        if self.degree == 0 {
            return Ok(0.0);
        }
        let mut dphi = vec![[0.0; 2]; self.n_local];
        lagrange::grad_into(self.degree, xi, &mut dphi);
        let geo = mesh.geometry(t);
        let mut div = 0.0;
        for (&d, rg) in self.cell_scalar_dofs(t).iter().zip(&dphi) {
            let g = geo.map_gradient(*rg);
            div += coeffs[d] * g[0] + coeffs[self.n_scalar + d] * g[1];
        }
        Ok(div)
    }
}

/// Interpolates a scalar function: nodal values for CG, local L2
/// projection for DG.
pub fn interpolate_scalar(
    mesh: &Mesh,
    space: &FeSpace,
    f: impl Fn(Point) -> f64,
) -> Result<Vec<f64>, ElementError> {
    space.expect_rank(ValueRank::Scalar)?;
    let mut out = vec![0.0; space.n_dofs()];
    project(mesh, space, |p| [f(p), 0.0], 1, &mut out)?;
    Ok(out)
}

/// Interpolates a vector function componentwise.
pub fn interpolate_vector(
    mesh: &Mesh,
    space: &FeSpace,
    f: impl Fn(Point) -> [f64; 2],
) -> Result<Vec<f64>, ElementError> {
    space.expect_rank(ValueRank::Vector2)?;
    let mut out = vec![0.0; space.n_dofs()];
    project(mesh, space, f, 2, &mut out)?;
    Ok(out)
}

fn project(
    mesh: &Mesh,
    space: &FeSpace,
    f: impl Fn(Point) -> [f64; 2],
    components: usize,
    out: &mut [f64],
) -> Result<(), ElementError> {
    let ns = space.n_scalar;
    match space.family {
        Family::Cg => {
            for (d, &p) in space.node_coords.iter().enumerate() {
                let v = f(p);
                for c in 0..components {
                    out[c * ns + d] = v[c];
                }
            }
        }
        Family::Dg => {
            let n = space.n_local;
            let rule = quadrature(2 * space.degree + 2)?;
            let table: Vec<Vec<f64>> = rule
                .points
                .iter()
                .map(|&xi| {
                    let mut phi = vec![0.0; n];
                    lagrange::eval_into(space.degree, xi, &mut phi);
                    phi
                })
                .collect();
            let mut mass = vec![0.0; n * n];
            for (phi, w) in table.iter().zip(&rule.weights) {
                for i in 0..n {
                    for j in 0..n {
                        mass[i * n + j] += w * phi[i] * phi[j];
                    }
                }
            }
            let lu = dense::Lu::new(mass, n).expect("reference mass matrix is nonsingular");
            let mut rhs = vec![0.0; n * components];
            for t in 0..mesh.n_triangles() {
                let geo = mesh.geometry(t);
                rhs.iter_mut().for_each(|r| *r = 0.0);
                for ((&xi, phi), w) in rule.points.iter().zip(&table).zip(&rule.weights) {
                    let v = f(geo.map(xi));
                    for c in 0..components {
                        for i in 0..n {
                            rhs[c * n + i] += w * v[c] * phi[i];
                        }
                    }
                }
                let dofs = space.cell_scalar_dofs(t);
                for c in 0..components {
                    let block = &mut rhs[c * n..(c + 1) * n];
                    lu.solve_in_place(block);
                    for (l, &d) in dofs.iter().enumerate() {
                        out[c * ns + d] = block[l];
                    }
                }
            }
        }
    }
    Ok(())
}
