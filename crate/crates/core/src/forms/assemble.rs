use std::collections::HashMap;

use super::{
    stabilization_lengths, BlockSystem, BoundaryCondition, Field, FieldSpaces, FormsError,
    Formulation, ProblemData, StabilizationParams,
};
use crate::elements::{gauss_legendre, lagrange, quadrature, FeSpace, Tabulation};
use crate::mesh::{Mesh, Point};
use crate::solver::SparseMatrix;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyOptions {
    /// Quadrature exactness; defaults to 2 * (max degree) + 3.
    pub quadrature_degree: Option<usize>,
    /// Keep the λ and μ equations unnegated (symmetric indefinite matrix).
    pub symmetric: bool,
}

// Scalar blocks of the system: u, e_x, e_y, s_x, s_y, λ, μ_x, μ_y.
const U: usize = 0;
const E: [usize; 2] = [1, 2];
const S: [usize; 2] = [3, 4];
const L: usize = 5;
const M: [usize; 2] = [6, 7];
const N_SLOTS: usize = 8;

fn is_scalar_slot(slot: usize) -> bool {
    slot == U || slot == L
}

/// Which scalar blocks can couple for the given coefficients.
fn coupling_mask(p: &StabilizationParams) -> [[bool; N_SLOTS]; N_SLOTS] {
    let mut m = [[false; N_SLOTS]; N_SLOTS];
    let mut set = |a: usize, b: usize| {
        m[a][b] = true;
        m[b][a] = true;
    };
    for s in 0..N_SLOTS {
        set(s, s);
    }
    set(U, L);
    for c in 0..2 {
        set(U, M[c]);
        set(E[c], M[c]);
        set(S[c], L);
        if p.alpha > 0.0 {
            set(U, E[c]);
        }
        if p.theta > 0.0 {
            set(U, S[c]);
        }
        if p.beta > 0.0 {
            set(L, M[c]);
        }
    }
    if p.theta > 0.0 {
        set(S[0], S[1]);
    }
    if p.beta > 0.0 {
        set(M[0], M[1]);
    }
    m
}

struct Layout {
    /// Global offset of every scalar block.
    offset: [usize; N_SLOTS],
    /// Local offset of every scalar block in the element matrix.
    local_offset: [usize; N_SLOTS + 1],
}

impl Layout {
    fn new(spaces: &FieldSpaces) -> Self {
        let o = spaces.offsets();
        let nv = spaces.vector.n_scalar_dofs();
        let offset = [
            o[0],
            o[1],
            o[1] + nv,
            o[2],
            o[2] + nv,
            o[3],
            o[4],
            o[4] + nv,
        ];
        let (ls, lv) = (
            spaces.scalar.n_local_scalar(),
            spaces.vector.n_local_scalar(),
        );
        let mut local_offset = [0; N_SLOTS + 1];
        for s in 0..N_SLOTS {
            local_offset[s + 1] = local_offset[s] + if is_scalar_slot(s) { ls } else { lv };
        }
        Layout {
            offset,
            local_offset,
        }
    }
}

// Sorted dofs of `b` coupled to each dof of `a` through a shared element.
fn adjacency(a: &FeSpace, b: &FeSpace) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); a.n_scalar_dofs()];
    for t in 0..a.n_cells() {
        let bd = b.cell_scalar_dofs(t);
        for &i in a.cell_scalar_dofs(t) {
            rows[i].extend_from_slice(bd);
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    rows
}

fn sparsity(
    spaces: &FieldSpaces,
    layout: &Layout,
    mask: &[[bool; N_SLOTS]; N_SLOTS],
) -> SparseMatrix {
    let (sc, vc) = (&spaces.scalar, &spaces.vector);
    let adj = [
        [adjacency(sc, sc), adjacency(sc, vc)],
        [adjacency(vc, sc), adjacency(vc, vc)],
    ];
    let kind = |s: usize| usize::from(!is_scalar_slot(s));
    let n = spaces.n_dofs();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    for a in 0..N_SLOTS {
        let n_rows = if is_scalar_slot(a) {
            sc.n_scalar_dofs()
        } else {
            vc.n_scalar_dofs()
        };
        for i in 0..n_rows {
            for b in (0..N_SLOTS).filter(|&b| mask[a][b]) {
                let off = layout.offset[b];
                col_idx.extend(adj[kind(a)][kind(b)][i].iter().map(|&j| off + j));
            }
            row_ptr.push(col_idx.len());
        }
    }
    let nnz = col_idx.len();
    SparseMatrix::new(n, row_ptr, col_idx, vec![0.0; nnz]).expect("generated pattern is valid")
}

/// Assembles with default options. The result has no boundary conditions
/// applied beyond Neumann loads.
pub fn assemble(
    mesh: &Mesh,
    formulation: &Formulation,
    data: &ProblemData,
) -> Result<BlockSystem, FormsError> {
    assemble_with(mesh, formulation, data, AssemblyOptions::default())
}

pub fn assemble_with(
    mesh: &Mesh,
    formulation: &Formulation,
    data: &ProblemData,
    options: AssemblyOptions,
) -> Result<BlockSystem, FormsError> {
    formulation.params.validate()?;
    data.validate(mesh)?;
    let spaces = formulation.spaces(mesh)?;
    let p = formulation.params;
    let layout = Layout::new(&spaces);
    let mask = coupling_mask(&p);
    let mut matrix = sparsity(&spaces, &layout, &mask);
    let mut rhs = vec![0.0; spaces.n_dofs()];

    let max_degree = spaces.scalar.degree().max(spaces.vector.degree());
    let rule = quadrature(options.quadrature_degree.unwrap_or(2 * max_degree + 3))?;
    let tab_s = Tabulation::new(spaces.scalar.degree(), &rule.points)?;
    let tab_v = Tabulation::new(spaces.vector.degree(), &rule.points)?;
    let (ns, nv) = (tab_s.n_basis, tab_v.n_basis);
    let n_loc = layout.local_offset[N_SLOTS];
    let lengths = stabilization_lengths(mesh, &p);
    let sigma = if options.symmetric { 1.0 } else { -1.0 };
    let kappa = data.kappa;

    let mut k_loc = vec![0.0; n_loc * n_loc];
    let mut f_loc = vec![0.0; n_loc];
    let mut gphi = vec![[0.0; 2]; ns];
    let mut gpsi = vec![[0.0; 2]; nv];
    let lo = layout.local_offset;

    for t in 0..mesh.n_triangles() {
        let geo = mesh.geometry(t);
        let (ell_s, ell_mu) = lengths[t];
        let ts = p.theta * kappa * ell_s * ell_s;
        let bm = p.beta * ell_mu * ell_mu;
        k_loc.iter_mut().for_each(|v| *v = 0.0);
        f_loc.iter_mut().for_each(|v| *v = 0.0);

        for (qi, (xi, wq)) in rule.iter().enumerate() {
            let w = wq * geo.jacobian_det.abs();
            let x = geo.map(xi);
            let zeta = (data.zeta)(x);
            let q = (data.q)(x);
            let f = (data.f)(x);
            let et = data.e_tilde.eval(t, x);
            let st = data.s_tilde.eval(t, x);
            let phi = tab_s.values(qi);
            let psi = tab_v.values(qi);
            for (g, r) in gphi.iter_mut().zip(tab_s.grads(qi)) {
                *g = geo.map_gradient(*r);
            }
            for (g, r) in gpsi.iter_mut().zip(tab_v.grads(qi)) {
                *g = geo.map_gradient(*r);
            }
            let mut add = |a: usize, i: usize, b: usize, j: usize, v: f64| {
                k_loc[(lo[a] + i) * n_loc + lo[b] + j] += w * v;
            };

            // u equation
            for i in 0..ns {
                for j in 0..ns {
                    let dot = gphi[j][0] * gphi[i][0] + gphi[j][1] * gphi[i][1];
                    add(
                        U,
                        i,
                        U,
                        j,
                        p.alpha * dot + ts * zeta * zeta * phi[j] * phi[i],
                    );
                    add(U, i, L, j, zeta * phi[j] * phi[i]);
                }
                for j in 0..nv {
                    for c in 0..2 {
                        add(U, i, E[c], j, -p.alpha * psi[j] * gphi[i][c]);
                        add(U, i, S[c], j, ts * zeta * gpsi[j][c] * phi[i]);
                        add(U, i, M[c], j, -psi[j] * gphi[i][c]);
                    }
                }
            }
            // e and s equations
            for i in 0..nv {
                for c in 0..2 {
                    for j in 0..ns {
                        add(E[c], i, U, j, -p.alpha * gphi[j][c] * psi[i]);
                        add(S[c], i, U, j, ts * zeta * phi[j] * gpsi[i][c]);
                        add(S[c], i, L, j, -(1.0 - p.eta) * gphi[j][c] * psi[i]);
                    }
                    for j in 0..nv {
                        let mass = psi[j] * psi[i];
                        add(E[c], i, E[c], j, (1.0 + p.alpha - p.gamma) * mass);
                        add(E[c], i, M[c], j, (1.0 - p.gamma) * mass);
                        add(S[c], i, S[c], j, (1.0 - p.eta) * kappa * mass);
                        for d in 0..2 {
                            add(S[c], i, S[d], j, ts * gpsi[j][d] * gpsi[i][c]);
                        }
                    }
                }
            }
            // λ equation
            for i in 0..ns {
                for j in 0..ns {
                    let dot = gphi[j][0] * gphi[i][0] + gphi[j][1] * gphi[i][1];
                    add(L, i, U, j, sigma * zeta * phi[j] * phi[i]);
                    add(
                        L,
                        i,
                        L,
                        j,
                        sigma * (-bm * zeta * zeta * phi[j] * phi[i] - p.eta / kappa * dot),
                    );
                }
                for j in 0..nv {
                    for c in 0..2 {
                        add(L, i, S[c], j, -sigma * (1.0 - p.eta) * psi[j] * gphi[i][c]);
                        add(L, i, M[c], j, -sigma * bm * gpsi[j][c] * zeta * phi[i]);
                    }
                }
            }
            // μ equation
            for i in 0..nv {
                for c in 0..2 {
                    for j in 0..ns {
                        add(M[c], i, U, j, -sigma * gphi[j][c] * psi[i]);
                        add(M[c], i, L, j, -sigma * bm * zeta * phi[j] * gpsi[i][c]);
                    }
                    for j in 0..nv {
                        let mass = psi[j] * psi[i];
                        add(M[c], i, E[c], j, sigma * (1.0 - p.gamma) * mass);
                        add(M[c], i, M[c], j, -sigma * p.gamma * mass);
                        for d in 0..2 {
                            add(M[c], i, M[d], j, -sigma * bm * gpsi[j][d] * gpsi[i][c]);
                        }
                    }
                }
            }

            for i in 0..ns {
                f_loc[lo[U] + i] += w * (ts * q * zeta + f) * phi[i];
                let div_part = st[0] * gphi[i][0] + st[1] * gphi[i][1];
                f_loc[lo[L] + i] +=
                    sigma * w * (q * phi[i] + p.eta * div_part - bm * f * zeta * phi[i]);
            }
            for i in 0..nv {
                for c in 0..2 {
                    f_loc[lo[E[c]] + i] += w * (1.0 - p.gamma) * et[c] * psi[i];
                    f_loc[lo[S[c]] + i] +=
                        w * ((1.0 - p.eta) * kappa * st[c] * psi[i] + ts * q * gpsi[i][c]);
                    f_loc[lo[M[c]] + i] +=
                        sigma * w * (-p.gamma * et[c] * psi[i] - bm * f * gpsi[i][c]);
                }
            }
        }
        scatter(
            &mut matrix,
            &mut rhs,
            &spaces,
            &layout,
            &mask,
            t,
            &k_loc,
            &f_loc,
        );
    }

    neumann_loads(mesh, &spaces, data, &layout, sigma, &mut rhs);

    let block_offsets = spaces.offsets();
    Ok(BlockSystem {
        matrix,
        rhs,
        spaces,
        block_offsets,
        dirichlet: Vec::new(),
        symmetric: options.symmetric,
    })
}

#[allow(clippy::too_many_arguments)]
fn scatter(
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
    spaces: &FieldSpaces,
    layout: &Layout,
    mask: &[[bool; N_SLOTS]; N_SLOTS],
    t: usize,
    k_loc: &[f64],
    f_loc: &[f64],
) {
    let n_loc = layout.local_offset[N_SLOTS];
    let dofs = |s: usize| {
        if is_scalar_slot(s) {
            spaces.scalar.cell_scalar_dofs(t)
        } else {
            spaces.vector.cell_scalar_dofs(t)
        }
    };
    let lo = layout.local_offset;
    for a in 0..N_SLOTS {
        for (i, &di) in dofs(a).iter().enumerate() {
            let row = layout.offset[a] + di;
            let li = lo[a] + i;
            rhs[row] += f_loc[li];
            let start = matrix.row_ptr()[row];
            let end = matrix.row_ptr()[row + 1];
            for b in (0..N_SLOTS).filter(|&b| mask[a][b]) {
                for (j, &dj) in dofs(b).iter().enumerate() {
                    let v = k_loc[li * n_loc + lo[b] + j];
                    if v == 0.0 {
                        continue;
                    }
                    let col = layout.offset[b] + dj;
                    let k = start
                        + matrix.col_idx()[start..end]
                            .binary_search(&col)
                            .expect("entry lies in the pattern");
                    matrix.values_mut()[k] += v;
                }
            }
        }
    }
}

// Outward unit normal and length of local edge `l` of element `t`.
fn edge_frame(mesh: &Mesh, t: usize, l: usize) -> ([f64; 2], f64, Point, Point) {
    let tri = mesh.triangles()[t];
    let a = mesh.vertices()[tri[l]];
    let b = mesh.vertices()[tri[(l + 1) % 3]];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    ([dy / len, -dx / len], len, a, b)
}

const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

fn neumann_loads(
    mesh: &Mesh,
    spaces: &FieldSpaces,
    data: &ProblemData,
    layout: &Layout,
    sigma: f64,
    rhs: &mut [f64],
) {
    let space = &spaces.scalar;
    let k = space.degree();
    let (gx, gw) = gauss_legendre(k + 4);
    let mut phi = vec![0.0; space.n_local_scalar()];
    for (edge, (t, l)) in mesh
        .boundary_edges()
        .iter()
        .zip(mesh.boundary_edge_owners())
    {
        let Some(BoundaryCondition::Neumann { s_n, mu_n }) = data.boundary.get(&edge.tag) else {
            continue;
        };
        let (normal, len, a, b) = edge_frame(mesh, t, l);
        let (ra, rb) = (REF_VERTICES[l], REF_VERTICES[(l + 1) % 3]);
        let dofs = space.cell_scalar_dofs(t);
        for (&s, &w) in gx.iter().zip(&gw) {
            let xi = [ra[0] + s * (rb[0] - ra[0]), ra[1] + s * (rb[1] - ra[1])];
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            lagrange::eval_into(k, xi, &mut phi);
            let (gs, gm) = (s_n(x, normal), mu_n(x, normal));
            for (i, &d) in dofs.iter().enumerate() {
                rhs[layout.offset[U] + d] -= w * len * gm * phi[i];
                rhs[layout.offset[L] + d] -= sigma * w * len * gs * phi[i];
            }
        }
    }
}

/// Imposes u and λ strongly at every node on Dirichlet-tagged edges.
///
/// Constrained rows become identity rows carrying the boundary value, and
/// their columns are moved to the right-hand side of the remaining rows.
pub fn apply_dirichlet(
    mut system: BlockSystem,
    mesh: &Mesh,
    data: &ProblemData,
) -> Result<BlockSystem, FormsError> {
    let space = &system.spaces.scalar;
    let off_u = system.block_offsets[Field::U.index()];
    let off_l = system.block_offsets[Field::Lambda.index()];
    let mut values: HashMap<usize, f64> = HashMap::new();
    let mut set = |dof: usize, v: f64| -> Result<(), FormsError> {
        match values.insert(dof, v) {
            Some(old) if (old - v).abs() > 1e-12 => {
                Err(FormsError::ConflictingDirichlet { dof, a: old, b: v })
            }
            _ => Ok(()),
        }
    };
    for (edge, (t, l)) in mesh
        .boundary_edges()
        .iter()
        .zip(mesh.boundary_edge_owners())
    {
        match data.boundary.get(&edge.tag) {
            Some(BoundaryCondition::Dirichlet { u, lambda }) => {
                for d in space.edge_scalar_dofs(t, l) {
                    let x = space.node_coords()[d];
                    set(off_u + d, u(x))?;
                    set(off_l + d, lambda(x))?;
                }
            }
            Some(BoundaryCondition::Neumann { .. }) => {}
            None => return Err(FormsError::MissingBoundaryCondition(edge.tag)),
        }
    }
    let n = system.n_dofs();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for (&d, &v) in &values {
        fixed[d] = Some(v);
    }
    let row_ptr = system.matrix.row_ptr().to_vec();
    let cols = system.matrix.col_idx().to_vec();
    let vals = system.matrix.values_mut();
    for r in 0..n {
        let range = row_ptr[r]..row_ptr[r + 1];
        if let Some(g) = fixed[r] {
            for k in range {
                vals[k] = if cols[k] == r { 1.0 } else { 0.0 };
            }
            system.rhs[r] = g;
        } else {
            for k in range {
                if let Some(g) = fixed[cols[k]] {
                    system.rhs[r] -= vals[k] * g;
                    vals[k] = 0.0;
                }
            }
        }
    }
    system.matrix.prune_zeros();
    let mut dirichlet: Vec<(usize, f64)> = values.into_iter().collect();
    dirichlet.sort_by_key(|d| d.0);
    system.dirichlet = dirichlet;
    Ok(system)
}
