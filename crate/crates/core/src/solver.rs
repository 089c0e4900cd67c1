//! Compressed sparse row storage and a direct sparse LU solve.
//!
//! Factorization is delegated to faer (fill-reducing column ordering plus
//! partial row pivoting). Residuals and products are computed here, so the
//! solve contract is checked independently of the factorization.

use std::io::{self, Write};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky,
    SymmetricOrdering,
};
use faer::sparse::linalg::lu::{
    factorize_symbolic_lu, LuRef, LuSymbolicParams, NumericLu, SymbolicLu,
};
use faer::sparse::linalg::{amd, LuError, SupernodalThreshold};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Side;
use faer::{Conj, Par};
use thiserror::Error;

/// Relative residual every accepted solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 3;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("matrix is singular (pivot {index})")]
    Singular { index: usize },
    #[error("factorization produced non-finite values; matrix is numerically singular")]
    NumericallySingular,
    #[error("relative residual {relative:.3e} exceeds {RESIDUAL_TOLERANCE:e}")]
    ResidualTooLarge { relative: f64 },
    #[error("sparse factorization failed: {0}")]
    Backend(String),
}

/// Square CSR matrix with strictly increasing column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidStructure(m.to_string()));
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 {
            return bad("row offsets must have length n + 1 and start at 0");
        }
        if *row_ptr.last().unwrap() != col_idx.len() || col_idx.len() != values.len() {
            return bad("row offsets, column indices and values disagree in length");
        }
        for r in 0..n {
            if row_ptr[r] > row_ptr[r + 1] {
                return bad("row offsets are not monotone");
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&c| c >= n) {
                return bad("column indices must be strictly increasing and in range");
            }
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SolverError> {
        let mut sorted = triplets.to_vec();
        if let Some(&(r, c, _)) = sorted.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(SolverError::InvalidStructure(format!(
                "entry ({r}, {c}) outside {n}x{n}"
            )));
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self::new(n, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Position of `(r, c)` in the value array, if stored.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.col_idx[start..self.row_ptr[r + 1]]
            .binary_search(&c)
            .ok()
            .map(|k| start + k)
    }

    /// Stored value at `(r, c)`, zero if not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Symmetry up to `rel_tol · max|a_ij|`.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        (0..self.n).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals)
                .all(|(&c, &v)| (self.get(c, r) - v).abs() <= tol)
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, SolverError> {
        if x.len() != self.n {
            return Err(SolverError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
            })
            .collect())
    }

    /// `P A P^T` where `perm[i]` is the new index of old row/column `i`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<Self, SolverError> {
        if perm.len() != self.n {
            return Err(SolverError::DimensionMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((perm[r], perm[c], v));
            }
        }
        Self::from_triplets(self.n, &triplets)
    }

    /// Drops stored zeros, keeping the diagonal.
    pub fn prune_zeros(&mut self) {
        let mut row_ptr = vec![0; self.n + 1];
        let mut k = 0;
        for r in 0..self.n {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[p];
                if self.values[p] != 0.0 || c == r {
                    self.col_idx[k] = c;
                    self.values[k] = self.values[p];
                    k += 1;
                }
            }
            row_ptr[r + 1] = k;
        }
        self.col_idx.truncate(k);
        self.values.truncate(k);
        self.row_ptr = row_ptr;
    }

    /// Writes `i j value` lines, one per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "% {} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(out, "{r} {c} {v:e}")?;
            }
        }
        Ok(())
    }
}

/// Euclidean norm of `A x - b`.
pub fn residual_norm(matrix: &SparseMatrix, x: &[f64], rhs: &[f64]) -> Result<f64, SolverError> {
    if rhs.len() != matrix.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: matrix.dim(),
            found: rhs.len(),
        });
    }
    let ax = matrix.matvec(x)?;
    Ok(ax
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse LU of a CSR matrix. The CSR arrays are handed to faer as the
/// column-major storage of `Aᵀ`, so solves go through the transposed path.
struct Factorization {
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, f64>,
}

impl Factorization {
    fn new(matrix: &SparseMatrix) -> Result<Self, SolverError> {
        let n = matrix.dim();
        let backend = |e: LuError| match e {
            LuError::SymbolicSingular { index } => SolverError::Singular { index },
            LuError::Generic(g) => SolverError::Backend(format!("{g:?}")),
        };
        let pattern =
            SymbolicSparseColMatRef::new_checked(n, n, &matrix.row_ptr, None, &matrix.col_idx);
        let symbolic = factorize_symbolic_lu(pattern, LuSymbolicParams::default())
            .map_err(|g| backend(LuError::Generic(g)))?;
        let mut numeric = NumericLu::new();
        let a_t = SparseColMatRef::new(pattern, &matrix.values);
        let mut mem = MemBuffer::try_new(
            symbolic.factorize_numeric_lu_scratch::<f64>(Par::Seq, Default::default()),
        )
        .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
        symbolic
            .factorize_numeric_lu(
                &mut numeric,
                a_t,
                Par::Seq,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(backend)?;
        Ok(Factorization { symbolic, numeric })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let mut mem = MemBuffer::new(
            self.symbolic
                .solve_transpose_in_place_scratch::<f64>(1, Par::Seq),
        );
        LuRef::new_unchecked(&self.symbolic, &self.numeric).solve_transpose_in_place_with_conj(
            Conj::No,
            x.as_mut(),
            Par::Seq,
            MemStack::new(&mut mem),
        );
        (0..n).map(|i| x[(i, 0)]).collect()
    }
}

/// Symmetric indefinite factorization `P A Pᵀ = L B Lᵀ` with an AMD
/// ordering and Bunch-Kaufman pivoting inside supernodes. Pivoting cannot
/// cross supernode boundaries, so callers must check the residual.
struct SymmetricFactorization {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<usize>,
    perm_inv: Vec<usize>,
}

impl SymmetricFactorization {
    /// `groups[i]` is the group of unknown `i`, with ids `0..n_groups`.
    /// Unknowns of one group are ordered consecutively and every block
    /// coupling two groups is stored densely, so each group lands inside a
    /// single supernode where pivoting can reach all of its members.
    fn new(matrix: &SparseMatrix, groups: &[usize]) -> Result<Self, SolverError> {
        let n = matrix.dim();
        let backend = |e: faer::sparse::FaerError| SolverError::Backend(format!("{e:?}"));
        let n_groups = groups.iter().map(|g| g + 1).max().unwrap_or(0);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
        for (i, &g) in groups.iter().enumerate() {
            members[g].push(i);
        }

        // quotient graph, both triangles
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
        for r in 0..n {
            for &c in matrix.row(r).0 {
                adjacency[groups[r]].push(groups[c]);
                adjacency[groups[c]].push(groups[r]);
            }
        }
        let mut q_ptr = vec![0];
        let mut q_idx = Vec::new();
        for (g, adj) in adjacency.iter_mut().enumerate() {
            adj.push(g);
            adj.sort_unstable();
            adj.dedup();
            q_idx.extend_from_slice(adj);
            q_ptr.push(q_idx.len());
        }
        let quotient =
            SymbolicSparseColMatRef::new_checked(n_groups, n_groups, &q_ptr, None, &q_idx);
        let mut group_perm = vec![0usize; n_groups];
        let mut group_perm_inv = vec![0usize; n_groups];
        let mut mem = MemBuffer::try_new(amd::order_scratch::<usize>(n_groups, q_idx.len()))
            .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
        amd::order(
            &mut group_perm,
            &mut group_perm_inv,
            quotient,
            amd::Control::default(),
            MemStack::new(&mut mem),
        )
        .map_err(backend)?;
        let mut perm_fwd = Vec::with_capacity(n);
        for &g in &group_perm {
            perm_fwd.extend_from_slice(&members[g]);
        }
        let mut perm_inv = vec![0usize; n];
        for (new, &old) in perm_fwd.iter().enumerate() {
            perm_inv[old] = new;
        }

        // lower triangle of the block-padded matrix
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut rows = Vec::new();
        for col in 0..n {
            rows.clear();
            for &h in &adjacency[groups[col]] {
                rows.extend(members[h].iter().copied().filter(|&r| r >= col));
            }
            rows.sort_unstable();
            for &row in &rows {
                row_idx.push(row);
                values.push(matrix.get(row, col));
            }
            col_ptr.push(row_idx.len());
        }
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let params = CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        };
        let ordering = SymmetricOrdering::Custom(PermRef::new_checked(&perm_fwd, &perm_inv, n));
        let symbolic =
            factorize_symbolic_cholesky(pattern, Side::Lower, ordering, params).map_err(backend)?;
        let mut out = SymmetricFactorization {
            values: vec![0.0; symbolic.len_val()],
            subdiag: vec![0.0; n],
            perm_fwd: vec![0; n],
            perm_inv: vec![0; n],
            symbolic,
        };
        let a = SparseColMatRef::new(pattern, &values);
        let mut mem = MemBuffer::try_new(
            out.symbolic
                .factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default()),
        )
        .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
        out.symbolic.factorize_numeric_intranode_lblt(
            &mut out.values,
            &mut out.subdiag,
            &mut out.perm_fwd,
            &mut out.perm_inv,
            a,
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        );
        Ok(out)
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        let perm = PermRef::new_checked(&self.perm_fwd, &self.perm_inv, n);
        IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm)
            .solve_in_place_with_conj(Conj::No, x.as_mut(), Par::Seq, MemStack::new(&mut mem));
        (0..n).map(|i| x[(i, 0)]).collect()
    }
}
fn check_dims(matrix: &SparseMatrix, rhs: &[f64]) -> Result<(), SolverError> {
    if rhs.len() != matrix.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: matrix.dim(),
            found: rhs.len(),
        });
    }
    Ok(())
}

/// Iterative refinement around an approximate inverse `apply`. Fails unless
/// the relative residual reaches [`RESIDUAL_TOLERANCE`].
fn refine(
    matrix: &SparseMatrix,
    rhs: &[f64],
    apply: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<f64>, SolverError> {
    let finite = |x: Vec<f64>| {
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(SolverError::NumericallySingular)
        }
    };
    let mut x = finite(apply(rhs))?;
    let scale = norm2(rhs).max(f64::EPSILON);
    let mut relative = residual_norm(matrix, &x, rhs)? / scale;
    for _ in 0..REFINEMENT_STEPS {
        if relative <= RESIDUAL_TOLERANCE * 1e-2 {
            break;
        }
        let ax = matrix.matvec(&x)?;
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = finite(apply(&r))?;
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let rel = residual_norm(matrix, &candidate, rhs)? / scale;
        if rel >= relative {
            break;
        }
        x = candidate;
        relative = rel;
    }
    if !(relative <= RESIDUAL_TOLERANCE) {
        return Err(SolverError::ResidualTooLarge { relative });
    }
    Ok(x)
}

/// Solves `A x = b` by sparse LU with up to three steps of iterative
/// refinement. Fails unless the relative residual reaches
/// [`RESIDUAL_TOLERANCE`].
pub fn solve_direct(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    check_dims(matrix, rhs)?;
    if matrix.dim() == 0 {
        return Ok(Vec::new());
    }
    let lu = Factorization::new(matrix)?;
    refine(matrix, rhs, |b| lu.solve(b))
}

/// Like [`solve_direct`] for symmetric (possibly indefinite) matrices. Uses
/// the much sparser symmetric factorization and falls back to LU when the
/// matrix is not symmetric or the restricted pivoting is not accurate
/// enough.
pub fn solve_symmetric(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    let groups: Vec<usize> = (0..matrix.dim()).collect();
    solve_symmetric_grouped(matrix, rhs, &groups)
}

/// [`solve_symmetric`] with unknowns grouped for pivoting, typically all
/// unknowns attached to one mesh node. `groups[i]` is the group id of
/// unknown `i`; ids must cover `0..n_groups`.
pub fn solve_symmetric_grouped(
    matrix: &SparseMatrix,
    rhs: &[f64],
    groups: &[usize],
) -> Result<Vec<f64>, SolverError> {
    check_dims(matrix, rhs)?;
    if groups.len() != matrix.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: matrix.dim(),
            found: groups.len(),
        });
    }
    if matrix.dim() == 0 {
        return Ok(Vec::new());
    }
    // the factorization reads the lower triangle only; refinement against
    // the full matrix absorbs round-off asymmetry
    if !matrix.is_symmetric(SYMMETRY_TOLERANCE) {
        return solve_direct(matrix, rhs);
    }
    let attempt = SymmetricFactorization::new(matrix, groups)
        .and_then(|f| refine(matrix, rhs, |b| f.solve(b)));
    match attempt {
        Ok(x) => Ok(x),
        Err(_) => solve_direct(matrix, rhs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let b = vec![1.5, -2.0, 3.25];
        assert_eq!(solve_direct(&SparseMatrix::identity(3), &b).unwrap(), b);
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let x = solve_direct(&a, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, &[(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(SparseMatrix::new(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(2, vec![0, 1, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::new(2, vec![0, 1], vec![0], vec![1.0]).is_err());
    }

    #[test]
    fn singular_matrix_is_reported() {
        // structurally singular: an empty column
        let a = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 0, 1.0), (2, 2, 1.0)]).unwrap();
        assert!(solve_direct(&a, &[1.0, 1.0, 1.0]).is_err());
        // numerically singular: two equal rows
        let a =
            SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 1.0), (1, 1, 2.0)])
                .unwrap();
        assert!(solve_direct(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn prune_keeps_diagonal() {
        let mut a =
            SparseMatrix::from_triplets(2, &[(0, 0, 0.0), (0, 1, 0.0), (1, 1, 3.0)]).unwrap();
        a.prune_zeros();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.col_idx(), &[0, 1]);
    }

    #[test]
    fn coordinate_dump() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, 2.5), (1, 0, -1.0)]).unwrap();
        let mut buf = Vec::new();
        a.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("0 1 2.5e0"));
    }
}
