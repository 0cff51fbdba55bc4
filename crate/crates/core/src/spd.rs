//! Reduced KKT subsystem solves: `Q_{I,I} x_I = -g_I`, then `s_A = Q_{A,I} x_I + g_A`.
//!
//! Every call factorizes `Q_{I,I}` from scratch. Dense storage and small sparse
//! subsystems go through a dense square-root-free Cholesky (`L D L'`); larger sparse
//! subsystems use an envelope (skyline) variant of the same factorization after a
//! reverse Cuthill-McKee reordering.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::matrix::{SparseMatrix, SymMatrix};
use crate::model::{KktPoint, QpProblem};

/// Sparse subsystems with at most this many rows are factorized densely.
pub const DEFAULT_DENSE_THRESHOLD: usize = 1024;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

/// In-place square-root-free Cholesky (`L D L'`) of a row-major `m x m` matrix: the
/// strict lower triangle receives the unit factor `L`, the diagonal receives `D`. On
/// failure returns the position of the offending pivot.
pub(crate) fn dense_cholesky(a: &mut [f64], m: usize) -> std::result::Result<(), usize> {
    debug_assert_eq!(a.len(), m * m);
    for i in 0..m {
        let (done, rest) = a.split_at_mut(i * m);
        let row_i = &mut rest[..m];
        // row_i[j] <- L_ij d_j
        for j in 0..i {
            let row_j = &done[j * m..j * m + m];
            row_i[j] -= dot(&row_i[..j], &row_j[..j]);
        }
        let mut d = row_i[i];
        for k in 0..i {
            let t = row_i[k];
            let l = t / done[k * m + k];
            d -= t * l;
            row_i[k] = l;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(i);
        }
        row_i[i] = d;
    }
    Ok(())
}

/// Solves `L D L' x = b` in place given the factor from [`dense_cholesky`].
pub(crate) fn dense_cholesky_solve(l: &[f64], m: usize, b: &mut [f64]) {
    for i in 0..m {
        let row = &l[i * m..i * m + m];
        b[i] -= dot(&row[..i], &b[..i]);
    }
    for i in 0..m {
        b[i] /= l[i * m + i];
    }
    for i in (0..m).rev() {
        let row = &l[i * m..i * m + m];
        let xi = b[i];
        for k in 0..i {
            b[k] -= row[k] * xi;
        }
    }
}

/// Reverse Cuthill-McKee ordering of a symmetric sparsity pattern. Returns `perm` with
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let m = a.n();
    let degree: Vec<usize> = (0..m)
        .map(|i| a.row(i).0.iter().filter(|&&j| j != i).count())
        .collect();
    let mut visited = vec![false; m];
    let mut order = Vec::with_capacity(m);
    let mut by_degree: Vec<usize> = (0..m).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut queue = VecDeque::new();
    let mut nbrs = Vec::new();
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(a, start, &degree);
        visited[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Start node of maximal BFS eccentricity found by repeated level-structure sweeps.
fn pseudo_peripheral(a: &SparseMatrix, start: usize, degree: &[usize]) -> usize {
    let mut root = start;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (depth, last_level) = bfs_levels(a, root);
        if depth <= best_depth && root != start {
            break;
        }
        best_depth = depth;
        let next = *last_level
            .iter()
            .min_by_key(|&&j| (degree[j], j))
            .expect("non-empty level");
        if next == root {
            break;
        }
        root = next;
    }
    root
}

fn bfs_levels(a: &SparseMatrix, root: usize) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; a.n()];
    level[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &j in a.row(v).0 {
                if level[j] == usize::MAX {
                    level[j] = depth + 1;
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Envelope (profile) `L D L'` factor of a permuted sparse SPD matrix.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factorizes `a` after RCM reordering. The error carries the original (unpermuted)
    /// row of the failing pivot.
    pub fn factorize(a: &SparseMatrix) -> std::result::Result<Self, usize> {
        let m = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; m];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..m).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &j in a.row(old).0 {
                let c = inv[j];
                if c < first[new] {
                    first[new] = c;
                }
            }
        }
        let mut start = Vec::with_capacity(m + 1);
        start.push(0);
        for i in 0..m {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut vals = vec![0.0; start[m]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, v) = a.row(old);
            for (&j, &x) in cols.iter().zip(v) {
                let c = inv[j];
                if c <= new {
                    vals[start[new] + c - first[new]] = x;
                }
            }
        }
        for i in 0..m {
            let fi = first[i];
            let (before, row_i_and_after) = vals.split_at_mut(start[i]);
            let row_i = &mut row_i_and_after[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = &before[start[j]..start[j + 1]];
                row_i[j - fi] -= dot(&row_i[k0 - fi..j - fi], &row_j[k0 - fj..j - fj]);
            }
            let mut d = row_i[i - fi];
            for k in fi..i {
                let t = row_i[k - fi];
                let l = t / before[start[k + 1] - 1];
                d -= t * l;
                row_i[k - fi] = l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(perm[i]);
            }
            row_i[i - fi] = d;
        }
        Ok(EnvelopeCholesky {
            perm,
            first,
            start,
            vals,
        })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let m = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..m {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            y[i] -= dot(&row[..i - fi], &y[fi..i]);
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi /= self.vals[self.start[i + 1] - 1];
        }
        for i in (0..m).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }
}

/// A Cholesky factorization of some `Q_{I,I}`.
pub enum Factorization {
    Dense { l: Vec<f64>, m: usize },
    Envelope(EnvelopeCholesky),
}

impl Factorization {
    pub fn solve(&self, b: &mut [f64]) {
        match self {
            Factorization::Dense { l, m } => dense_cholesky_solve(l, *m, b),
            Factorization::Envelope(f) => f.solve(b),
        }
    }
}

/// Factorizes `Q_{I,I}`. Errors carry the original index of the failing pivot.
pub fn factorize(
    q: &SymMatrix,
    inactive: &IndexSet,
    dense_threshold: usize,
) -> Result<Factorization> {
    let m = inactive.len();
    if q.is_sparse() && m > dense_threshold {
        let sub = q.principal_sparse(inactive);
        EnvelopeCholesky::factorize(&sub)
            .map(Factorization::Envelope)
            .map_err(|k| Error::FactorizationFailure {
                pivot: inactive.as_slice()[k],
            })
    } else {
        let mut l = q.principal_dense(inactive);
        dense_cholesky(&mut l, m).map_err(|k| Error::FactorizationFailure {
            pivot: inactive.as_slice()[k],
        })?;
        Ok(Factorization::Dense { l, m })
    }
}

/// Solution of one reduced KKT subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemSolution {
    /// Values on the inactive set, in ascending index order.
    pub x_inactive: Vec<f64>,
    /// Multipliers on the active set, in ascending index order.
    pub s_active: Vec<f64>,
}

impl SubsystemSolution {
    pub fn subsystem_size(&self) -> usize {
        self.x_inactive.len()
    }
}

fn check_partition(n: usize, inactive: &IndexSet, active: &IndexSet) -> Result<()> {
    if inactive.len() + active.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: inactive.len() + active.len(),
        });
    }
    for set in [inactive, active] {
        if let Some(mx) = set.max() {
            if mx >= n {
                return Err(Error::IndexOutOfRange { index: mx, n });
            }
        }
    }
    if !inactive.is_disjoint(active) {
        return Err(Error::InvalidParameter(
            "inactive and active sets overlap".into(),
        ));
    }
    Ok(())
}

/// Solves the subsystem for partition `(I, A)` with the default dense threshold.
pub fn solve_subsystem(
    problem: &QpProblem,
    inactive: &IndexSet,
    active: &IndexSet,
) -> Result<SubsystemSolution> {
    solve_subsystem_with(problem, inactive, active, DEFAULT_DENSE_THRESHOLD)
}

pub fn solve_subsystem_with(
    problem: &QpProblem,
    inactive: &IndexSet,
    active: &IndexSet,
    dense_threshold: usize,
) -> Result<SubsystemSolution> {
    let n = problem.n();
    check_partition(n, inactive, active)?;
    let g = problem.g();
    if inactive.is_empty() {
        return Ok(SubsystemSolution {
            x_inactive: Vec::new(),
            s_active: active.iter().map(|&a| g[a]).collect(),
        });
    }
    let fact = factorize(problem.q(), inactive, dense_threshold)?;
    let mut x_inactive: Vec<f64> = inactive.iter().map(|&i| -g[i]).collect();
    fact.solve(&mut x_inactive);
    if x_inactive.iter().any(|v| !v.is_finite()) {
        return Err(Error::FactorizationFailure {
            pivot: inactive.as_slice()[0],
        });
    }
    let mut x_full = vec![0.0; n];
    for (&i, &v) in inactive.iter().zip(&x_inactive) {
        x_full[i] = v;
    }
    let s_active = active
        .iter()
        .map(|&a| problem.q().row_dot(a, &x_full) + g[a])
        .collect();
    Ok(SubsystemSolution {
        x_inactive,
        s_active,
    })
}

/// Scatters a subsystem solution into full-length `x` (zero on `A`) and `s` (zero on `I`).
pub fn embed_point(
    n: usize,
    inactive: &IndexSet,
    active: &IndexSet,
    sol: &SubsystemSolution,
) -> Result<KktPoint> {
    if sol.x_inactive.len() != inactive.len() {
        return Err(Error::DimensionMismatch {
            expected: inactive.len(),
            found: sol.x_inactive.len(),
        });
    }
    if sol.s_active.len() != active.len() {
        return Err(Error::DimensionMismatch {
            expected: active.len(),
            found: sol.s_active.len(),
        });
    }
    check_partition(n, inactive, active)?;
    let mut p = KktPoint::zeros(n);
    for (&i, &v) in inactive.iter().zip(&sol.x_inactive) {
        p.x[i] = v;
    }
    for (&a, &v) in active.iter().zip(&sol.s_active) {
        p.s[a] = v;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::from(v.to_vec())
    }

    #[test]
    fn diagonal_example() {
        let p = QpProblem::dense(2, vec![2.0, 0.0, 0.0, 2.0], vec![-4.0, 6.0]).unwrap();
        let sol = solve_subsystem(&p, &set(&[0]), &set(&[1])).unwrap();
        assert_eq!(sol.x_inactive, vec![2.0]);
        assert_eq!(sol.s_active, vec![6.0]);
        assert_eq!(sol.subsystem_size(), 1);
    }

    #[test]
    fn empty_inactive_returns_g() {
        let p = QpProblem::dense(
            3,
            vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0],
            vec![1.0, -2.0, 3.0],
        )
        .unwrap();
        let sol = solve_subsystem(&p, &IndexSet::new(), &IndexSet::full(3)).unwrap();
        assert!(sol.x_inactive.is_empty());
        assert_eq!(sol.s_active, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn two_by_two_full_solve() {
        // Q^{-1}(-g) = (1/11) [[3,-1],[-1,4]] [1,2] = [1/11, 7/11]
        let p = QpProblem::dense(2, vec![4.0, 1.0, 1.0, 3.0], vec![-1.0, -2.0]).unwrap();
        let sol = solve_subsystem(&p, &IndexSet::full(2), &IndexSet::new()).unwrap();
        assert!((sol.x_inactive[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((sol.x_inactive[1] - 7.0 / 11.0).abs() < 1e-15);
        assert!(sol.s_active.is_empty());
    }

    #[test]
    fn embed_examples() {
        let sol = SubsystemSolution {
            x_inactive: vec![5.0],
            s_active: vec![1.0, -1.0],
        };
        let p = embed_point(3, &set(&[1]), &set(&[0, 2]), &sol).unwrap();
        assert_eq!(p.x, vec![0.0, 5.0, 0.0]);
        assert_eq!(p.s, vec![1.0, 0.0, -1.0]);

        let sol = SubsystemSolution {
            x_inactive: vec![2.0],
            s_active: vec![],
        };
        let p = embed_point(1, &set(&[0]), &set(&[]), &sol).unwrap();
        assert_eq!((p.x, p.s), (vec![2.0], vec![0.0]));

        let sol = SubsystemSolution {
            x_inactive: vec![],
            s_active: vec![3.0, 4.0],
        };
        let p = embed_point(2, &set(&[]), &set(&[0, 1]), &sol).unwrap();
        assert_eq!((p.x, p.s), (vec![0.0, 0.0], vec![3.0, 4.0]));
    }

    #[test]
    fn rejects_bad_partition() {
        let p = QpProblem::dense(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap();
        assert!(solve_subsystem(&p, &set(&[0]), &set(&[0])).is_err());
        assert!(solve_subsystem(&p, &set(&[0]), &set(&[])).is_err());
    }

    #[test]
    fn indefinite_subsystem_reports_original_index() {
        let q = vec![1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0];
        let p = QpProblem::dense(3, q, vec![0.0; 3]).unwrap();
        let err = solve_subsystem(&p, &set(&[1, 2]), &set(&[0])).unwrap_err();
        assert_eq!(err, Error::FactorizationFailure { pivot: 2 });
    }

    #[test]
    fn rcm_reduces_bandwidth_of_shuffled_path() {
        // path graph 0-1-...-9 under a scrambling permutation
        let scramble = [3usize, 7, 0, 9, 5, 1, 8, 2, 6, 4];
        let mut trip = Vec::new();
        for k in 0..10 {
            trip.push((scramble[k], scramble[k], 2.0));
            if k + 1 < 10 {
                trip.push((scramble[k], scramble[k + 1], -1.0));
                trip.push((scramble[k + 1], scramble[k], -1.0));
            }
        }
        let q = SymMatrix::from_triplets(10, &trip).unwrap();
        let sub = q.principal_sparse(&IndexSet::full(10));
        let perm = reverse_cuthill_mckee(&sub);
        let mut inv = [0; 10];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let bw = trip
            .iter()
            .map(|&(i, j, _)| (inv[i] as isize - inv[j] as isize).unsigned_abs())
            .max()
            .unwrap();
        assert_eq!(bw, 1);
        let f = EnvelopeCholesky::factorize(&sub).unwrap();
        assert_eq!(f.envelope_size(), 19);
    }
}
