//! Symmetric matrix storage: dense row-major or canonical sparse (CSR over sorted
//! unique triplets, both triangles stored).

use crate::error::{Error, Result};
use crate::index_set::IndexSet;

/// Relative asymmetry accepted (and averaged away) at construction.
pub const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// A symmetric `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum SymMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl DenseMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl SparseMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indexes and values of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Builds from per-row entries already sorted by column and symmetric.
    pub(crate) fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }
}

impl SymMatrix {
    /// Dense matrix from row-major data. Nearly symmetric input is averaged with its
    /// transpose; anything beyond [`SYMMETRY_RTOL`] is rejected.
    pub fn dense(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyProblem);
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let max_abs = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if asym > SYMMETRY_RTOL * max_abs {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        if asym > 0.0 {
            for i in 0..n {
                for j in 0..i {
                    let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                    data[i * n + j] = avg;
                    data[j * n + i] = avg;
                }
            }
        }
        Ok(SymMatrix::Dense(DenseMatrix { n, data }))
    }

    /// Sparse matrix from 0-based `(row, col, value)` triplets covering both triangles.
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyProblem);
        }
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), n });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            t.push((i, j, v));
        }
        t.sort_by_key(|e| (e.0, e.1));
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in t {
            let row = &mut rows[i];
            match row.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => row.push((j, v)),
            }
        }
        let m = SparseMatrix::from_rows(n, rows);
        let max_abs = m.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        // Check every stored entry against its mirror, inserting missing mirrors as zero.
        let mut asym = 0.0f64;
        let mut needs_fill = false;
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (mc, _) = m.row(j);
                if mc.binary_search(&i).is_err() {
                    needs_fill = true;
                }
                asym = asym.max((v - m.get(j, i)).abs());
            }
        }
        if asym > SYMMETRY_RTOL * max_abs {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        if asym == 0.0 && !needs_fill {
            return Ok(SymMatrix::Sparse(m));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    continue;
                }
                let avg = 0.5 * (v + m.get(j, i));
                rows[i].push((j, avg));
                if j != i {
                    rows[j].push((i, avg));
                }
            }
        }
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                // lower entries whose mirror is missing
                if j < i && m.row(j).0.binary_search(&i).is_err() {
                    let avg = 0.5 * v;
                    rows[i].push((j, avg));
                    rows[j].push((i, avg));
                }
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        Ok(SymMatrix::Sparse(SparseMatrix::from_rows(n, rows)))
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| vec![(i, 1.0)]).collect();
        SymMatrix::Sparse(SparseMatrix::from_rows(n, rows))
    }

    pub fn n(&self) -> usize {
        match self {
            SymMatrix::Dense(d) => d.n,
            SymMatrix::Sparse(s) => s.n,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, SymMatrix::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            SymMatrix::Dense(d) => d.data[i * d.n + j],
            SymMatrix::Sparse(s) => s.get(i, j),
        }
    }

    /// Number of stored nonzeros (all `n^2` for dense storage).
    pub fn nnz(&self) -> usize {
        match self {
            SymMatrix::Dense(d) => d.data.len(),
            SymMatrix::Sparse(s) => s.nnz(),
        }
    }

    /// Fraction of nonzero entries.
    pub fn density(&self) -> f64 {
        let n = self.n() as f64;
        let nz = match self {
            SymMatrix::Dense(d) => d.data.iter().filter(|v| **v != 0.0).count(),
            SymMatrix::Sparse(s) => s.values.iter().filter(|v| **v != 0.0).count(),
        };
        nz as f64 / (n * n)
    }

    /// Exact check `Q_ij == Q_ji` on the stored data.
    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        match self {
            SymMatrix::Dense(d) => {
                (0..n).all(|i| (0..i).all(|j| d.data[i * n + j] == d.data[j * n + i]))
            }
            SymMatrix::Sparse(s) => (0..n).all(|i| {
                let (cols, vals) = s.row(i);
                cols.iter().zip(vals).all(|(&j, &v)| s.get(j, i) == v)
            }),
        }
    }

    pub fn max_abs(&self) -> f64 {
        let vals = match self {
            SymMatrix::Dense(d) => &d.data,
            SymMatrix::Sparse(s) => &s.values,
        };
        vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n()).fold(0.0f64, |m, i| {
            let s: f64 = match self {
                SymMatrix::Dense(d) => d.row(i).iter().map(|v| v.abs()).sum(),
                SymMatrix::Sparse(s) => s.row(i).1.iter().map(|v| v.abs()).sum(),
            };
            m.max(s)
        })
    }

    /// `(Q x)_i`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            SymMatrix::Dense(d) => crate::spd::dot(d.row(i), x),
            SymMatrix::Sparse(s) => {
                let (cols, vals) = s.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.row_dot(i, x)).collect()
    }

    /// Row-major dense copy of `Q_{I,I}`.
    pub fn principal_dense(&self, idx: &IndexSet) -> Vec<f64> {
        let m = idx.len();
        let mut out = vec![0.0; m * m];
        match self {
            SymMatrix::Dense(d) => {
                for (r, &i) in idx.iter().enumerate() {
                    let row = d.row(i);
                    let dst = &mut out[r * m..(r + 1) * m];
                    for (c, &j) in idx.iter().enumerate() {
                        dst[c] = row[j];
                    }
                }
            }
            SymMatrix::Sparse(s) => {
                let pos = position_map(s.n, idx);
                for (r, &i) in idx.iter().enumerate() {
                    let (cols, vals) = s.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        let c = pos[j];
                        if c != usize::MAX {
                            out[r * m + c] = v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Sparse copy of `Q_{I,I}` (indexes renumbered `0..|I|`).
    pub fn principal_sparse(&self, idx: &IndexSet) -> SparseMatrix {
        let pos = position_map(self.n(), idx);
        let rows = idx
            .iter()
            .map(|&i| match self {
                SymMatrix::Dense(d) => d
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(j, v)| **v != 0.0 && pos[*j] != usize::MAX)
                    .map(|(j, &v)| (pos[j], v))
                    .collect(),
                SymMatrix::Sparse(s) => {
                    let (cols, vals) = s.row(i);
                    cols.iter()
                        .zip(vals)
                        .filter(|(j, _)| pos[**j] != usize::MAX)
                        .map(|(&j, &v)| (pos[j], v))
                        .collect()
                }
            })
            .collect();
        SparseMatrix::from_rows(idx.len(), rows)
    }

    /// Row-major dense copy of the whole matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            SymMatrix::Dense(d) => d.data.clone(),
            SymMatrix::Sparse(_) => self.principal_dense(&IndexSet::full(self.n())),
        }
    }

    /// Upper-triangle triplets `(i, j, v)` with `i <= j`, row-major order.
    pub fn upper_triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        match self {
            SymMatrix::Dense(d) => {
                for i in 0..n {
                    for j in i..n {
                        let v = d.data[i * n + j];
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
            }
            SymMatrix::Sparse(s) => {
                for i in 0..n {
                    let (cols, vals) = s.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j >= i {
                            out.push((i, j, v));
                        }
                    }
                }
            }
        }
        out
    }
}

fn position_map(n: usize, idx: &IndexSet) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in idx.iter().enumerate() {
        pos[i] = k;
    }
    pos
}
