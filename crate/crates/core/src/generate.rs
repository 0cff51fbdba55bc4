//! Seeded benchmark problem families.
//!
//! * easy: `P` has standard normal entries with density 0.1 plus the identity, kept
//!   only on the lower band of width 100; `Q = P P' + eps I`.
//! * medium: sparse symmetric matrix with a prescribed geometric spectrum, built by
//!   random Givens rotations of a diagonal matrix until a target density is reached.
//! * hard: `Q = O D O'` with `O` a random orthogonal matrix and
//!   `D = diag(cond^(k/(n-1)))`, `g` uniform on `[-0.5, 0.5]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{SparseMatrix, SymMatrix};
use crate::model::QpProblem;
use crate::rng::{stream_rng, Stream};

/// Lower bandwidth kept in the easy family.
pub const EASY_BANDWIDTH: usize = 100;
/// Entry density of the random part of `P` in the easy family.
pub const EASY_DENSITY: f64 = 0.1;
/// Rotation budget of the medium family, in multiples of the target nonzero count.
pub const MEDIUM_ROTATION_BUDGET: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Easy,
    Medium,
    Hard,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Easy => "easy",
            Family::Medium => "medium",
            Family::Hard => "hard",
        }
    }

    /// Dual tolerance used for this family in the reference experiments.
    pub fn default_tol(&self) -> f64 {
        match self {
            Family::Easy => 1e-8,
            Family::Medium | Family::Hard => 1e-10,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Family::Easy),
            "medium" => Ok(Family::Medium),
            "hard" => Ok(Family::Hard),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// One benchmark instance description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    /// Easy only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Medium only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    /// Medium and hard.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cond: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

/// A generated problem plus what the generator actually achieved.
#[derive(Clone, Debug)]
pub struct Generated {
    pub problem: QpProblem,
    /// Fraction of nonzero entries of `Q`.
    pub density: f64,
    /// False when the medium generator ran out of rotations before the target density.
    pub density_reached: bool,
}

impl GeneratorSpec {
    pub fn easy(n: usize, epsilon: f64, seed: u64) -> Self {
        GeneratorSpec {
            family: Family::Easy,
            n,
            epsilon: Some(epsilon),
            density: None,
            cond: None,
            seed,
        }
    }

    pub fn medium(n: usize, density: f64, cond: f64, seed: u64) -> Self {
        GeneratorSpec {
            family: Family::Medium,
            n,
            epsilon: None,
            density: Some(density),
            cond: Some(cond),
            seed,
        }
    }

    pub fn hard(n: usize, cond: f64, seed: u64) -> Self {
        GeneratorSpec {
            family: Family::Hard,
            n,
            epsilon: None,
            density: None,
            cond: Some(cond),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorSpec {
            seed,
            ..self.clone()
        }
    }

    /// Family-specific fields must be present exactly when required.
    pub fn validate(&self) -> Result<()> {
        let want = match self.family {
            Family::Easy => (true, false, false),
            Family::Medium => (false, true, true),
            Family::Hard => (false, false, true),
        };
        let have = (
            self.epsilon.is_some(),
            self.density.is_some(),
            self.cond.is_some(),
        );
        let names = ["epsilon", "density", "cond"];
        let flags = [(want.0, have.0), (want.1, have.1), (want.2, have.2)];
        for (name, (w, h)) in names.iter().zip(flags) {
            if w && !h {
                return Err(Error::InvalidParameter(format!(
                    "{} family requires {name}",
                    self.family
                )));
            }
            if !w && h {
                return Err(Error::InvalidParameter(format!(
                    "{} family does not take {name}",
                    self.family
                )));
            }
        }
        let min_n = if self.family == Family::Easy { 1 } else { 2 };
        if self.n < min_n {
            return Err(Error::InvalidParameter(format!(
                "{} family needs n >= {min_n}, got {}",
                self.family, self.n
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must be > 0, got {e}"
                )));
            }
        }
        if let Some(d) = self.density {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "density must be in (0, 1], got {d}"
                )));
            }
        }
        if let Some(c) = self.cond {
            if !(c >= 1.0) || !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "cond must be >= 1, got {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Generated> {
        self.validate()?;
        match self.family {
            Family::Easy => {
                let p = gen_easy(self.n, self.epsilon.unwrap(), self.seed)?;
                Ok(Generated {
                    density: p.q().density(),
                    problem: p,
                    density_reached: true,
                })
            }
            Family::Medium => {
                gen_medium(self.n, self.density.unwrap(), self.cond.unwrap(), self.seed)
            }
            Family::Hard => {
                let p = gen_hard(self.n, self.cond.unwrap(), self.seed)?;
                Ok(Generated {
                    density: 1.0,
                    problem: p,
                    density_reached: true,
                })
            }
        }
    }
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Banded sparse family; `Q` is positive definite for any `epsilon > 0`.
pub fn gen_easy(n: usize, epsilon: f64, seed: u64) -> Result<QpProblem> {
    if n == 0 {
        return Err(Error::EmptyProblem);
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Generator);
    // rows of P, restricted to columns i-100..=i
    let mut p_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        for j in i.saturating_sub(EASY_BANDWIDTH)..=i {
            let keep: f64 = rng.random();
            let mut v = 0.0;
            if keep < EASY_DENSITY {
                v = rng.sample(StandardNormal);
            }
            if j == i {
                v += 1.0;
            }
            if v != 0.0 {
                row.push((j, v));
            }
        }
        p_rows.push(row);
    }
    let mut q_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i.saturating_sub(EASY_BANDWIDTH)..=i {
            let mut v = sparse_dot(&p_rows[i], &p_rows[j]);
            if i == j {
                v += epsilon;
            }
            if v != 0.0 {
                q_rows[i].push((j, v));
                if i != j {
                    q_rows[j].push((i, v));
                }
            }
        }
    }
    for row in &mut q_rows {
        row.sort_by_key(|e| e.0);
    }
    let q = SymMatrix::Sparse(SparseMatrix::from_rows(n, q_rows));
    let g = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    QpProblem::new(q, g)
}

/// Geometric spectrum from `1/cond` up to `1`.
fn medium_spectrum(n: usize, cond: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| cond.powf(k as f64 / (n - 1) as f64 - 1.0))
        .collect()
}

/// Sets `row[col] = v`, keeping the row sorted; exact zeros are removed.
fn set_entry(row: &mut Vec<(usize, f64)>, col: usize, v: f64) -> isize {
    match row.binary_search_by_key(&col, |e| e.0) {
        Ok(k) => {
            if v == 0.0 {
                row.remove(k);
                -1
            } else {
                row[k].1 = v;
                0
            }
        }
        Err(k) => {
            if v == 0.0 {
                0
            } else {
                row.insert(k, (col, v));
                1
            }
        }
    }
}

fn combine(a: &[(usize, f64)], b: &[(usize, f64)], ca: f64, cb: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (col, v) = if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            i += 1;
            (a[i - 1].0, ca * a[i - 1].1)
        } else if i >= a.len() || b[j].0 < a[i].0 {
            j += 1;
            (b[j - 1].0, cb * b[j - 1].1)
        } else {
            i += 1;
            j += 1;
            (a[i - 1].0, ca * a[i - 1].1 + cb * b[j - 1].1)
        };
        if v != 0.0 {
            out.push((col, v));
        }
    }
    out
}

fn get(row: &[(usize, f64)], col: usize) -> f64 {
    row.binary_search_by_key(&col, |e| e.0)
        .map(|k| row[k].1)
        .unwrap_or(0.0)
}

/// Applies `Q <- G Q G'` for the Givens rotation acting on rows/columns `i`, `j`.
/// Returns the change in stored nonzeros.
fn rotate(rows: &mut [Vec<(usize, f64)>], i: usize, j: usize, c: f64, s: f64) -> isize {
    let before = (rows[i].len() + rows[j].len()) as isize;
    let mut ri = combine(&rows[i], &rows[j], c, -s);
    let mut rj = combine(&rows[i], &rows[j], s, c);
    // column part of the rotation on the 2x2 block
    let (aii, aij) = (get(&ri, i), get(&ri, j));
    let (aji, ajj) = (get(&rj, i), get(&rj, j));
    let bii = c * aii - s * aij;
    let bij = s * aii + c * aij;
    let bji = c * aji - s * ajj;
    let bjj = s * aji + c * ajj;
    let off = 0.5 * (bij + bji);
    set_entry(&mut ri, i, bii);
    set_entry(&mut ri, j, off);
    set_entry(&mut rj, i, off);
    set_entry(&mut rj, j, bjj);
    // mirror the new rows into every other touched row
    let mut touched: Vec<usize> = ri.iter().chain(rj.iter()).map(|e| e.0).collect();
    touched.extend(rows[i].iter().map(|e| e.0));
    touched.extend(rows[j].iter().map(|e| e.0));
    touched.sort_unstable();
    touched.dedup();
    let mut change = (ri.len() + rj.len()) as isize - before;
    for &k in &touched {
        if k == i || k == j {
            continue;
        }
        change += set_entry(&mut rows[k], i, get(&ri, k));
        change += set_entry(&mut rows[k], j, get(&rj, k));
    }
    rows[i] = ri;
    rows[j] = rj;
    change
}

/// Sparse family with exactly prescribed spectrum and approximate target density.
pub fn gen_medium(n: usize, density: f64, cond: f64, seed: u64) -> Result<Generated> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "medium family needs n >= 2, got {n}"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density must be in (0, 1], got {density}"
        )));
    }
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cond must be >= 1, got {cond}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Generator);
    let lambda = medium_spectrum(n, cond);
    let mut rows: Vec<Vec<(usize, f64)>> = lambda
        .iter()
        .enumerate()
        .map(|(k, &l)| vec![(k, l)])
        .collect();
    let mut nnz = n as isize;
    let target = (density * (n * n) as f64).ceil() as isize;
    // Rotating a multiple of the identity changes nothing.
    let scalar = cond == 1.0;
    if !scalar {
        let budget = MEDIUM_ROTATION_BUDGET * target.max(1) as usize;
        let mut used = 0;
        while nnz < target && used < budget {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let (s, c) = theta.sin_cos();
            nnz += rotate(&mut rows, i, j, c, s);
            used += 1;
        }
    }
    let q = SymMatrix::Sparse(SparseMatrix::from_rows(n, rows));
    let achieved = nnz as f64 / (n * n) as f64;
    let g = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Ok(Generated {
        problem: QpProblem::new(q, g)?,
        density: achieved,
        density_reached: nnz >= target,
    })
}

/// Dense family `Q = O D O'` with geometric spectrum `1..cond`.
pub fn gen_hard(n: usize, cond: f64, seed: u64) -> Result<QpProblem> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "hard family needs n >= 2, got {n}"
        )));
    }
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cond must be >= 1, got {cond}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Generator);
    let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let z = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let r = qr.r();
    let mut o = qr.q();
    // sign fix so that O is Haar distributed
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            o.column_mut(k).neg_mut();
        }
    }
    let d: Vec<f64> = (0..n)
        .map(|k| cond.powf(k as f64 / (n - 1) as f64))
        .collect();
    let mut od = o.clone();
    for (k, &dk) in d.iter().enumerate() {
        od.column_mut(k).scale_mut(dk);
    }
    let q = &od * o.transpose();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = 0.5 * (q[(i, j)] + q[(j, i)]);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    QpProblem::dense(n, data, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(GeneratorSpec::easy(10, 1.0, 0).validate().is_ok());
        let mut s = GeneratorSpec::medium(10, 0.1, 10.0, 0);
        s.density = None;
        assert!(s.validate().is_err());
        let mut s = GeneratorSpec::hard(10, 10.0, 0);
        s.epsilon = Some(1.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn easy_is_pd_with_eps_floor() {
        let p = gen_easy(10, 1.0, 3).unwrap();
        assert!(p.validate().is_ok());
        // lambda_min(P P' + I) >= 1: Q - 0.999 I still factorizes
        let mut q = p.q().to_dense();
        for i in 0..10 {
            q[i * 10 + i] -= 0.999;
        }
        assert!(QpProblem::dense(10, q, vec![0.0; 10])
            .unwrap()
            .validate()
            .is_ok());
    }

    #[test]
    fn easy_is_banded_and_deterministic() {
        let a = gen_easy(300, 1e-5, 9).unwrap();
        let b = gen_easy(300, 1e-5, 9).unwrap();
        assert_eq!(a, b);
        for (i, j, _) in a.q().upper_triplets() {
            assert!(j - i <= EASY_BANDWIDTH);
        }
        assert_ne!(a, gen_easy(300, 1e-5, 10).unwrap());
    }

    #[test]
    fn medium_reaches_density() {
        let out = gen_medium(200, 0.05, 1e4, 1).unwrap();
        assert!(out.density_reached);
        assert!(out.density >= 0.05 && out.density < 0.08, "{}", out.density);
        assert!((out.problem.q().density() - out.density).abs() < 1e-12);
        assert!(out.problem.q().is_symmetric());
        assert!(out.problem.validate().is_ok());
    }

    #[test]
    fn medium_scalar_spectrum_stays_identity() {
        let out = gen_medium(20, 0.5, 1.0, 1).unwrap();
        assert!(!out.density_reached);
        assert_eq!(out.problem.q(), &SymMatrix::identity(20));
    }

    #[test]
    fn hard_identity_when_cond_one() {
        let p = gen_hard(30, 1.0, 5).unwrap();
        let q = p.q().to_dense();
        for i in 0..30 {
            for j in 0..30 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((q[i * 30 + j] - e).abs() < 1e-13);
            }
        }
        assert!(p.g().iter().all(|v| (-0.5..0.5).contains(v)));
    }

    #[test]
    fn hard_is_deterministic() {
        assert_eq!(gen_hard(20, 1e6, 1).unwrap(), gen_hard(20, 1e6, 1).unwrap());
        assert!(gen_hard(1, 10.0, 1).is_err());
    }
}
