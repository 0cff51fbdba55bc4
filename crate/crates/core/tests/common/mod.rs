#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use rand::Rng;
use rand_distr::StandardNormal;

use rasqp::rng::{stream_rng, Stream};
use rasqp::{KktPoint, QpProblem};

/// Dense `Q = B B' / n + delta I` with `delta` log-uniform in `[1e-4, 1]`, `g ~ N(0, I)`.
pub fn random_dense(n: usize, seed: u64) -> QpProblem {
    let mut rng = stream_rng(seed, Stream::Generator);
    let b: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let delta = 10f64.powf(-4.0 * rng.random::<f64>());
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut v = 0.0;
            for k in 0..n {
                v += b[i * n + k] * b[j * n + k];
            }
            v /= n as f64;
            if i == j {
                v += delta;
            }
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let g = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    QpProblem::dense(n, q, g).unwrap()
}

/// Optimality certificate: relative stationarity <= 1e-6, `x >= 0` exactly,
/// `s >= -tol`, and for every index one of `x_i`, `s_i` is exactly zero.
pub fn certify(problem: &QpProblem, point: &KktPoint, tol: f64) -> Result<(), String> {
    let r = problem.kkt_residual(point).map_err(|e| e.to_string())?;
    if !(r.relative_stationarity() <= 1e-6) {
        return Err(format!(
            "relative stationarity {:e}",
            r.relative_stationarity()
        ));
    }
    if let Some(i) = point.x.iter().position(|&v| !(v >= 0.0)) {
        return Err(format!("x[{i}] = {:e} < 0", point.x[i]));
    }
    if let Some(i) = point.s.iter().position(|&v| !(v >= -tol)) {
        return Err(format!("s[{i}] = {:e} < -tol", point.s[i]));
    }
    if let Some(i) = (0..point.x.len()).find(|&i| point.x[i] != 0.0 && point.s[i] != 0.0) {
        return Err(format!("x[{i}] and s[{i}] both nonzero"));
    }
    Ok(())
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
