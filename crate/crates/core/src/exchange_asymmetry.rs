//! Monte Carlo check of the two-dimensional asymmetry between moving indexes out of
//! the inactive set and moving them out of the active set.
//!
//! Case 1 starts from `I = Im = {1,2}` and exchanges both into `A`; case 2 starts from
//! `A = Am = {1,2}` and exchanges both into `I`. `N1`, `N2` count the infeasible indexes
//! after the exchange.
//!
//! Each sample draws `Q` once and then, for each case, draws `g ~ N(0, I)` conditioned
//! on that case's starting condition, so the distribution of `Q` is the same in both
//! cases. Conditioning is exact: case 2 needs `g < 0`, which is a sign flip of a normal
//! vector, and case 1 needs `g` in the cone spanned by the columns of `Q`, where an
//! isotropic `g` has a uniformly distributed direction.

use rand::Rng;
use rand_distr::StandardNormal;

/// How the off-diagonal entry of the sampled 2x2 matrix is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffDiagonal {
    /// Standard normal, rejection-sampled jointly with the diagonal until PD.
    Gaussian,
    /// Forced to zero (diagonal `Q`).
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymmetryEstimate {
    /// Conditional mean of `N1`.
    pub e_n1: f64,
    /// Conditional mean of `N2`.
    pub e_n2: f64,
    /// Standard error of `e_n2 - e_n1`; infinite when either case has fewer than two
    /// qualifying samples.
    pub stderr: f64,
    pub case1_samples: usize,
    pub case2_samples: usize,
}

impl AsymmetryEstimate {
    /// `(E(N2) - E(N1)) / stderr`.
    pub fn z_score(&self) -> f64 {
        (self.e_n2 - self.e_n1) / self.stderr
    }
}

#[derive(Default)]
struct Moments {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Variance of the mean.
    fn var_of_mean(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        let var = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        var.max(0.0) / n
    }
}

fn sample_q<R: Rng + ?Sized>(off: OffDiagonal, rng: &mut R) -> (f64, f64, f64) {
    loop {
        let q11: f64 = rng.sample(StandardNormal);
        let q22: f64 = rng.sample(StandardNormal);
        let q12: f64 = match off {
            OffDiagonal::Gaussian => rng.sample(StandardNormal),
            OffDiagonal::Zero => 0.0,
        };
        if q11 > 0.0 && q22 > 0.0 && q11 * q22 - q12 * q12 > 0.0 {
            return (q11, q22, q12);
        }
    }
}

/// `|z|` for a standard normal `z`, redrawn on an exact zero.
fn negative_free_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z != 0.0 {
            return z.abs();
        }
    }
}

/// Runs `samples` draws with a Gaussian off-diagonal.
pub fn asymmetry_montecarlo<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> AsymmetryEstimate {
    asymmetry_montecarlo_with(samples, OffDiagonal::Gaussian, rng)
}

pub fn asymmetry_montecarlo_with<R: Rng + ?Sized>(
    samples: usize,
    off: OffDiagonal,
    rng: &mut R,
) -> AsymmetryEstimate {
    let mut case1 = Moments::default();
    let mut case2 = Moments::default();
    for _ in 0..samples {
        let (q11, q22, q12) = sample_q(off, rng);

        // Case 1: x = -Q^{-1} g <= 0 iff g = Q y with y >= 0.
        let lo = q12.atan2(q11);
        let hi = q22.atan2(q12);
        let theta = lo + (hi - lo) * rng.random::<f64>();
        let (g2, g1) = theta.sin_cos();
        // next: A = {1,2}, s = g
        let n1 = (g1 < 0.0) as u8 + (g2 < 0.0) as u8;
        case1.push(n1 as f64);

        // Case 2: g < 0.
        let g1 = -negative_free_normal(rng);
        let g2 = -negative_free_normal(rng);
        // x scaled by det(Q) > 0, so signs are exact
        let x1 = -q22 * g1 + q12 * g2;
        let x2 = q12 * g1 - q11 * g2;
        // next: I = {1,2}
        let n2 = (x1 <= 0.0) as u8 + (x2 <= 0.0) as u8;
        case2.push(n2 as f64);
    }
    AsymmetryEstimate {
        e_n1: case1.mean(),
        e_n2: case2.mean(),
        stderr: (case1.var_of_mean() + case2.var_of_mean()).sqrt(),
        case1_samples: case1.count,
        case2_samples: case2.count,
    }
}
