mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use rasqp::rng::{stream_rng, Stream};
use rasqp::spd::{embed_point, solve_subsystem, solve_subsystem_with};
use rasqp::{gen_hard, gen_medium, IndexSet, QpProblem, SymMatrix};

use common::{max_diff, random_dense};

/// Gaussian elimination with partial pivoting on a dense copy.
fn gepp(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for k in 0..m {
        let p = (k..m)
            .max_by(|&i, &j| a[i * m + k].abs().partial_cmp(&a[j * m + k].abs()).unwrap())
            .unwrap();
        if p != k {
            for c in 0..m {
                a.swap(k * m + c, p * m + c);
            }
            b.swap(k, p);
        }
        for i in k + 1..m {
            let f = a[i * m + k] / a[k * m + k];
            for c in k..m {
                a[i * m + c] -= f * a[k * m + c];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..m).rev() {
        let mut v = b[k];
        for c in k + 1..m {
            v -= a[k * m + c] * b[c];
        }
        b[k] = v / a[k * m + k];
    }
    b
}

fn diag_dominant(n: usize, sparse: bool, seed: u64) -> QpProblem {
    let mut rng = stream_rng(seed, Stream::Generator);
    let mut trip = Vec::new();
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            if !sparse || rng.random::<f64>() < 0.1 {
                let v: f64 = rng.random_range(-1.0..1.0);
                trip.push((i, j, v));
                trip.push((j, i, v));
                rowsum[i] += v.abs();
                rowsum[j] += v.abs();
            }
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        trip.push((i, i, s + 1.0));
    }
    let q = if sparse {
        SymMatrix::from_triplets(n, &trip).unwrap()
    } else {
        let mut d = vec![0.0; n * n];
        for &(i, j, v) in &trip {
            d[i * n + j] = v;
        }
        SymMatrix::dense(n, d).unwrap()
    };
    let g = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    QpProblem::new(q, g).unwrap()
}

fn random_split(n: usize, seed: u64) -> (IndexSet, IndexSet) {
    let mut rng = stream_rng(seed, Stream::Solver);
    let inactive = IndexSet::from_unsorted((0..n).filter(|_| rng.random::<bool>()).collect());
    let active = inactive.complement(n);
    (inactive, active)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    max_diff(a, b) / b.iter().fold(1e-300f64, |m, v| m.max(v.abs()))
}

#[test]
fn full_inactive_set_matches_elimination_oracle() {
    for seed in 0..20 {
        for sparse in [false, true] {
            let n = 5 + (seed as usize * 7) % 60;
            let p = diag_dominant(n, sparse, seed);
            let expected = gepp(p.q().to_dense(), p.g().iter().map(|v| -v).collect());
            for threshold in [0, usize::MAX] {
                let sol = solve_subsystem_with(&p, &IndexSet::full(n), &IndexSet::new(), threshold)
                    .unwrap();
                assert!(
                    rel(&sol.x_inactive, &expected) <= 1e-10,
                    "seed {seed} sparse {sparse}"
                );
                assert!(sol.s_active.is_empty());
            }
        }
    }
}

#[test]
fn partial_inactive_set_matches_elimination_oracle() {
    for seed in 0..20 {
        let p = diag_dominant(40, seed % 2 == 0, seed);
        let (inactive, active) = random_split(40, seed);
        let sub = p.q().principal_dense(&inactive);
        let rhs: Vec<f64> = inactive.iter().map(|&i| -p.g()[i]).collect();
        let expected = gepp(sub, rhs);
        let sol = solve_subsystem(&p, &inactive, &active).unwrap();
        assert!(rel(&sol.x_inactive, &expected) <= 1e-10, "seed {seed}");
    }
}

#[test]
fn envelope_and_dense_paths_agree() {
    for seed in 0..5 {
        let p = gen_medium(300, 0.02, 1e6, seed).unwrap().problem;
        let (inactive, active) = random_split(300, seed);
        let a = solve_subsystem_with(&p, &inactive, &active, 0).unwrap();
        let b = solve_subsystem_with(&p, &inactive, &active, usize::MAX).unwrap();
        assert!(rel(&a.x_inactive, &b.x_inactive) <= 1e-9, "seed {seed}");
        assert!(rel(&a.s_active, &b.s_active) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn empty_inactive_set_gives_gradient_multipliers() {
    let p = random_dense(6, 1);
    let sol = solve_subsystem(&p, &IndexSet::new(), &IndexSet::full(6)).unwrap();
    assert_eq!(sol.s_active, p.g());
}

#[test]
fn bad_partitions_are_rejected() {
    let p = random_dense(4, 1);
    let a = IndexSet::from_unsorted(vec![0, 1]);
    let b = IndexSet::from_unsorted(vec![1, 2, 3]);
    assert!(solve_subsystem(&p, &a, &b).is_err());
    assert!(solve_subsystem(&p, &a, &IndexSet::from_unsorted(vec![2])).is_err());
    assert!(solve_subsystem(&p, &a, &IndexSet::from_unsorted(vec![2, 9])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedded_points_are_stationary(n in 2usize..50, cond_exp in 0u32..=10, seed in any::<u64>()) {
        let p = gen_hard(n, 10f64.powi(cond_exp as i32), seed).unwrap();
        let (inactive, active) = random_split(n, seed);
        let sol = solve_subsystem(&p, &inactive, &active).unwrap();
        let point = embed_point(n, &inactive, &active, &sol).unwrap();
        let r = p.kkt_residual(&point).unwrap();
        prop_assert!(r.relative_stationarity() <= 1e-6, "{:e}", r.relative_stationarity());
        prop_assert_eq!(r.comp_viol, 0.0);
        for &a in active.iter() {
            prop_assert_eq!(point.x[a], 0.0);
        }
        for &i in inactive.iter() {
            prop_assert_eq!(point.s[i], 0.0);
        }
    }

    #[test]
    fn relabelling_variables_permutes_the_solution(n in 2usize..30, seed in any::<u64>()) {
        let p = random_dense(n, seed);
        let mut rng = stream_rng(seed, Stream::MonteCarlo);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // variable i of p becomes variable perm[i] of pp
        let dense = p.q().to_dense();
        let mut qq = vec![0.0; n * n];
        let mut gg = vec![0.0; n];
        for i in 0..n {
            gg[perm[i]] = p.g()[i];
            for j in 0..n {
                qq[perm[i] * n + perm[j]] = dense[i * n + j];
            }
        }
        let pp = QpProblem::dense(n, qq, gg).unwrap();
        let (inactive, active) = random_split(n, seed);
        let map = |s: &IndexSet| IndexSet::from_unsorted(s.iter().map(|&i| perm[i]).collect());
        let x = embed_point(n, &inactive, &active, &solve_subsystem(&p, &inactive, &active).unwrap()).unwrap();
        let (pi, pa) = (map(&inactive), map(&active));
        let y = embed_point(n, &pi, &pa, &solve_subsystem(&pp, &pi, &pa).unwrap()).unwrap();
        let scale = x.x.iter().chain(&x.s).fold(1.0f64, |m, v| m.max(v.abs()));
        for (i, &j) in perm.iter().enumerate() {
            prop_assert!((x.x[i] - y.x[j]).abs() <= 1e-9 * scale);
            prop_assert!((x.s[i] - y.s[j]).abs() <= 1e-9 * scale);
        }
    }
}
