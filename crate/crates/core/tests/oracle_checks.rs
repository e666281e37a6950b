mod common;

use common::oracles::*;
use multinet_core::cluster::{
    best_matching_brute_force, best_matching_hungarian, confusion_matrix, dbscan, misclustering_rate,
};
use multinet_core::generate::{generate_mmlsm, MmlsmParams};
use multinet_core::lsm::{
    full_gradient, initialization_lsm, projected_gd, project_feasible, sampled_gradient, GdConfig, Link,
    LsmFactors, LsmInitConfig, LsmInitType,
};
use multinet_core::stream_rng;
use multinet_core::tensor::{hosvd, top_singular_vectors, Matrix, Tensor3};
use rand::Rng;

#[test]
fn jacobi_oracle_reconstructs_its_input() {
    let mut rng = stream_rng(100, 0);
    let m = random_matrix(5, 3, &mut rng);
    let (u, s) = jacobi_svd(&m);
    let gram = u.transpose() * &u;
    assert!((gram - Matrix::identity(3, 3)).amax() < 1e-12);
    // sigma^2 are the eigenvalues of m^T m: compare traces
    let trace: f64 = (m.transpose() * &m).trace();
    assert!((s.iter().map(|x| x * x).sum::<f64>() - trace).abs() < 1e-10);
}

#[test]
fn top_singular_vectors_match_dense_oracle() {
    for seed in 0..10 {
        let mut rng = stream_rng(seed, 1);
        let m = random_matrix(6, 4, &mut rng);
        let (u_oracle, _) = jacobi_svd(&m);
        let top = u_oracle.columns(0, 2).into_owned();
        let u = top_singular_vectors(&m, 2).unwrap();
        assert!(principal_angle_sin(u.matrix(), &top) < 1e-8, "seed {seed}");

        let wide = random_matrix(3, 7, &mut rng);
        let (uw, _) = jacobi_svd(&wide);
        let got = top_singular_vectors(&wide, 2).unwrap();
        assert!(principal_angle_sin(got.matrix(), &uw.columns(0, 2).into_owned()) < 1e-8);
    }
}

#[test]
fn full_rank_hosvd_is_lossless() {
    let mut rng = stream_rng(5, 0);
    for _ in 0..5 {
        let t = random_tensor([5, 4, 3], &mut rng);
        let h = hosvd(&t, [5, 4, 3]).unwrap();
        assert!(t.sub(&h.reconstruct()).frobenius_norm() <= 1e-10 * t.frobenius_norm());
        assert!((h.core.frobenius_norm() - t.frobenius_norm()).abs() < 1e-10);
    }
}

#[test]
fn truncated_hosvd_core_energy_bounded() {
    let mut rng = stream_rng(6, 0);
    let t = random_tensor([6, 5, 4], &mut rng);
    let h = hosvd(&t, [2, 2, 2]).unwrap();
    assert!(h.core.frobenius_norm() < t.frobenius_norm());
}

fn random_factors(dims: (usize, usize, usize), rank: usize, m: usize, rng: &mut impl Rng) -> LsmFactors {
    LsmFactors {
        u: random_matrix(dims.0, rank, rng),
        w: random_matrix(dims.2, m, rng),
        c: random_tensor([rank, rank, m], rng),
    }
}

fn random_adjacency(n: usize, layers: usize, link: Link, rng: &mut impl Rng) -> Tensor3 {
    Tensor3::from_fn([n, n, layers], |i, j, _| {
        if i == j {
            0.0
        } else if link == Link::Poisson {
            rng.random_range(0..4) as f64
        } else {
            (rng.random::<f64>() < 0.4) as u8 as f64
        }
    })
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    for link in [Link::Logit, Link::Probit, Link::Poisson] {
        for seed in 0..5 {
            let mut rng = stream_rng(seed, 7);
            let t = random_adjacency(4, 3, link, &mut rng);
            let f = random_factors((4, 4, 3), 2, 2, &mut rng);
            let sgma = 0.8;
            let analytic = full_gradient(&t, &f, link, sgma).unwrap();
            let numeric = fd_gradient(&t, &f, link, sgma, 1e-5);
            let err = relative_error(&flatten(&analytic), &flatten(&numeric));
            assert!(err <= 1e-5, "{link:?} seed {seed}: {err}");
        }
    }
}

#[test]
fn single_step_matches_finite_difference_step() {
    let g = generate_mmlsm(&MmlsmParams::new(3, 1, 1, 2, 12)).unwrap();
    let cfg = LsmInitConfig {
        n: 3,
        rank: 2,
        m: 1,
        perturb: 0.05,
        int_type: LsmInitType::Warm,
        seed: 1,
    };
    let init = initialization_lsm(&g.tensor, Some(&g.truth), &cfg).unwrap();
    let mut gd = GdConfig::new(1.0);
    gd.show = false;
    gd.eta = 1e-3;
    gd.tmax = 1;
    let res = projected_gd(&init, &gd).unwrap();

    let start = LsmFactors {
        u: init.u0.clone(),
        w: init.w0.clone(),
        c: init.c0.clone(),
    };
    let fd = fd_gradient(&init.tensor, &start, Link::Logit, 1.0, 1e-6);
    let mut expected = LsmFactors {
        u: &start.u - &fd.u * gd.eta,
        w: &start.w - &fd.w * gd.eta,
        c: Tensor3::from_vec(
            start.c.dims(),
            start.c.values().iter().zip(fd.c.values()).map(|(c, g)| c - gd.eta * g).collect(),
        )
        .unwrap(),
    };
    project_feasible(&mut expected, 1.0, init.deltas[0], init.deltas[1]);
    let err = relative_error(&flatten(&res.factors()), &flatten(&expected));
    assert!(err < 1e-6, "{err}");
}

#[test]
fn sampled_gradient_is_unbiased() {
    let mut rng = stream_rng(21, 0);
    let t = random_adjacency(10, 4, Link::Logit, &mut rng);
    let f = random_factors((10, 10, 4), 2, 2, &mut rng);
    let full = flatten(&full_gradient(&t, &f, Link::Logit, 1.0).unwrap());
    let draws = 200;
    let mut samples = Vec::with_capacity(draws);
    let mut srng = stream_rng(22, 0);
    for _ in 0..draws {
        samples.push(flatten(&sampled_gradient(&t, &f, Link::Logit, 1.0, 50, &mut srng).unwrap()));
    }
    for c in 0..full.len() {
        let mean = samples.iter().map(|s| s[c]).sum::<f64>() / draws as f64;
        let var = samples.iter().map(|s| (s[c] - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - full[c]).abs() <= 4.0 * se + 1e-12, "component {c}");
    }
}

#[test]
fn dbscan_matches_transitive_closure_oracle() {
    for seed in 0..20 {
        let mut rng = stream_rng(seed, 3);
        let pts: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random(), rng.random()]).collect();
        let got = dbscan(&pts, 0.15, 4);
        let want = dbscan_closure(&pts, 0.15, 4);
        assert!(same_partition(&got, &want), "seed {seed}");
    }
}

#[test]
fn hungarian_matches_brute_force() {
    for seed in 0..50 {
        let mut rng = stream_rng(seed, 4);
        let k = rng.random_range(1..=5);
        let truth: Vec<usize> = (0..30).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<i32> = (0..30).map(|_| rng.random_range(-1..k as i32)).collect();
        let counts = confusion_matrix(&pred, &truth).unwrap();
        assert_eq!(best_matching_hungarian(&counts), best_matching_brute_force(&counts));
        let rate = misclustering_rate(&pred, &truth).unwrap();
        assert!((rate - brute_force_misclustering(&pred, &truth)).abs() < 1e-15);
    }
}

#[test]
fn hungarian_handles_larger_label_sets() {
    let mut rng = stream_rng(9, 9);
    for _ in 0..10 {
        let size = 7;
        let counts: Vec<Vec<f64>> = (0..size)
            .map(|_| (0..size).map(|_| rng.random_range(0..10) as f64).collect())
            .collect();
        assert_eq!(best_matching_hungarian(&counts), best_matching_brute_force(&counts));
    }
}
