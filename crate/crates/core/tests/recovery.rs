mod common;

use common::oracles::principal_angle_sin;
use multinet_core::baselines::{spec_embedding, EmbeddingType};
use multinet_core::cluster::{community_cluster_km, misclustering_rate, ItemKind, KmeansOptions};
use multinet_core::generate::{generate_mmlsm, generate_mmsbm, MmlsmParams, MmsbmParams};
use multinet_core::lsm::{initialization_lsm, projected_gd, GdConfig, Link, LsmInitConfig, LsmInitType};
use multinet_core::tensor::{hosvd, FactorMatrix};
use multinet_core::twist::{default_ranks, initialization_mmsbm, local_memberships, power_iteration, TwistConfig};

fn layer_error(embedding: &FactorMatrix, truth: &[usize], m: usize) -> f64 {
    let pred = community_cluster_km(embedding, ItemKind::Network, m, 0, &KmeansOptions::default()).unwrap();
    misclustering_rate(&pred.labels, truth).unwrap()
}

#[test]
fn hosvd_start_is_close_to_population_subspace() {
    let p = MmsbmParams::new(100, 2, 12, 2, 4).with_degree(30.0).with_ratio(0.2);
    let g = generate_mmsbm(&p).unwrap();
    let ranks = default_ranks(2, 2);
    let init = initialization_mmsbm(&g.tensor, ranks).unwrap();
    let population = hosvd(&g.theta, ranks).unwrap();
    let dist = principal_angle_sin(init[0].matrix(), population.factors[0].matrix());
    assert!(dist < 0.3, "{dist}");
    let dist3 = principal_angle_sin(init[2].matrix(), population.factors[2].matrix());
    assert!(dist3 < 0.3, "{dist3}");
}

#[test]
fn twist_recovers_layer_types_and_local_communities() {
    let p = MmsbmParams::new(100, 2, 12, 2, 1).with_degree(25.0).with_ratio(0.3);
    let g = generate_mmsbm(&p).unwrap();
    let cfg = TwistConfig::new(default_ranks(2, 2));
    let init = initialization_mmsbm(&g.tensor, cfg.ranks).unwrap();
    let res = power_iteration(&g.tensor, &cfg, &init).unwrap();
    let pred = community_cluster_km(&res.layer_embedding, ItemKind::Network, 2, 0, &KmeansOptions::default()).unwrap();
    assert_eq!(misclustering_rate(&pred.labels, &g.truth.layer_types).unwrap(), 0.0);

    let types: Vec<usize> = pred.labels.iter().map(|&l| l as usize).collect();
    let local = local_memberships(&res, &types, 2, 2, 0).unwrap();
    for (j, assignment) in local.iter().enumerate() {
        // recovered type j corresponds to the planted type of its first layer
        let l = types.iter().position(|&t| t == j).unwrap();
        let planted = &g.truth.memberships[g.truth.layer_types[l]];
        let err = misclustering_rate(&assignment.labels, planted).unwrap();
        assert!(err <= 0.05, "type {j}: {err}");
    }
}

#[test]
fn sum_adj_recovers_shared_communities() {
    let p = MmsbmParams::new(100, 1, 12, 2, 2).with_degree(25.0).with_ratio(0.3);
    let g = generate_mmsbm(&p).unwrap();
    let u = spec_embedding(&g.tensor, 2, EmbeddingType::Node).unwrap();
    let pred = community_cluster_km(&u, ItemKind::Node, 2, 0, &KmeansOptions::default()).unwrap();
    assert_eq!(misclustering_rate(&pred.labels, &g.truth.memberships[0]).unwrap(), 0.0);
}

#[test]
fn m3_sc_separates_layer_types() {
    let p = MmsbmParams::new(100, 2, 12, 2, 3).with_degree(25.0).with_ratio(0.3);
    let g = generate_mmsbm(&p).unwrap();
    let w = spec_embedding(&g.tensor, 2, EmbeddingType::Layer).unwrap();
    assert!(layer_error(&w, &g.truth.layer_types, 2) <= 0.5);
    assert!(w.orthonormality_error() < 1e-10);
}

#[test]
fn spectral_lsm_start_tracks_planted_positions() {
    let mut p = MmlsmParams::new(50, 2, 10, 2, 5);
    p.scale_par = 0.1;
    let g = generate_mmlsm(&p).unwrap();
    let cfg = LsmInitConfig {
        n: 50,
        rank: 2,
        m: 2,
        perturb: 0.0,
        int_type: LsmInitType::Spec,
        seed: 0,
    };
    let init = initialization_lsm(&g.tensor, Some(&g.truth), &cfg).unwrap();
    let truth_u = g.truth.latent.as_ref().unwrap().u.clone();
    let q_init = init.u0.clone().qr().q();
    let q_true = truth_u.qr().q();
    let angle = principal_angle_sin(&q_init, &q_true).asin();
    assert!(angle < 0.5, "{angle}");
}

#[test]
fn projected_gd_descends_and_keeps_layer_types() {
    let g = generate_mmlsm(&MmlsmParams::new(50, 2, 10, 2, 3)).unwrap();
    let cfg = LsmInitConfig {
        n: 50,
        rank: 2,
        m: 2,
        perturb: 0.1,
        int_type: LsmInitType::Warm,
        seed: 3,
    };
    let init = initialization_lsm(&g.tensor, Some(&g.truth), &cfg).unwrap();
    let mut gd = GdConfig::new(1.0);
    gd.show = false;
    gd.link = Link::Logit;
    let res = projected_gd(&init, &gd).unwrap();
    assert_eq!(res.loss_trace.len(), 36);
    assert!(res.loss_trace.last().unwrap() < &res.loss_trace[0]);
    let w = FactorMatrix::new(res.w.clone());
    assert_eq!(layer_error(&w, &g.truth.layer_types, 2), 0.0);
}
