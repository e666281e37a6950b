//! Tucker embedding of an adjacency tensor: HOSVD start followed by
//! higher-order orthogonal iteration, optionally with TWIST row truncation on
//! the node modes.

use serde::{Deserialize, Serialize};

use crate::cluster::{community_cluster_km, ClusterAssignment, ItemKind, KmeansOptions};
use crate::error::{Error, Result};
use crate::tensor::{hosvd, mode_multiply, project, top_singular_vectors, unfold, FactorMatrix, Matrix, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IterationType {
    /// Row-regularized power iteration.
    Twist,
    /// Plain HOOI.
    Tucker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistConfig {
    pub ranks: [usize; 3],
    pub kind: IterationType,
    pub delta1: f64,
    pub delta2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl TwistConfig {
    pub fn new(ranks: [usize; 3]) -> Self {
        TwistConfig {
            ranks,
            kind: IterationType::Twist,
            delta1: 1000.0,
            delta2: 1000.0,
            max_iter: 25,
            tol: 1e-5,
        }
    }

    pub fn tucker(ranks: [usize; 3]) -> Self {
        TwistConfig {
            kind: IterationType::Tucker,
            ..TwistConfig::new(ranks)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ranks.contains(&0) {
            return Err(Error::arg(format!("ranks must be positive, got {:?}", self.ranks)));
        }
        if !(self.delta1 > 0.0 && self.delta2 > 0.0) {
            return Err(Error::arg("delta1 and delta2 must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::arg("tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingResult {
    pub core: Tensor3,
    pub node_embedding: FactorMatrix,
    /// The mode-2 factor; coincides in span with `node_embedding` on symmetric input.
    pub node_embedding_2: FactorMatrix,
    pub layer_embedding: FactorMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// `||core||_F` after each sweep.
    pub objective_trace: Vec<f64>,
}

/// Core ranks for `m` network types with `K` communities each.
pub fn default_ranks(m: usize, k: usize) -> [usize; 3] {
    let r = m * k - (m - 1);
    [r, r, m]
}

pub fn initialization_mmsbm(t: &Tensor3, ranks: [usize; 3]) -> Result<[FactorMatrix; 3]> {
    Ok(hosvd(t, ranks)?.factors)
}

fn cap_row_norms(m: &mut Matrix, bound: f64) {
    for mut row in m.row_iter_mut() {
        let norm = row.norm();
        if norm > bound {
            row.scale_mut(bound / norm);
        }
    }
}

fn projector_distance(a: &Matrix, b: &Matrix) -> f64 {
    (a * a.transpose() - b * b.transpose()).norm()
}

pub fn power_iteration(t: &Tensor3, cfg: &TwistConfig, u0: &[FactorMatrix; 3]) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let dims = t.dims();
    for k in 0..3 {
        if u0[k].rows() != dims[k] || u0[k].cols() != cfg.ranks[k] {
            return Err(Error::arg(format!(
                "initial factor {} is {}x{}, expected {}x{}",
                k + 1,
                u0[k].rows(),
                u0[k].cols(),
                dims[k],
                cfg.ranks[k]
            )));
        }
    }
    let mut u: [Matrix; 3] = [
        u0[0].matrix().clone(),
        u0[1].matrix().clone(),
        u0[2].matrix().clone(),
    ];
    let deltas = [cfg.delta1, cfg.delta2];
    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iter {
        iterations += 1;
        let previous = u.clone();
        for k in 0..3 {
            let (a, b) = match k {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let partial = mode_multiply(t, &u[a].transpose(), a + 1)?;
            let partial = mode_multiply(&partial, &u[b].transpose(), b + 1)?;
            let mut working = unfold(&partial, k + 1)?;
            if cfg.kind == IterationType::Twist && k < 2 {
                cap_row_norms(&mut working, deltas[k]);
            }
            u[k] = top_singular_vectors(&working, cfg.ranks[k])?.into_matrix();
        }
        objective_trace.push(project(t, [&u[0], &u[1], &u[2]])?.frobenius_norm());
        let change = (0..3)
            .map(|k| projector_distance(&u[k], &previous[k]))
            .fold(0.0, f64::max);
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }

    let core = project(t, [&u[0], &u[1], &u[2]])?;
    let [u1, u2, u3] = u;
    Ok(EmbeddingResult {
        core,
        node_embedding: FactorMatrix::orthonormal(u1),
        node_embedding_2: FactorMatrix::orthonormal(u2),
        layer_embedding: FactorMatrix::orthonormal(u3),
        iterations,
        converged,
        objective_trace,
    })
}

/// Per-type node features `U1 (Z x3 w_j)` where `w_j` averages the layer
/// embedding rows assigned to type `j`. Rows are nodes.
pub fn type_node_features(result: &EmbeddingResult, layer_labels: &[usize], n_types: usize) -> Result<Vec<Matrix>> {
    let w = result.layer_embedding.matrix();
    if layer_labels.len() != w.nrows() {
        return Err(Error::arg(format!(
            "{} layer labels for {} layers",
            layer_labels.len(),
            w.nrows()
        )));
    }
    let mut out = Vec::with_capacity(n_types);
    for j in 0..n_types {
        let members: Vec<usize> = (0..layer_labels.len()).filter(|&l| layer_labels[l] == j).collect();
        if members.is_empty() {
            return Err(Error::arg(format!("network type {j} has no layers")));
        }
        let mut mean = Matrix::zeros(1, w.ncols());
        for &l in &members {
            mean += w.row(l);
        }
        mean /= members.len() as f64;
        let block = mode_multiply(&result.core, &mean, 3)?;
        let block = block.slice(0);
        out.push(result.node_embedding.matrix() * block);
    }
    Ok(out)
}

/// Local community labels for every recovered network type: spectral
/// reduction of the per-type features to `k` dimensions followed by k-means.
pub fn local_memberships(
    result: &EmbeddingResult,
    layer_labels: &[usize],
    n_types: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<ClusterAssignment>> {
    type_node_features(result, layer_labels, n_types)?
        .into_iter()
        .map(|features| {
            let r = k.min(features.ncols()).min(features.nrows());
            let basis = top_singular_vectors(&features, r)?;
            community_cluster_km(&basis, ItemKind::Node, k, seed, &KmeansOptions::default())
        })
        .collect()
}
