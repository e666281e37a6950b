//! Synthetic mixture multilayer networks.
//!
//! Both generators assign layer `l` to network type `l mod m` and sample each
//! layer from its own RNG stream, so the edges of layer `l` depend only on the
//! root seed and `l`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::error::{Error, Result};
use crate::lsm::Link;
use crate::rng::stream_rng;
use crate::tensor::{expand, Matrix, Tensor3};

const MEMBERSHIP_STREAM: u64 = 0;

fn layer_stream(layer: usize) -> u64 {
    layer as u64 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsbmParams {
    pub n: usize,
    /// Number of network types.
    pub m: usize,
    pub layers: usize,
    /// Communities per type.
    pub k: usize,
    /// Target expected degree per layer; `n / 4` when absent.
    pub degree: Option<f64>,
    /// Between/within community probability ratio; `0.4` when absent.
    pub out_in_ratio: Option<f64>,
    pub seed: u64,
}

pub const DEFAULT_OUT_IN_RATIO: f64 = 0.4;

impl MmsbmParams {
    pub fn new(n: usize, m: usize, layers: usize, k: usize, seed: u64) -> Self {
        MmsbmParams {
            n,
            m,
            layers,
            k,
            degree: None,
            out_in_ratio: None,
            seed,
        }
    }

    pub fn with_degree(mut self, d: f64) -> Self {
        self.degree = Some(d);
        self
    }

    pub fn with_ratio(mut self, r: f64) -> Self {
        self.out_in_ratio = Some(r);
        self
    }

    pub fn resolved_degree(&self) -> f64 {
        self.degree.unwrap_or(self.n as f64 / 4.0)
    }

    pub fn resolved_ratio(&self) -> f64 {
        self.out_in_ratio.unwrap_or(DEFAULT_OUT_IN_RATIO)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k {
            return Err(Error::arg(format!("need n >= K >= 1, got n={} K={}", self.n, self.k)));
        }
        if self.m == 0 || self.layers < self.m {
            return Err(Error::arg(format!(
                "need L >= m >= 1, got L={} m={}",
                self.layers, self.m
            )));
        }
        let r = self.resolved_ratio();
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::arg(format!("out-in ratio must lie in (0, 1], got {r}")));
        }
        let d = self.resolved_degree();
        if !(d > 0.0 && d < self.n as f64) {
            return Err(Error::arg(format!("average degree must lie in (0, n), got {d}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockProbabilities {
    pub p_in: f64,
    pub p_out: f64,
}

impl BlockProbabilities {
    pub fn matrix(&self, k: usize) -> Matrix {
        Matrix::from_fn(k, k, |a, b| if a == b { self.p_in } else { self.p_out })
    }
}

/// Solves `(n/K - 1) p_in + (n - n/K) p_out = d` with `p_out = r p_in`.
pub fn block_probabilities(n: usize, k: usize, degree: f64, ratio: f64) -> Result<BlockProbabilities> {
    let block = n as f64 / k as f64;
    let denom = (block - 1.0) + ratio * (n as f64 - block);
    if denom <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no edges possible with n={n}, K={k}, r={ratio}"
        )));
    }
    let p_in = degree / denom;
    // allow rounding noise when d sits exactly on the boundary
    if p_in > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!(
            "within-community probability {p_in:.6} exceeds 1 for n={n}, K={k}, d={degree}, r={ratio}"
        )));
    }
    let p_in = p_in.min(1.0);
    Ok(BlockProbabilities {
        p_in,
        p_out: ratio * p_in,
    })
}

/// Latent factors behind an MMLSM tensor: `theta = core x1 u x2 u x3 w + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentFactors {
    pub u: Matrix,
    pub w: Matrix,
    /// Symmetrized, scale-adjusted core (`rank x rank x m`).
    pub core: Tensor3,
    pub offset: f64,
}

/// Planted structure kept for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Network type of every layer, in `0..m`.
    pub layer_types: Vec<usize>,
    /// MMSBM only: `memberships[j][i]` is the community of node `i` under type `j`.
    pub memberships: Vec<Vec<usize>>,
    /// MMLSM only.
    pub latent: Option<LatentFactors>,
}

#[derive(Debug, Clone)]
pub struct GenList {
    pub tensor: Tensor3,
    /// Parameter tensor. Edge probabilities for MMSBM (diagonal kept at the
    /// block value), pre-link values for MMLSM.
    pub theta: Tensor3,
    pub blocks: Option<BlockProbabilities>,
    pub truth: GroundTruth,
}

fn round_robin_layer_types(layers: usize, m: usize) -> Vec<usize> {
    (0..layers).map(|l| l % m).collect()
}

/// Fills the upper triangle of every layer with Bernoulli draws and mirrors it.
fn sample_layers(dims: [usize; 3], seed: u64, prob: impl Fn(usize, usize, usize) -> f64 + Sync) -> Tensor3 {
    let n = dims[0];
    let slices: Vec<Vec<f64>> = (0..dims[2])
        .into_par_iter()
        .map(|l| {
            let mut rng = stream_rng(seed, layer_stream(l));
            let mut slice = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let u: f64 = rng.random();
                    if u < prob(i, j, l) {
                        slice[i + n * j] = 1.0;
                        slice[j + n * i] = 1.0;
                    }
                }
            }
            slice
        })
        .collect();
    Tensor3::from_vec(dims, slices.concat()).expect("layer slices match dims")
}

pub fn generate_mmsbm(p: &MmsbmParams) -> Result<GenList> {
    p.validate()?;
    let blocks = block_probabilities(p.n, p.k, p.resolved_degree(), p.resolved_ratio())?;
    let layer_types = round_robin_layer_types(p.layers, p.m);

    let mut rng = stream_rng(p.seed, MEMBERSHIP_STREAM);
    let memberships: Vec<Vec<usize>> = (0..p.m)
        .map(|_| {
            let mut z: Vec<usize> = (0..p.n).map(|i| i % p.k).collect();
            z.shuffle(&mut rng);
            z
        })
        .collect();

    let dims = [p.n, p.n, p.layers];
    let prob = |i: usize, j: usize, l: usize| {
        let z = &memberships[layer_types[l]];
        if z[i] == z[j] {
            blocks.p_in
        } else {
            blocks.p_out
        }
    };
    let tensor = sample_layers(dims, p.seed, prob);
    let theta = Tensor3::from_fn(dims, prob);
    Ok(GenList {
        tensor,
        theta,
        blocks: Some(blocks),
        truth: GroundTruth {
            layer_types,
            memberships,
            latent: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoreInit {
    /// Entries `Uniform(-cmax, cmax)`.
    Uniform,
    /// Entries `Normal(0, 1)` truncated to `[-cmax, cmax]`.
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Logit,
    Probit,
}

impl Kernel {
    pub fn link(self) -> Link {
        match self {
            Kernel::Logit => Link::Logit,
            Kernel::Probit => Link::Probit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmlsmParams {
    pub n: usize,
    pub m: usize,
    pub layers: usize,
    pub rank: usize,
    pub u_mean: f64,
    pub cmax: f64,
    /// Target average degree, reached through a constant shift of theta.
    pub degree: Option<f64>,
    pub int_type: CoreInit,
    pub kernel: Kernel,
    pub scale_par: f64,
    pub seed: u64,
}

impl MmlsmParams {
    pub fn new(n: usize, m: usize, layers: usize, rank: usize, seed: u64) -> Self {
        MmlsmParams {
            n,
            m,
            layers,
            rank,
            u_mean: 0.5,
            cmax: 1.0,
            degree: None,
            int_type: CoreInit::Uniform,
            kernel: Kernel::Logit,
            scale_par: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::arg(format!("need at least two nodes, got {}", self.n)));
        }
        if self.m == 0 || self.layers < self.m {
            return Err(Error::arg(format!(
                "need L >= m >= 1, got L={} m={}",
                self.layers, self.m
            )));
        }
        if self.rank == 0 {
            return Err(Error::arg("rank must be at least 1"));
        }
        if !(self.cmax > 0.0 && self.cmax.is_finite()) {
            return Err(Error::arg(format!("cmax must be positive, got {}", self.cmax)));
        }
        if !(self.scale_par > 0.0 && self.scale_par.is_finite()) {
            return Err(Error::arg(format!("scale_par must be positive, got {}", self.scale_par)));
        }
        if !self.u_mean.is_finite() {
            return Err(Error::arg("U_mean must be finite"));
        }
        if let Some(d) = self.degree {
            if !(d > 0.0 && d < (self.n - 1) as f64) {
                return Err(Error::arg(format!(
                    "average degree must lie in (0, n-1), got {d}"
                )));
            }
        }
        Ok(())
    }
}

fn mean_offdiag_probability(theta: &Tensor3, link: Link, shift: f64) -> f64 {
    let [n, _, layers] = theta.dims();
    let mut sum = 0.0;
    for l in 0..layers {
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    sum += link.value(theta.get(i, j, l) + shift, 1.0);
                }
            }
        }
    }
    sum / (n * (n - 1) * layers) as f64
}

/// Constant shift making the mean off-diagonal link probability equal `target`.
fn degree_offset(theta: &Tensor3, link: Link, target: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean_offdiag_probability(theta, link, lo) > target {
        lo *= 2.0;
    }
    while mean_offdiag_probability(theta, link, hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_offdiag_probability(theta, link, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn generate_mmlsm(p: &MmlsmParams) -> Result<GenList> {
    p.validate()?;
    let layer_types = round_robin_layer_types(p.layers, p.m);
    let mut rng = stream_rng(p.seed, MEMBERSHIP_STREAM);

    let normal = Normal::new(p.u_mean, 1.0).expect("unit variance");
    let mut u = Matrix::from_fn(p.n, p.rank, |_, _| 0.0);
    for i in 0..p.n {
        for a in 0..p.rank {
            u[(i, a)] = normal.sample(&mut rng);
        }
        let norm = u.row(i).norm();
        if norm > 1.0 {
            u.row_mut(i).scale_mut(1.0 / norm);
        }
    }

    let w = Matrix::from_fn(p.layers, p.m, |l, c| if layer_types[l] == c { 1.0 } else { 0.0 });

    let core_dims = [p.rank, p.rank, p.m];
    let raw_core = match p.int_type {
        CoreInit::Uniform => Tensor3::from_fn(core_dims, |_, _, _| rng.random_range(-p.cmax..p.cmax)),
        CoreInit::Norm => {
            let std = StatNormal::standard();
            let (lo, hi) = (std.cdf(-p.cmax), std.cdf(p.cmax));
            Tensor3::from_fn(core_dims, |_, _, _| {
                let q: f64 = rng.random();
                std.inverse_cdf(lo + q * (hi - lo)).clamp(-p.cmax, p.cmax)
            })
        }
    };
    // symmetrizing each core slice symmetrizes every layer of theta
    let core = Tensor3::from_fn(core_dims, |a, b, c| {
        0.5 * (raw_core.get(a, b, c) + raw_core.get(b, a, c)) / p.scale_par
    });

    let mut theta = expand(&core, [&u, &u, &w])?;
    // exact symmetry regardless of rounding order in the products
    let dims = theta.dims();
    for l in 0..dims[2] {
        for j in 0..dims[1] {
            for i in (j + 1)..dims[0] {
                let s = 0.5 * (theta.get(i, j, l) + theta.get(j, i, l));
                theta.set(i, j, l, s);
                theta.set(j, i, l, s);
            }
        }
    }

    let link = p.kernel.link();
    let offset = match p.degree {
        Some(d) => degree_offset(&theta, link, d / (p.n - 1) as f64),
        None => 0.0,
    };
    if offset != 0.0 {
        theta = theta.map(|v| v + offset);
    }

    let tensor = sample_layers(dims, p.seed, |i, j, l| link.value(theta.get(i, j, l), 1.0));
    Ok(GenList {
        tensor,
        theta,
        blocks: None,
        truth: GroundTruth {
            layer_types,
            memberships: Vec::new(),
            latent: Some(LatentFactors { u, w, core, offset }),
        },
    })
}
