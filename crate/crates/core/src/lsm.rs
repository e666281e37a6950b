//! Mixture multilayer latent space model fitting.
//!
//! The model is `theta = C x1 U x2 U x3 W` with node positions `U` (n x rank),
//! layer loadings `W` (L x M) and core `C` (rank x rank x M). Edges follow a
//! link of `theta / sgma`. Fitting is plain projected gradient descent with
//! simultaneous block updates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::baselines::{spec_embedding, EmbeddingType};
use crate::error::{Error, Result};
use crate::generate::GroundTruth;
use crate::rng::stream_rng;
use crate::tensor::{expand, mode_multiply, project, unfold, Matrix, Tensor3};

/// Exponent arguments are saturated here to keep `exp` finite.
pub const EXP_SATURATION: f64 = 700.0;

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before taking logs.
pub const PROB_CLIP: f64 = 1e-12;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Link {
    Logit,
    Probit,
    /// Exponential intensity; adjacency entries are counts.
    Poisson,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

impl Link {
    /// Mean edge value at `theta`: a probability for logit/probit, an intensity for poisson.
    pub fn value(self, theta: f64, sgma: f64) -> f64 {
        let x = theta / sgma;
        match self {
            Link::Logit => 1.0 / (1.0 + (-x.clamp(-EXP_SATURATION, EXP_SATURATION)).exp()),
            Link::Probit => std_normal_cdf(x),
            Link::Poisson => x.clamp(-EXP_SATURATION, EXP_SATURATION).exp(),
        }
    }

    pub fn is_bernoulli(self) -> bool {
        !matches!(self, Link::Poisson)
    }

    /// Per-entry loss and its derivative with respect to `theta`.
    fn loss_and_slope(self, a: f64, theta: f64, sgma: f64) -> (f64, f64) {
        match self {
            Link::Logit => {
                let p = self.value(theta, sgma).clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                let loss = -(a * p.ln() + (1.0 - a) * (1.0 - p).ln());
                (loss, (self.value(theta, sgma) - a) / sgma)
            }
            Link::Probit => {
                let x = theta / sgma;
                let p = std_normal_cdf(x).clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                let loss = -(a * p.ln() + (1.0 - a) * (1.0 - p).ln());
                let slope = std_normal_pdf(x) * ((1.0 - a) / (1.0 - p) - a / p) / sgma;
                (loss, slope)
            }
            Link::Poisson => {
                let x = (theta / sgma).clamp(-EXP_SATURATION, EXP_SATURATION);
                let lambda = x.exp();
                (lambda - a * x, (lambda - a) / sgma)
            }
        }
    }
}

fn check_same_dims(t: &Tensor3, theta: &Tensor3) -> Result<()> {
    if t.dims() != theta.dims() {
        return Err(Error::arg(format!(
            "adjacency dims {:?} differ from theta dims {:?}",
            t.dims(),
            theta.dims()
        )));
    }
    Ok(())
}

fn check_counts(t: &Tensor3, link: Link) -> Result<()> {
    if link == Link::Poisson && t.values().iter().any(|&a| a < 0.0) {
        return Err(Error::arg("poisson link requires nonnegative counts"));
    }
    Ok(())
}

/// Negative log-likelihood over all off-diagonal entries.
pub fn neg_log_likelihood(t: &Tensor3, theta: &Tensor3, link: Link, sgma: f64) -> Result<f64> {
    check_same_dims(t, theta)?;
    check_counts(t, link)?;
    let [n1, n2, n3] = t.dims();
    let mut total = 0.0;
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                if i != j {
                    total += link.loss_and_slope(t.get(i, j, k), theta.get(i, j, k), sgma).0;
                }
            }
        }
    }
    Ok(total)
}

/// Derivative of the loss with respect to every entry of theta (zero on the diagonal).
fn entry_slopes(t: &Tensor3, theta: &Tensor3, link: Link, sgma: f64) -> Tensor3 {
    let [n1, n2, n3] = t.dims();
    Tensor3::from_fn([n1, n2, n3], |i, j, k| {
        if i == j {
            0.0
        } else {
            link.loss_and_slope(t.get(i, j, k), theta.get(i, j, k), sgma).1
        }
    })
}

/// Current parameters of the factored model.
#[derive(Debug, Clone, PartialEq)]
pub struct LsmFactors {
    pub u: Matrix,
    pub w: Matrix,
    pub c: Tensor3,
}

impl LsmFactors {
    pub fn theta(&self) -> Tensor3 {
        expand(&self.c, [&self.u, &self.u, &self.w]).expect("conformal factors")
    }

    fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
            && self.w.iter().all(|v| v.is_finite())
            && self.c.values().iter().all(|v| v.is_finite())
    }
}

/// Chain rule from per-entry slopes `g` to the three parameter blocks. Both
/// `U` slots of the model contribute to the `U` gradient.
fn factor_gradients(g: &Tensor3, f: &LsmFactors) -> LsmFactors {
    let (u, w, c) = (&f.u, &f.w, &f.c);
    let ut = u.transpose();
    let wt = w.transpose();

    let grad_c = project(g, [u, u, w]).expect("conformal");

    let g_w = mode_multiply(g, &wt, 3).expect("conformal");
    let h1 = mode_multiply(&g_w, &ut, 2).expect("conformal");
    let h2 = mode_multiply(&g_w, &ut, 1).expect("conformal");
    let grad_u = unfold(&h1, 1).unwrap() * unfold(c, 1).unwrap().transpose()
        + unfold(&h2, 2).unwrap() * unfold(c, 2).unwrap().transpose();

    let h3 = mode_multiply(&mode_multiply(g, &ut, 1).unwrap(), &ut, 2).unwrap();
    let grad_w = unfold(&h3, 3).unwrap() * unfold(c, 3).unwrap().transpose();

    LsmFactors {
        u: grad_u,
        w: grad_w,
        c: grad_c,
    }
}

/// Full-sample gradient of [`neg_log_likelihood`] with respect to `(U, W, C)`.
pub fn full_gradient(t: &Tensor3, f: &LsmFactors, link: Link, sgma: f64) -> Result<LsmFactors> {
    let theta = f.theta();
    check_same_dims(t, &theta)?;
    Ok(factor_gradients(&entry_slopes(t, &theta, link, sgma), f))
}

/// Unbiased gradient estimate from `sample_size` off-diagonal entries drawn
/// uniformly with replacement.
pub fn sampled_gradient(
    t: &Tensor3,
    f: &LsmFactors,
    link: Link,
    sgma: f64,
    sample_size: usize,
    rng: &mut impl Rng,
) -> Result<LsmFactors> {
    let theta = f.theta();
    check_same_dims(t, &theta)?;
    let [n1, n2, n3] = t.dims();
    if n1 != n2 || n1 < 2 {
        return Err(Error::arg("stochastic sampling needs square slices with n >= 2"));
    }
    if sample_size == 0 {
        return Err(Error::arg("sample_size must be at least 1"));
    }
    let population = (n1 * (n1 - 1) * n3) as f64;
    let weight = population / sample_size as f64;
    let mut g = Tensor3::zeros(t.dims());
    for _ in 0..sample_size {
        let k = rng.random_range(0..n3);
        let i = rng.random_range(0..n1);
        let mut j = rng.random_range(0..n1 - 1);
        if j >= i {
            j += 1;
        }
        let slope = link.loss_and_slope(t.get(i, j, k), theta.get(i, j, k), sgma).1;
        let o = g.offset(i, j, k);
        g.values_mut()[o] += weight * slope;
    }
    Ok(factor_gradients(&g, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LsmInitType {
    /// Spectral: eigenvectors of the layer sum and the mode-3 unfolding.
    Spec,
    Rand,
    /// Planted factors plus noise; needs ground truth.
    Warm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsmInitConfig {
    pub n: usize,
    pub rank: usize,
    /// Number of network types.
    pub m: usize,
    /// Upper bound of the `Uniform(0, perturb)` noise.
    pub perturb: f64,
    pub int_type: LsmInitType,
    pub seed: u64,
}

/// Starting point for [`projected_gd`].
#[derive(Debug, Clone)]
pub struct LsmInit {
    pub tensor: Tensor3,
    pub u0: Matrix,
    pub w0: Matrix,
    pub c0: Tensor3,
    /// Row bound for `U`, row bound for `W`, and the core magnitude surrogate.
    pub deltas: [f64; 3],
    pub rank: usize,
    pub m: usize,
}

fn max_row_norm(m: &Matrix) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

fn uniform_noise(rows: usize, cols: usize, perturb: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        if perturb > 0.0 {
            rng.random_range(0.0..perturb)
        } else {
            0.0
        }
    })
}

/// First-order logit inversion `4 (A - 1/2)` off the diagonal, zero on it.
fn linearized(t: &Tensor3) -> Tensor3 {
    Tensor3::from_fn(t.dims(), |i, j, k| {
        if i == j {
            0.0
        } else {
            4.0 * (t.get(i, j, k) - 0.5)
        }
    })
}

/// Least-squares core for given factors against the linearized adjacency.
fn fitted_core(t: &Tensor3, u: &Matrix, w: &Matrix) -> Tensor3 {
    let target = linearized(t);
    let up = u.clone().pseudo_inverse(1e-12).expect("non-negative epsilon");
    let wp = w.clone().pseudo_inverse(1e-12).expect("non-negative epsilon");
    let c = mode_multiply(&target, &up, 1).unwrap();
    let c = mode_multiply(&c, &up, 2).unwrap();
    mode_multiply(&c, &wp, 3).unwrap()
}

pub fn initialization_lsm(
    tensor: &Tensor3,
    truth: Option<&GroundTruth>,
    cfg: &LsmInitConfig,
) -> Result<LsmInit> {
    let [n1, n2, layers] = tensor.dims();
    if n1 != n2 || n1 != cfg.n {
        return Err(Error::arg(format!(
            "expected an {0}x{0}xL tensor, got {1:?}",
            cfg.n,
            tensor.dims()
        )));
    }
    if cfg.rank == 0 || cfg.rank > cfg.n {
        return Err(Error::arg(format!("rank {} outside 1..={}", cfg.rank, cfg.n)));
    }
    if cfg.m == 0 || cfg.m > layers {
        return Err(Error::arg(format!("M {} outside 1..={layers}", cfg.m)));
    }
    if !(cfg.perturb >= 0.0 && cfg.perturb.is_finite()) {
        return Err(Error::arg(format!("perturb must be >= 0, got {}", cfg.perturb)));
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let (u0, w0, c0) = match cfg.int_type {
        LsmInitType::Spec => {
            let centered = linearized(tensor);
            let u = spec_embedding(&centered, cfg.rank, EmbeddingType::Node)?.into_matrix()
                * (cfg.n as f64).sqrt();
            let w = spec_embedding(&centered, cfg.m, EmbeddingType::Layer)?.into_matrix()
                * (layers as f64).sqrt();
            let c = fitted_core(tensor, &u, &w);
            (u, w, c)
        }
        LsmInitType::Rand => {
            let u = uniform_noise(cfg.n, cfg.rank, cfg.perturb, &mut rng);
            let w = uniform_noise(layers, cfg.m, cfg.perturb, &mut rng);
            let c = fitted_core(tensor, &u, &w);
            (u, w, c)
        }
        LsmInitType::Warm => {
            let latent = truth
                .and_then(|t| t.latent.as_ref())
                .ok_or_else(|| Error::arg("warm initialization needs planted latent factors"))?;
            if latent.u.shape() != (cfg.n, cfg.rank) || latent.w.shape() != (layers, cfg.m) {
                return Err(Error::arg(format!(
                    "planted factors have shapes {:?} and {:?}, expected {:?} and {:?}",
                    latent.u.shape(),
                    latent.w.shape(),
                    (cfg.n, cfg.rank),
                    (layers, cfg.m)
                )));
            }
            let u = &latent.u + uniform_noise(cfg.n, cfg.rank, cfg.perturb, &mut rng);
            let w = &latent.w + uniform_noise(layers, cfg.m, cfg.perturb, &mut rng);
            (u, w, latent.core.clone())
        }
    };
    // zero factors (rand with perturb = 0) fall back to unit bounds
    let bound = |x: f64| if x > 0.0 { x } else { 1.0 };
    let deltas = [
        bound(2.0 * max_row_norm(&u0)),
        bound(2.0 * max_row_norm(&w0)),
        bound(c0.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()))),
    ];
    Ok(LsmInit {
        tensor: tensor.clone(),
        u0,
        w0,
        c0,
        deltas,
        rank: cfg.rank,
        m: cfg.m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// Every off-diagonal entry contributes to each gradient.
    Full,
    /// `sample_size` entries drawn uniformly with replacement.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub cmax: f64,
    pub eta: f64,
    pub tmax: usize,
    pub link: Link,
    pub sampling: Sampling,
    pub show: bool,
    pub sgma: f64,
    pub sample_size: usize,
    pub seed: u64,
}

impl GdConfig {
    pub fn new(cmax: f64) -> Self {
        GdConfig {
            cmax,
            eta: 1e-4,
            tmax: 35,
            link: Link::Logit,
            sampling: Sampling::Full,
            show: true,
            sgma: 1.0,
            sample_size: 5000,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cmax > 0.0) {
            return Err(Error::arg(format!("Cmax must be positive, got {}", self.cmax)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::arg(format!("eta must be a finite non-negative step, got {}", self.eta)));
        }
        if self.tmax == 0 {
            return Err(Error::arg("tmax must be at least 1"));
        }
        if !(self.sgma > 0.0) {
            return Err(Error::arg(format!("sgma must be positive, got {}", self.sgma)));
        }
        if self.sampling == Sampling::Random && self.sample_size == 0 {
            return Err(Error::arg("sample_size must be at least 1 with random sampling"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LsmResult {
    pub u: Matrix,
    pub w: Matrix,
    pub c: Tensor3,
    /// Full-sample loss at the (projected) start and after every iteration.
    pub loss_trace: Vec<f64>,
}

impl LsmResult {
    pub fn factors(&self) -> LsmFactors {
        LsmFactors {
            u: self.u.clone(),
            w: self.w.clone(),
            c: self.c.clone(),
        }
    }
}

fn clip_rows(m: &mut Matrix, bound: f64) {
    for mut row in m.row_iter_mut() {
        let norm = row.norm();
        if norm > bound {
            row.scale_mut(bound / norm);
        }
    }
}

/// Clips `C` entrywise to `[-cmax, cmax]`, then caps row norms of `U` and `W`.
pub fn project_feasible(f: &mut LsmFactors, cmax: f64, u_bound: f64, w_bound: f64) {
    for v in f.c.values_mut() {
        *v = v.clamp(-cmax, cmax);
    }
    clip_rows(&mut f.u, u_bound);
    clip_rows(&mut f.w, w_bound);
}

pub fn projected_gd(init: &LsmInit, cfg: &GdConfig) -> Result<LsmResult> {
    cfg.validate()?;
    check_counts(&init.tensor, cfg.link)?;
    let layers = init.tensor.dims()[2];
    if init.u0.shape() != (init.tensor.dims()[0], init.rank)
        || init.w0.shape() != (layers, init.m)
        || init.c0.dims() != [init.rank, init.rank, init.m]
    {
        return Err(Error::arg("initialization is not conformal with the tensor"));
    }
    let [u_bound, w_bound, _] = init.deltas;
    let mut f = LsmFactors {
        u: init.u0.clone(),
        w: init.w0.clone(),
        c: init.c0.clone(),
    };
    project_feasible(&mut f, cfg.cmax, u_bound, w_bound);

    let mut rng = stream_rng(cfg.seed, 1);
    let loss_of = |f: &LsmFactors, iteration: usize| -> Result<f64> {
        let loss = neg_log_likelihood(&init.tensor, &f.theta(), cfg.link, cfg.sgma)?;
        if !loss.is_finite() {
            return Err(Error::Numerical {
                iteration,
                message: format!("loss is {loss}"),
            });
        }
        Ok(loss)
    };

    let mut loss_trace = Vec::with_capacity(cfg.tmax + 1);
    loss_trace.push(loss_of(&f, 0)?);
    for iter in 1..=cfg.tmax {
        let grad = match cfg.sampling {
            Sampling::Full => full_gradient(&init.tensor, &f, cfg.link, cfg.sgma)?,
            Sampling::Random => {
                sampled_gradient(&init.tensor, &f, cfg.link, cfg.sgma, cfg.sample_size, &mut rng)?
            }
        };
        if !grad.is_finite() {
            return Err(Error::Numerical {
                iteration: iter,
                message: "gradient has non-finite entries".into(),
            });
        }
        f.u -= &grad.u * cfg.eta;
        f.w -= &grad.w * cfg.eta;
        for (c, g) in f.c.values_mut().iter_mut().zip(grad.c.values()) {
            *c -= cfg.eta * g;
        }
        project_feasible(&mut f, cfg.cmax, u_bound, w_bound);
        let loss = loss_of(&f, iter)?;
        if cfg.show {
            eprintln!("iter={iter} loss={loss}");
        }
        loss_trace.push(loss);
    }
    Ok(LsmResult {
        u: f.u,
        w: f.w,
        c: f.c,
        loss_trace,
    })
}
