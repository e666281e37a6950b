//! Independent reference implementations used only by tests. Nothing here
//! calls into the code paths it is used to check.

#![allow(dead_code)]

use multinet_core::lsm::{neg_log_likelihood, Link, LsmFactors};
use multinet_core::tensor::{expand, Matrix, Tensor3};
use rand::Rng;

/// One-sided Jacobi SVD. Returns left singular vectors (columns) and
/// singular values, sorted by decreasing singular value.
pub fn jacobi_svd(m: &Matrix) -> (Matrix, Vec<f64>) {
    // work on a tall copy so that columns carry U * sigma
    let transposed = m.nrows() < m.ncols();
    let mut a = if transposed { m.transpose() } else { m.clone() };
    let (rows, cols) = a.shape();
    let mut v = Matrix::identity(cols, cols);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = (0..rows).map(|i| a[(i, p)] * a[(i, p)]).sum();
                let beta: f64 = (0..rows).map(|i| a[(i, q)] * a[(i, q)]).sum();
                let gamma: f64 = (0..rows).map(|i| a[(i, p)] * a[(i, q)]).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
                for i in 0..cols {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<(f64, usize)> = (0..cols).map(|c| (a.column(c).norm(), c)).collect();
    sv.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    if transposed {
        // m^T = A_final V^T ... left vectors of m are the right vectors here
        let mut u = Matrix::zeros(cols, cols);
        for (dst, &(_, src)) in sv.iter().enumerate() {
            u.set_column(dst, &v.column(src));
        }
        (u, sv.iter().map(|x| x.0).collect())
    } else {
        let mut u = Matrix::zeros(rows, cols);
        for (dst, &(s, src)) in sv.iter().enumerate() {
            if s > 0.0 {
                u.set_column(dst, &(a.column(src) / s));
            }
        }
        (u, sv.iter().map(|x| x.0).collect())
    }
}

/// Sine of the largest principal angle, via the oracle SVD.
pub fn principal_angle_sin(a: &Matrix, b: &Matrix) -> f64 {
    let resid = b - a * (a.transpose() * b);
    let (_, s) = jacobi_svd(&resid);
    s.first().copied().unwrap_or(0.0).min(1.0)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_tensor(dims: [usize; 3], rng: &mut impl Rng) -> Tensor3 {
    Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0))
}

/// Random tensor of multilinear rank exactly `ranks` (with probability one).
pub fn random_low_rank(dims: [usize; 3], ranks: [usize; 3], rng: &mut impl Rng) -> Tensor3 {
    let core = random_tensor(ranks, rng);
    let a = random_matrix(dims[0], ranks[0], rng);
    let b = random_matrix(dims[1], ranks[1], rng);
    let c = random_matrix(dims[2], ranks[2], rng);
    expand(&core, [&a, &b, &c]).unwrap()
}

fn perturbed(f: &LsmFactors, block: usize, idx: usize, h: f64) -> LsmFactors {
    let mut g = f.clone();
    match block {
        0 => g.u.as_mut_slice()[idx] += h,
        1 => g.w.as_mut_slice()[idx] += h,
        _ => g.c.values_mut()[idx] += h,
    }
    g
}

/// Central finite differences of the full negative log-likelihood.
pub fn fd_gradient(t: &Tensor3, f: &LsmFactors, link: Link, sgma: f64, h: f64) -> LsmFactors {
    let loss = |g: &LsmFactors| neg_log_likelihood(t, &g.theta(), link, sgma).unwrap();
    let mut out = LsmFactors {
        u: Matrix::zeros(f.u.nrows(), f.u.ncols()),
        w: Matrix::zeros(f.w.nrows(), f.w.ncols()),
        c: Tensor3::zeros(f.c.dims()),
    };
    for idx in 0..f.u.len() {
        out.u.as_mut_slice()[idx] = (loss(&perturbed(f, 0, idx, h)) - loss(&perturbed(f, 0, idx, -h))) / (2.0 * h);
    }
    for idx in 0..f.w.len() {
        out.w.as_mut_slice()[idx] = (loss(&perturbed(f, 1, idx, h)) - loss(&perturbed(f, 1, idx, -h))) / (2.0 * h);
    }
    for idx in 0..f.c.values().len() {
        out.c.values_mut()[idx] = (loss(&perturbed(f, 2, idx, h)) - loss(&perturbed(f, 2, idx, -h))) / (2.0 * h);
    }
    out
}

pub fn flatten(f: &LsmFactors) -> Vec<f64> {
    f.u.iter()
        .chain(f.w.iter())
        .chain(f.c.values().iter())
        .copied()
        .collect()
}

/// `max |a - b| / max |b|`, the normwise relative error used for gradient checks.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max).max(1e-300);
    diff / scale
}

/// DBSCAN straight from the definitions: core points, transitive closure of
/// the core-core eps graph, border points joined to their lowest-index core
/// neighbour.
pub fn dbscan_closure(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<i32> {
    let n = points.len();
    let near = |i: usize, j: usize| {
        let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        d.sqrt() <= eps
    };
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && near(i, j);
        }
    }
    // Warshall
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut labels = vec![-1; n];
    for i in 0..n {
        if core[i] {
            // label by the smallest core index in the component
            labels[i] = (0..n).find(|&j| reach[i][j]).unwrap() as i32;
        }
    }
    for i in 0..n {
        if !core[i] {
            if let Some(j) = (0..n).find(|&j| core[j] && near(i, j)) {
                labels[i] = labels[j];
            }
        }
    }
    labels
}

/// True when the two labelings induce the same partition and the same noise set.
pub fn same_partition(a: &[i32], b: &[i32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    for i in 0..a.len() {
        if (a[i] == -1) != (b[i] == -1) {
            return false;
        }
        for j in 0..a.len() {
            if a[i] != -1 && a[j] != -1 && ((a[i] == a[j]) != (b[i] == b[j])) {
                return false;
            }
        }
    }
    true
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum mismatch fraction over every relabeling of `pred`; noise always counts.
pub fn brute_force_misclustering(pred: &[i32], truth: &[usize]) -> f64 {
    let mut pl: Vec<i32> = pred.iter().copied().filter(|&l| l >= 0).collect();
    pl.sort();
    pl.dedup();
    let mut tl: Vec<usize> = truth.to_vec();
    tl.sort();
    tl.dedup();
    let size = pl.len().max(tl.len());
    let mut best = 0usize;
    for perm in permutations(size) {
        // pred label pl[a] maps to slot perm[a]; slot s stands for truth tl[s] when it exists
        let hits = pred
            .iter()
            .zip(truth)
            .filter(|(&p, &t)| {
                if p < 0 {
                    return false;
                }
                let a = pl.iter().position(|&x| x == p).unwrap();
                tl.get(perm[a]) == Some(&t)
            })
            .count();
        best = best.max(hits);
    }
    1.0 - best as f64 / pred.len() as f64
}
