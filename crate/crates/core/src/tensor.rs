//! Dense order-3 tensors and the handful of multilinear operations every
//! embedding method is built from: unfoldings, mode products, truncated SVD
//! and HOSVD.
//!
//! Storage is mode-1 fastest: entry `(i, j, k)` lives at `i + n1 * (j + n2 * k)`.
//! The mode-k unfolding places index `k` on the rows and orders columns with
//! the lower-numbered remaining mode varying fastest.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix used for unfoldings and factor products.
pub type Matrix = DMatrix<f64>;

/// Tolerance a factor must meet to be called orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Tensor3 {
            dims,
            values: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_vec(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::arg(format!("tensor dims must be positive, got {dims:?}")));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if values.len() != expected {
            return Err(Error::arg(format!(
                "tensor of dims {dims:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Tensor3 { dims, values })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(i, j, k));
                }
            }
        }
        Tensor3 { dims, values }
    }

    /// Stacks equally sized square-or-rectangular matrices as frontal slices.
    pub fn from_slices(slices: &[Matrix]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::arg("at least one slice is required"))?;
        let (n1, n2) = first.shape();
        let mut values = Vec::with_capacity(n1 * n2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(Error::arg(format!(
                    "slice {k} has shape {:?}, expected {:?}",
                    s.shape(),
                    (n1, n2)
                )));
            }
            // column-major storage already matches mode-1 fastest
            values.extend_from_slice(s.as_slice());
        }
        Tensor3::from_vec([n1, n2, slices.len()], values)
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        assert!(
            i < self.dims[0] && j < self.dims[1] && k < self.dims[2],
            "index ({i}, {j}, {k}) out of range for dims {:?}",
            self.dims
        );
        self.values[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        assert!(
            i < self.dims[0] && j < self.dims[1] && k < self.dims[2],
            "index ({i}, {j}, {k}) out of range for dims {:?}",
            self.dims
        );
        let o = self.offset(i, j, k);
        self.values[o] = value;
    }

    /// Frontal slice `k` as an `n1 x n2` matrix.
    pub fn slice(&self, k: usize) -> Matrix {
        let (n1, n2) = (self.dims[0], self.dims[1]);
        let start = k * n1 * n2;
        Matrix::from_column_slice(n1, n2, &self.values[start..start + n1 * n2])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims, other.dims);
        Tensor3 {
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn check_mode(mode: usize) -> Result<usize> {
    if (1..=3).contains(&mode) {
        Ok(mode - 1)
    } else {
        Err(Error::arg(format!("mode must be 1, 2 or 3, got {mode}")))
    }
}

/// Mode-`mode` unfolding (1-based mode).
pub fn unfold(t: &Tensor3, mode: usize) -> Result<Matrix> {
    let m = check_mode(mode)?;
    let [n1, n2, n3] = t.dims;
    Ok(match m {
        0 => Matrix::from_column_slice(n1, n2 * n3, &t.values),
        1 => {
            let mut out = Matrix::zeros(n2, n1 * n3);
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        out[(j, i + n1 * k)] = t.values[i + n1 * (j + n2 * k)];
                    }
                }
            }
            out
        }
        _ => Matrix::from_column_slice(n1 * n2, n3, &t.values).transpose(),
    })
}

/// Inverse of [`unfold`]: rebuilds a tensor of `dims` from its mode-`mode` unfolding.
pub fn refold(m: &Matrix, mode: usize, dims: [usize; 3]) -> Result<Tensor3> {
    let md = check_mode(mode)?;
    let [n1, n2, n3] = dims;
    let expected = match md {
        0 => (n1, n2 * n3),
        1 => (n2, n1 * n3),
        _ => (n3, n1 * n2),
    };
    if m.shape() != expected {
        return Err(Error::arg(format!(
            "cannot refold a {:?} matrix along mode {mode} into dims {dims:?}",
            m.shape()
        )));
    }
    match md {
        0 => Tensor3::from_vec(dims, m.as_slice().to_vec()),
        1 => {
            let mut t = Tensor3::zeros(dims);
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        t.values[i + n1 * (j + n2 * k)] = m[(j, i + n1 * k)];
                    }
                }
            }
            Ok(t)
        }
        _ => Tensor3::from_vec(dims, m.transpose().as_slice().to_vec()),
    }
}

/// Mode-k product `t x_k M`: replaces `dims[k]` by `M.nrows()`.
pub fn mode_multiply(t: &Tensor3, m: &Matrix, mode: usize) -> Result<Tensor3> {
    let md = check_mode(mode)?;
    if m.ncols() != t.dims[md] {
        return Err(Error::arg(format!(
            "mode-{mode} product needs a matrix with {} columns, got {}x{}",
            t.dims[md],
            m.nrows(),
            m.ncols()
        )));
    }
    let mut dims = t.dims;
    dims[md] = m.nrows();
    let product = m * unfold(t, mode)?;
    refold(&product, mode, dims)
}

/// `t x_1 A1^T x_2 A2^T x_3 A3^T`, the usual projection onto factor subspaces.
pub fn project(t: &Tensor3, factors: [&Matrix; 3]) -> Result<Tensor3> {
    let mut out = mode_multiply(t, &factors[0].transpose(), 1)?;
    out = mode_multiply(&out, &factors[1].transpose(), 2)?;
    mode_multiply(&out, &factors[2].transpose(), 3)
}

/// `core x_1 A1 x_2 A2 x_3 A3`.
pub fn expand(core: &Tensor3, factors: [&Matrix; 3]) -> Result<Tensor3> {
    let mut out = mode_multiply(core, factors[0], 1)?;
    out = mode_multiply(&out, factors[1], 2)?;
    mode_multiply(&out, factors[2], 3)
}

/// Dense matrix whose columns are flagged orthonormal when produced by an SVD.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    matrix: Matrix,
    orthonormal: bool,
}

impl FactorMatrix {
    pub fn new(matrix: Matrix) -> Self {
        FactorMatrix {
            matrix,
            orthonormal: false,
        }
    }

    /// Wraps a matrix the caller guarantees to have orthonormal columns.
    pub fn orthonormal(matrix: Matrix) -> Self {
        FactorMatrix {
            matrix,
            orthonormal: true,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// `max |M^T M - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.matrix.transpose() * &self.matrix;
        let eye = Matrix::identity(gram.nrows(), gram.ncols());
        (gram - eye).amax()
    }

    pub fn projector(&self) -> Matrix {
        &self.matrix * self.matrix.transpose()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| self.row(i)).collect()
    }
}

/// Flips each column so its largest-magnitude entry (lowest index on ties) is positive.
pub fn apply_sign_convention(m: &mut Matrix) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (idx, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = idx;
            }
        }
        if best_abs > 0.0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Orthonormal basis of the top-`r` left singular subspace of `m`.
pub fn top_singular_vectors(m: &Matrix, r: usize) -> Result<FactorMatrix> {
    let limit = m.nrows().min(m.ncols());
    if r == 0 || r > limit {
        return Err(Error::arg(format!(
            "rank {r} outside 1..={limit} for a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    // stable: equal singular values keep decomposition order
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = Matrix::zeros(m.nrows(), r);
    for (dst, &src) in order.iter().take(r).enumerate() {
        out.set_column(dst, &u.column(src));
    }
    apply_sign_convention(&mut out);
    Ok(FactorMatrix::orthonormal(out))
}

/// Higher-order SVD truncated to `ranks`.
#[derive(Debug, Clone)]
pub struct Hosvd {
    pub core: Tensor3,
    pub factors: [FactorMatrix; 3],
}

impl Hosvd {
    pub fn reconstruct(&self) -> Tensor3 {
        expand(
            &self.core,
            [
                self.factors[0].matrix(),
                self.factors[1].matrix(),
                self.factors[2].matrix(),
            ],
        )
        .expect("hosvd factors are conformal with the core")
    }
}

pub fn hosvd(t: &Tensor3, ranks: [usize; 3]) -> Result<Hosvd> {
    for (k, (&r, &n)) in ranks.iter().zip(t.dims.iter()).enumerate() {
        if r == 0 || r > n {
            return Err(Error::arg(format!(
                "mode-{} rank {r} outside 1..={n}",
                k + 1
            )));
        }
    }
    let f1 = top_singular_vectors(&unfold(t, 1)?, ranks[0])?;
    let f2 = top_singular_vectors(&unfold(t, 2)?, ranks[1])?;
    let f3 = top_singular_vectors(&unfold(t, 3)?, ranks[2])?;
    let core = project(t, [f1.matrix(), f2.matrix(), f3.matrix()])?;
    Ok(Hosvd {
        core,
        factors: [f1, f2, f3],
    })
}

/// Sine of the largest principal angle between the column spans of two
/// orthonormal bases of equal size.
pub fn subspace_distance(a: &Matrix, b: &Matrix) -> f64 {
    let residual = b - a * (a.transpose() * b);
    residual.clone().svd(false, false).singular_values.max().min(1.0)
}
