//! Spectral baselines: Sum-Adj for nodes and M3-SC for layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{apply_sign_convention, top_singular_vectors, unfold, FactorMatrix, Matrix, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingType {
    /// Eigenvectors of the summed adjacency matrix.
    Node,
    /// Left singular vectors of the mode-3 unfolding.
    Layer,
}

/// Sum of all frontal slices, symmetrized so directed inputs still have a
/// real spectrum.
pub fn layer_sum(t: &Tensor3) -> Matrix {
    let [n1, n2, n3] = t.dims();
    let mut s = Matrix::zeros(n1, n2);
    for k in 0..n3 {
        s += t.slice(k);
    }
    if n1 == n2 {
        (&s + s.transpose()) * 0.5
    } else {
        s
    }
}

/// Eigenvectors of a symmetric matrix for the `rank` eigenvalues of largest
/// magnitude.
pub fn top_eigenvectors_by_magnitude(s: &Matrix, rank: usize) -> Result<FactorMatrix> {
    let n = s.nrows();
    if rank == 0 || rank > n {
        return Err(Error::arg(format!("rank {rank} outside 1..={n}")));
    }
    let eig = s.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .partial_cmp(&eig.eigenvalues[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = Matrix::zeros(n, rank);
    for (dst, &src) in order.iter().take(rank).enumerate() {
        out.set_column(dst, &eig.eigenvectors.column(src));
    }
    apply_sign_convention(&mut out);
    Ok(FactorMatrix::orthonormal(out))
}

pub fn spec_embedding(t: &Tensor3, rank: usize, embedding_type: EmbeddingType) -> Result<FactorMatrix> {
    let [n1, n2, layers] = t.dims();
    match embedding_type {
        EmbeddingType::Node => {
            if n1 != n2 {
                return Err(Error::arg(format!(
                    "Sum-Adj needs square layers, got {n1}x{n2}"
                )));
            }
            top_eigenvectors_by_magnitude(&layer_sum(t), rank)
        }
        EmbeddingType::Layer => {
            if rank == 0 || rank > layers {
                return Err(Error::arg(format!("rank {rank} outside 1..={layers}")));
            }
            top_singular_vectors(&unfold(t, 3)?, rank)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ORTHONORMAL_TOL;

    fn two_cliques(n: usize) -> Tensor3 {
        let half = n / 2;
        Tensor3::from_fn([n, n, 1], |i, j, _| {
            if i != j && (i < half) == (j < half) {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn node_embedding_separates_disconnected_cliques() {
        let t = two_cliques(8);
        let u = spec_embedding(&t, 2, EmbeddingType::Node).unwrap();
        assert!(u.orthonormality_error() < ORTHONORMAL_TOL);
        let rows = u.to_rows();
        for i in 0..8 {
            for j in 0..8 {
                let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).powi(2)).sum();
                if (i < 4) == (j < 4) {
                    assert!(d < 1e-20);
                } else {
                    assert!(d > 0.1);
                }
            }
        }
    }

    #[test]
    fn identical_layers_share_layer_rows() {
        let base = two_cliques(6);
        let t = Tensor3::from_slices(&vec![base.slice(0); 5]).unwrap();
        let w = spec_embedding(&t, 1, EmbeddingType::Layer).unwrap();
        let first = w.matrix()[(0, 0)];
        for l in 1..5 {
            assert!((w.matrix()[(l, 0)] - first).abs() < 1e-12);
        }
        assert!(first > 0.0);
    }

    #[test]
    fn ranks_are_bounded() {
        let t = two_cliques(4);
        assert!(spec_embedding(&t, 0, EmbeddingType::Node).is_err());
        assert!(spec_embedding(&t, 5, EmbeddingType::Node).is_err());
        assert!(spec_embedding(&t, 2, EmbeddingType::Layer).is_err());
    }

    #[test]
    fn negative_eigenvalues_count_by_magnitude() {
        // bipartite graph: spectrum symmetric, -lambda must be kept alongside +lambda
        let t = Tensor3::from_fn([4, 4, 1], |i, j, _| if (i < 2) != (j < 2) { 1.0 } else { 0.0 });
        let u = spec_embedding(&t, 2, EmbeddingType::Node).unwrap();
        let s = layer_sum(&t);
        let mut eigs: Vec<f64> = (0..2)
            .map(|c| {
                let v = u.matrix().column(c);
                v.dot(&(&s * v))
            })
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] + 2.0).abs() < 1e-10 && (eigs[1] - 2.0).abs() < 1e-10);
    }
}
