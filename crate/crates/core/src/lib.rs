//! Mixture multilayer network analysis.
//!
//! A multilayer network over `n` nodes with `L` layers is an `n x n x L`
//! adjacency [`Tensor3`](tensor::Tensor3). The crate generates such tensors
//! from two planted mixture models, embeds nodes and layers with Tucker-type
//! decompositions or latent space fitting, and clusters the embeddings.

pub mod baselines;
pub mod cluster;
pub mod error;
pub mod generate;
pub mod io;
pub mod lsm;
mod rng;
pub mod tensor;
pub mod twist;

pub use error::{Error, Result};
pub use rng::stream_rng;
