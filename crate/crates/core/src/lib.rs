//! Script-driven video summarization.
//!
//! Frames and script sentences arrive as precomputed embeddings. A
//! cross-modal multi-head attention block lets every frame attend over the
//! script sentences, a Transformer encoder turns the fused representation
//! into per-frame importance scores, and a selection stage turns scores into
//! a summary.
//!
//! Module map:
//! - [`numkit`]: matrices, autodiff tape, gradient checking, RNG streams
//! - [`datakit`]: `SDVE` embedding files, dataset manifests, synthetic data
//! - [`model`]: network configuration, weights, forward pass, checkpoints
//! - [`train`]: losses, Adam, the training loop
//! - [`summarize`]: top-fraction and knapsack fragment selection
//! - [`metrics`]: F-Score protocols, rank correlations, overlap analysis
//! - [`cli`]: run configuration and the `sdvsum` command dispatcher

pub mod cli;
pub mod datakit;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numkit;
pub mod summarize;
pub mod train;

pub use error::{Error, Result};
pub use numkit::{Matrix, Rng};
