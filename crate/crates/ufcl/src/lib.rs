//! Unsupervised fine-grained clustering and representation learning.
//!
//! The crate implements a self-training loop that alternates between two
//! views of an unlabeled dataset:
//!
//! 1. **Cluster**: encode every example, build a distance graph over the
//!    embeddings and run density-based clustering (HDBSCAN by default) to
//!    obtain pseudo labels, leaving low-density examples as outliers.
//! 2. **Learn**: treat each cluster as a class, maintain one weighted
//!    "feature agent" per cluster in a memory bank, and train the encoder
//!    with a cluster-level contrastive loss against those agents.
//!
//! Modules follow the stages of that loop:
//!
//! - [`encoder`]: GeM pooling, a small linear stack with hand-derived
//!   gradients, L2 normalization and Adam with decoupled weight decay.
//! - [`neighbors`]: pairwise distances, k-NN graphs and Jaccard distances
//!   over shared neighborhoods.
//! - [`clustering`]: HDBSCAN (core distances, mutual reachability, MST,
//!   condensed tree, stability-based extraction) and a DBSCAN baseline.
//! - [`membank`]: weighted feature agents, momentum updates and the
//!   cluster-level InfoNCE loss.
//! - [`evaluation`]: outlier-aware clustering accuracy, NMI, ARI and a
//!   weighted k-NN Top-1 probe.
//! - [`pipeline`]: configuration, synthetic data, file formats, the epoch
//!   loop and checkpointing.
//!
//! Everything is `f64`, deterministic for a fixed seed, and deterministic
//! across thread counts: parallelism only ever splits work whose results are
//! written to disjoint output slots.
//!
//! See the `examples/` directory for one runnable walkthrough per capability.

pub mod clustering;
pub mod encoder;
mod error;
pub mod evaluation;
mod matrix;
pub mod membank;
pub mod neighbors;
pub mod pipeline;

pub use error::{Error, Result};
pub use matrix::Matrix;
