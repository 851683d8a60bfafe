//! The full cluster/train loop: encode, cluster into pseudo labels, build
//! feature agents, run contrastive updates, and report metrics per epoch.
//!
//! Determinism: every random decision draws from a stream derived from the
//! config seed and a fixed purpose tag (means, train split, test split,
//! encoder init, one per epoch). Streams never share state, so resuming from
//! a checkpoint replays the exact epochs an uninterrupted run would have
//! produced, and thread counts cannot reorder any floating-point reduction.

pub mod config;
pub mod io;
mod sampler;
mod synth;

pub use config::{ClustererKind, DistanceKind, PipelineConfig};
pub use sampler::{batch_sampler, batch_sampler_with, INSTANCES_PER_CLASS};
pub use synth::{class_means, synth_benchmark, synth_dataset, SynthParams};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{dbscan, hdbscan, ClusterAssignment};
use crate::encoder::{
    adam_step, encode_all, encoder_backward, encoder_forward, AdamConfig, AdamState,
    EncoderGrads, EncoderParams, EncoderSpec, ForwardTrace, InputShape,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    ari, clustering_acc, nmi, weighted_knn_top1, ContingencyTable, LabeledEmbeddings,
};
use crate::matrix::Matrix;
use crate::membank::{batch_class_mean, cluster_nce_loss, init_agents, momentum_update,
    FeatureAgentBank, MiniBatch};
use crate::neighbors::{jaccard_distances, knn_graph, pairwise_euclidean};

/// Seed-stream tags, one per purpose.
pub const STREAM_MEANS: u64 = 1;
pub const STREAM_TRAIN: u64 = 2;
pub const STREAM_TEST: u64 = 3;
pub const STREAM_INIT: u64 = 4;
pub const STREAM_EPOCH_BASE: u64 = 1000;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Independent deterministic generator for `(seed, tag)`.
pub fn seed_stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ splitmix64(tag)))
}

/// Raw train/test splits with ground-truth class ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Matrix,
    pub train_labels: Vec<usize>,
    pub test: Matrix,
    pub test_labels: Vec<usize>,
}

impl Dataset {
    pub fn new(
        train: Matrix,
        train_labels: Vec<usize>,
        test: Matrix,
        test_labels: Vec<usize>,
    ) -> Result<Self> {
        if train.rows() != train_labels.len() || test.rows() != test_labels.len() {
            return Err(Error::shape("label count does not match example count"));
        }
        if test.rows() > 0 && train.cols() != test.cols() {
            return Err(Error::shape("train and test dimensions differ"));
        }
        Ok(Dataset { train, train_labels, test, test_labels })
    }
}

/// One line of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub num_clusters: usize,
    pub num_outliers: usize,
    pub top1: f64,
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub mean_loss: f64,
}

/// Everything that evolves across epochs.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: EncoderParams,
    pub adam: AdamState,
    /// 1-based index of the next epoch to run.
    pub next_epoch: usize,
    /// Agent bank from the most recent trained epoch.
    pub bank: Option<FeatureAgentBank>,
}

/// Derives the encoder input shape for `raw_dim`-wide rows.
pub fn input_shape(cfg: &PipelineConfig, raw_dim: usize) -> Result<InputShape> {
    if cfg.gem {
        let per_channel = cfg.gem_width * cfg.gem_height;
        if per_channel == 0 || raw_dim % per_channel != 0 {
            return Err(Error::config(format!(
                "raw dimension {raw_dim} is not a multiple of gem {}x{}",
                cfg.gem_width, cfg.gem_height
            )));
        }
        Ok(InputShape::Map {
            width: cfg.gem_width,
            height: cfg.gem_height,
            channels: raw_dim / per_channel,
        })
    } else {
        Ok(InputShape::Vector { dim: raw_dim })
    }
}

/// Fresh state: encoder initialized from the init stream, zeroed optimizer,
/// no bank, first epoch next.
pub fn init_state(cfg: &PipelineConfig, raw_dim: usize) -> Result<TrainState> {
    let spec = EncoderSpec {
        input: input_shape(cfg, raw_dim)?,
        hidden_dim: if cfg.hidden_dim == 0 { None } else { Some(cfg.hidden_dim) },
        out_dim: cfg.out_dim,
    };
    let params = EncoderParams::init(spec, &mut seed_stream(cfg.seed, STREAM_INIT))?;
    let adam = AdamState::new(&params);
    Ok(TrainState { params, adam, next_epoch: 1, bank: None })
}

/// Clusters embeddings into pseudo labels using the configured distance and
/// clusterer. Fewer than two examples cannot form a cluster.
pub fn cluster_features(cfg: &PipelineConfig, features: &Matrix) -> Result<ClusterAssignment> {
    let n = features.rows();
    if n < 2 {
        return Ok(ClusterAssignment::all_outliers(n));
    }
    let base = pairwise_euclidean(features)?;
    let dist = match cfg.distance_kind {
        DistanceKind::Euclidean => base,
        DistanceKind::Jaccard => {
            let graph = knn_graph(&base, cfg.jaccard_k.min(n - 1))?;
            jaccard_distances(&graph)?
        }
    };
    match cfg.clusterer {
        ClustererKind::Hdbscan => {
            if n < cfg.min_cluster_size {
                return Ok(ClusterAssignment::all_outliers(n));
            }
            hdbscan(&dist, cfg.min_cluster_size)
        }
        ClustererKind::Dbscan => dbscan(&dist, cfg.dbscan_eps, cfg.dbscan_min_pts),
    }
}

fn evaluate(
    cfg: &PipelineConfig,
    train_feats: &Matrix,
    assignment: &ClusterAssignment,
    data: &Dataset,
    test_feats: &Matrix,
) -> Result<(f64, f64, f64, f64)> {
    let acc = clustering_acc(assignment, &data.train_labels)?;
    let table = ContingencyTable::new(assignment, &data.train_labels)?;
    let (nmi_v, ari_v) = (nmi(&table), ari(&table));
    let top1 = if data.test_labels.is_empty() {
        0.0
    } else {
        let train =
            LabeledEmbeddings::new(train_feats.clone(), data.train_labels.clone())?;
        let test = LabeledEmbeddings::new(test_feats.clone(), data.test_labels.clone())?;
        weighted_knn_top1(&train, &test, cfg.eval_k, cfg.eval_temperature)?
    };
    Ok((top1, acc, nmi_v, ari_v))
}

/// Runs one epoch of the loop and advances the state.
///
/// Order: encode all examples, cluster them, report metrics for the
/// parameters entering the epoch, then build agents and run the contrastive
/// iterations. An epoch whose clustering finds nothing trains nothing and
/// reports `num_clusters = 0` with zero loss.
pub fn run_epoch(
    cfg: &PipelineConfig,
    state: &mut TrainState,
    data: &Dataset,
) -> Result<EpochReport> {
    let epoch = state.next_epoch;
    let train_feats = encode_all(&state.params, &data.train)?;
    let test_feats = encode_all(&state.params, &data.test)?;
    let assignment = cluster_features(cfg, &train_feats)?;
    let (top1, acc, nmi_v, ari_v) = evaluate(cfg, &train_feats, &assignment, data, &test_feats)?;
    let num_clusters = assignment.num_clusters();
    let num_outliers = assignment.num_outliers();

    let mean_loss = if num_clusters == 0 {
        state.bank = None;
        0.0
    } else {
        let mut bank = init_agents(
            &train_feats,
            &assignment,
            cfg.weight_scheme,
            cfg.momentum_m,
            cfg.loss_temperature,
        )?;
        let mut rng = seed_stream(cfg.seed, STREAM_EPOCH_BASE + epoch as u64);
        let adam_cfg =
            AdamConfig { lr: cfg.lr, weight_decay: cfg.weight_decay, ..AdamConfig::default() };
        let mut total = 0.0;
        for _ in 0..cfg.iterations_per_epoch {
            let idx = batch_sampler(&assignment, cfg.batch_size, &mut rng)?;
            // Forward passes use the current parameters, not the embeddings
            // from the clustering pass above.
            let encoded: Result<Vec<(Vec<f64>, ForwardTrace)>> = idx
                .par_iter()
                .map(|&i| encoder_forward(&state.params, data.train.row(i)))
                .collect();
            let encoded = encoded?;
            let feats: Vec<Vec<f64>> = encoded.iter().map(|(e, _)| e.clone()).collect();
            let labels: Vec<usize> =
                idx.iter().map(|&i| assignment.labels()[i] as usize).collect();
            let batch = MiniBatch::new(feats, labels)?;
            let (loss, feat_grads) = cluster_nce_loss(&batch, &bank)?;
            let per_example: Result<Vec<EncoderGrads>> = encoded
                .par_iter()
                .zip(feat_grads.par_iter())
                .map(|((_, trace), g)| encoder_backward(&state.params, trace, g))
                .collect();
            // Accumulate in batch order so the sum is thread-count invariant.
            let mut grads = EncoderGrads::zeros_like(&state.params);
            for g in per_example? {
                grads.add_assign(&g);
            }
            adam_step(&mut state.params, &grads, &mut state.adam, &adam_cfg)?;
            for k in batch.classes_present() {
                let mean = batch_class_mean(&batch, k)?;
                match momentum_update(&mut bank, k, &mean) {
                    // A degenerate blend leaves the agent at its old value.
                    Ok(()) | Err(Error::Degenerate(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            total += loss;
        }
        state.bank = Some(bank);
        total / cfg.iterations_per_epoch as f64
    };

    state.next_epoch += 1;
    Ok(EpochReport {
        epoch,
        num_clusters,
        num_outliers,
        top1,
        acc,
        nmi: nmi_v,
        ari: ari_v,
        mean_loss,
    })
}

fn run_epochs(
    cfg: &PipelineConfig,
    state: &mut TrainState,
    data: &Dataset,
    out_dir: Option<&Path>,
) -> Result<Vec<EpochReport>> {
    let mut reports = Vec::new();
    while state.next_epoch <= cfg.epochs {
        let report = run_epoch(cfg, state, data)?;
        if let Some(dir) = out_dir {
            io::append_report(&dir.join("reports.jsonl"), &report)?;
        }
        reports.push(report);
    }
    Ok(reports)
}

/// Runs `cfg.epochs` epochs from a fresh state.
///
/// With an output directory, each report is appended to `reports.jsonl` as
/// it is produced (a fresh run truncates any previous history) and the final
/// state lands in `checkpoint/`. Zero epochs yield an empty history and the
/// initial checkpoint.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    data: &Dataset,
    out_dir: Option<&Path>,
) -> Result<Vec<EpochReport>> {
    cfg.validate()?;
    let mut state = init_state(cfg, data.train.cols())?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io_at(dir, e))?;
        let reports = dir.join("reports.jsonl");
        std::fs::write(&reports, "").map_err(|e| Error::io_at(&reports, e))?;
    }
    let reports = run_epochs(cfg, &mut state, data, out_dir)?;
    if let Some(dir) = out_dir {
        io::save_checkpoint(&dir.join("checkpoint"), &state)?;
    }
    Ok(reports)
}

/// Continues a checkpointed state through the remaining epochs, appending to
/// the existing history. The same seed schedule is replayed, so the reports
/// match an uninterrupted run byte for byte.
pub fn resume_pipeline(
    cfg: &PipelineConfig,
    state: &mut TrainState,
    data: &Dataset,
    out_dir: Option<&Path>,
) -> Result<Vec<EpochReport>> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io_at(dir, e))?;
    }
    let reports = run_epochs(cfg, state, data, out_dir)?;
    if let Some(dir) = out_dir {
        io::save_checkpoint(&dir.join("checkpoint"), state)?;
    }
    Ok(reports)
}
