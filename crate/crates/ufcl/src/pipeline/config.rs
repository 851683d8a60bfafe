//! Pipeline configuration and its flat `key=value` file format.

use crate::error::{Error, Result};
use crate::membank::{WeightKind, WeightScheme, WeightSign};

/// Distance matrix fed to the clusterer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    /// Plain Euclidean distances between embeddings.
    Euclidean,
    /// Jaccard distances between k-NN neighborhood sets (built on Euclidean).
    Jaccard,
}

/// Which clusterer produces the pseudo labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClustererKind {
    Hdbscan,
    Dbscan,
}

/// Every knob of the training pipeline. Serialized as one `key=value` pair
/// per line; unknown keys are rejected so typos fail loudly.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub epochs: usize,
    pub iterations_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Memory momentum `m` of the agent update.
    pub momentum_m: f64,
    /// Temperature of the ClusterNCE softmax.
    pub loss_temperature: f64,
    /// Neighbor count for the weighted k-NN evaluator.
    pub eval_k: usize,
    /// Temperature of the k-NN vote weights.
    pub eval_temperature: f64,
    pub min_cluster_size: usize,
    pub weight_scheme: WeightScheme,
    pub distance_kind: DistanceKind,
    /// Neighborhood size for the Jaccard graph.
    pub jaccard_k: usize,
    pub clusterer: ClustererKind,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub seed: u64,
    /// Embedding dimension.
    pub out_dim: usize,
    /// Optional tanh hidden layer width; 0 disables it.
    pub hidden_dim: usize,
    /// Pool `gem_width x gem_height` activation maps per channel before the
    /// linear stack.
    pub gem: bool,
    pub gem_width: usize,
    pub gem_height: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            epochs: 50,
            iterations_per_epoch: 50,
            batch_size: 256,
            lr: 0.00035,
            weight_decay: 5e-4,
            momentum_m: 0.1,
            loss_temperature: 0.05,
            eval_k: 5,
            eval_temperature: 0.07,
            min_cluster_size: 5,
            weight_scheme: WeightScheme::default(),
            distance_kind: DistanceKind::Jaccard,
            jaccard_k: 30,
            clusterer: ClustererKind::Hdbscan,
            dbscan_eps: 0.4,
            dbscan_min_pts: 4,
            seed: 0,
            out_dim: 32,
            hidden_dim: 0,
            gem: false,
            gem_width: 0,
            gem_height: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive_count = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::config(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        positive_count("iterations_per_epoch", self.iterations_per_epoch)?;
        positive_count("batch_size", self.batch_size)?;
        positive_count("eval_k", self.eval_k)?;
        positive_count("jaccard_k", self.jaccard_k)?;
        positive_count("dbscan_min_pts", self.dbscan_min_pts)?;
        positive_count("out_dim", self.out_dim)?;
        if self.min_cluster_size < 2 {
            return Err(Error::config("min_cluster_size must be at least 2"));
        }
        let positive_rate = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be a positive finite number, got {v}")))
            }
        };
        positive_rate("lr", self.lr)?;
        positive_rate("loss_temperature", self.loss_temperature)?;
        positive_rate("eval_temperature", self.eval_temperature)?;
        positive_rate("dbscan_eps", self.dbscan_eps)?;
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if !(0.0..=1.0).contains(&self.momentum_m) {
            return Err(Error::config(format!(
                "momentum_m must lie in [0, 1], got {}",
                self.momentum_m
            )));
        }
        if self.gem && (self.gem_width == 0 || self.gem_height == 0) {
            return Err(Error::config("gem pooling requires gem_width and gem_height >= 1"));
        }
        Ok(())
    }

    /// Renders the config as `key=value` lines (the on-disk format).
    pub fn to_key_values(&self) -> String {
        let kind = match self.weight_scheme.kind {
            WeightKind::Zero => "zero",
            WeightKind::Min => "min",
            WeightKind::Mean => "mean",
        };
        let sign = match self.weight_scheme.sign {
            WeightSign::AsWritten => "as_written",
            WeightSign::Inverted => "inverted",
        };
        let distance = match self.distance_kind {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Jaccard => "jaccard",
        };
        let clusterer = match self.clusterer {
            ClustererKind::Hdbscan => "hdbscan",
            ClustererKind::Dbscan => "dbscan",
        };
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("epochs", self.epochs.to_string());
        push("iterations_per_epoch", self.iterations_per_epoch.to_string());
        push("batch_size", self.batch_size.to_string());
        push("lr", self.lr.to_string());
        push("weight_decay", self.weight_decay.to_string());
        push("momentum_m", self.momentum_m.to_string());
        push("loss_temperature", self.loss_temperature.to_string());
        push("eval_k", self.eval_k.to_string());
        push("eval_temperature", self.eval_temperature.to_string());
        push("min_cluster_size", self.min_cluster_size.to_string());
        push("weight_scheme", kind.to_string());
        push("weight_sign", sign.to_string());
        push("distance_kind", distance.to_string());
        push("jaccard_k", self.jaccard_k.to_string());
        push("clusterer", clusterer.to_string());
        push("dbscan_eps", self.dbscan_eps.to_string());
        push("dbscan_min_pts", self.dbscan_min_pts.to_string());
        push("seed", self.seed.to_string());
        push("out_dim", self.out_dim.to_string());
        push("hidden_dim", self.hidden_dim.to_string());
        push("gem", self.gem.to_string());
        push("gem_width", self.gem_width.to_string());
        push("gem_height", self.gem_height.to_string());
        out
    }

    /// Applies one `key=value` assignment on top of the current values.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::config(format!("invalid value for {key}: {value:?}")))
        }
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "iterations_per_epoch" => self.iterations_per_epoch = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "momentum_m" => self.momentum_m = parse(key, value)?,
            "loss_temperature" => self.loss_temperature = parse(key, value)?,
            "eval_k" => self.eval_k = parse(key, value)?,
            "eval_temperature" => self.eval_temperature = parse(key, value)?,
            "min_cluster_size" => self.min_cluster_size = parse(key, value)?,
            "weight_scheme" => {
                self.weight_scheme.kind = match value {
                    "zero" => WeightKind::Zero,
                    "min" => WeightKind::Min,
                    "mean" => WeightKind::Mean,
                    _ => {
                        return Err(Error::config(format!(
                            "weight_scheme must be zero|min|mean, got {value:?}"
                        )))
                    }
                }
            }
            "weight_sign" => {
                self.weight_scheme.sign = match value {
                    "as_written" => WeightSign::AsWritten,
                    "inverted" => WeightSign::Inverted,
                    _ => {
                        return Err(Error::config(format!(
                            "weight_sign must be as_written|inverted, got {value:?}"
                        )))
                    }
                }
            }
            "distance_kind" => {
                self.distance_kind = match value {
                    "euclidean" => DistanceKind::Euclidean,
                    "jaccard" => DistanceKind::Jaccard,
                    _ => {
                        return Err(Error::config(format!(
                            "distance_kind must be euclidean|jaccard, got {value:?}"
                        )))
                    }
                }
            }
            "jaccard_k" => self.jaccard_k = parse(key, value)?,
            "clusterer" => {
                self.clusterer = match value {
                    "hdbscan" => ClustererKind::Hdbscan,
                    "dbscan" => ClustererKind::Dbscan,
                    _ => {
                        return Err(Error::config(format!(
                            "clusterer must be hdbscan|dbscan, got {value:?}"
                        )))
                    }
                }
            }
            "dbscan_eps" => self.dbscan_eps = parse(key, value)?,
            "dbscan_min_pts" => self.dbscan_min_pts = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out_dim" => self.out_dim = parse(key, value)?,
            "hidden_dim" => self.hidden_dim = parse(key, value)?,
            "gem" => self.gem = parse(key, value)?,
            "gem_width" => self.gem_width = parse(key, value)?,
            "gem_height" => self.gem_height = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines on top of the defaults. Blank lines and `#`
    /// comments are ignored; unknown keys and malformed lines are errors.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            cfg.apply(key.trim(), value.trim())
                .map_err(|e| Error::config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
