//! Feature-agent memory bank and the cluster-level contrastive loss.
//!
//! After each clustering pass, every cluster gets one "feature agent": a
//! weighted centroid of its members' embeddings, renormalized to unit length.
//! The weights come from a softmax over per-member distances (zero, min or
//! mean distance to the other members, with either sign), so the bank can
//! up- or down-weight members that sit far from the rest of their cluster.
//!
//! During training, each mini-batch class forms a query (the renormalized
//! batch mean), the query is scored against every agent with a temperature
//! softmax, and the loss pulls it toward its own agent while pushing away all
//! others. Agents are constants for the gradient; they evolve only through
//! the momentum update toward the plain batch mean.

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, euclidean, norm, Matrix};

/// Distance flavor used for member weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Constant zero distance: uniform weights `1/N_k`.
    Zero,
    /// Distance to the closest other member.
    Min,
    /// Mean distance to all other members.
    Mean,
}

/// Sign applied to distances before the softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSign {
    /// `exp(+d)`: isolated members get more weight.
    AsWritten,
    /// `exp(-d)`: isolated members get less weight.
    Inverted,
}

/// Member-weighting scheme for agent initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightScheme {
    pub kind: WeightKind,
    pub sign: WeightSign,
}

impl WeightScheme {
    pub const fn new(kind: WeightKind, sign: WeightSign) -> Self {
        WeightScheme { kind, sign }
    }
}

impl Default for WeightScheme {
    fn default() -> Self {
        WeightScheme::new(WeightKind::Mean, WeightSign::AsWritten)
    }
}

/// Distance statistic of member `i` within its cluster's feature set,
/// according to `scheme.kind`. Euclidean throughout; a singleton cluster has
/// no other members, so every scheme yields 0.
pub fn pairwise_set_distance(i: usize, cluster: &[Vec<f64>], scheme: WeightScheme) -> f64 {
    match scheme.kind {
        WeightKind::Zero => 0.0,
        _ if cluster.len() < 2 => 0.0,
        WeightKind::Min => cluster
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, f)| euclidean(&cluster[i], f))
            .fold(f64::INFINITY, f64::min),
        WeightKind::Mean => {
            let sum: f64 = cluster
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, f)| euclidean(&cluster[i], f))
                .sum();
            sum / (cluster.len() - 1) as f64
        }
    }
}

/// Softmax weights over the members of one cluster:
/// `w_i = exp(s * d_i) / sum_j exp(s * d_j)` with the scheme's sign `s`.
pub fn compute_weights(cluster: &[Vec<f64>], scheme: WeightScheme) -> Vec<f64> {
    let sign = match scheme.sign {
        WeightSign::AsWritten => 1.0,
        WeightSign::Inverted => -1.0,
    };
    let scored: Vec<f64> = (0..cluster.len())
        .map(|i| sign * pairwise_set_distance(i, cluster, scheme))
        .collect();
    let max = scored.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scored.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// The per-cluster agents plus the update hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAgentBank {
    agents: Vec<Vec<f64>>,
    momentum: f64,
    temperature: f64,
}

impl FeatureAgentBank {
    /// Builds a bank from explicit unit agents (used by checkpoint loading).
    pub fn from_agents(agents: Vec<Vec<f64>>, momentum: f64, temperature: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&momentum) {
            return Err(Error::invalid(format!("momentum must lie in [0,1], got {momentum}")));
        }
        if !(temperature > 0.0) {
            return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
        }
        for (k, a) in agents.iter().enumerate() {
            let n = norm(a);
            if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("agent {k} is not unit norm (|a| = {n})")));
            }
        }
        Ok(FeatureAgentBank { agents, momentum, temperature })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agent(&self, k: usize) -> &[f64] {
        &self.agents[k]
    }

    pub fn agents(&self) -> &[Vec<f64>] {
        &self.agents
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// One agent per cluster: `c_k = sum_i w_k^i f_k^i`, renormalized to unit
/// length. Outliers never contribute.
pub fn init_agents(
    features: &Matrix,
    assignment: &ClusterAssignment,
    scheme: WeightScheme,
    momentum: f64,
    temperature: f64,
) -> Result<FeatureAgentBank> {
    if features.rows() != assignment.len() {
        return Err(Error::shape(format!(
            "assignment covers {} examples but features have {} rows",
            assignment.len(),
            features.rows()
        )));
    }
    let mut agents = Vec::with_capacity(assignment.num_clusters());
    for members in assignment.all_members() {
        // ClusterAssignment guarantees contiguous ids, so every cluster has
        // at least one member.
        let cluster: Vec<Vec<f64>> = members.iter().map(|&i| features.row(i).to_vec()).collect();
        let weights = compute_weights(&cluster, scheme);
        let mut agent = vec![0.0; features.cols()];
        for (w, f) in weights.iter().zip(&cluster) {
            axpy(*w, f, &mut agent);
        }
        agents.push(crate::encoder::l2_normalize(&agent)?);
    }
    FeatureAgentBank::from_agents(agents, momentum, temperature)
}

/// A batch of encoded features with pseudo labels; outliers are excluded by
/// construction of the sampler.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl MiniBatch {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::shape(format!(
                "{} features vs {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.is_empty() {
            return Err(Error::invalid("mini-batch must contain at least one feature"));
        }
        let dim = features[0].len();
        for (i, f) in features.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::shape(format!("feature {i} has mixed dimension")));
            }
            let n = dot(f, f).sqrt();
            if !n.is_finite() || (n - 1.0).abs() > 1e-4 {
                return Err(Error::invalid(format!("feature {i} is not unit norm (|f| = {n})")));
            }
        }
        Ok(MiniBatch { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Distinct labels present, ascending.
    pub fn classes_present(&self) -> Vec<usize> {
        let mut classes = self.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        classes
    }
}

/// Plain arithmetic mean of the batch features labeled `k` (not
/// renormalized; the momentum update consumes it as-is).
pub fn batch_class_mean(batch: &MiniBatch, k: usize) -> Result<Vec<f64>> {
    let dim = batch.features[0].len();
    let mut mean = vec![0.0; dim];
    let mut count = 0usize;
    for (f, &l) in batch.features.iter().zip(&batch.labels) {
        if l == k {
            axpy(1.0, f, &mut mean);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid(format!("no feature with label {k} in the batch")));
    }
    for v in mean.iter_mut() {
        *v /= count as f64;
    }
    Ok(mean)
}

/// Exponential moving average toward the batch mean:
/// `c_k <- m * c_k + (1 - m) * mean`, then renormalized.
///
/// If the blend lands on the zero vector it cannot be renormalized; the
/// update is rejected and the agent keeps its previous value.
pub fn momentum_update(bank: &mut FeatureAgentBank, k: usize, mean: &[f64]) -> Result<()> {
    if k >= bank.agents.len() {
        return Err(Error::invalid(format!("no agent {k} in a bank of {}", bank.agents.len())));
    }
    if mean.len() != bank.agents[k].len() {
        return Err(Error::shape("mean dimension does not match the agent"));
    }
    let m = bank.momentum;
    let blended: Vec<f64> =
        bank.agents[k].iter().zip(mean).map(|(c, f)| m * c + (1.0 - m) * f).collect();
    let normalized = crate::encoder::l2_normalize(&blended)
        .map_err(|_| Error::degenerate("momentum update produced a zero vector; agent unchanged"))?;
    bank.agents[k] = normalized;
    Ok(())
}

/// ClusterNCE loss over a mini-batch, with analytic gradients for the batch
/// features.
///
/// For each class `k` present, the query `q_k` is the renormalized batch
/// class mean. With logits `z_j = (q_k . c_j) / tau` over all agents,
///
/// ```text
/// loss_k = -log softmax(z)_k      loss = mean over classes present
/// ```
///
/// Gradients flow through the normalization and the mean back to each
/// member feature; the agents are treated as constants.
pub fn cluster_nce_loss(batch: &MiniBatch, bank: &FeatureAgentBank) -> Result<(f64, Vec<Vec<f64>>)> {
    if bank.is_empty() {
        return Err(Error::invalid("bank has no agents"));
    }
    let tau = bank.temperature;
    let dim = batch.features[0].len();
    if bank.agents[0].len() != dim {
        return Err(Error::shape("agent dimension does not match batch features"));
    }
    if let Some(&bad) = batch.labels.iter().find(|&&l| l >= bank.len()) {
        return Err(Error::invalid(format!("batch label {bad} has no agent")));
    }

    let classes = batch.classes_present();
    let scale = 1.0 / classes.len() as f64;
    let mut loss = 0.0;
    let mut grads = vec![vec![0.0; dim]; batch.len()];

    for &k in &classes {
        let members: Vec<usize> =
            (0..batch.len()).filter(|&i| batch.labels[i] == k).collect();
        let mean = batch_class_mean(batch, k)?;
        let mean_norm = norm(&mean);
        if mean_norm < 1e-300 {
            return Err(Error::degenerate(format!(
                "class {k} batch mean is the zero vector"
            )));
        }
        let q: Vec<f64> = mean.iter().map(|v| v / mean_norm).collect();

        // Stable softmax over all agents.
        let logits: Vec<f64> = bank.agents.iter().map(|c| dot(&q, c) / tau).collect();
        let max_logit = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max_logit).exp()).collect();
        let total: f64 = exps.iter().sum();
        let p_k = exps[k] / total;
        loss += -p_k.ln();

        // dL/dq = (1/tau) * sum_j (p_j - [j == k]) c_j
        let mut d_q = vec![0.0; dim];
        for (j, c) in bank.agents.iter().enumerate() {
            let coeff = (exps[j] / total - if j == k { 1.0 } else { 0.0 }) / tau;
            axpy(coeff, c, &mut d_q);
        }
        // Through the normalization: dL/dmean = (dL/dq - (dL/dq . q) q) / |mean|.
        let gq = dot(&d_q, &q);
        let d_mean: Vec<f64> =
            d_q.iter().zip(&q).map(|(g, qv)| (g - gq * qv) / mean_norm).collect();
        // Through the mean: each member receives dL/dmean / |B_k|, and the
        // total is averaged over classes.
        let member_scale = scale / members.len() as f64;
        for &i in &members {
            axpy(member_scale, &d_mean, &mut grads[i]);
        }
    }
    Ok((loss * scale, grads))
}
