//! Density-based clustering used to mine pseudo labels: HDBSCAN with
//! stability-based cluster extraction, plus a fixed-threshold DBSCAN
//! baseline.
//!
//! Both algorithms consume a precomputed
//! [`DistanceMatrix`](crate::neighbors::DistanceMatrix), label each example
//! with a cluster id and leave low-density examples unassigned as outliers
//! rather than forcing them into a cluster.

mod dbscan;
mod hdbscan;

pub use dbscan::dbscan;
pub use hdbscan::{
    condense_tree, core_distances, extract_clusters, hdbscan, hdbscan_with, mst,
    mutual_reachability, CondensedNode, CondensedTree, HdbscanParams, MstEdge, MstEdgeList,
    PointEntry,
};

use crate::error::{Error, Result};

/// Label value marking a point that belongs to no cluster.
pub const OUTLIER: i64 = -1;

/// Per-example cluster labels. Ids are contiguous `0..num_clusters`, with
/// [`OUTLIER`] for unassigned points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<i64>,
    num_clusters: usize,
}

impl ClusterAssignment {
    /// Validates that the labels use exactly the ids `0..k` (for some `k`)
    /// plus the outlier sentinel.
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        let mut max_id: i64 = -1;
        for &l in &labels {
            if l < OUTLIER {
                return Err(Error::invalid(format!("label {l} is below the outlier sentinel")));
            }
            max_id = max_id.max(l);
        }
        let num_clusters = (max_id + 1) as usize;
        let mut seen = vec![false; num_clusters];
        for &l in &labels {
            if l >= 0 {
                seen[l as usize] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("cluster ids are not contiguous: {missing} unused")));
        }
        Ok(ClusterAssignment { labels, num_clusters })
    }

    /// An assignment with every point marked as an outlier.
    pub fn all_outliers(n: usize) -> Self {
        ClusterAssignment { labels: vec![OUTLIER; n], num_clusters: 0 }
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn num_outliers(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OUTLIER).count()
    }

    /// Indices assigned to cluster `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == k as i64)
            .map(|(i, _)| i)
            .collect()
    }

    /// Member lists for all clusters, indexed by cluster id.
    pub fn all_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }
}
