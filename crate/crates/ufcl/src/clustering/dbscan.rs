//! Classic DBSCAN over a precomputed distance matrix, used as the
//! fixed-threshold baseline against HDBSCAN.

use crate::clustering::{ClusterAssignment, OUTLIER};
use crate::error::{Error, Result};
use crate::neighbors::DistanceMatrix;

/// Density-based clustering with a global radius.
///
/// A point is a core point when at least `min_pts` points (itself included)
/// lie within `eps`. Clusters grow breadth-first from core points in index
/// order: core neighbors keep expanding, non-core neighbors join as border
/// points but stop the spread. Points reachable from no core point are
/// outliers.
pub fn dbscan(d: &DistanceMatrix, eps: f64, min_pts: usize) -> Result<ClusterAssignment> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::invalid(format!("eps must be positive and finite, got {eps}")));
    }
    if min_pts == 0 {
        return Err(Error::invalid("min_pts must be at least 1"));
    }
    let n = d.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| d.get(i, j) <= eps).collect())
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![OUTLIER; n];
    let mut next_cluster: i64 = 0;
    for seed in 0..n {
        if !is_core[seed] || labels[seed] != OUTLIER {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[seed] = cluster;
        let mut queue = std::collections::VecDeque::from([seed]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if labels[q] != OUTLIER {
                    continue;
                }
                labels[q] = cluster;
                if is_core[q] {
                    queue.push_back(q);
                }
            }
        }
    }
    ClusterAssignment::new(labels)
}
