//! Class-balanced mini-batch sampling over pseudo labels.

use rand::Rng;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};

/// Members drawn per sampled cluster.
pub const INSTANCES_PER_CLASS: usize = 4;

/// Draws `batch_size` example indices, grouped by cluster: first
/// `ceil(batch_size / instances_per_class)` clusters are picked uniformly
/// (without replacement while enough clusters remain), then
/// `instances_per_class` members of each — distinct members when the cluster
/// is big enough, with replacement otherwise. Outliers are never sampled.
pub fn batch_sampler_with<R: Rng>(
    assignment: &ClusterAssignment,
    batch_size: usize,
    instances_per_class: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if batch_size == 0 || instances_per_class == 0 {
        return Err(Error::invalid("batch_size and instances_per_class must be at least 1"));
    }
    let k = assignment.num_clusters();
    if k == 0 {
        return Err(Error::invalid("cannot sample a batch without clusters"));
    }
    let picks = batch_size.div_ceil(instances_per_class);
    let clusters: Vec<usize> = if picks <= k {
        // Partial Fisher-Yates: uniform subset without replacement.
        let mut ids: Vec<usize> = (0..k).collect();
        for i in 0..picks {
            let j = rng.random_range(i..k);
            ids.swap(i, j);
        }
        ids.truncate(picks);
        ids
    } else {
        (0..picks).map(|_| rng.random_range(0..k)).collect()
    };

    let mut batch = Vec::with_capacity(picks * instances_per_class);
    for cluster in clusters {
        let members = assignment.members(cluster);
        if members.len() >= instances_per_class {
            let mut ids = members;
            for i in 0..instances_per_class {
                let j = rng.random_range(i..ids.len());
                ids.swap(i, j);
            }
            batch.extend_from_slice(&ids[..instances_per_class]);
        } else {
            for _ in 0..instances_per_class {
                batch.push(members[rng.random_range(0..members.len())]);
            }
        }
    }
    batch.truncate(batch_size);
    Ok(batch)
}

/// [`batch_sampler_with`] at the standard [`INSTANCES_PER_CLASS`].
pub fn batch_sampler<R: Rng>(
    assignment: &ClusterAssignment,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    batch_sampler_with(assignment, batch_size, INSTANCES_PER_CLASS, rng)
}
