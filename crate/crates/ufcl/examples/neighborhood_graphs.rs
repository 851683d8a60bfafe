//! k-NN graphs and Jaccard distances between neighborhoods.
//!
//! Raw euclidean distance degrades as clusters crowd together: a boundary
//! point often sits closer to a member of the next class than to most of
//! its own. The Jaccard distance compares *neighbor lists* instead — two
//! points are close when the same points consider them neighbors — so one
//! stray close pair matters less than the consensus of both neighborhoods.
//!
//! Run with: `cargo run --example neighborhood_graphs`

use ufcl::neighbors::{jaccard_distance, jaccard_distances, knn_graph, pairwise_euclidean, DistanceMatrix};
use ufcl::pipeline::{synth_dataset, SynthParams};

/// Fraction of each point's k nearest (under `d`) that share its label.
fn knn_purity(d: &DistanceMatrix, labels: &[usize], k: usize) -> f64 {
    let n = d.len();
    let mut same = 0usize;
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| d.get(i, a).partial_cmp(&d.get(i, b)).unwrap().then(a.cmp(&b)));
        same += order[..k].iter().filter(|&&j| labels[j] == labels[i]).count();
    }
    same as f64 / (n * k) as f64
}

fn main() -> ufcl::Result<()> {
    // Crowded setting: 6 classes at a modest angle with broad spread.
    let params = SynthParams {
        classes: 6,
        per_class: 30,
        dim: 16,
        separation: 0.9,
        spread: 0.25,
        noise_frac: 0.0,
    };
    let (points, labels) = synth_dataset(&params, 11)?;

    let euclid = pairwise_euclidean(&points)?;
    let graph = knn_graph(&euclid, 15)?;
    let jaccard = jaccard_distances(&graph)?;

    println!("180 points, 6 classes, k = 15 nearest neighbors\n");

    // A point's neighborhood set includes itself, so two points are at
    // distance 1 only when neither appears anywhere near the other.
    let (a, b) = (0, 1); // same class
    let c = 31; // different class
    println!("point {a} vs {b} (same class):  jaccard {:.3}", jaccard_distance(&graph, a, b));
    println!("point {a} vs {c} (other class): jaccard {:.3}\n", jaccard_distance(&graph, a, c));

    // Re-rank every point's neighbors by each distance and count how many
    // of the top 15 actually share its class.
    let pe = knn_purity(&euclid, &labels, 15);
    let pj = knn_purity(&jaccard, &labels, 15);
    println!("15-NN purity by euclidean distance: {:.1}%", 100.0 * pe);
    println!("15-NN purity by jaccard distance:   {:.1}%", 100.0 * pj);
    assert!(pj > pe, "jaccard should clean up the neighborhoods");
    println!("\nConsensus neighborhoods suppress stray cross-class pairs, which");
    println!("is why the pipeline defaults to jaccard distances for clustering.");
    Ok(())
}
