//! Feature agents: weighted cluster prototypes with momentum updates.
//!
//! Each cluster owns one unit-length agent vector. Agents start as weighted
//! centroids (the weighting scheme decides how much boundary members count),
//! the ClusterNCE loss pulls batch features toward their own agent and away
//! from the others, and after every step the agent drifts toward the fresh
//! batch mean under an exponential moving average.
//!
//! Run with: `cargo run --example memory_bank`

use ufcl::clustering::ClusterAssignment;
use ufcl::membank::{
    batch_class_mean, cluster_nce_loss, compute_weights, init_agents, momentum_update, MiniBatch,
    WeightKind, WeightScheme, WeightSign,
};
use ufcl::Matrix;

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn main() -> ufcl::Result<()> {
    // Two tight bundles on the unit circle plus one straggler per bundle.
    let feats = vec![
        unit(&[1.0, 0.05]),
        unit(&[1.0, -0.05]),
        unit(&[0.80, 0.60]), // straggler of cluster 0
        unit(&[0.05, 1.0]),
        unit(&[-0.05, 1.0]),
        unit(&[0.60, 0.80]), // straggler of cluster 1
    ];
    let labels = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1])?;
    let mat = Matrix::from_rows(&feats)?;

    // How much weight the straggler gets depends on the scheme: `zero`
    // ignores geometry (uniform), `mean`/`min` softmax the member's distance
    // to the rest of its cluster, so the straggler dominates as-written and
    // is suppressed when inverted.
    let cluster0: Vec<Vec<f64>> = feats[..3].to_vec();
    println!("cluster 0 member weights (straggler last):");
    for (kind, name) in [
        (WeightKind::Zero, "zero"),
        (WeightKind::Min, "min"),
        (WeightKind::Mean, "mean"),
    ] {
        let w = compute_weights(&cluster0, WeightScheme::new(kind, WeightSign::AsWritten));
        let wi = compute_weights(&cluster0, WeightScheme::new(kind, WeightSign::Inverted));
        println!("  {name:>5}: as-written {w:.3?}   inverted {wi:.3?}");
    }

    // Temperature 0.5 keeps the softmax soft enough that the loss stays
    // visibly nonzero; training uses a much sharper 0.05.
    let scheme = WeightScheme::default();
    let mut bank = init_agents(&mat, &labels, scheme, 0.1, 0.5)?;
    println!("\ninitial agents: {:.3?} and {:.3?}", bank.agent(0), bank.agent(1));

    // One training iteration: loss + feature gradients, then agent drift.
    let batch = MiniBatch::new(feats.clone(), vec![0, 0, 0, 1, 1, 1])?;
    let (loss, grads) = cluster_nce_loss(&batch, &bank)?;
    println!("\nClusterNCE loss on the batch: {loss:.4}");
    println!("gradient on feature 0: {:+.3?}", grads[0]);

    // Momentum updates pull each agent toward its batch class mean; with
    // m = 0.1 the agent almost jumps to the mean, with m = 0.9 it barely
    // moves. The bank above uses m = 0.1.
    for k in 0..bank.len() {
        let mean = batch_class_mean(&batch, k)?;
        momentum_update(&mut bank, k, &mean)?;
    }
    let (after, _) = cluster_nce_loss(&batch, &bank)?;
    println!("loss after one momentum update of the agents: {after:.4}");

    // Repeating the update converges the agents onto the class means.
    for _ in 0..20 {
        for k in 0..bank.len() {
            let mean = batch_class_mean(&batch, k)?;
            momentum_update(&mut bank, k, &mean)?;
        }
    }
    let (converged, _) = cluster_nce_loss(&batch, &bank)?;
    println!("loss after twenty more updates:               {converged:.4}");
    println!("\nfinal agents: {:.3?} and {:.3?}", bank.agent(0), bank.agent(1));
    Ok(())
}
