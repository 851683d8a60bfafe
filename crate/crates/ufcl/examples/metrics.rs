//! Outlier-aware clustering metrics and the weighted k-NN probe.
//!
//! Run with: `cargo run --example metrics`

use ufcl::clustering::{ClusterAssignment, OUTLIER};
use ufcl::evaluation::{
    ari, clustering_acc, hungarian, nmi, weighted_knn_top1, ContingencyTable, LabeledEmbeddings,
};
use ufcl::Matrix;

fn main() -> ufcl::Result<()> {
    // Hungarian assignment on a plain cost matrix: worker i -> job j.
    let cost = Matrix::from_rows(&[
        vec![4.0, 1.0, 3.0],
        vec![2.0, 0.0, 5.0],
        vec![3.0, 2.0, 2.0],
    ])?;
    let pairs = hungarian(&cost);
    let total: f64 = pairs.iter().map(|&(i, j)| cost.get(i, j)).sum();
    println!("hungarian pairs {pairs:?}, total cost {total}");

    // Clustering accuracy counts outliers against the denominator: the
    // matching is computed over clustered examples only, but every example
    // appears in the divisor. Three correct of four with one outlier: 0.75.
    let pred = ClusterAssignment::new(vec![0, 0, 1, OUTLIER])?;
    let truth = vec![0, 0, 1, 1];
    println!("acc with one outlier: {}", clustering_acc(&pred, &truth)?);

    // Relabeling clusters never changes ACC; the matching absorbs it.
    let renamed = ClusterAssignment::new(vec![1, 1, 0, OUTLIER])?;
    println!("acc after swapping cluster ids: {}", clustering_acc(&renamed, &truth)?);

    // NMI and ARI work off the contingency table of clustered examples.
    let perfect = ContingencyTable::new(&ClusterAssignment::new(vec![0, 0, 1, 1])?, &truth)?;
    let random = ContingencyTable::from_counts(vec![vec![25, 25], vec![25, 25]])?;
    println!("perfect split: nmi {} ari {}", nmi(&perfect), ari(&perfect));
    println!("independent split: nmi {} ari {}", nmi(&random), ari(&random));

    // Fragmenting a class is punished even though every cluster is pure.
    let frag = ContingencyTable::from_counts(vec![vec![25, 0], vec![25, 0], vec![0, 50]])?;
    println!("pure but fragmented: nmi {:.4} ari {:.4}", nmi(&frag), ari(&frag));

    // Weighted k-NN: neighbors vote with exp(cosine/tau), so with a small
    // tau the nearest neighbor dominates even when outvoted 1-to-4.
    let train = LabeledEmbeddings::new(
        Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.9701425001453319, 0.24253562503633297],
            vec![0.0, 1.0],
            vec![0.1961161351381841, 0.9805806756909202],
            vec![-0.1961161351381841, 0.9805806756909202],
            vec![0.24253562503633297, 0.9701425001453319],
        ])?,
        vec![0, 0, 1, 1, 1, 1],
    )?;
    let test = LabeledEmbeddings::new(Matrix::from_rows(&[vec![1.0, 0.0]])?, vec![0])?;
    for tau in [0.05, 1.0, 100.0] {
        let top1 = weighted_knn_top1(&train, &test, 5, tau)?;
        println!("k = 5, tau = {tau}: top1 {top1}");
    }
    println!("(at tau = 100 the vote is nearly unweighted and class 1 wins 3-to-2)");
    Ok(())
}
