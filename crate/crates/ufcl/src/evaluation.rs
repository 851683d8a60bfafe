//! Clustering and retrieval metrics that tolerate outliers.
//!
//! Pseudo labels use -1 for outliers. Outliers are excluded from the
//! cluster/class contingency table (NMI, ARI), but clustering accuracy keeps
//! them in the denominator: an example the clusterer refused to label can
//! never count as correct.

use crate::clustering::{ClusterAssignment, OUTLIER};
use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};
use rayon::prelude::*;

/// Minimum-cost one-to-one assignment over the smaller dimension of `cost`.
///
/// Rectangular inputs are padded to square with zeros internally; the
/// returned pairs are `(row, col)` into the original matrix, sorted by row.
/// An empty matrix yields an empty assignment.
pub fn hungarian(cost: &Matrix) -> Vec<(usize, usize)> {
    let (r, c) = (cost.rows(), cost.cols());
    if r == 0 || c == 0 {
        return Vec::new();
    }
    let n = r.max(c);
    let at = |i: usize, j: usize| -> f64 {
        if i < r && j < c {
            cost.get(i, j)
        } else {
            0.0
        }
    };

    // Shortest-augmenting-path formulation with row/column potentials
    // (1-indexed internal arrays; p[j] is the row matched to column j).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter_map(|j| {
            let i = p[j];
            if i >= 1 && i - 1 < r && j - 1 < c {
                Some((i - 1, j - 1))
            } else {
                None
            }
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Cluster-by-class co-occurrence counts over the clustered (non-outlier)
/// examples. Rows are cluster ids 0..K; columns are the distinct truth
/// classes in ascending order.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    classes: Vec<usize>,
    n_clustered: u64,
}

impl ContingencyTable {
    pub fn new(pred: &ClusterAssignment, truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::shape(format!(
                "{} predictions vs {} truth labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut classes: Vec<usize> = truth.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let col_of = |t: usize| classes.binary_search(&t).expect("class present");
        let mut counts = vec![vec![0u64; classes.len()]; pred.num_clusters()];
        let mut n_clustered = 0u64;
        for (&label, &t) in pred.labels().iter().zip(truth) {
            if label != OUTLIER {
                counts[label as usize][col_of(t)] += 1;
                n_clustered += 1;
            }
        }
        Ok(ContingencyTable { counts, classes, n_clustered })
    }

    /// Directly from counts; used by metric oracles in tests.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let cols = counts.first().map_or(0, |r| r.len());
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged contingency counts"));
        }
        let n: u64 = counts.iter().flatten().sum();
        Ok(ContingencyTable { counts, classes: (0..cols).collect(), n_clustered: n })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn n_clustered(&self) -> u64 {
        self.n_clustered
    }

    fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, |r| r.len());
        let mut sums = vec![0u64; cols];
        for row in &self.counts {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

/// Clustering accuracy: best one-to-one cluster/class matching (Hungarian on
/// the negated contingency), matched examples divided by the total example
/// count including outliers.
pub fn clustering_acc(pred: &ClusterAssignment, truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if truth.is_empty() {
        return Ok(1.0);
    }
    let k = table.counts.len();
    let c = table.classes.len();
    if k == 0 || c == 0 {
        return Ok(0.0);
    }
    let mut cost = Matrix::zeros(k, c);
    for i in 0..k {
        for j in 0..c {
            cost.set(i, j, -(table.counts[i][j] as f64));
        }
    }
    let matched: u64 = hungarian(&cost).iter().map(|&(i, j)| table.counts[i][j]).sum();
    Ok(matched as f64 / truth.len() as f64)
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization,
/// computed over the clustered examples only.
///
/// If both marginal entropies are zero the partitions are single blocks over
/// the same examples, hence identical: NMI is 1. An empty table (no
/// clustered examples at all) scores 0.
pub fn nmi(table: &ContingencyTable) -> f64 {
    let n = table.n_clustered as f64;
    if table.n_clustered == 0 {
        return 0.0;
    }
    let rows = table.row_sums();
    let cols = table.col_sums();
    let h_pred = entropy(&rows, n);
    let h_true = entropy(&cols, n);
    if h_pred == 0.0 && h_true == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += (nij / n) * ((n * nij) / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    mi / (0.5 * (h_pred + h_true))
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index over the clustered examples. Values lie in [-1, 1];
/// a degenerate table (fewer than two clustered examples, or identical
/// trivial partitions making the adjustment denominator zero) scores 1,
/// except the empty table which scores 0.
pub fn ari(table: &ContingencyTable) -> f64 {
    if table.n_clustered == 0 {
        return 0.0;
    }
    let index: f64 = table.counts.iter().flatten().map(|&v| comb2(v)).sum();
    let a: f64 = table.row_sums().iter().map(|&v| comb2(v)).sum();
    let b: f64 = table.col_sums().iter().map(|&v| comb2(v)).sum();
    let pairs = comb2(table.n_clustered);
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = a * b / pairs;
    let max_index = 0.5 * (a + b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return 1.0;
    }
    (index - expected) / denom
}

/// Unit-length embeddings paired with ground-truth class ids.
#[derive(Debug, Clone)]
pub struct LabeledEmbeddings {
    features: Matrix,
    labels: Vec<usize>,
}

impl LabeledEmbeddings {
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape(format!(
                "{} feature rows vs {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(LabeledEmbeddings { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = (norm(a) * norm(b)).max(1e-300);
    dot(a, b) / denom
}

/// Weighted k-NN Top-1 accuracy.
///
/// Each test example retrieves its `k` most cosine-similar train examples
/// (similarity ties broken toward the smaller train index), each neighbor
/// votes for its class with weight `exp(sim / tau)`, and the highest-scoring
/// class wins (score ties toward the smaller class id). `k` is clamped to
/// the train-set size; an empty train set is a parameter error.
pub fn weighted_knn_top1(
    train: &LabeledEmbeddings,
    test: &LabeledEmbeddings,
    k: usize,
    tau: f64,
) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::invalid("weighted k-NN needs a non-empty train set"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("temperature must be positive, got {tau}")));
    }
    if test.is_empty() {
        return Ok(1.0);
    }
    if train.features.cols() != test.features.cols() {
        return Err(Error::shape("train and test feature dimensions differ"));
    }
    let k = k.min(train.len());
    let num_classes = train.labels.iter().copied().max().unwrap_or(0) + 1;

    let correct: usize = (0..test.len())
        .into_par_iter()
        .map(|t| {
            let query = test.features.row(t);
            let mut sims: Vec<(f64, usize)> = (0..train.len())
                .map(|i| (cosine(query, train.features.row(i)), i))
                .collect();
            // Descending similarity, ascending index on ties.
            sims.sort_unstable_by(|a, b| {
                b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1))
            });
            let mut scores = vec![0.0f64; num_classes];
            for &(sim, i) in sims.iter().take(k) {
                scores[train.labels[i]] += (sim / tau).exp();
            }
            let mut best = 0usize;
            for (cls, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = cls;
                }
            }
            usize::from(best == test.labels[t])
        })
        .sum();
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assignment(labels: &[i64]) -> ClusterAssignment {
        ClusterAssignment::new(labels.to_vec()).unwrap()
    }

    #[test]
    fn hungarian_diagonal_wins() {
        let cost = Matrix::from_rows(&[vec![1.0, 100.0], vec![100.0, 1.0]]).unwrap();
        let pairs = hungarian(&cost);
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);
        let total: f64 = pairs.iter().map(|&(i, j)| cost.get(i, j)).sum();
        assert_eq!(total, 2.0);
    }

    #[test]
    fn hungarian_off_diagonal() {
        let cost = Matrix::from_rows(&[vec![10.0, 1.0], vec![1.0, 10.0]]).unwrap();
        assert_eq!(hungarian(&cost), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn hungarian_empty() {
        assert!(hungarian(&Matrix::zeros(0, 0)).is_empty());
        assert!(hungarian(&Matrix::zeros(0, 3)).is_empty());
        assert!(hungarian(&Matrix::zeros(3, 0)).is_empty());
    }

    #[test]
    fn hungarian_rectangular_covers_smaller_dim() {
        // 2 rows, 3 cols: both rows must be matched to distinct cols.
        let cost =
            Matrix::from_rows(&[vec![5.0, 1.0, 9.0], vec![5.0, 1.0, 2.0]]).unwrap();
        let pairs = hungarian(&cost);
        assert_eq!(pairs.len(), 2);
        assert_ne!(pairs[0].1, pairs[1].1);
        let total: f64 = pairs.iter().map(|&(i, j)| cost.get(i, j)).sum();
        assert_eq!(total, 3.0); // (0,1) + (1,2)
        // Transposed: 3 rows, 2 cols.
        let tall =
            Matrix::from_rows(&[vec![5.0, 5.0], vec![1.0, 1.0], vec![9.0, 2.0]]).unwrap();
        let pairs = hungarian(&tall);
        assert_eq!(pairs.len(), 2);
        let total: f64 = pairs.iter().map(|&(i, j)| tall.get(i, j)).sum();
        assert_eq!(total, 3.0);
    }

    fn brute_force_min_cost(cost: &Matrix) -> f64 {
        // Exhaustive over injections from rows into cols (rows <= cols).
        fn rec(cost: &Matrix, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.rows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost.get(row, j) + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.cols()])
    }

    #[test]
    fn hungarian_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..40 {
            let r = rng.random_range(1..=6);
            let c = rng.random_range(r..=6);
            let rows: Vec<Vec<f64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.random_range(-10.0..10.0)).collect())
                .collect();
            let cost = Matrix::from_rows(&rows).unwrap();
            let pairs = hungarian(&cost);
            let total: f64 = pairs.iter().map(|&(i, j)| cost.get(i, j)).sum();
            let best = brute_force_min_cost(&cost);
            assert!(
                (total - best).abs() < 1e-9,
                "trial {trial}: hungarian {total} vs brute force {best}"
            );
        }
    }

    #[test]
    fn acc_counts_outliers_in_denominator() {
        let pred = assignment(&[0, 0, 1, -1]);
        let truth = vec![0, 0, 1, 1];
        assert_eq!(clustering_acc(&pred, &truth).unwrap(), 0.75);
    }

    #[test]
    fn acc_perfect_and_all_outliers() {
        let pred = assignment(&[1, 1, 0, 0]);
        let truth = vec![7, 7, 3, 3];
        assert_eq!(clustering_acc(&pred, &truth).unwrap(), 1.0);
        let none = ClusterAssignment::all_outliers(4);
        assert_eq!(clustering_acc(&none, &truth).unwrap(), 0.0);
    }

    #[test]
    fn acc_more_clusters_than_classes() {
        // Clusters split one class; only one of them can match it.
        let pred = assignment(&[0, 0, 1, 1, 2, 2]);
        let truth = vec![0, 0, 0, 0, 1, 1];
        assert_eq!(clustering_acc(&pred, &truth).unwrap(), 4.0 / 6.0);
    }

    #[test]
    fn nmi_hand_cases() {
        let perfect = ContingencyTable::from_counts(vec![vec![2, 0], vec![0, 2]]).unwrap();
        assert!((nmi(&perfect) - 1.0).abs() < 1e-12);
        let independent = ContingencyTable::from_counts(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert!(nmi(&independent).abs() < 1e-12);
        // Single cluster, single class: identical trivial partitions.
        let trivial = ContingencyTable::from_counts(vec![vec![5]]).unwrap();
        assert_eq!(nmi(&trivial), 1.0);
        // Single cluster, two classes: one entropy zero, NMI zero.
        let half = ContingencyTable::from_counts(vec![vec![3, 3]]).unwrap();
        assert_eq!(nmi(&half), 0.0);
        let empty = ContingencyTable::from_counts(vec![]).unwrap();
        assert_eq!(nmi(&empty), 0.0);
    }

    #[test]
    fn ari_hand_cases() {
        let perfect = ContingencyTable::from_counts(vec![vec![2, 0], vec![0, 2]]).unwrap();
        assert!((ari(&perfect) - 1.0).abs() < 1e-12);
        let independent = ContingencyTable::from_counts(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert!((ari(&independent) + 0.5).abs() < 1e-12);
        let trivial = ContingencyTable::from_counts(vec![vec![5]]).unwrap();
        assert_eq!(ari(&trivial), 1.0);
        let empty = ContingencyTable::from_counts(vec![]).unwrap();
        assert_eq!(ari(&empty), 0.0);
    }

    #[test]
    fn nmi_from_labels_excludes_outliers() {
        let pred = assignment(&[0, 0, 1, 1, -1]);
        let truth = vec![0, 0, 1, 1, 0];
        let table = ContingencyTable::new(&pred, &truth).unwrap();
        assert_eq!(table.n_clustered(), 4);
        assert!((nmi(&table) - 1.0).abs() < 1e-12);
        assert!((ari(&table) - 1.0).abs() < 1e-12);
    }

    fn unit_rows(rows: &[Vec<f64>]) -> Matrix {
        let normalized: Vec<Vec<f64>> =
            rows.iter().map(|r| crate::encoder::l2_normalize(r).unwrap()).collect();
        Matrix::from_rows(&normalized).unwrap()
    }

    #[test]
    fn knn_top1_separable_classes() {
        let train = LabeledEmbeddings::new(
            unit_rows(&[
                vec![1.0, 0.05],
                vec![1.0, -0.05],
                vec![0.05, 1.0],
                vec![-0.05, 1.0],
            ]),
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let test = LabeledEmbeddings::new(
            unit_rows(&[vec![1.0, 0.1], vec![0.1, 1.0]]),
            vec![0, 1],
        )
        .unwrap();
        assert_eq!(weighted_knn_top1(&train, &test, 2, 0.07).unwrap(), 1.0);
        // k larger than the train set is clamped, not an error.
        assert!(weighted_knn_top1(&train, &test, 100, 0.07).is_ok());
    }

    #[test]
    fn knn_top1_singleton_memory() {
        let train =
            LabeledEmbeddings::new(unit_rows(&[vec![1.0, 0.0]]), vec![3]).unwrap();
        let test = LabeledEmbeddings::new(
            unit_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
            vec![3, 0],
        )
        .unwrap();
        // Everything is predicted class 3.
        assert_eq!(weighted_knn_top1(&train, &test, 5, 0.07).unwrap(), 0.5);
    }

    #[test]
    fn knn_rejects_bad_parameters() {
        let empty = LabeledEmbeddings::new(Matrix::zeros(0, 2), vec![]).unwrap();
        let test =
            LabeledEmbeddings::new(unit_rows(&[vec![1.0, 0.0]]), vec![0]).unwrap();
        assert!(weighted_knn_top1(&empty, &test, 5, 0.07).is_err());
        assert!(weighted_knn_top1(&test, &test, 0, 0.07).is_err());
        assert!(weighted_knn_top1(&test, &test, 5, 0.0).is_err());
        assert!(weighted_knn_top1(&test, &test, 5, -1.0).is_err());
    }

    #[test]
    fn knn_tie_breaks_toward_smaller_class() {
        // Two train points equally similar to the query, different classes:
        // equal scores, smaller class id wins.
        let train = LabeledEmbeddings::new(
            unit_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]),
            vec![1, 0],
        )
        .unwrap();
        let test =
            LabeledEmbeddings::new(unit_rows(&[vec![1.0, 0.0]]), vec![0]).unwrap();
        assert_eq!(weighted_knn_top1(&train, &test, 2, 0.07).unwrap(), 1.0);
    }

    fn random_partition(n: usize, k: usize, seed: u64) -> (Vec<i64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let pred: Vec<i64> = (0..n)
                .map(|_| {
                    if rng.random_range(0..5) == 0 {
                        -1
                    } else {
                        rng.random_range(0..k as i64)
                    }
                })
                .collect();
            let mut present: Vec<i64> =
                pred.iter().copied().filter(|&l| l >= 0).collect();
            present.sort_unstable();
            present.dedup();
            if present.len() == k {
                // Compact the ids so ClusterAssignment accepts them.
                let compact: Vec<i64> = pred
                    .iter()
                    .map(|&l| {
                        if l < 0 {
                            -1
                        } else {
                            present.binary_search(&l).unwrap() as i64
                        }
                    })
                    .collect();
                let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
                return (compact, truth);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn acc_is_invariant_under_cluster_relabeling(seed in 0u64..500) {
            let (pred, truth) = random_partition(12, 3, seed);
            let a = assignment(&pred);
            let acc1 = clustering_acc(&a, &truth).unwrap();
            // Rotate cluster ids 0->1->2->0.
            let rotated: Vec<i64> =
                pred.iter().map(|&l| if l < 0 { -1 } else { (l + 1) % 3 }).collect();
            let acc2 = clustering_acc(&assignment(&rotated), &truth).unwrap();
            prop_assert!((acc1 - acc2).abs() < 1e-12);
        }

        #[test]
        fn acc_bounded_by_clustered_fraction(seed in 0u64..500) {
            let (pred, truth) = random_partition(15, 4, seed);
            let a = assignment(&pred);
            let acc = clustering_acc(&a, &truth).unwrap();
            let clustered = pred.iter().filter(|&&l| l >= 0).count() as f64;
            prop_assert!(acc >= 0.0 && acc <= clustered / 15.0 + 1e-12);
        }

        #[test]
        fn nmi_ari_within_bounds(seed in 0u64..500) {
            let (pred, truth) = random_partition(14, 3, seed);
            let table = ContingencyTable::new(&assignment(&pred), &truth).unwrap();
            let v = nmi(&table);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "nmi {v}");
            let r = ari(&table);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r), "ari {r}");
        }

        #[test]
        fn top1_invariant_under_rotation(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 4;
            let gen = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
                (0..n)
                    .map(|_| {
                        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                        crate::encoder::l2_normalize(&v).unwrap()
                    })
                    .collect()
            };
            let train_f = gen(&mut rng, 10);
            let test_f = gen(&mut rng, 6);
            let train_l: Vec<usize> = (0..10).map(|_| rng.random_range(0..3)).collect();
            let test_l: Vec<usize> = (0..6).map(|_| rng.random_range(0..3)).collect();
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let rotate = |v: &[f64]| -> Vec<f64> {
                // Givens rotation in the (0, 1) plane preserves all angles.
                let mut out = v.to_vec();
                out[0] = v[0] * theta.cos() - v[1] * theta.sin();
                out[1] = v[0] * theta.sin() + v[1] * theta.cos();
                out
            };
            let t1 = weighted_knn_top1(
                &LabeledEmbeddings::new(Matrix::from_rows(&train_f).unwrap(), train_l.clone()).unwrap(),
                &LabeledEmbeddings::new(Matrix::from_rows(&test_f).unwrap(), test_l.clone()).unwrap(),
                5,
                0.07,
            )
            .unwrap();
            let train_r: Vec<Vec<f64>> = train_f.iter().map(|v| rotate(v)).collect();
            let test_r: Vec<Vec<f64>> = test_f.iter().map(|v| rotate(v)).collect();
            let t2 = weighted_knn_top1(
                &LabeledEmbeddings::new(Matrix::from_rows(&train_r).unwrap(), train_l).unwrap(),
                &LabeledEmbeddings::new(Matrix::from_rows(&test_r).unwrap(), test_l).unwrap(),
                5,
                0.07,
            )
            .unwrap();
            prop_assert!((t1 - t2).abs() < 1e-12);
        }
    }
}
