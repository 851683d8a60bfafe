//! Distance graphs over embeddings: pairwise Euclidean distances, k-nearest
//! neighbor graphs and Jaccard distances between neighborhood sets.
//!
//! The Jaccard distance treats each point as the set `S(x) = {x} u kNN(x)` and
//! scores how much two neighborhoods overlap. Points in the same dense region
//! share most of their neighbors, which makes the measure far less sensitive
//! to absolute distance scale than raw Euclidean distances.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{euclidean, Matrix};

/// A symmetric distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    inner: Matrix,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal and non-negativity.
    pub fn new(inner: Matrix) -> Result<Self> {
        if inner.rows() != inner.cols() {
            return Err(Error::shape(format!(
                "distance matrix must be square, got {}x{}",
                inner.rows(),
                inner.cols()
            )));
        }
        let n = inner.rows();
        for i in 0..n {
            if inner.get(i, i) != 0.0 {
                return Err(Error::invalid(format!("distance matrix diagonal not zero at {i}")));
            }
            for j in (i + 1)..n {
                let d = inner.get(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::invalid(format!(
                        "distance ({i},{j}) must be finite and non-negative, got {d}"
                    )));
                }
                if d != inner.get(j, i) {
                    return Err(Error::invalid(format!("distance matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(DistanceMatrix { inner })
    }

    /// Builds from the upper triangle of `f`, mirroring so symmetry holds by
    /// construction.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::numeric(format!(
                        "distance ({i},{j}) must be finite and non-negative, got {d}"
                    )));
                }
                m.set(i, j, d);
                m.set(j, i, d);
            }
        }
        Ok(DistanceMatrix { inner: m })
    }

    pub fn len(&self) -> usize {
        self.inner.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.rows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }
}

/// All pairwise Euclidean distances between rows of `x`.
///
/// Each unordered pair is computed exactly once (in parallel over anchor
/// rows) and mirrored, so the result is symmetric to the bit and identical
/// for any thread count.
pub fn pairwise_euclidean(x: &Matrix) -> Result<DistanceMatrix> {
    let n = x.rows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| euclidean(x.row(i), x.row(j))).collect())
        .collect();
    let mut m = Matrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    DistanceMatrix::new(m)
}

/// A k-nearest-neighbor graph. `neighbors[i]` lists the k nearest other
/// points of `i` as `(index, distance)`, closest first; ties broken toward
/// the smaller index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    k: usize,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl KnnGraph {
    /// Builds a graph from explicit neighbor lists (mainly for tests).
    pub fn from_lists(k: usize, neighbors: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = neighbors.len();
        for (i, list) in neighbors.iter().enumerate() {
            if list.len() != k {
                return Err(Error::shape(format!(
                    "node {i} has {} neighbors, expected {k}",
                    list.len()
                )));
            }
            if list.iter().any(|&(j, _)| j == i || j >= n) {
                return Err(Error::invalid(format!("node {i} has an invalid neighbor index")));
            }
        }
        Ok(KnnGraph { k, neighbors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// The neighborhood set `S(i) = {i} u kNN(i)` as a sorted index list.
    pub fn neighborhood_set(&self, i: usize) -> Vec<usize> {
        let mut set: Vec<usize> = self.neighbors[i].iter().map(|&(j, _)| j).collect();
        set.push(i);
        set.sort_unstable();
        set
    }
}

/// Builds the k-nearest-neighbor graph of a distance matrix.
///
/// Requires `1 <= k <= n - 1`. Candidates are ordered by `(distance, index)`
/// so equal distances resolve deterministically.
pub fn knn_graph(d: &DistanceMatrix, k: usize) -> Result<KnnGraph> {
    let n = d.len();
    if n < 2 || k == 0 || k > n - 1 {
        return Err(Error::invalid(format!(
            "knn_graph needs n >= 2 and 1 <= k <= n-1, got n = {n}, k = {k}"
        )));
    }
    let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                d.get(i, a).partial_cmp(&d.get(i, b)).unwrap().then(a.cmp(&b))
            });
            order.truncate(k);
            order.into_iter().map(|j| (j, d.get(i, j))).collect()
        })
        .collect();
    Ok(KnnGraph { k, neighbors })
}

/// Jaccard distance between the neighborhood sets of two nodes:
/// `1 - |S(a) ^ S(b)| / |S(a) u S(b)|`.
pub fn jaccard_distance(graph: &KnnGraph, a: usize, b: usize) -> f64 {
    let sa = graph.neighborhood_set(a);
    let sb = graph.neighborhood_set(b);
    let mut inter = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < sa.len() && j < sb.len() {
        match sa[i].cmp(&sb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = sa.len() + sb.len() - inter;
    1.0 - inter as f64 / union as f64
}

/// Full matrix of Jaccard distances over all node pairs of a k-NN graph.
pub fn jaccard_distances(graph: &KnnGraph) -> Result<DistanceMatrix> {
    let n = graph.len();
    let sets: Vec<Vec<usize>> = (0..n).map(|i| graph.neighborhood_set(i)).collect();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    let (sa, sb) = (&sets[i], &sets[j]);
                    let mut inter = 0usize;
                    let (mut a, mut b) = (0usize, 0usize);
                    while a < sa.len() && b < sb.len() {
                        match sa[a].cmp(&sb[b]) {
                            std::cmp::Ordering::Less => a += 1,
                            std::cmp::Ordering::Greater => b += 1,
                            std::cmp::Ordering::Equal => {
                                inter += 1;
                                a += 1;
                                b += 1;
                            }
                        }
                    }
                    let union = sa.len() + sb.len() - inter;
                    1.0 - inter as f64 / union as f64
                })
                .collect()
        })
        .collect();
    let mut m = Matrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    DistanceMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn points(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn pairwise_hand_case() {
        let x = points(&[vec![0.0, 0.0], vec![3.0, 4.0], vec![0.0, 1.0]]);
        let d = pairwise_euclidean(&x).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(0, 2), 1.0);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn knn_orders_by_distance_then_index() {
        // Points on a line at 0, 1, 1, 2: node 3 is equidistant from the two
        // duplicates and must prefer the smaller index.
        let x = points(&[vec![0.0], vec![1.0], vec![1.0], vec![2.0]]);
        let d = pairwise_euclidean(&x).unwrap();
        let g = knn_graph(&d, 2).unwrap();
        assert_eq!(g.neighbors(3), &[(1, 1.0), (2, 1.0)]);
        assert_eq!(g.neighbors(0), &[(1, 1.0), (2, 1.0)]);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let x = points(&[vec![0.0], vec![1.0]]);
        let d = pairwise_euclidean(&x).unwrap();
        assert!(knn_graph(&d, 0).is_err());
        assert!(knn_graph(&d, 2).is_err());
        assert!(knn_graph(&d, 1).is_ok());
    }

    #[test]
    fn jaccard_hand_case() {
        // S(0) = {0,1,2}, S(3) = {2,3,4}: intersection 1, union 5.
        let g = KnnGraph::from_lists(
            2,
            vec![
                vec![(1, 0.1), (2, 0.2)],
                vec![(0, 0.1), (2, 0.2)],
                vec![(0, 0.2), (1, 0.2)],
                vec![(2, 0.3), (4, 0.1)],
                vec![(3, 0.1), (2, 0.4)],
            ],
        )
        .unwrap();
        assert!((jaccard_distance(&g, 0, 3) - 0.8).abs() < 1e-15);
        assert_eq!(jaccard_distance(&g, 0, 0), 0.0);
    }

    #[test]
    fn jaccard_matrix_matches_pairwise_calls() {
        let x = points(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![5.0, 5.0],
            vec![5.1, 5.0],
            vec![5.0, 5.1],
        ]);
        let d = pairwise_euclidean(&x).unwrap();
        let g = knn_graph(&d, 2).unwrap();
        let jd = jaccard_distances(&g).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 0.0 } else { jaccard_distance(&g, i, j) };
                assert_eq!(jd.get(i, j), expect);
            }
        }
        // Same tight blob shares all neighbors; opposite blobs share none.
        assert_eq!(jd.get(0, 1), 0.0);
        assert_eq!(jd.get(0, 3), 1.0);
    }

    proptest! {
        #[test]
        fn jaccard_is_a_bounded_symmetric_distance(
            coords in proptest::collection::vec(-5.0f64..5.0, 12..40),
        ) {
            let rows: Vec<Vec<f64>> = coords.chunks_exact(2).map(|c| c.to_vec()).collect();
            let x = points(&rows);
            let d = pairwise_euclidean(&x).unwrap();
            let g = knn_graph(&d, 3).unwrap();
            for a in 0..rows.len() {
                for b in 0..rows.len() {
                    let dab = jaccard_distance(&g, a, b);
                    prop_assert!((0.0..=1.0).contains(&dab));
                    prop_assert_eq!(dab, jaccard_distance(&g, b, a));
                }
                prop_assert_eq!(jaccard_distance(&g, a, a), 0.0);
            }
        }

        #[test]
        fn knn_is_permutation_invariant(
            coords in proptest::collection::vec(-5.0f64..5.0, 10..30),
            shift in 1usize..7,
        ) {
            // Distinct coordinates so neighbor ranking is tie-free.
            let mut rows: Vec<Vec<f64>> = coords
                .iter()
                .enumerate()
                .map(|(i, c)| vec![c + i as f64 * 1e-7])
                .collect();
            let n = rows.len();
            let x = points(&rows);
            let d = pairwise_euclidean(&x).unwrap();
            let g = knn_graph(&d, 2).unwrap();

            // Rotate the rows and relabel: perm[new] = old.
            rows.rotate_left(shift % n);
            let xp = points(&rows);
            let dp = pairwise_euclidean(&xp).unwrap();
            let gp = knn_graph(&dp, 2).unwrap();
            let to_new = |old: usize| (old + n - (shift % n)) % n;
            for old in 0..n {
                let expect: Vec<usize> =
                    g.neighbors(old).iter().map(|&(j, _)| to_new(j)).collect();
                let got: Vec<usize> =
                    gp.neighbors(to_new(old)).iter().map(|&(j, _)| j).collect();
                prop_assert_eq!(expect, got);
            }
        }
    }
}
