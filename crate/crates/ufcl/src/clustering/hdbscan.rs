//! HDBSCAN: hierarchical density-based clustering with stability-based
//! cluster extraction.
//!
//! The stages mirror the textbook construction:
//!
//! 1. [`core_distances`]: distance to the `min_samples`-th nearest other
//!    point, a local density estimate.
//! 2. [`mutual_reachability`]: `max(core_a, core_b, d(a, b))`, which pushes
//!    sparse points away from everything.
//! 3. [`mst`]: a minimum spanning tree of the mutual-reachability graph.
//! 4. [`condense_tree`]: the single-linkage dendrogram over the MST edges,
//!    simplified so that only subtrees with at least `min_cluster_size`
//!    points count as clusters; smaller side-branches fall out as individual
//!    points with the density `lambda = 1/distance` at which they left.
//! 5. [`extract_clusters`]: excess-of-mass selection of the most stable
//!    antichain of clusters; everything else is an outlier.
//!
//! All ties are broken lexicographically (by weight, then smaller index,
//! then larger index), so the output is deterministic.

use crate::clustering::{ClusterAssignment, OUTLIER};
use crate::error::{Error, Result};
use crate::neighbors::DistanceMatrix;

/// Distances are floored at this value when inverted into densities so that
/// duplicate points (distance zero) produce a large finite lambda instead of
/// an infinity that would poison stability sums.
const MIN_DIST: f64 = 1e-12;

/// Distance from each point to its `min_samples`-th nearest other point.
///
/// Requires `1 <= min_samples <= n - 1`.
pub fn core_distances(d: &DistanceMatrix, min_samples: usize) -> Result<Vec<f64>> {
    let n = d.len();
    if n < 2 || min_samples == 0 || min_samples > n - 1 {
        return Err(Error::invalid(format!(
            "core_distances needs n >= 2 and 1 <= min_samples <= n-1, got n = {n}, min_samples = {min_samples}"
        )));
    }
    let mut cores = Vec::with_capacity(n);
    for i in 0..n {
        let mut others: Vec<f64> =
            (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
        others.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cores.push(others[min_samples - 1]);
    }
    Ok(cores)
}

/// Mutual reachability distances: `max(core_i, core_j, d(i, j))` off the
/// diagonal, zero on it.
pub fn mutual_reachability(d: &DistanceMatrix, cores: &[f64]) -> Result<DistanceMatrix> {
    let n = d.len();
    if cores.len() != n {
        return Err(Error::shape(format!(
            "expected {n} core distances, got {}",
            cores.len()
        )));
    }
    DistanceMatrix::from_fn(n, |i, j| d.get(i, j).max(cores[i]).max(cores[j]))
}

/// One undirected MST edge with endpoints ordered `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// The `n - 1` edges of a spanning tree over `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct MstEdgeList {
    pub num_points: usize,
    pub edges: Vec<MstEdge>,
}

impl MstEdgeList {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Minimum spanning tree by Prim's algorithm on the dense matrix.
///
/// All comparisons order edges by `(weight, a, b)`, which makes every weight
/// distinct and the resulting tree the unique minimum under that order. This
/// matters because mutual reachability produces lots of exact weight ties
/// through the core-distance maximum, and any two algorithms that agree on
/// the order agree on the tree — so a straightforward Kruskal over all pairs
/// reproduces exactly these edges.
pub fn mst(d: &DistanceMatrix) -> Result<MstEdgeList> {
    let n = d.len();
    if n == 0 {
        return Err(Error::invalid("cannot build an MST over zero points"));
    }
    let mut in_tree = vec![false; n];
    let mut best_dist = vec![f64::INFINITY; n];
    let mut best_via = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    in_tree[0] = true;
    for j in 1..n {
        best_dist[j] = d.get(0, j);
        best_via[j] = 0;
    }
    for _ in 1..n {
        // Next vertex: the one whose attachment edge is smallest under the
        // full (weight, a, b) order. Weight alone is not enough: picking a
        // lexicographically larger edge on a weight tie would replay merges
        // in a different order downstream.
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            if next == usize::MAX {
                next = j;
                continue;
            }
            let ej = (best_via[j].min(j), best_via[j].max(j));
            let en = (best_via[next].min(next), best_via[next].max(next));
            if best_dist[j] < best_dist[next] || (best_dist[j] == best_dist[next] && ej < en) {
                next = j;
            }
        }
        let via = best_via[next];
        let (a, b) = (via.min(next), via.max(next));
        edges.push(MstEdge { a, b, weight: best_dist[next] });
        in_tree[next] = true;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = d.get(next, j);
            let better = w < best_dist[j]
                || (w == best_dist[j]
                    && (next.min(j), next.max(j)) < (best_via[j].min(j), best_via[j].max(j)));
            if better {
                best_dist[j] = w;
                best_via[j] = next;
            }
        }
    }
    Ok(MstEdgeList { num_points: n, edges })
}

/// One cluster of the condensed tree. Node 0 is the root (born at lambda 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Density at which this cluster appeared.
    pub birth_lambda: f64,
    /// Density at which it split into retained children or shrank below
    /// `min_cluster_size`.
    pub death_lambda: f64,
    /// Points in the cluster at birth.
    pub size: usize,
    /// Excess of mass: sum over member points of `lambda_left - birth`.
    pub stability: f64,
}

/// A point leaving cluster `node` at density `lambda_out`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEntry {
    pub point: usize,
    pub node: usize,
    pub lambda_out: f64,
}

/// Single-linkage dendrogram condensed over `min_cluster_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedTree {
    pub num_points: usize,
    pub min_cluster_size: usize,
    pub nodes: Vec<CondensedNode>,
    pub points: Vec<PointEntry>,
}

/// Internal dendrogram node used while replaying the merges.
struct SlNode {
    left: usize,
    right: usize,
    dist: f64,
    size: usize,
}

/// Builds the condensed cluster tree from MST edges.
///
/// Merges replay in ascending `(weight, a, b)` order. Walking the resulting
/// dendrogram from the root, each split either creates two retained child
/// clusters (both sides at least `min_cluster_size` points), continues the
/// current cluster through the one large side, or ends it; points on
/// sub-threshold sides are recorded individually with the `lambda` of the
/// split that severed them.
pub fn condense_tree(tree: &MstEdgeList, min_cluster_size: usize) -> Result<CondensedTree> {
    let n = tree.num_points;
    if min_cluster_size < 2 {
        return Err(Error::invalid("min_cluster_size must be at least 2"));
    }
    if tree.edges.len() + 1 != n {
        return Err(Error::invalid(format!(
            "spanning tree over {n} points needs {} edges, got {}",
            n.saturating_sub(1),
            tree.edges.len()
        )));
    }

    // Replay merges in canonical order to build the binary dendrogram.
    // Leaves are 0..n, internal nodes n..2n-1 in merge order.
    let mut edges = tree.edges.clone();
    edges.sort_by(|x, y| {
        x.weight.partial_cmp(&y.weight).unwrap().then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b))
    });
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges: Vec<SlNode> = Vec::with_capacity(n.saturating_sub(1));
    let mut size: Vec<usize> = vec![1; 2 * n - 1];
    for e in &edges {
        let ra = find(&mut parent, e.a);
        let rb = find(&mut parent, e.b);
        if ra == rb {
            return Err(Error::invalid("edge list contains a cycle"));
        }
        let new = n + merges.len();
        merges.push(SlNode { left: ra, right: rb, dist: e.weight, size: size[ra] + size[rb] });
        size[new] = size[ra] + size[rb];
        parent[ra] = new;
        parent[rb] = new;
    }

    let node_size = |id: usize| if id < n { 1 } else { merges[id - n].size };
    let leaves_under = |id: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = &merges[x - n];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    };

    let mut nodes = vec![CondensedNode {
        parent: None,
        children: Vec::new(),
        birth_lambda: 0.0,
        death_lambda: 0.0,
        size: n,
        stability: 0.0,
    }];
    let mut points = Vec::with_capacity(n);

    if n == 1 {
        points.push(PointEntry { point: 0, node: 0, lambda_out: f64::INFINITY });
        nodes[0].death_lambda = f64::INFINITY;
        return Ok(CondensedTree { num_points: n, min_cluster_size, nodes, points });
    }

    // Walk splits top-down. Each work item is (dendrogram node, condensed id).
    let root = 2 * n - 2;
    let mut work = vec![(root, 0usize)];
    while let Some((mut at, cid)) = work.pop() {
        loop {
            let m = &merges[at - n];
            let lambda = 1.0 / m.dist.max(MIN_DIST);
            let (ls, rs) = (node_size(m.left), node_size(m.right));
            if ls >= min_cluster_size && rs >= min_cluster_size {
                nodes[cid].death_lambda = lambda;
                for &side in &[m.left, m.right] {
                    let child = nodes.len();
                    nodes.push(CondensedNode {
                        parent: Some(cid),
                        children: Vec::new(),
                        birth_lambda: lambda,
                        death_lambda: lambda,
                        size: node_size(side),
                        stability: 0.0,
                    });
                    nodes[cid].children.push(child);
                    work.push((side, child));
                }
                break;
            } else if ls < min_cluster_size && rs < min_cluster_size {
                nodes[cid].death_lambda = lambda;
                for &side in &[m.left, m.right] {
                    for p in leaves_under(side) {
                        points.push(PointEntry { point: p, node: cid, lambda_out: lambda });
                    }
                }
                break;
            } else {
                // One side keeps the cluster alive; the other sheds points.
                let (keep, shed) = if ls >= min_cluster_size { (m.left, m.right) } else { (m.right, m.left) };
                for p in leaves_under(shed) {
                    points.push(PointEntry { point: p, node: cid, lambda_out: lambda });
                }
                at = keep;
            }
        }
    }

    // Stability: direct point entries contribute (lambda_out - birth); points
    // that continue into a retained child contribute (child_birth - birth).
    for e in &points {
        let birth = nodes[e.node].birth_lambda;
        nodes[e.node].stability += e.lambda_out - birth;
    }
    for i in 0..nodes.len() {
        if let Some(p) = nodes[i].parent {
            let contrib = (nodes[i].birth_lambda - nodes[p].birth_lambda) * nodes[i].size as f64;
            nodes[p].stability += contrib;
        }
    }
    points.sort_by(|x, y| x.point.cmp(&y.point));
    Ok(CondensedTree { num_points: n, min_cluster_size, nodes, points })
}

/// Selects the most stable antichain of clusters (excess of mass) and labels
/// points.
///
/// Working upward from the leaves, a cluster replaces its children whenever
/// its own stability exceeds the sum of theirs; the root never competes. A
/// selected cluster keeps every point of its condensed subtree; points that
/// fell out of the hierarchy above the selected clusters are outliers.
///
/// When no split survives condensing (the tree is root-only), the root
/// itself stands in as a single cluster provided it has at least
/// `min_cluster_size` points that persist to its death density: membership
/// uses the lambda at which the surviving population drops below
/// `min_cluster_size`, so loose noise stays mostly outliers while a genuine
/// tight blob is kept whole.
pub fn extract_clusters(tree: &CondensedTree) -> ClusterAssignment {
    let n = tree.num_points;
    if n == 0 {
        return ClusterAssignment::all_outliers(0);
    }
    let mut labels = vec![OUTLIER; n];

    if tree.nodes.len() == 1 {
        if n < tree.min_cluster_size {
            return ClusterAssignment::all_outliers(n);
        }
        // Root fallback: keep points alive at the density where the live
        // population still counts min_cluster_size members. The comparison
        // carries a relative slack so that points which tie with the
        // threshold up to float rounding (a uniform blob where every exit
        // density is morally equal) are all kept.
        let mut lambdas: Vec<f64> = tree.points.iter().map(|e| e.lambda_out).collect();
        lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = lambdas[n - tree.min_cluster_size] * (1.0 - 1e-9);
        for e in &tree.points {
            if e.lambda_out >= threshold {
                labels[e.point] = 0;
            }
        }
        return ClusterAssignment::new(labels).expect("contiguous by construction");
    }

    // Excess-of-mass selection over non-root nodes, children before parents
    // (children always have larger indices than their parent).
    let m = tree.nodes.len();
    let mut selected = vec![false; m];
    let mut score = vec![0.0f64; m];
    for i in (1..m).rev() {
        let node = &tree.nodes[i];
        if node.children.is_empty() {
            selected[i] = true;
            score[i] = node.stability;
        } else {
            let child_sum: f64 = node.children.iter().map(|&c| score[c]).sum();
            if node.stability > child_sum {
                selected[i] = true;
                score[i] = node.stability;
            } else {
                score[i] = child_sum;
            }
        }
    }
    // Keep only selected nodes with no selected ancestor.
    let mut chosen: Vec<usize> = Vec::new();
    for i in 1..m {
        if !selected[i] {
            continue;
        }
        let mut anc = tree.nodes[i].parent;
        let mut shadowed = false;
        while let Some(a) = anc {
            if selected[a] && a != 0 {
                shadowed = true;
                break;
            }
            anc = tree.nodes[a].parent;
        }
        if !shadowed {
            chosen.push(i);
        }
    }

    // Map every condensed node to its chosen ancestor (or itself).
    let mut owner: Vec<Option<usize>> = vec![None; m];
    for &c in &chosen {
        owner[c] = Some(c);
    }
    for i in 1..m {
        if owner[i].is_none() {
            if let Some(p) = tree.nodes[i].parent {
                owner[i] = owner[p];
            }
        }
    }

    // Order clusters by their smallest member index for stable ids.
    let mut first_member: Vec<(usize, usize)> = Vec::new(); // (first point, chosen node)
    for &c in &chosen {
        let mut first = usize::MAX;
        for e in &tree.points {
            if owner[e.node] == Some(c) {
                first = first.min(e.point);
            }
        }
        first_member.push((first, c));
    }
    first_member.sort_unstable();
    let mut id_of = vec![usize::MAX; m];
    for (id, &(_, c)) in first_member.iter().enumerate() {
        id_of[c] = id;
    }
    for e in &tree.points {
        if let Some(c) = owner[e.node] {
            labels[e.point] = id_of[c] as i64;
        }
    }
    ClusterAssignment::new(labels).expect("contiguous by construction")
}

/// Tuning knobs for [`hdbscan_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HdbscanParams {
    /// Smallest subtree that counts as a cluster. At least 2.
    pub min_cluster_size: usize,
    /// Neighbor rank used for core distances; defaults to
    /// `min_cluster_size`, capped at `n - 1`.
    pub min_samples: Option<usize>,
}

/// HDBSCAN with `min_samples = min_cluster_size`.
pub fn hdbscan(d: &DistanceMatrix, min_cluster_size: usize) -> Result<ClusterAssignment> {
    hdbscan_with(d, HdbscanParams { min_cluster_size, min_samples: None })
}

/// Full pipeline: core distances, mutual reachability, MST, condensed tree,
/// stability extraction.
pub fn hdbscan_with(d: &DistanceMatrix, params: HdbscanParams) -> Result<ClusterAssignment> {
    let n = d.len();
    if params.min_cluster_size < 2 {
        return Err(Error::invalid("min_cluster_size must be at least 2"));
    }
    if n == 0 {
        return Ok(ClusterAssignment::all_outliers(0));
    }
    if n == 1 {
        return Ok(ClusterAssignment::all_outliers(1));
    }
    let min_samples = params.min_samples.unwrap_or(params.min_cluster_size).min(n - 1).max(1);
    let cores = core_distances(d, min_samples)?;
    let mreach = mutual_reachability(d, &cores)?;
    let tree = mst(&mreach)?;
    let condensed = condense_tree(&tree, params.min_cluster_size)?;
    Ok(extract_clusters(&condensed))
}
