//! Slow, obviously-correct reference implementations used by the acceptance
//! suite. Everything here trades efficiency for a shape that can be checked
//! by eye: full sorts instead of selection, all-pairs Kruskal instead of
//! Prim, recursion instead of an explicit work stack, and brute-force
//! enumeration instead of the Hungarian algorithm.

use ufcl::clustering::OUTLIER;
use ufcl::neighbors::DistanceMatrix;
use ufcl::Matrix;

const MIN_DIST: f64 = 1e-12;

/// Binary merge tree from single-linkage over mutual reachability: Kruskal
/// over every pair in ascending (weight, i, j) order, keeping the unions
/// that connect two components. Identical (weight, i, j) ordering on both
/// sides pins the tree even when many weights tie.
struct Merge {
    points: Vec<usize>,
    dist: f64,
    left: Option<Box<Merge>>,
    right: Option<Box<Merge>>,
}

impl Merge {
    fn leaf(p: usize) -> Merge {
        Merge { points: vec![p], dist: 0.0, left: None, right: None }
    }

    fn size(&self) -> usize {
        self.points.len()
    }
}

fn single_linkage(mr: &DistanceMatrix) -> Merge {
    let n = mr.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((mr.get(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut comps: Vec<Option<Box<Merge>>> =
        (0..n).map(|p| Some(Box::new(Merge::leaf(p)))).collect();
    let mut root_of: Vec<usize> = (0..n).collect();
    for (w, i, j) in edges {
        let (ri, rj) = (root_of[i], root_of[j]);
        if ri == rj {
            continue;
        }
        let left = comps[ri].take().unwrap();
        let right = comps[rj].take().unwrap();
        let mut points: Vec<usize> = left.points.iter().chain(&right.points).copied().collect();
        points.sort_unstable();
        for &p in &points {
            root_of[p] = ri;
        }
        comps[ri] = Some(Box::new(Merge { points, dist: w, left: Some(left), right: Some(right) }));
    }
    *comps[root_of[0]].take().unwrap()
}

/// One condensed cluster: where it was born, the points that dripped out of
/// it (with their exit densities), and the retained sub-clusters it split
/// into, if any.
struct RefCluster {
    birth: f64,
    size: usize,
    exits: Vec<(usize, f64)>,
    children: Vec<RefCluster>,
}

impl RefCluster {
    fn stability(&self) -> f64 {
        let direct: f64 = self.exits.iter().map(|&(_, l)| l - self.birth).sum();
        let continued: f64 = self
            .children
            .iter()
            .map(|c| (c.birth - self.birth) * c.size as f64)
            .sum();
        direct + continued
    }

    fn all_points(&self, out: &mut Vec<usize>) {
        out.extend(self.exits.iter().map(|&(p, _)| p));
        for c in &self.children {
            c.all_points(out);
        }
    }
}

/// Walks one cluster of the merge tree downward. A split where both sides
/// hold at least `mcs` points ends the cluster and starts two children; a
/// split where neither side does ends it with every remaining point leaving;
/// otherwise the small side leaves point by point and the cluster continues
/// through the large side.
fn condense(mut at: &Merge, birth: f64, mcs: usize) -> RefCluster {
    let mut cluster =
        RefCluster { birth, size: at.size(), exits: Vec::new(), children: Vec::new() };
    loop {
        let (l, r) = (at.left.as_deref().unwrap(), at.right.as_deref().unwrap());
        let lambda = 1.0 / at.dist.max(MIN_DIST);
        if l.size() >= mcs && r.size() >= mcs {
            cluster.children.push(condense(l, lambda, mcs));
            cluster.children.push(condense(r, lambda, mcs));
            return cluster;
        }
        if l.size() < mcs && r.size() < mcs {
            for &p in l.points.iter().chain(&r.points) {
                cluster.exits.push((p, lambda));
            }
            return cluster;
        }
        let (keep, shed) = if l.size() >= mcs { (l, r) } else { (r, l) };
        for &p in &shed.points {
            cluster.exits.push((p, lambda));
        }
        at = keep;
    }
}

/// Excess-of-mass: a cluster replaces its children's selection only when its
/// stability strictly exceeds the sum of theirs. The root itself never
/// competes. Returns the selected clusters.
fn select<'a>(cluster: &'a RefCluster, is_root: bool) -> (f64, Vec<&'a RefCluster>) {
    if cluster.children.is_empty() {
        if is_root {
            return (0.0, Vec::new());
        }
        return (cluster.stability(), vec![cluster]);
    }
    let mut child_sum = 0.0;
    let mut picked = Vec::new();
    for c in &cluster.children {
        let (s, p) = select(c, false);
        child_sum += s;
        picked.extend(p);
    }
    if !is_root && cluster.stability() > child_sum {
        (cluster.stability(), vec![cluster])
    } else {
        (child_sum, picked)
    }
}

/// Reference HDBSCAN, start to finish, on a dense distance matrix.
pub fn naive_hdbscan(d: &DistanceMatrix, mcs: usize, min_samples: Option<usize>) -> Vec<i64> {
    let n = d.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![OUTLIER];
    }
    let ms = min_samples.unwrap_or(mcs).min(n - 1).max(1);

    // Core distance: the ms-th nearest other point, by full sort.
    let mut cores = vec![0.0; n];
    for i in 0..n {
        let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
        others.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cores[i] = others[ms - 1];
    }
    let mr = DistanceMatrix::from_fn(n, |i, j| d.get(i, j).max(cores[i]).max(cores[j])).unwrap();

    let root = condense(&single_linkage(&mr), 0.0, mcs);

    let mut labels = vec![OUTLIER; n];
    if root.children.is_empty() {
        // Nothing survived condensing. The root stands in as a single
        // cluster when at least mcs points persist to its death density;
        // the threshold carries a relative slack so float-level ties all
        // land on the same side.
        if n < mcs {
            return labels;
        }
        let mut lambdas: Vec<f64> = root.exits.iter().map(|&(_, l)| l).collect();
        lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = lambdas[n - mcs] * (1.0 - 1e-9);
        for &(p, l) in &root.exits {
            if l >= threshold {
                labels[p] = 0;
            }
        }
        return labels;
    }

    let (_, chosen) = select(&root, true);
    // A chosen cluster owns every point of its subtree; ids follow the
    // smallest member index.
    let mut groups: Vec<Vec<usize>> = chosen
        .iter()
        .map(|c| {
            let mut pts = Vec::new();
            c.all_points(&mut pts);
            pts.sort_unstable();
            pts
        })
        .collect();
    groups.sort_by_key(|pts| pts[0]);
    for (id, pts) in groups.iter().enumerate() {
        for &p in pts {
            labels[p] = id as i64;
        }
    }
    labels
}

/// Minimum assignment cost by trying every way to inject the smaller side of
/// the matrix into the larger one. Usable up to about 8x8.
pub fn min_assignment_cost(cost: &Matrix) -> f64 {
    let (r, c) = (cost.rows(), cost.cols());
    if r == 0 || c == 0 {
        return 0.0;
    }
    // Recurse over rows when rows are the smaller side, else over columns.
    fn rec(cost: &Matrix, row: usize, used: &mut Vec<bool>, by_rows: bool) -> f64 {
        let outer = if by_rows { cost.rows() } else { cost.cols() };
        if row == outer {
            return 0.0;
        }
        let inner = used.len();
        let mut best = f64::INFINITY;
        for j in 0..inner {
            if used[j] {
                continue;
            }
            used[j] = true;
            let entry = if by_rows { cost.get(row, j) } else { cost.get(j, row) };
            best = best.min(entry + rec(cost, row + 1, used, by_rows));
            used[j] = false;
        }
        best
    }
    if r <= c {
        rec(cost, 0, &mut vec![false; c], true)
    } else {
        rec(cost, 0, &mut vec![false; r], false)
    }
}
