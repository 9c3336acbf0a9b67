//! Exact k-nearest-neighbor graphs via a kd-tree.

use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud4D;
use crate::error::{Error, Result};

/// K nearest neighbors of every point, rows sorted by ascending distance
/// (ties broken by lower index), never containing the point itself.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl KnnGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Mean over all rows of the neighbor distances.
    pub fn mean_distance(&self) -> f64 {
        if self.distances.is_empty() {
            return 0.0;
        }
        self.distances.iter().sum::<f64>() / self.distances.len() as f64
    }

    /// Undirected adjacency lists: `j ∈ adj[i]` iff `j` is a neighbor of `i`
    /// or `i` is a neighbor of `j`. Lists are sorted and deduplicated.
    pub fn symmetrized(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(self.k + 4); n];
        for i in 0..n {
            for &j in self.neighbors(i) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }
}

/// Exact K-nearest-neighbor graph of a cloud's positions.
pub fn build_knn(cloud: &PointCloud4D, k: usize) -> Result<KnnGraph> {
    build_knn_points(cloud.positions(), k)
}

/// Exact K-nearest-neighbor graph for points of any fixed dimension.
pub fn build_knn_points<const D: usize>(points: &[[f64; D]], k: usize) -> Result<KnnGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::Parameter(alloc::format!(
            "neighbor count K={k} must satisfy 0 < K < n={n}"
        )));
    }
    let tree = KdTree::new(points);
    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    let mut best = Vec::with_capacity(k + 1);
    for i in 0..n {
        best.clear();
        tree.query(&points[i], i, k, &mut best);
        for &(d2, j) in best.iter() {
            indices.push(j);
            distances.push(crate::math::sqrt(d2));
        }
    }
    Ok(KnnGraph { k, indices, distances })
}

struct KdTree<'a, const D: usize> {
    points: &'a [[f64; D]],
    nodes: Vec<Node>,
    order: Vec<usize>,
}

#[derive(Clone, Copy)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

const LEAF_SIZE: usize = 12;

impl<'a, const D: usize> KdTree<'a, D> {
    fn new(points: &'a [[f64; D]]) -> Self {
        let mut tree = Self {
            points,
            nodes: Vec::new(),
            order: (0..points.len()).collect(),
        };
        tree.build(0, points.len());
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let pts = self.points;
        let mut lo = [f64::INFINITY; D];
        let mut hi = [f64::NEG_INFINITY; D];
        for &i in &self.order[start..end] {
            for a in 0..D {
                lo[a] = lo[a].min(pts[i][a]);
                hi[a] = hi[a].max(pts[i][a]);
            }
        }
        let axis = (0..D)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let value = pts[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn query(&self, q: &[f64; D], skip: usize, k: usize, best: &mut Vec<(f64, usize)>) {
        self.visit(0, q, skip, k, best);
    }

    fn visit(&self, node: usize, q: &[f64; D], skip: usize, k: usize, best: &mut Vec<(f64, usize)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j == skip {
                        continue;
                    }
                    let p = &self.points[j];
                    let mut d2 = 0.0;
                    for a in 0..D {
                        let t = p[a] - q[a];
                        d2 += t * t;
                    }
                    insert_bounded(best, k, (d2, j));
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.visit(near, q, skip, k, best);
                // `<=` keeps equal-distance candidates reachable for the index tie-break
                if best.len() < k || diff * diff <= best[best.len() - 1].0 {
                    self.visit(far, q, skip, k, best);
                }
            }
        }
    }
}

/// Insert into a list kept sorted by (distance², index), capped at `k`.
fn insert_bounded(best: &mut Vec<(f64, usize)>, k: usize, cand: (f64, usize)) {
    let less = |a: &(f64, usize), b: &(f64, usize)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    if best.len() == k && !less(&cand, &best[k - 1]) {
        return;
    }
    let pos = best.partition_point(|e| less(e, &cand));
    best.insert(pos, cand);
    if best.len() > k {
        best.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<[f64; 3]>) -> PointCloud4D {
        let n = points.len();
        PointCloud4D::new("t", points, vec![0.0; n]).unwrap()
    }

    #[test]
    fn collinear_three_points() {
        let c = cloud(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        let g = build_knn(&c, 1).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.neighbors(2), &[1]);
    }

    #[test]
    fn k_must_be_below_n() {
        let c = cloud(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(matches!(build_knn(&c, 2), Err(Error::Parameter(_))));
        assert!(matches!(build_knn(&c, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn full_neighborhood_is_permutation_of_others() {
        let pts: Vec<[f64; 3]> = (0..20).map(|i| [i as f64 * 0.37 % 1.3, (i * i) as f64 * 0.11 % 0.7, i as f64]).collect();
        let c = cloud(pts);
        let g = build_knn(&c, 19).unwrap();
        for i in 0..20 {
            let mut row = g.neighbors(i).to_vec();
            row.sort_unstable();
            let expect: Vec<usize> = (0..20).filter(|&j| j != i).collect();
            assert_eq!(row, expect);
        }
    }

    #[test]
    fn grid_interior_four_neighbors() {
        let mut pts = Vec::new();
        for y in 0..10 {
            for x in 0..10 {
                pts.push([x as f64, y as f64, 0.0]);
            }
        }
        let g = build_knn(&cloud(pts), 4).unwrap();
        for y in 1..9 {
            for x in 1..9 {
                let i = y * 10 + x;
                let mut row = g.neighbors(i).to_vec();
                row.sort_unstable();
                assert_eq!(row, vec![i - 10, i - 1, i + 1, i + 10]);
            }
        }
    }

    #[test]
    fn ties_broken_by_lower_index() {
        // 1 and 2 are equidistant from 0
        let c = cloud(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 5.0, 0.0]]);
        let g = build_knn(&c, 1).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
    }
}
