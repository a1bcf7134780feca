//! Static k-d tree for exact k-nearest-neighbour queries in 2D and 3D.
//!
//! Ties in distance are broken by point index so query results do not depend
//! on the traversal order of the tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    /// Permutation of point indices laid out as an implicit balanced tree.
    order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const D: usize> KdTree<D> {
    pub fn new(points: Vec<[f64; D]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(&points, &mut order, 0);
        Self { points, order }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64; D] {
        &self.points[i]
    }

    /// The `k` nearest points to `query` as `(index, distance)`, ascending.
    /// `exclude` removes one index from consideration (used for self-queries).
    pub fn nearest(&self, query: &[f64; D], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(query, k, exclude, 0, self.order.len(), 0, &mut heap);
        let mut found = heap.into_vec();
        found.sort();
        found.into_iter().map(|c| (c.index, c.dist2.sqrt())).collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        query: &[f64; D],
        k: usize,
        exclude: Option<usize>,
        lo: usize,
        hi: usize,
        depth: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        if hi - lo <= LEAF_SIZE {
            for &idx in &self.order[lo..hi] {
                self.offer(query, idx, k, exclude, heap);
            }
            return;
        }
        let axis = depth % D;
        let mid = lo + (hi - lo) / 2;
        let pivot = self.order[mid];
        let diff = query[axis] - self.points[pivot][axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(query, k, exclude, near.0, near.1, depth + 1, heap);
        self.offer(query, pivot, k, exclude, heap);
        let worst = if heap.len() < k {
            f64::INFINITY
        } else {
            heap.peek().map_or(f64::INFINITY, |c| c.dist2)
        };
        if diff * diff <= worst {
            self.search(query, k, exclude, far.0, far.1, depth + 1, heap);
        }
    }

    fn offer(&self, query: &[f64; D], idx: usize, k: usize, exclude: Option<usize>, heap: &mut BinaryHeap<Candidate>) {
        if exclude == Some(idx) {
            return;
        }
        let p = &self.points[idx];
        let dist2 = (0..D).map(|a| (p[a] - query[a]).powi(2)).sum::<f64>();
        let cand = Candidate { dist2, index: idx };
        if heap.len() < k {
            heap.push(cand);
        } else if heap.peek().is_some_and(|worst| cand < *worst) {
            heap.pop();
            heap.push(cand);
        }
    }
}

fn build<const D: usize>(points: &[[f64; D]], order: &mut [usize], depth: usize) {
    if order.len() <= LEAF_SIZE {
        return;
    }
    let axis = depth % D;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
    });
    let (left, rest) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut rest[1..], depth + 1);
}
