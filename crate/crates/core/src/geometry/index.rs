//! Static kd-tree for k-nearest and radius queries over a fixed point set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Point;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Read-only spatial index. Results are ordered by distance, then by point index.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<Point>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl NeighborIndex {
    pub fn build(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        index.split(0, points.len());
        Ok(index)
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for k in 0..3 {
                lo[k] = lo[k].min(self.points[i][k]);
                hi[k] = hi[k].max(self.points[i][k]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] - lo[axis] <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// The `k` nearest points to `query`, optionally excluding one index.
    pub fn knn(&self, query: &Point, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, exclude, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.index, c.dist2.sqrt())).collect()
    }

    fn knn_rec(
        &self,
        node: usize,
        q: &Point,
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let c = Candidate {
                        dist2: (self.points[i] - q).norm_squared(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if let Some(top) = heap.peek() {
                        if c < *top {
                            heap.pop();
                            heap.push(c);
                        }
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_rec(near, q, k, exclude, heap);
                let worst = heap.peek().map(|c| c.dist2);
                if heap.len() < k || worst.is_some_and(|w| diff * diff <= w) {
                    self.knn_rec(far, q, k, exclude, heap);
                }
            }
        }
    }

    /// k nearest neighbors of stored point `i`, excluding `i` itself.
    pub fn k_nearest(&self, i: usize, k: usize) -> Vec<(usize, f64)> {
        self.knn(&self.points[i], k, Some(i))
    }

    /// Nearest stored point to `query`.
    pub fn nearest(&self, query: &Point) -> (usize, f64) {
        self.knn(query, 1, None)[0]
    }

    /// All points strictly closer than `r` to `query`, optionally excluding one index.
    pub fn within(&self, query: &Point, r: f64, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if r > 0.0 {
            self.within_rec(0, query, r * r, exclude, &mut out);
        }
        out.sort();
        out.into_iter().map(|c| (c.index, c.dist2.sqrt())).collect()
    }

    fn within_rec(
        &self,
        node: usize,
        q: &Point,
        r2: f64,
        exclude: Option<usize>,
        out: &mut Vec<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < r2 {
                        out.push(Candidate {
                            dist2: d2,
                            index: i,
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.within_rec(near, q, r2, exclude, out);
                if diff * diff < r2 {
                    self.within_rec(far, q, r2, exclude, out);
                }
            }
        }
    }

    /// Points strictly within `r` of stored point `i`, excluding `i`.
    pub fn radius_neighbors(&self, i: usize, r: f64) -> Vec<(usize, f64)> {
        self.within(&self.points[i], r, Some(i))
    }
}
