use super::{sq_dist, Matrix, NumError};

/// Above this dimensionality the kd-tree cannot prune and a linear scan wins.
const KD_MAX_DIMS: usize = 16;
const KD_MIN_POINTS: usize = 64;
const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Result of a k-nearest-neighbour query, sorted by ascending distance with
/// ties broken by ascending id. `truncated` is set when fewer than `k`
/// candidates existed.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    pub items: Vec<Neighbor>,
    pub truncated: bool,
}

impl Neighbors {
    pub fn kth_distance(&self) -> Option<f64> {
        self.items.last().map(|n| n.distance)
    }
}

/// Exact Euclidean k-NN index over the rows of a matrix.
///
/// Low-dimensional inputs get a kd-tree; otherwise queries scan all points.
/// Both paths return identical results.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Matrix,
    tree: Option<KdTree>,
}

impl NeighborIndex {
    pub fn new(points: Matrix) -> Self {
        let tree = (points.ncols() <= KD_MAX_DIMS && points.nrows() >= KD_MIN_POINTS)
            .then(|| KdTree::build(&points));
        Self { points, tree }
    }

    /// Forces the linear-scan path regardless of shape.
    pub fn brute_force(points: Matrix) -> Self {
        Self { points, tree: None }
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn uses_tree(&self) -> bool {
        self.tree.is_some()
    }

    /// k nearest indexed points to an external query.
    pub fn query(&self, query: &[f64], k: usize) -> Result<Neighbors, NumError> {
        self.search(query, k, None)
    }

    /// k nearest neighbours of indexed point `id`, excluding the point itself.
    pub fn query_member(&self, id: usize, k: usize) -> Result<Neighbors, NumError> {
        if id >= self.len() {
            return Err(NumError::InsufficientPoints { needed: id + 1, found: self.len() });
        }
        self.search(self.points.row(id), k, Some(id))
    }

    fn search(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Result<Neighbors, NumError> {
        if self.is_empty() {
            return Err(NumError::EmptyIndex);
        }
        if query.len() != self.dims() {
            return Err(NumError::DimensionMismatch { expected: self.dims(), found: query.len() });
        }
        let available = self.len() - usize::from(exclude.is_some());
        let want = k.min(available);
        let mut best = Candidates::new(want);
        if want > 0 {
            match &self.tree {
                Some(tree) => tree.search(&self.points, query, exclude, &mut best),
                None => {
                    for (i, row) in self.points.rows().enumerate() {
                        if Some(i) != exclude {
                            best.offer(sq_dist(row, query), i);
                        }
                    }
                }
            }
        }
        Ok(Neighbors {
            items: best
                .items
                .into_iter()
                .map(|(d2, id)| Neighbor { id, distance: d2.sqrt() })
                .collect(),
            truncated: want < k,
        })
    }
}

/// Free-function form of [`NeighborIndex::query`] / [`NeighborIndex::query_member`].
pub fn knn_distances(
    index: &NeighborIndex,
    query: &[f64],
    k: usize,
    member: Option<usize>,
) -> Result<Neighbors, NumError> {
    match member {
        Some(id) => index.query_member(id, k),
        None => index.query(query, k),
    }
}

/// Bounded sorted candidate list ordered by `(squared distance, id)`.
struct Candidates {
    cap: usize,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(cap: usize) -> Self {
        Self { cap, items: Vec::with_capacity(cap + 1) }
    }

    fn full(&self) -> bool {
        self.items.len() == self.cap
    }

    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.0)
    }

    #[inline]
    fn offer(&mut self, d2: f64, id: usize) {
        if self.cap == 0 {
            return;
        }
        if self.full() {
            let last = self.items[self.cap - 1];
            if (d2, id) >= last {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| d < d2 || (d == d2 && i < id));
        self.items.insert(pos, (d2, id));
        self.items.truncate(self.cap);
    }
}

#[derive(Debug, Clone)]
enum KdNode {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct KdTree {
    nodes: Vec<KdNode>,
    perm: Vec<usize>,
}

impl KdTree {
    fn build(points: &Matrix) -> Self {
        let mut tree = KdTree { nodes: Vec::new(), perm: (0..points.nrows()).collect() };
        tree.build_node(points, 0, points.nrows());
        tree
    }

    fn build_node(&mut self, points: &Matrix, start: usize, end: usize) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(KdNode::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return slot;
        }
        let d = points.ncols();
        let mut best_dim = 0;
        let mut best_spread = -1.0;
        for dim in 0..d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.perm[start..end] {
                let v = points.get(i, dim);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = dim;
            }
        }
        if best_spread <= 0.0 {
            return slot;
        }
        let mid = start + (end - start) / 2;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points.get(a, best_dim).total_cmp(&points.get(b, best_dim))
        });
        let value = points.get(self.perm[mid], best_dim);
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        self.nodes[slot] = KdNode::Split { dim: best_dim, value, left, right };
        slot
    }

    fn search(&self, points: &Matrix, q: &[f64], exclude: Option<usize>, best: &mut Candidates) {
        self.visit(0, points, q, exclude, best);
    }

    fn visit(&self, node: usize, points: &Matrix, q: &[f64], exclude: Option<usize>, best: &mut Candidates) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    if Some(i) != exclude {
                        best.offer(sq_dist(points.row(i), q), i);
                    }
                }
            }
            KdNode::Split { dim, value, left, right } => {
                // Left holds coordinates <= value, right holds >= value.
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.visit(near, points, q, exclude, best);
                // Equal bounds must still be visited so lower-id ties are found.
                if !best.full() || diff * diff <= best.worst() {
                    self.visit(far, points, q, exclude, best);
                }
            }
        }
    }
}
