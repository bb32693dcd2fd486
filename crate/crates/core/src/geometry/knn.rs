//! Exact nearest-neighbor queries through a static kd-tree.
//!
//! Ties on distance resolve to the lowest point index.

use crate::points::PointSet;

const LEAF: usize = 8;

enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

pub struct KdTree<'a> {
    set: &'a PointSet,
    order: Vec<usize>,
    root: Option<Node>,
}

impl<'a> KdTree<'a> {
    pub fn new(set: &'a PointSet) -> Self {
        let mut order: Vec<usize> = (0..set.len()).collect();
        let root = if order.is_empty() {
            None
        } else {
            let n = order.len();
            Some(build(set, &mut order, 0, n, 0))
        };
        Self { set, order, root }
    }

    /// Index and squared distance of the nearest point to `q`.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        let root = self.root.as_ref()?;
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(root, q, &mut best);
        Some(best)
    }

    fn search(&self, node: &Node, q: &[f64], best: &mut (usize, f64)) {
        match node {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d = sq(self.set.point(i), q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[*axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn build(set: &PointSet, order: &mut [usize], start: usize, end: usize, depth: usize) -> Node {
    if end - start <= LEAF {
        return Node::Leaf { start, end };
    }
    let axis = depth % set.dim();
    let slice = &mut order[start..end];
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| set.point(a)[axis].total_cmp(&set.point(b)[axis]));
    let value = set.point(slice[mid])[axis];
    let split = start + mid;
    Node::Split {
        axis,
        value,
        left: Box::new(build(set, order, start, split, depth + 1)),
        right: Box::new(build(set, order, split, end, depth + 1)),
    }
}
