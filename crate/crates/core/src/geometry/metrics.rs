//! Point-set distances: Hausdorff and squared, mean-normalized Chamfer.

use super::knn::KdTree;
use crate::error::{Error, Result};
use crate::points::{sq_dist, PointSet};

fn check_pair(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("distance between empty point sets"));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn directed_sup(a: &PointSet, b: &PointSet) -> f64 {
    let tree = KdTree::new(b);
    a.iter()
        .map(|p| tree.nearest(p).expect("non-empty").1)
        .fold(0.0, f64::max)
        .sqrt()
}

/// `max(sup_a min_b |a-b|, sup_b min_a |a-b|)`.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    check_pair(a, b)?;
    Ok(directed_sup(a, b).max(directed_sup(b, a)))
}

/// Direct double loop, used to cross-check the tree-based version.
pub fn hausdorff_exact(a: &PointSet, b: &PointSet) -> Result<f64> {
    check_pair(a, b)?;
    let dir = |x: &PointSet, y: &PointSet| {
        x.iter()
            .map(|p| y.iter().map(|q| sq_dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(dir(a, b).max(dir(b, a)).sqrt())
}

/// `(1/|S|) sum_x min_y |x-y|^2 + (1/|S2|) sum_y min_x |x-y|^2`.
pub fn chamfer(s: &PointSet, s2: &PointSet) -> Result<f64> {
    Ok(chamfer_with_grad(s, s2, false)?.0)
}

pub fn chamfer_exact(s: &PointSet, s2: &PointSet) -> Result<f64> {
    check_pair(s, s2)?;
    let dir = |x: &PointSet, y: &PointSet| {
        x.iter()
            .map(|p| y.iter().map(|q| sq_dist(p, q)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / x.len() as f64
    };
    Ok(dir(s, s2) + dir(s2, s))
}

/// Chamfer distance and, optionally, its gradient with respect to the
/// coordinates of `s2`, using the lowest-index nearest neighbor at ties.
pub fn chamfer_with_grad(s: &PointSet, s2: &PointSet, with_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
    check_pair(s, s2)?;
    let d = s.dim();
    let tree2 = KdTree::new(s2);
    let tree1 = KdTree::new(s);
    let n1 = s.len() as f64;
    let n2 = s2.len() as f64;
    let mut grad = with_grad.then(|| vec![0.0; s2.len() * d]);
    let mut fwd = 0.0;
    for x in s.iter() {
        let (j, dist) = tree2.nearest(x).expect("non-empty");
        fwd += dist;
        if let Some(g) = grad.as_mut() {
            let y = s2.point(j);
            for c in 0..d {
                g[j * d + c] += 2.0 / n1 * (y[c] - x[c]);
            }
        }
    }
    let mut bwd = 0.0;
    for (j, y) in s2.iter().enumerate() {
        let (i, dist) = tree1.nearest(y).expect("non-empty");
        bwd += dist;
        if let Some(g) = grad.as_mut() {
            let x = s.point(i);
            for c in 0..d {
                g[j * d + c] += 2.0 / n2 * (y[c] - x[c]);
            }
        }
    }
    Ok((fwd / n1 + bwd / n2, grad))
}
