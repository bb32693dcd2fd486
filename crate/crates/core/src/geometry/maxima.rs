//! 3-D maxima (Pareto frontier) under strict dominance.
//!
//! A point is removed only if some other point is strictly larger in every
//! coordinate, so duplicated maxima are all kept.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::time::Instant;

use serde::Serialize;

use super::OpCounter;
use crate::error::Result;
use crate::partition::HardPartition;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaResult {
    /// Indices of the non-dominated points, increasing.
    pub indices: Vec<usize>,
    pub op_count: u64,
    pub elapsed_ns: Option<u64>,
}

type P3 = [f64; 3];

/// Staircase of 2-D points with strictly increasing `y` and strictly
/// decreasing `z`; answers "is there a stored point with y' > y and z' > z".
struct Staircase {
    steps: Vec<(f64, f64)>,
}

impl Staircase {
    fn first_greater_y(&self, y: f64, ops: &mut OpCounter) -> usize {
        self.steps.partition_point(|s| {
            ops.comparisons += 1;
            s.0 <= y
        })
    }

    fn strictly_dominated(&self, y: f64, z: f64, ops: &mut OpCounter) -> bool {
        let i = self.first_greater_y(y, ops);
        if i == self.steps.len() {
            return false;
        }
        ops.comparisons += 1;
        self.steps[i].1 > z
    }

    fn insert(&mut self, y: f64, z: f64, ops: &mut OpCounter) {
        // First step with y' >= y.
        let i = self.steps.partition_point(|s| {
            ops.comparisons += 1;
            s.0 < y
        });
        if i < self.steps.len() {
            ops.comparisons += 1;
            if self.steps[i].1 >= z {
                return;
            }
        }
        // Steps before i (y' < y) with z' <= z are covered by the new point.
        let mut j = i;
        while j > 0 {
            ops.comparisons += 1;
            if self.steps[j - 1].1 > z {
                break;
            }
            j -= 1;
        }
        // A step at the same y with smaller z is covered too.
        let mut k = i;
        if k < self.steps.len() && self.steps[k].0 == y {
            k += 1;
        }
        self.steps.splice(j..k, [(y, z)]);
    }
}

fn maxima_of(pts: &[P3], ids: &[usize], ops: &mut OpCounter) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        ops.comparisons += 1;
        pts[ids[b]][0].total_cmp(&pts[ids[a]][0])
    });
    let mut stair = Staircase { steps: Vec::new() };
    let mut out = Vec::new();
    let mut g = 0;
    while g < order.len() {
        let x = pts[ids[order[g]]][0];
        let mut e = g + 1;
        while e < order.len() && {
            ops.comparisons += 1;
            pts[ids[order[e]]][0] == x
        } {
            e += 1;
        }
        for &o in &order[g..e] {
            let p = pts[ids[o]];
            if !stair.strictly_dominated(p[1], p[2], ops) {
                out.push(ids[o]);
            }
        }
        for &o in &order[g..e] {
            let p = pts[ids[o]];
            stair.insert(p[1], p[2], ops);
        }
        g = e;
    }
    out.sort_unstable();
    out
}

fn to_p3(s: &PointSet) -> Result<Vec<P3>> {
    s.require_dim(3)?;
    Ok(s.iter().map(|p| [p[0], p[1], p[2]]).collect())
}

/// Sort by `x` descending and sweep with a `(y, z)` staircase.
pub fn maxima_3d(s: &PointSet) -> Result<MaximaResult> {
    let pts = to_p3(s)?;
    let start = Instant::now();
    let mut ops = OpCounter::default();
    let ids: Vec<usize> = (0..pts.len()).collect();
    let indices = maxima_of(&pts, &ids, &mut ops);
    Ok(MaximaResult {
        indices,
        op_count: ops.total(),
        elapsed_ns: Some(start.elapsed().as_nanos() as u64),
    })
}

/// Per-part maxima, then the maxima of the union of part candidates.
pub fn adaptive_maxima(s: &PointSet, p: &HardPartition) -> Result<MaximaResult> {
    let pts = to_p3(s)?;
    p.check_covers(pts.len())?;
    let start = Instant::now();
    let mut ops = OpCounter::default();
    let mut candidates = Vec::new();
    for members in p.members() {
        candidates.extend(maxima_of(&pts, &members, &mut ops));
    }
    candidates.sort_unstable();
    let indices = maxima_of(&pts, &candidates, &mut ops);
    Ok(MaximaResult {
        indices,
        op_count: ops.total(),
        elapsed_ns: Some(start.elapsed().as_nanos() as u64),
    })
}

/// Harmonic mean of precision and recall; 1 when both sets are empty.
pub fn maxima_f1(predicted: &[usize], truth: &[usize]) -> f64 {
    let p: HashSet<usize> = predicted.iter().copied().collect();
    let t: HashSet<usize> = truth.iter().copied().collect();
    match (p.is_empty(), t.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let tp = p.intersection(&t).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / p.len() as f64;
    let recall = tp / t.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Quadratic dominance check, the reference for the sweep.
pub fn maxima_brute(s: &PointSet) -> Result<Vec<usize>> {
    let pts = to_p3(s)?;
    let dominates = |a: &P3, b: &P3| (0..3).all(|c| a[c].partial_cmp(&b[c]) == Some(Ordering::Greater));
    Ok((0..pts.len())
        .filter(|&i| !pts.iter().any(|q| dominates(q, &pts[i])))
        .collect())
}
