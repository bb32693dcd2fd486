//! Exact 2-D convex hulls.
//!
//! Every hull is returned in canonical form: counter-clockwise, starting at
//! the lexicographically smallest vertex, with collinear boundary points and
//! duplicates removed. A set of identical points has a one-vertex hull and a
//! collinear set has the two extreme endpoints.

use std::cmp::Ordering;
use std::time::Instant;

use serde::Serialize;

use super::{lex_cmp, to_p2, OpCounter, P2};
use crate::error::{Error, Result};
use crate::partition::HardPartition;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullResult {
    pub vertices: Vec<P2>,
    pub area: f64,
    /// Orientation tests plus coordinate comparisons.
    pub op_count: u64,
    pub ops: OpCounter,
    pub elapsed_ns: Option<u64>,
}

impl HullResult {
    fn new(vertices: Vec<P2>, ops: OpCounter, elapsed_ns: u64) -> Self {
        Self {
            area: hull_area(&vertices),
            vertices,
            op_count: ops.total(),
            ops,
            elapsed_ns: Some(elapsed_ns),
        }
    }
}

/// Shoelace area of a counter-clockwise polygon; 0 below three vertices.
pub fn hull_area(vertices: &[P2]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    (0.5 * twice).max(0.0)
}

/// `|A(true) - A(pred)| / A(true) * 100`.
pub fn hull_error_pct(truth: &HullResult, pred: &HullResult) -> Result<f64> {
    if truth.area <= 0.0 {
        return Err(Error::invalid("reference hull has zero area"));
    }
    Ok((truth.area - pred.area).abs() / truth.area * 100.0)
}

/// Andrew's monotone chain over a slice, counting operations into `ops`.
pub(crate) fn monotone_chain_pts(pts: &[P2], ops: &mut OpCounter) -> Vec<P2> {
    let mut sorted = pts.to_vec();
    sorted.sort_by(|a, b| ops.lex_cmp(a, b));
    chain_sorted(&sorted, ops)
}

fn chain_sorted(sorted: &[P2], ops: &mut OpCounter) -> Vec<P2> {
    let n = sorted.len();
    if n == 0 {
        return vec![];
    }
    if n == 1 || sorted[0] == sorted[n - 1] {
        return vec![sorted[0]];
    }
    let mut hull: Vec<P2> = Vec::with_capacity(n + 1);
    for &p in sorted {
        while hull.len() >= 2 && ops.orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in sorted.iter().rev().skip(1) {
        while hull.len() >= lower_len && ops.orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

pub fn monotone_chain_hull(s: &PointSet) -> Result<HullResult> {
    let pts = to_p2(s)?;
    let start = Instant::now();
    let mut ops = OpCounter::default();
    let v = monotone_chain_pts(&pts, &mut ops);
    Ok(HullResult::new(v, ops, start.elapsed().as_nanos() as u64))
}

/// Per-part hulls, then the hull of the union of their vertices.
pub fn partition_merge_hull(s: &PointSet, p: &HardPartition) -> Result<HullResult> {
    let pts = to_p2(s)?;
    p.check_covers(pts.len())?;
    let start = Instant::now();
    let mut ops = OpCounter::default();
    let mut union = Vec::new();
    for members in p.members() {
        let part: Vec<P2> = members.iter().map(|&i| pts[i]).collect();
        union.extend(monotone_chain_pts(&part, &mut ops));
    }
    let v = monotone_chain_pts(&union, &mut ops);
    Ok(HullResult::new(v, ops, start.elapsed().as_nanos() as u64))
}

fn sq_len(a: P2, b: P2) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

/// Chan's output-sensitive hull: group hulls of size `m = 2^(2^t)` merged by
/// gift wrapping with logarithmic tangent queries, restarting with a
/// squared group size whenever more than `m` wrapping steps are needed.
pub fn chans_hull(s: &PointSet) -> Result<HullResult> {
    let pts = to_p2(s)?;
    let start = Instant::now();
    let mut ops = OpCounter::default();
    let v = chans_pts(&pts, &mut ops);
    Ok(HullResult::new(v, ops, start.elapsed().as_nanos() as u64))
}

struct Group {
    hull: Vec<P2>,
    /// Index of the lexicographically largest vertex (end of the lower chain).
    top: usize,
}

fn chans_pts(pts: &[P2], ops: &mut OpCounter) -> Vec<P2> {
    let n = pts.len();
    let mut p0_idx = 0;
    for i in 1..n {
        if ops.lex_cmp(&pts[i], &pts[p0_idx]) == Ordering::Less {
            p0_idx = i;
        }
    }
    let p0 = pts[p0_idx];
    if n == 1 {
        return vec![p0];
    }
    let mut t = 1u32;
    loop {
        let m = if t >= 6 { n } else { (1usize << (1u32 << t)).min(n) };
        let groups: Vec<Group> = pts
            .chunks(m)
            .map(|chunk| {
                let hull = monotone_chain_pts(chunk, ops);
                let top = (0..hull.len())
                    .max_by(|&a, &b| lex_cmp(&hull[a], &hull[b]))
                    .unwrap_or(0);
                Group { hull, top }
            })
            .collect();
        if let Some(h) = wrap(&groups, p0, p0_idx / m, m, ops) {
            return h;
        }
        t += 1;
    }
}

/// Gift wrapping over group hulls; `None` if more than `limit` vertices.
fn wrap(groups: &[Group], p0: P2, p0_group: usize, limit: usize, ops: &mut OpCounter) -> Option<Vec<P2>> {
    let mut hull = vec![p0];
    let mut cur = p0;
    let mut cur_group = p0_group;
    for _ in 0..limit {
        let mut best: Option<(P2, usize)> = None;
        for (gi, g) in groups.iter().enumerate() {
            let cand = if gi == cur_group {
                successor_of(g, cur, ops)
            } else {
                tangent(&g.hull, cur, ops)
            };
            let Some(c) = cand else { continue };
            best = match best {
                None => Some((c, gi)),
                Some((b, bg)) => {
                    let o = ops.orient(cur, b, c);
                    if o < 0.0 {
                        Some((c, gi))
                    } else if o == 0.0 {
                        ops.comparisons += 1;
                        if sq_len(cur, c) > sq_len(cur, b) {
                            Some((c, gi))
                        } else {
                            Some((b, bg))
                        }
                    } else {
                        Some((b, bg))
                    }
                }
            };
        }
        // Only copies of the current point remain.
        let Some((next, ng)) = best else {
            return Some(hull);
        };
        if next == p0 {
            return Some(hull);
        }
        hull.push(next);
        cur = next;
        cur_group = ng;
    }
    None
}

/// Counter-clockwise successor of `p` on a group hull that has `p` as a vertex.
fn successor_of(g: &Group, p: P2, ops: &mut OpCounter) -> Option<P2> {
    let h = &g.hull;
    if h.len() < 2 {
        return if h.first().is_some_and(|v| *v != p) { Some(h[0]) } else { None };
    }
    // Lower chain h[0..=top] is lexicographically increasing, the rest
    // decreasing.
    let lower = &h[..=g.top];
    let pos = match lower.binary_search_by(|v| ops.lex_cmp(v, &p)) {
        Ok(i) => Some(i),
        Err(_) => {
            let upper = &h[g.top..];
            upper
                .binary_search_by(|v| ops.lex_cmp(&p, v))
                .ok()
                .map(|i| i + g.top)
        }
    };
    match pos {
        Some(i) => Some(h[(i + 1) % h.len()]),
        // `p` is a duplicate living in another group: treat as external.
        None => tangent(h, p, ops),
    }
}

/// Most clockwise vertex of `hull` as seen from `p` (farthest on ties),
/// skipping copies of `p`. `p` must lie outside the hull or be one of its
/// vertices.
pub(crate) fn tangent(hull: &[P2], p: P2, ops: &mut OpCounter) -> Option<P2> {
    let m = hull.len();
    if m <= 3 {
        return tangent_scan(hull, p, ops);
    }
    let q = extreme_by_angle(hull, p, ops);
    let mut q = q;
    let next = (q + 1) % m;
    if ops.orient(p, hull[q], hull[next]) == 0.0 && {
        ops.comparisons += 1;
        sq_len(p, hull[next]) > sq_len(p, hull[q])
    } {
        q = next;
    }
    let prev = (q + m - 1) % m;
    let next = (q + 1) % m;
    let ok = hull[q] != p
        && ops.orient(p, hull[q], hull[prev]) >= 0.0
        && ops.orient(p, hull[q], hull[next]) >= 0.0
        && {
            // Collinear neighbor that is farther means `q` is not final.
            let po = ops.orient(p, hull[q], hull[prev]);
            !(po == 0.0 && sq_len(p, hull[prev]) > sq_len(p, hull[q]))
        };
    if ok {
        Some(hull[q])
    } else {
        tangent_scan(hull, p, ops)
    }
}

fn tangent_scan(hull: &[P2], p: P2, ops: &mut OpCounter) -> Option<P2> {
    let mut best: Option<P2> = None;
    for &v in hull {
        if v == p {
            continue;
        }
        best = match best {
            None => Some(v),
            Some(b) => {
                let o = ops.orient(p, b, v);
                if o < 0.0 || (o == 0.0 && sq_len(p, v) > sq_len(p, b)) {
                    Some(v)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Binary search for the vertex minimizing the polar angle around `p` on a
/// counter-clockwise convex polygon (a cyclically unimodal sequence).
fn extreme_by_angle(hull: &[P2], p: P2, ops: &mut OpCounter) -> usize {
    let n = hull.len();
    // sign(angle(i) - angle(j))
    let cmp = |i: usize, j: usize, ops: &mut OpCounter| -> i32 {
        let o = ops.orient(p, hull[j % n], hull[i % n]);
        if o > 0.0 {
            1
        } else if o < 0.0 {
            -1
        } else {
            0
        }
    };
    let extr = |i: usize, ops: &mut OpCounter| cmp(i + 1, i, ops) >= 0 && cmp(i, i + n - 1, ops) < 0;
    if extr(0, ops) {
        return 0;
    }
    let (mut lo, mut hi) = (0usize, n);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if extr(mid, ops) {
            return mid;
        }
        let ls = cmp(lo + 1, lo, ops);
        let ms = cmp(mid + 1, mid, ops);
        if ls < ms || (ls == ms && ls == cmp(lo, mid, ops)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo % n
}

/// Rotates a vertex cycle so it starts at the lexicographic minimum.
pub fn canonical(vertices: &[P2]) -> Vec<P2> {
    if vertices.is_empty() {
        return vec![];
    }
    let start = (0..vertices.len())
        .min_by(|&a, &b| lex_cmp(&vertices[a], &vertices[b]))
        .expect("non-empty");
    vertices[start..].iter().chain(&vertices[..start]).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(rows: &[[f64; 2]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn square_with_center() {
        let s = ps(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        for h in [monotone_chain_hull(&s).unwrap(), chans_hull(&s).unwrap()] {
            assert_eq!(h.vertices, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
            assert_eq!(h.area, 1.0);
        }
    }

    #[test]
    fn collinear_gives_endpoints() {
        let s = ps(&[[2.0, 2.0], [0.0, 0.0], [1.0, 1.0], [3.0, 3.0], [1.0, 1.0]]);
        for h in [monotone_chain_hull(&s).unwrap(), chans_hull(&s).unwrap()] {
            assert_eq!(h.vertices, vec![[0.0, 0.0], [3.0, 3.0]]);
            assert_eq!(h.area, 0.0);
        }
    }

    #[test]
    fn single_and_identical_points() {
        let s = ps(&[[4.0, 5.0]]);
        assert_eq!(chans_hull(&s).unwrap().vertices, vec![[4.0, 5.0]]);
        assert_eq!(monotone_chain_hull(&s).unwrap().vertices, vec![[4.0, 5.0]]);
        let s = ps(&[[1.0, 1.0]; 7]);
        assert_eq!(chans_hull(&s).unwrap().vertices, vec![[1.0, 1.0]]);
        assert_eq!(monotone_chain_hull(&s).unwrap().vertices, vec![[1.0, 1.0]]);
    }

    #[test]
    fn area_examples() {
        assert_eq!(hull_area(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), 0.5);
        assert_eq!(hull_area(&[[0.0, 0.0], [1.0, 0.0]]), 0.0);
    }

    #[test]
    fn error_pct() {
        let mk = |area| HullResult {
            vertices: vec![],
            area,
            op_count: 0,
            ops: OpCounter::default(),
            elapsed_ns: None,
        };
        assert_eq!(hull_error_pct(&mk(1.0), &mk(1.0)).unwrap(), 0.0);
        assert!((hull_error_pct(&mk(1.0), &mk(0.98)).unwrap() - 2.0).abs() < 1e-12);
        assert!(hull_error_pct(&mk(0.0), &mk(1.0)).is_err());
    }

    #[test]
    fn tangent_search_matches_scan_on_regular_polygon() {
        let m = 40;
        let poly: Vec<P2> = (0..m)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / m as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        for k in 0..100 {
            let a = std::f64::consts::TAU * k as f64 / 100.0 + 0.013;
            let p = [3.0 * a.cos(), 3.0 * a.sin()];
            let mut o1 = OpCounter::default();
            let mut o2 = OpCounter::default();
            assert_eq!(tangent(&poly, p, &mut o1), tangent_scan(&poly, p, &mut o2));
        }
    }

    #[test]
    fn rejects_3d_input() {
        let s = PointSet::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        assert!(monotone_chain_hull(&s).is_err());
    }
}
