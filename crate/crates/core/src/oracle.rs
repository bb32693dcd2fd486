//! Exact range-partition entropies for small 2-D instances under the
//! halfplane range family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::hull::monotone_chain_pts;
use crate::geometry::{orient, to_p2, OpCounter, P2};
use crate::partition::HardPartition;
use crate::points::PointSet;

pub const MAX_SUBSET_N: usize = 20;
pub const MAX_PARTITION_N: usize = 15;
pub const MAX_ARRANGEMENT_N: usize = 64;
pub const MAX_ARRANGEMENT_M: usize = 3;
/// Candidate-line perturbation, relative to the instance diameter.
pub const LINE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OraclePartitionResult {
    pub partition: HardPartition,
    /// `sum_P |P| ln(n / |P|)` in nats.
    pub entropy_unnormalized: f64,
    pub entropy_normalized: f64,
}

/// A line `w . x = b`; side `w . x > b` is "positive".
pub type Line = ([f64; 2], f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrangementResult {
    pub result: OraclePartitionResult,
    pub lines: Vec<Line>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleJson {
    pub entropy_nats: f64,
    pub entropy_normalized: f64,
    pub partition: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines: Option<Vec<Line>>,
}

impl OraclePartitionResult {
    pub fn to_json(&self, lines: Option<&[Line]>) -> OracleJson {
        OracleJson {
            entropy_nats: self.entropy_unnormalized,
            entropy_normalized: self.entropy_normalized,
            partition: self.partition.labels.clone(),
            lines: lines.map(|l| l.to_vec()),
        }
    }
}

/// Subsets of the input that are strictly linearly separable from their
/// complement, as bitmasks over point indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RealizableSubsetIndex {
    pub n: usize,
    /// Increasing; excludes the empty and the full set.
    pub subsets: Vec<u32>,
}

impl RealizableSubsetIndex {
    pub fn contains(&self, mask: u32) -> bool {
        self.subsets.binary_search(&mask).is_ok()
    }
}

fn part_cost(size: usize, n: usize) -> f64 {
    if size == 0 || size == n {
        0.0
    } else {
        size as f64 * (n as f64 / size as f64).ln()
    }
}

pub fn partition_entropy(p: &HardPartition) -> Result<OraclePartitionResult> {
    if p.part_sizes.contains(&0) || p.part_sizes.iter().sum::<usize>() != p.n() {
        return Err(Error::invalid("partition has an empty or inconsistent part"));
    }
    let n = p.n();
    let u: f64 = p.part_sizes.iter().map(|&s| part_cost(s, n)).sum();
    Ok(OraclePartitionResult {
        partition: p.clone(),
        entropy_unnormalized: u,
        entropy_normalized: u / n as f64,
    })
}

/// Entropy of the partition given by generating cluster labels.
pub fn generating_partition_entropy(labels: &[usize]) -> Result<OraclePartitionResult> {
    partition_entropy(&HardPartition::from_labels(labels)?)
}

fn hull_of(pts: &[P2]) -> Vec<P2> {
    let mut ops = OpCounter::default();
    monotone_chain_pts(pts, &mut ops)
}

/// Edges `p -> q` whose open right side is outside the hull.
fn outward_edges(hull: &[P2]) -> Vec<(P2, P2)> {
    match hull.len() {
        0 | 1 => vec![],
        2 => vec![(hull[0], hull[1]), (hull[1], hull[0])],
        h => (0..h).map(|i| (hull[i], hull[(i + 1) % h])).collect(),
    }
}

/// Whether two point sets have disjoint convex hulls (strict separation).
pub fn strictly_separable(a: &[P2], b: &[P2]) -> bool {
    let ha = hull_of(a);
    let hb = hull_of(b);
    let right_of = |pts: &[P2], e: &(P2, P2)| pts.iter().all(|&x| orient(e.0, e.1, x) < 0.0);
    if outward_edges(&hb).iter().any(|e| right_of(&ha, e)) {
        return true;
    }
    if outward_edges(&ha).iter().any(|e| right_of(&hb, e)) {
        return true;
    }
    // Closest pair realized at two vertices.
    for &p in &ha {
        for &q in &hb {
            let v = [q[0] - p[0], q[1] - p[1]];
            if v == [0.0, 0.0] {
                continue;
            }
            let dot = |x: P2, o: P2| (x[0] - o[0]) * v[0] + (x[1] - o[1]) * v[1];
            if ha.iter().all(|&x| dot(x, p) <= 0.0) && hb.iter().all(|&y| dot(y, q) >= 0.0) {
                return true;
            }
        }
    }
    false
}

fn split(pts: &[P2], mask: u32) -> (Vec<P2>, Vec<P2>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, &p) in pts.iter().enumerate() {
        if mask >> i & 1 == 1 {
            a.push(p);
        } else {
            b.push(p);
        }
    }
    (a, b)
}

fn realizable_table(pts: &[P2]) -> Vec<bool> {
    let n = pts.len();
    let full = (1u32 << n) - 1;
    let mut table = vec![false; 1 << n];
    // Separability is symmetric: test masks holding point 0 only.
    let mut mask = 1u32;
    while mask < full {
        let (a, b) = split(pts, mask);
        if strictly_separable(&a, &b) {
            table[mask as usize] = true;
            table[(full ^ mask) as usize] = true;
        }
        mask += 2;
    }
    table
}

fn check_points_2d(s: &PointSet, limit: usize) -> Result<Vec<P2>> {
    let pts = to_p2(s)?;
    if pts.len() > limit {
        return Err(Error::SizeGuard {
            what: "oracle point count",
            limit,
            found: pts.len(),
        });
    }
    if pts.is_empty() {
        return Err(Error::invalid("oracle needs at least one point"));
    }
    Ok(pts)
}

pub fn realizable_subsets_2d(s: &PointSet) -> Result<RealizableSubsetIndex> {
    let pts = check_points_2d(s, MAX_SUBSET_N)?;
    if pts.len() == 1 {
        return Ok(RealizableSubsetIndex { n: 1, subsets: vec![] });
    }
    let table = realizable_table(&pts);
    let subsets = (0..table.len() as u32).filter(|&m| table[m as usize]).collect();
    Ok(RealizableSubsetIndex { n: pts.len(), subsets })
}

/// Minimum partition entropy over partitions into at least `parts_min`
/// realizable parts, by dynamic programming over bitmasks.
pub fn min_entropy_partition(s: &PointSet, parts_min: usize) -> Result<OraclePartitionResult> {
    let pts = check_points_2d(s, MAX_PARTITION_N)?;
    if parts_min < 2 {
        return Err(Error::invalid("parts_min must be at least 2"));
    }
    let n = pts.len();
    if parts_min > n {
        return Err(Error::NoRealizableCover);
    }
    let table = realizable_table(&pts);
    let cost: Vec<f64> = (0..=n).map(|sz| part_cost(sz, n)).collect();
    let cap = parts_min;
    let states = 1usize << n;
    // best[mask * (cap + 1) + c]: minimum over covers of `mask` by
    // realizable parts, c = min(parts, cap).
    let idx = |mask: usize, c: usize| mask * (cap + 1) + c;
    let mut best = vec![f64::INFINITY; states * (cap + 1)];
    let mut choice = vec![(0u32, 0usize); states * (cap + 1)];
    best[idx(0, 0)] = 0.0;
    for mask in 1..states {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        // Submasks of `mask` that contain its lowest point.
        let mut sub = rest;
        loop {
            let part = sub | low;
            if table[part] {
                let remaining = mask ^ part;
                let pc = cost[part.count_ones() as usize];
                for c in 0..=cap {
                    let prev = best[idx(remaining, c)];
                    if prev.is_finite() {
                        let nc = (c + 1).min(cap);
                        let v = prev + pc;
                        if v < best[idx(mask, nc)] {
                            best[idx(mask, nc)] = v;
                            choice[idx(mask, nc)] = (part as u32, c);
                        }
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let full = states - 1;
    if !best[idx(full, cap)].is_finite() {
        return Err(Error::NoRealizableCover);
    }
    // Walk the recorded choices back.
    let mut labels = vec![0usize; n];
    let mut mask = full;
    let mut c = cap;
    let mut part_id = 0;
    while mask != 0 {
        let (part, prev_c) = choice[idx(mask, c)];
        let part = part as usize;
        let remaining = mask ^ part;
        for (i, l) in labels.iter_mut().enumerate() {
            if part >> i & 1 == 1 {
                *l = part_id;
            }
        }
        part_id += 1;
        mask = remaining;
        c = prev_c;
    }
    partition_entropy(&HardPartition::from_labels(&labels)?)
}

fn diameter(pts: &[P2]) -> f64 {
    let mut d2: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dx = pts[i][0] - pts[j][0];
            let dy = pts[i][1] - pts[j][1];
            d2 = d2.max(dx * dx + dy * dy);
        }
    }
    d2.sqrt()
}

fn side_mask(pts: &[P2], line: &Line) -> u64 {
    pts.iter()
        .enumerate()
        .filter(|(_, p)| line.0[0] * p[0] + line.0[1] * p[1] > line.1)
        .fold(0u64, |m, (i, _)| m | 1 << i)
}

/// Distinct nontrivial bipartitions cut by lines through point pairs, with
/// their offset and slightly rotated variants. Each bipartition is keyed by
/// the side that excludes point 0 and kept with the first line producing it.
pub fn candidate_bipartitions(pts: &[P2]) -> Vec<(u64, Line)> {
    let n = pts.len();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let eps = LINE_EPS * diameter(pts);
    let mut out: Vec<(u64, Line)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 0..n {
        for j in i + 1..n {
            let u = [pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]];
            let len = (u[0] * u[0] + u[1] * u[1]).sqrt();
            if len == 0.0 {
                continue;
            }
            let w = [-u[1] / len, u[0] / len];
            let mid = [(pts[i][0] + pts[j][0]) * 0.5, (pts[i][1] + pts[j][1]) * 0.5];
            let b = w[0] * pts[i][0] + w[1] * pts[i][1];
            let theta = eps / len;
            let (sn, cs) = theta.sin_cos();
            let mut lines: Vec<Line> = vec![(w, b + eps), (w, b - eps)];
            for sg in [1.0, -1.0] {
                let wr = [cs * w[0] - sg * sn * w[1], sg * sn * w[0] + cs * w[1]];
                lines.push((wr, wr[0] * mid[0] + wr[1] * mid[1]));
            }
            for line in lines {
                let mask = side_mask(pts, &line);
                if mask == 0 || mask == full {
                    continue;
                }
                let key = if mask & 1 == 1 { full ^ mask } else { mask };
                if seen.insert(key) {
                    out.push((key, line));
                }
            }
        }
    }
    out
}

fn cells_entropy(masks: &[u64], n: usize) -> (f64, Vec<usize>) {
    let mut counts = [0usize; 1 << MAX_ARRANGEMENT_M];
    let mut codes = Vec::with_capacity(n);
    for i in 0..n {
        let code = masks
            .iter()
            .enumerate()
            .fold(0usize, |c, (t, m)| c | ((m >> i & 1) as usize) << t);
        counts[code] += 1;
        codes.push(code);
    }
    let u = counts.iter().map(|&c| part_cost(c, n)).sum();
    (u, codes)
}

/// Minimum cell-partition entropy over arrangements of `m` lines inducing
/// `m` distinct nontrivial bipartitions, by branch and bound (refining a
/// partition never lowers its entropy).
pub fn min_entropy_arrangement(s: &PointSet, m: usize) -> Result<ArrangementResult> {
    let pts = check_points_2d(s, MAX_ARRANGEMENT_N)?;
    if m > MAX_ARRANGEMENT_M {
        return Err(Error::SizeGuard {
            what: "arrangement line count",
            limit: MAX_ARRANGEMENT_M,
            found: m,
        });
    }
    let n = pts.len();
    if m == 0 {
        return Ok(ArrangementResult {
            result: partition_entropy(&HardPartition::single(n)?)?,
            lines: vec![],
        });
    }
    let mut cands: Vec<(f64, u64, Line)> = candidate_bipartitions(&pts)
        .into_iter()
        .map(|(mask, line)| (cells_entropy(&[mask], n).0, mask, line))
        .collect();
    if cands.len() < m {
        return Err(Error::invalid(format!(
            "only {} distinct line bipartitions exist, {m} requested",
            cands.len()
        )));
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let masks: Vec<u64> = cands.iter().map(|c| c.1).collect();
    let mut best = (f64::INFINITY, Vec::new());
    let mut chosen = Vec::with_capacity(m);
    search(&masks, &cands, m, 0, &mut chosen, n, &mut best);
    let labels = cells_entropy(&best.1.iter().map(|&i| masks[i]).collect::<Vec<_>>(), n).1;
    let result = partition_entropy(&HardPartition::from_labels(&labels)?)?;
    Ok(ArrangementResult {
        result,
        lines: best.1.iter().map(|&i| cands[i].2).collect(),
    })
}

fn search(
    masks: &[u64],
    cands: &[(f64, u64, Line)],
    m: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    n: usize,
    best: &mut (f64, Vec<usize>),
) {
    let tol = 1e-12 * n as f64;
    for i in from..masks.len() {
        // Every remaining candidate alone is already no better.
        if cands[i].0 >= best.0 - tol {
            break;
        }
        chosen.push(i);
        let sel: Vec<u64> = chosen.iter().map(|&c| masks[c]).collect();
        let (u, _) = cells_entropy(&sel, n);
        if u < best.0 - tol {
            if chosen.len() == m {
                *best = (u, chosen.clone());
            } else {
                search(masks, cands, m, i + 1, chosen, n, best);
            }
        }
        chosen.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(rows: &[[f64; 2]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn partition_entropy_examples() {
        let r = partition_entropy(&HardPartition::single(8).unwrap()).unwrap();
        assert_eq!(r.entropy_unnormalized, 0.0);
        let r = partition_entropy(&HardPartition::from_sizes(&[2, 2]).unwrap()).unwrap();
        assert!((r.entropy_unnormalized - 4.0 * 2f64.ln()).abs() < 1e-12);
        assert!((r.entropy_normalized - 2f64.ln()).abs() < 1e-12);
        let r = partition_entropy(&HardPartition::from_sizes(&[1, 1, 1]).unwrap()).unwrap();
        assert!((r.entropy_unnormalized - 3.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_points_give_both_singletons() {
        let idx = realizable_subsets_2d(&ps(&[[0.0, 0.0], [1.0, 0.0]])).unwrap();
        assert_eq!(idx.subsets, vec![1, 2]);
        let r = min_entropy_partition(&ps(&[[0.0, 0.0], [1.0, 0.0]]), 2).unwrap();
        assert!((r.entropy_unnormalized - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn collinear_middle_point_not_realizable() {
        let idx = realizable_subsets_2d(&ps(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])).unwrap();
        // {a}=1, {a,b}=3, {c}=4, {b,c}=6
        assert_eq!(idx.subsets, vec![1, 3, 4, 6]);
        assert!(!idx.contains(2) && !idx.contains(5));
    }

    #[test]
    fn duplicates_cannot_be_split() {
        assert!(!strictly_separable(&[[1.0, 1.0]], &[[1.0, 1.0], [0.0, 0.0]]));
    }

    #[test]
    fn two_clusters() {
        let s = ps(&[
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [5.0, 5.0],
            [5.1, 5.0],
            [5.0, 5.1],
        ]);
        let clusters = partition_entropy(&HardPartition::from_labels(&[0, 0, 0, 1, 1, 1]).unwrap()).unwrap();
        assert!((clusters.entropy_unnormalized - 6.0 * 2f64.ln()).abs() < 1e-12);
        // Cutting one hull vertex off is cheaper than the cluster split.
        let r = min_entropy_partition(&s, 2).unwrap();
        assert!((r.entropy_unnormalized - (6f64.ln() + 5.0 * 1.2f64.ln())).abs() < 1e-12);
        assert!(r.entropy_unnormalized < clusters.entropy_unnormalized);
    }

    #[test]
    fn four_collinear() {
        let s = ps(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let r = min_entropy_partition(&s, 2).unwrap();
        assert!((r.entropy_unnormalized - (4f64.ln() + 3.0 * (4f64 / 3.0).ln())).abs() < 1e-12);
        let mut sizes = r.partition.part_sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![1, 3]);
    }

    #[test]
    fn interior_point_blocks_singletons_cover() {
        let s = ps(&[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [1.0, 1.0]]);
        assert!(min_entropy_partition(&s, 4).is_err());
        assert!(min_entropy_partition(&s, 3).is_ok());
    }

    #[test]
    fn size_guards() {
        let rows: Vec<[f64; 2]> = (0..16).map(|i| [i as f64, (i * i) as f64]).collect();
        assert!(matches!(min_entropy_partition(&ps(&rows), 2), Err(Error::SizeGuard { .. })));
        let rows: Vec<[f64; 2]> = (0..21).map(|i| [i as f64, (i * i) as f64]).collect();
        assert!(matches!(realizable_subsets_2d(&ps(&rows)), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn arrangement_prefers_unbalanced_split() {
        let mut rows = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (10.0, 0.0)] {
            for (dx, dy) in [(0.0, 0.0), (0.3, 0.1), (0.1, 0.4), (0.5, 0.6)] {
                rows.push([cx + dx, cy + dy]);
            }
        }
        let s = ps(&rows);
        let r = min_entropy_arrangement(&s, 1).unwrap();
        let want = 8f64.ln() + 7.0 * (8f64 / 7.0).ln();
        assert!((r.result.entropy_unnormalized - want).abs() < 1e-12);
        assert_eq!(r.lines.len(), 1);
        let r0 = min_entropy_arrangement(&s, 0).unwrap();
        assert_eq!(r0.result.entropy_unnormalized, 0.0);
        // Monotone in the number of lines.
        let r2 = min_entropy_arrangement(&s, 2).unwrap();
        assert!(r2.result.entropy_unnormalized >= r.result.entropy_unnormalized);
    }

    #[test]
    fn json_shape() {
        let r = partition_entropy(&HardPartition::from_sizes(&[1, 1]).unwrap()).unwrap();
        let v = serde_json::to_value(r.to_json(Some(&[([1.0, 0.0], 0.5)]))).unwrap();
        assert_eq!(v["lines"], serde_json::json!([[[1.0, 0.0], 0.5]]));
        assert_eq!(v["partition"], serde_json::json!([0, 1]));
    }
}
