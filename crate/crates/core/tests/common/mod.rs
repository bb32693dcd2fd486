//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

pub mod cli;
pub mod dd;

use dd::Dd;
use rand::Rng as _;
use rangent::halfspace::HalfspaceSet;
use rangent::rng::{rng_for, Rng};
use rangent::PointSet;

/// `max |a - n| / max(|a|, |n|, 1e-8)` over paired components.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

fn dd_shannon(masses: &[Dd]) -> Dd {
    masses
        .iter()
        .filter(|p| p.hi > 0.0)
        .fold(Dd::ZERO, |acc, &p| acc - p * p.ln())
}

/// Ball entropy evaluated in double-double. `normalized` divides alpha by
/// the mean squared distance over unordered pairs, summed pair by pair.
pub fn h_diff_dd(pts: &[Dd], d: usize, centers: &[Dd], alpha: f64, normalized: bool) -> Dd {
    let n = pts.len() / d;
    let k = centers.len() / d;
    let sq = |a: &[Dd], b: &[Dd]| {
        a.iter()
            .zip(b)
            .fold(Dd::ZERO, |acc, (&x, &y)| acc + (x - y) * (x - y))
    };
    let mut a = Dd::new(alpha);
    if normalized {
        let mut tot = Dd::ZERO;
        for i in 0..n {
            for j in i + 1..n {
                tot = tot + sq(&pts[i * d..(i + 1) * d], &pts[j * d..(j + 1) * d]);
            }
        }
        let pairs = Dd::new((n * (n - 1) / 2) as f64);
        a = a / (tot / pairs);
    }
    let mut masses = vec![Dd::ZERO; k];
    let mut logits = vec![Dd::ZERO; k];
    for i in 0..n {
        let x = &pts[i * d..(i + 1) * d];
        let mut best = f64::NEG_INFINITY;
        for j in 0..k {
            logits[j] = -(a * sq(x, &centers[j * d..(j + 1) * d]));
            best = best.max(logits[j].hi);
        }
        let e: Vec<Dd> = logits.iter().map(|&l| (l - Dd::new(best)).exp()).collect();
        let z = e.iter().fold(Dd::ZERO, |acc, &v| acc + v);
        for j in 0..k {
            masses[j] = masses[j] + e[j] / z;
        }
    }
    let nn = Dd::new(n as f64);
    let masses: Vec<Dd> = masses.into_iter().map(|m| m / nn).collect();
    dd_shannon(&masses)
}

/// Halfspace cell entropy in double-double: product-of-sigmoid gates over
/// `codes`, renormalized per point, column-mean masses.
pub fn h_soft_dd(pts: &[Dd], d: usize, w: &[Dd], b: &[Dd], tau: f64, codes: &[Vec<bool>]) -> Dd {
    let n = pts.len() / d;
    let m = b.len();
    let k = codes.len();
    let tau = Dd::new(tau);
    let mut masses = vec![Dd::ZERO; k];
    for i in 0..n {
        let x = &pts[i * d..(i + 1) * d];
        let sig = |u: Dd| Dd::ONE / (Dd::ONE + (-u).exp());
        let us: Vec<Dd> = (0..m)
            .map(|t| {
                let s = w[t * d..(t + 1) * d]
                    .iter()
                    .zip(x)
                    .fold(Dd::ZERO, |acc, (&wi, &xi)| acc + wi * xi)
                    - b[t];
                s / tau
            })
            .collect();
        let gates: Vec<Dd> = codes
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&us)
                    .fold(Dd::ONE, |acc, (&pos, &u)| acc * if pos { sig(u) } else { sig(-u) })
            })
            .collect();
        let z = gates.iter().fold(Dd::ZERO, |acc, &v| acc + v);
        for j in 0..k {
            masses[j] = masses[j] + gates[j] / z;
        }
    }
    let nn = Dd::new(n as f64);
    let masses: Vec<Dd> = masses.into_iter().map(|m| m / nn).collect();
    dd_shannon(&masses)
}

/// Central differences of `f` at `x` in double-double, step
/// `1e-10 * (1 + |x_i|)`.
pub fn fd_grad(x: &[f64], f: impl Fn(&[Dd]) -> Dd) -> Vec<f64> {
    let base: Vec<Dd> = x.iter().map(|&v| Dd::new(v)).collect();
    (0..x.len())
        .map(|i| {
            let h = 1e-10 * (1.0 + x[i].abs());
            let mut p = base.clone();
            p[i] = p[i] + Dd::new(h);
            let fp = f(&p);
            p[i] = base[i] - Dd::new(h);
            let fm = f(&p);
            ((fp - fm) / Dd::new(2.0 * h)).to_f64()
        })
        .collect()
}

pub fn to_dd(v: &[f64]) -> Vec<Dd> {
    v.iter().map(|&x| Dd::new(x)).collect()
}

pub fn uniform_points(n: usize, d: usize, rng: &mut Rng) -> PointSet {
    PointSet::from_flat((0..n * d).map(|_| rng.random::<f64>()).collect(), d).unwrap()
}

// ---------------------------------------------------------------- hulls

fn orient_i(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i128 {
    (b.0 - a.0) as i128 * (c.1 - a.1) as i128 - (b.1 - a.1) as i128 * (c.0 - a.0) as i128
}

/// O(n^3) hull of integer points: a point is a vertex when it is the
/// endpoint of a supporting pair (all points weakly left of the directed
/// segment and collinear ones inside it) and lies strictly inside no such
/// segment. Output is counter-clockwise from the lexicographic minimum.
pub fn brute_hull(pts: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut uniq: Vec<(i64, i64)> = pts.to_vec();
    uniq.sort();
    uniq.dedup();
    if uniq.len() <= 2 {
        return uniq;
    }
    let within = |a: (i64, i64), b: (i64, i64), c: (i64, i64)| {
        c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
    };
    let mut edges = Vec::new();
    for &a in &uniq {
        for &b in &uniq {
            if a == b {
                continue;
            }
            let ok = uniq.iter().all(|&c| {
                let o = orient_i(a, b, c);
                o > 0 || (o == 0 && within(a, b, c))
            });
            if ok {
                edges.push((a, b));
            }
        }
    }
    let mut verts: Vec<(i64, i64)> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    verts.sort();
    verts.dedup();
    verts.retain(|&v| {
        !edges
            .iter()
            .any(|&(a, b)| v != a && v != b && orient_i(a, b, v) == 0 && within(a, b, v))
    });
    if verts.len() <= 2 {
        return verts;
    }
    let start = verts[0];
    let mut rest: Vec<(i64, i64)> = verts[1..].to_vec();
    // Counter-clockwise around the lexicographic minimum: all other
    // vertices lie in a half-plane, so orientation is a total order.
    rest.sort_by(|&p, &q| 0.cmp(&orient_i(start, p, q)));
    let mut out = vec![start];
    out.extend(rest);
    out
}

pub fn int_points(v: &[(i64, i64)]) -> PointSet {
    PointSet::from_rows(&v.iter().map(|&(x, y)| [x as f64, y as f64]).collect::<Vec<_>>()).unwrap()
}

pub fn as_int(v: &[[f64; 2]]) -> Vec<(i64, i64)> {
    v.iter().map(|p| (p[0] as i64, p[1] as i64)).collect()
}

// --------------------------------------------------------------- maxima

/// Indices of points not strictly dominated in every coordinate.
pub fn brute_maxima(s: &PointSet) -> Vec<usize> {
    (0..s.len())
        .filter(|&i| {
            let p = s.point(i);
            !(0..s.len()).any(|j| s.point(j).iter().zip(p).all(|(a, b)| a > b))
        })
        .collect()
}

// ---------------------------------------------------------- separability

fn seg_intersect(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> bool {
    let on = |p: (i64, i64), q: (i64, i64), r: (i64, i64)| {
        r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
    };
    let d1 = orient_i(a, b, c).signum();
    let d2 = orient_i(a, b, d).signum();
    let d3 = orient_i(c, d, a).signum();
    let d4 = orient_i(c, d, b).signum();
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on(a, b, c)) || (d2 == 0 && on(a, b, d)) || (d3 == 0 && on(c, d, a)) || (d4 == 0 && on(c, d, b))
}

fn in_closed_hull(p: (i64, i64), set: &[(i64, i64)]) -> bool {
    let n = set.len();
    if set.contains(&p) {
        return true;
    }
    for i in 0..n {
        for j in i + 1..n {
            if orient_i(set[i], set[j], p) == 0 && seg_intersect(set[i], set[j], p, p) {
                return true;
            }
            for k in j + 1..n {
                let o1 = orient_i(set[i], set[j], p).signum();
                let o2 = orient_i(set[j], set[k], p).signum();
                let o3 = orient_i(set[k], set[i], p).signum();
                let area = orient_i(set[i], set[j], set[k]);
                if area != 0 && ((o1 >= 0 && o2 >= 0 && o3 >= 0) || (o1 <= 0 && o2 <= 0 && o3 <= 0)) {
                    return true;
                }
            }
        }
    }
    false
}

/// Strict linear separability of two integer point sets: their closed
/// convex hulls are disjoint.
pub fn separable_exact(a: &[(i64, i64)], b: &[(i64, i64)]) -> bool {
    if a.is_empty() || b.is_empty() {
        return true;
    }
    if a.iter().any(|&p| in_closed_hull(p, b)) || b.iter().any(|&p| in_closed_hull(p, a)) {
        return false;
    }
    for i in 0..a.len() {
        for j in i..a.len() {
            for k in 0..b.len() {
                for l in k..b.len() {
                    if seg_intersect(a[i], a[j], b[k], b[l]) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Minimum normalized entropy over all set partitions of `pts` into at
/// least `parts_min` parts, each separable from its complement, by
/// exhaustive restricted-growth enumeration.
pub fn naive_min_entropy(pts: &[(i64, i64)], parts_min: usize) -> Option<f64> {
    let n = pts.len();
    let full = (1u32 << n) - 1;
    let realizable: Vec<bool> = (0..=full)
        .map(|mask| {
            if mask == 0 {
                return false;
            }
            let (a, b): (Vec<_>, Vec<_>) = (0..n).partition(|&i| mask >> i & 1 == 1);
            let a: Vec<_> = a.into_iter().map(|i| pts[i]).collect();
            let b: Vec<_> = b.into_iter().map(|i| pts[i]).collect();
            separable_exact(&a, &b)
        })
        .collect();
    let mut best: Option<f64> = None;
    let mut labels = vec![0usize; n];
    fn rec(
        i: usize,
        used: usize,
        labels: &mut Vec<usize>,
        n: usize,
        parts_min: usize,
        realizable: &[bool],
        best: &mut Option<f64>,
    ) {
        if i == n {
            if used < parts_min {
                return;
            }
            let mut masks = vec![0u32; used];
            for (p, &l) in labels.iter().enumerate() {
                masks[l] |= 1 << p;
            }
            if masks.iter().all(|&m| realizable[m as usize]) {
                let h: f64 = masks
                    .iter()
                    .map(|&m| {
                        let c = m.count_ones() as f64;
                        c / n as f64 * (n as f64 / c).ln()
                    })
                    .sum();
                if best.is_none_or(|b| h < b) {
                    *best = Some(h);
                }
            }
            return;
        }
        for l in 0..=used {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), labels, n, parts_min, realizable, best);
        }
    }
    rec(0, 0, &mut labels, n, parts_min, &realizable, &mut best);
    best
}

pub fn random_int_points(n: usize, range: i64, rng: &mut Rng) -> Vec<(i64, i64)> {
    (0..n)
        .map(|_| (rng.random_range(0..=range), rng.random_range(0..=range)))
        .collect()
}

// ------------------------------------------------------ margin instances

/// Points in `[0,1]^2` at distance at least `gap` from every one of `m`
/// random lines through the unit square, together with those lines
/// (unit normals), for the given `tau`.
pub fn margin_instance(seed: u64, n: usize, m: usize, gap: f64, tau: f64) -> (PointSet, HalfspaceSet) {
    let mut rng = rng_for(seed, 77);
    let mut w = Vec::with_capacity(2 * m);
    let mut b = Vec::with_capacity(m);
    for _ in 0..m {
        let th: f64 = rng.random::<f64>() * std::f64::consts::PI;
        let (nx, ny) = (th.cos(), th.sin());
        let px: f64 = 0.3 + 0.4 * rng.random::<f64>();
        let py: f64 = 0.3 + 0.4 * rng.random::<f64>();
        w.extend([nx, ny]);
        b.push(nx * px + ny * py);
    }
    let h = HalfspaceSet::new(w, b, 2, tau).unwrap();
    let mut flat = Vec::with_capacity(2 * n);
    while flat.len() < 2 * n {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        if (0..m).all(|t| h.score(t, &x).abs() >= gap) {
            flat.extend(x);
        }
    }
    (PointSet::from_flat(flat, 2).unwrap(), h)
}

/// Entropy of the hard sign-pattern cells, counted directly.
pub fn hard_cell_labels(s: &PointSet, h: &HalfspaceSet) -> Vec<usize> {
    let mut codes: Vec<Vec<bool>> = Vec::new();
    s.iter()
        .map(|x| {
            let c: Vec<bool> = (0..h.m()).map(|t| h.score(t, x) >= 0.0).collect();
            match codes.iter().position(|e| *e == c) {
                Some(i) => i,
                None => {
                    codes.push(c);
                    codes.len() - 1
                }
            }
        })
        .collect()
}

// ------------------------------------------------------- gradient suites

pub const ALPHAS: [f64; 3] = [1.0, 10.0, 100.0];
pub const TAUS: [f64; 3] = [0.05, 0.25, 1.0];

/// One seeded configuration for the ball-entropy gradient check.
pub struct GradCase {
    pub desc: String,
    pub max_rel_err: f64,
}

/// Seeded random ball-entropy configuration (n <= 64, d <= 3); returns the
/// worst relative error over point and anchor gradients.
pub fn h_diff_grad_case(seed: u64) -> GradCase {
    use rangent::entropy::{h_diff, AnchorSet, ScaleMode};
    let mut rng = rng_for(seed, 101);
    let n = rng.random_range(2..=64);
    let d = rng.random_range(1..=3);
    let k = rng.random_range(1..=6);
    let alpha = ALPHAS[rng.random_range(0..3)];
    let mode = if rng.random::<bool>() { ScaleMode::Normalized } else { ScaleMode::Raw };
    let s = uniform_points(n, d, &mut rng);
    let centers: Vec<f64> = (0..k * d).map(|_| rng.random::<f64>()).collect();
    let a = AnchorSet::new(centers.clone(), d, alpha, mode).unwrap();
    let rep = h_diff(&s, &a, true).unwrap();
    let normalized = mode == ScaleMode::Normalized;
    let cdd = to_dd(&centers);
    let fd_x = fd_grad(s.as_flat(), |p| h_diff_dd(p, d, &cdd, alpha, normalized));
    let pdd = to_dd(s.as_flat());
    let fd_c = fd_grad(&centers, |c| h_diff_dd(&pdd, d, c, alpha, normalized));
    let ex = max_rel_err(rep.grad_points.as_ref().unwrap(), &fd_x);
    let ec = max_rel_err(rep.grad_params.as_ref().unwrap(), &fd_c);
    GradCase {
        desc: format!("seed={seed} n={n} d={d} k={k} alpha={alpha} mode={mode:?}"),
        max_rel_err: ex.max(ec),
    }
}

/// Seeded random halfspace-entropy configuration (n <= 64, d <= 3, m <= 3);
/// returns the worst relative error over point, normal and offset gradients.
pub fn h_soft_grad_case(seed: u64) -> GradCase {
    use rangent::halfspace::{enumerate_cells, h_soft};
    let mut rng = rng_for(seed, 202);
    let n = rng.random_range(2..=64);
    let d = rng.random_range(1..=3);
    let m = rng.random_range(1..=3);
    let tau = TAUS[rng.random_range(0..3)];
    let s = uniform_points(n, d, &mut rng);
    let mut w = Vec::with_capacity(m * d);
    let mut b = Vec::with_capacity(m);
    for _ in 0..m {
        let normal: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0 + 0.1).collect();
        let through: f64 = normal.iter().map(|v| v * rng.random::<f64>()).sum();
        w.extend(normal);
        b.push(through);
    }
    let h = HalfspaceSet::new(w.clone(), b.clone(), d, tau).unwrap();
    let g = enumerate_cells(&s, &h).unwrap();
    let rep = h_soft(&s, &h, &g, true).unwrap();
    let (wdd, bdd) = (to_dd(&w), to_dd(&b));
    let fd_x = fd_grad(s.as_flat(), |p| h_soft_dd(p, d, &wdd, &bdd, tau, &g.codes));
    let pdd = to_dd(s.as_flat());
    let mut params = w.clone();
    params.extend(&b);
    let fd_p = fd_grad(&params, |v| h_soft_dd(&pdd, d, &v[..m * d], &v[m * d..], tau, &g.codes));
    let ex = max_rel_err(rep.grad_points.as_ref().unwrap(), &fd_x);
    let ep = max_rel_err(rep.grad_params.as_ref().unwrap(), &fd_p);
    GradCase {
        desc: format!("seed={seed} n={n} d={d} m={m} tau={tau} K={}", g.k()),
        max_rel_err: ex.max(ep),
    }
}

// ---------------------------------------------------- hull input families

/// Seeded hull input cycling through random and degenerate families, with
/// a random partition for the partition-merge hull.
pub fn hull_family(seed: u64) -> (PointSet, Vec<usize>) {
    let mut rng = rng_for(seed, 303);
    let n: usize = rng.random_range(1..=200);
    let rows: Vec<[f64; 2]> = match seed % 6 {
        0 => (0..n).map(|_| [rng.random(), rng.random()]).collect(),
        // Small integer grid: many duplicates and collinear triples.
        1 => (0..n)
            .map(|_| [rng.random_range(0..5) as f64, rng.random_range(0..5) as f64])
            .collect(),
        2 => {
            let (a, b) = (rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64);
            (0..n)
                .map(|_| {
                    let t = rng.random_range(-20..=20) as f64;
                    [a * t, b * t + 1.0]
                })
                .collect()
        }
        3 => vec![[0.25, -1.5]; n],
        4 => (0..rng.random_range(1..=4)).map(|_| [rng.random(), rng.random()]).collect(),
        _ => {
            // Points on a circle plus interior noise.
            (0..n)
                .map(|i| {
                    if i % 2 == 0 {
                        let th = rng.random::<f64>() * std::f64::consts::TAU;
                        [th.cos(), th.sin()]
                    } else {
                        [0.5 * rng.random::<f64>() - 0.25, 0.5 * rng.random::<f64>() - 0.25]
                    }
                })
                .collect()
        }
    };
    let parts = rng.random_range(1..=8);
    let labels = (0..rows.len()).map(|_| rng.random_range(0..parts)).collect();
    (PointSet::from_rows(&rows).unwrap(), labels)
}

/// Two-sided Student-t critical values `(df, t, alpha)` from standard tables.
pub const T_TABLE: [(usize, f64, f64); 12] = [
    (1, 12.706, 0.05),
    (2, 4.303, 0.05),
    (3, 3.182, 0.05),
    (4, 2.776, 0.05),
    (5, 2.571, 0.05),
    (9, 2.262, 0.05),
    (10, 2.228, 0.05),
    (20, 2.086, 0.05),
    (30, 2.042, 0.05),
    (4, 4.604, 0.01),
    (9, 3.250, 0.01),
    (20, 2.845, 0.01),
];
