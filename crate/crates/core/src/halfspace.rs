//! Halfspace-aware soft entropy.
//!
//! `m` hyperplanes `(w_t, b_t)` define soft indicators
//! `h_t(x) = sigma((w_t . x - b_t) / tau)`. Each cell of the arrangement is a
//! sign pattern over the hyperplanes and receives the normalized product
//! gate `g_j(x) ∝ prod_t h_t^{a_jt} (1 - h_t)^{1 - a_jt}`. The soft entropy is
//! the Shannon entropy of the mean gates `q_j(S)`.
//!
//! Gates are evaluated in log space (`log h = -softplus(-u)`) and
//! normalized with max subtraction, so saturated indicators never produce
//! a zero denominator.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::entropy::{norm, shannon, EntropyReport, MAX_HALVINGS, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::partition::HardPartition;
use crate::points::PointSet;
use crate::rng::rng_for;

/// `m` hyperplanes sharing one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSet {
    w: Vec<f64>,
    b: Vec<f64>,
    dim: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfspaceSetJson {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub tau: f64,
}

impl HalfspaceSet {
    pub fn new(w: Vec<f64>, b: Vec<f64>, dim: usize, tau: f64) -> Result<Self> {
        let m = b.len();
        if m == 0 || dim == 0 || w.len() != m * dim {
            return Err(Error::invalid("halfspace set needs m >= 1 normals of a common dimension"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be positive and finite, got {tau}")));
        }
        if let Some(i) = w.iter().chain(&b).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "hyperplane parameters",
                index: if i < w.len() { i / dim } else { i - w.len() },
            });
        }
        for t in 0..m {
            if norm(&w[t * dim..(t + 1) * dim]) == 0.0 {
                return Err(Error::invalid(format!("hyperplane {t} has a zero normal")));
            }
        }
        Ok(Self { w, b, dim, tau })
    }

    pub fn from_rows<R: AsRef<[f64]>>(w: &[R], b: &[f64], tau: f64) -> Result<Self> {
        let dim = w.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut flat = Vec::with_capacity(w.len() * dim);
        for r in w {
            if r.as_ref().len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.as_ref().len(),
                });
            }
            flat.extend_from_slice(r.as_ref());
        }
        Self::new(flat, b.to_vec(), dim, tau)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn normal(&self, t: usize) -> &[f64] {
        &self.w[t * self.dim..(t + 1) * self.dim]
    }

    #[inline]
    pub fn offset(&self, t: usize) -> f64 {
        self.b[t]
    }

    pub fn normals_flat(&self) -> &[f64] {
        &self.w
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.w.clone(), self.b.clone(), self.dim, tau)
    }

    /// `w_t . x - b_t`
    #[inline]
    pub fn score(&self, t: usize, x: &[f64]) -> f64 {
        dot(self.normal(t), x) - self.b[t]
    }

    /// Hard sign pattern of `x`: bit `t` set when `w_t . x >= b_t`.
    pub fn sign_pattern(&self, x: &[f64]) -> Vec<bool> {
        (0..self.m()).map(|t| self.score(t, x) >= 0.0).collect()
    }

    pub fn to_json(&self) -> HalfspaceSetJson {
        HalfspaceSetJson {
            w: self.w.chunks_exact(self.dim).map(|r| r.to_vec()).collect(),
            b: self.b.clone(),
            tau: self.tau,
        }
    }

    pub fn from_json(doc: &HalfspaceSetJson) -> Result<Self> {
        Self::from_rows(&doc.w, &doc.b, doc.tau)
    }

    fn check_points(&self, s: &PointSet) -> Result<()> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                found: self.dim,
            });
        }
        Ok(())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `sigma((w . x - b) / tau)`.
pub fn soft_halfspace(x: &[f64], w: &[f64], b: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau must be positive"));
    }
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: x.len(),
        });
    }
    if norm(w) == 0.0 {
        return Err(Error::invalid("zero normal"));
    }
    Ok(sigmoid((dot(w, x) - b) / tau))
}

/// Data-realized cells of an arrangement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellGating {
    /// Distinct sign patterns in lexicographic order (`false < true`).
    pub codes: Vec<Vec<bool>>,
    /// Soft masses `q_j(S)` of the points the cells were enumerated from.
    pub soft_masses: Vec<f64>,
    /// Some point lay exactly on a hyperplane (and was put on its
    /// nonnegative side).
    pub on_boundary: bool,
}

impl CellGating {
    pub fn k(&self) -> usize {
        self.codes.len()
    }

    /// Gating over explicit codes; soft masses are left empty until
    /// [`h_soft`] is evaluated.
    pub fn from_codes(mut codes: Vec<Vec<bool>>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::invalid("gating needs at least one cell"));
        }
        let m = codes[0].len();
        if codes.iter().any(|c| c.len() != m) {
            return Err(Error::invalid("cell codes of unequal length"));
        }
        codes.sort();
        codes.dedup();
        Ok(Self {
            codes,
            soft_masses: vec![],
            on_boundary: false,
        })
    }

    fn index_of(&self, code: &[bool]) -> Option<usize> {
        self.codes.binary_search_by(|c| c.as_slice().cmp(code)).ok()
    }
}

pub fn enumerate_cells(s: &PointSet, h: &HalfspaceSet) -> Result<CellGating> {
    h.check_points(s)?;
    let mut on_boundary = false;
    let mut seen = HashSet::new();
    for x in s.iter() {
        if (0..h.m()).any(|t| h.score(t, x) == 0.0) {
            on_boundary = true;
        }
        seen.insert(h.sign_pattern(x));
    }
    let mut g = CellGating::from_codes(seen.into_iter().collect())?;
    g.on_boundary = on_boundary;
    g.soft_masses = gate_matrix(s, h, &g).1;
    Ok(g)
}

/// Log soft indicators `(log h_t, log(1 - h_t))` for one point.
fn log_indicators(h: &HalfspaceSet, x: &[f64], out: &mut [(f64, f64)]) {
    for (t, o) in out.iter_mut().enumerate() {
        let u = h.score(t, x) / h.tau;
        *o = (-softplus(-u), -softplus(u));
    }
}

fn gates_into(codes: &[Vec<bool>], logs: &[(f64, f64)], out: &mut [f64]) {
    let mut best = f64::NEG_INFINITY;
    for (o, code) in out.iter_mut().zip(codes) {
        *o = code
            .iter()
            .zip(logs)
            .map(|(&pos, &(lp, ln))| if pos { lp } else { ln })
            .sum();
        best = best.max(*o);
    }
    let mut z = 0.0;
    for o in out.iter_mut() {
        *o = (*o - best).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o = (*o / z).max(PROB_FLOOR);
    }
}

/// Normalized product gates of a single point over the cells of `g`.
pub fn cell_gates(x: &[f64], g: &CellGating, h: &HalfspaceSet) -> Result<Vec<f64>> {
    if x.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: x.len(),
        });
    }
    check_codes(g, h)?;
    let mut logs = vec![(0.0, 0.0); h.m()];
    log_indicators(h, x, &mut logs);
    let mut out = vec![0.0; g.k()];
    gates_into(&g.codes, &logs, &mut out);
    Ok(out)
}

fn check_codes(g: &CellGating, h: &HalfspaceSet) -> Result<()> {
    if g.codes.is_empty() || g.codes[0].len() != h.m() {
        return Err(Error::invalid("cell codes do not match the hyperplane count"));
    }
    Ok(())
}

/// `(n x K gate matrix, K soft masses)`.
fn gate_matrix(s: &PointSet, h: &HalfspaceSet, g: &CellGating) -> (Vec<f64>, Vec<f64>) {
    let n = s.len();
    let k = g.k();
    let mut gates = vec![0.0; n * k];
    let mut logs = vec![(0.0, 0.0); h.m()];
    for (i, x) in s.iter().enumerate() {
        log_indicators(h, x, &mut logs);
        gates_into(&g.codes, &logs, &mut gates[i * k..(i + 1) * k]);
    }
    let mut q = vec![0.0; k];
    for row in gates.chunks_exact(k) {
        for (a, b) in q.iter_mut().zip(row) {
            *a += b;
        }
    }
    q.iter_mut().for_each(|v| *v /= n as f64);
    (gates, q)
}

/// Soft cell entropy with optional gradients.
///
/// `grad_points` is `n x d`; `grad_params` holds the normals (`m x d`,
/// row-major) followed by the `m` offsets.
pub fn h_soft(s: &PointSet, h: &HalfspaceSet, g: &CellGating, with_grad: bool) -> Result<EntropyReport> {
    h.check_points(s)?;
    check_codes(g, h)?;
    let (gates, q) = gate_matrix(s, h, g);
    let value = shannon(&q);
    if !with_grad {
        return Ok(EntropyReport {
            value,
            normalized: true,
            grad_points: None,
            grad_params: None,
        });
    }
    let n = s.len();
    let d = s.dim();
    let m = h.m();
    let k = g.k();
    let inv_n = 1.0 / n as f64;
    let inv_tau = 1.0 / h.tau;
    let big_g: Vec<f64> = q.iter().map(|&v| -(v.max(PROB_FLOOR).ln() + 1.0)).collect();

    let mut grad_x = vec![0.0; n * d];
    let mut grad_w = vec![0.0; m * d];
    let mut grad_b = vec![0.0; m];
    let mut v = vec![0.0; k];
    for i in 0..n {
        let x = s.point(i);
        let row = &gates[i * k..(i + 1) * k];
        let gbar: f64 = row.iter().zip(&big_g).map(|(a, b)| a * b).sum();
        let mut vsum = 0.0;
        for j in 0..k {
            v[j] = inv_n * row[j] * (big_g[j] - gbar);
            vsum += v[j];
        }
        for t in 0..m {
            let ht = sigmoid(h.score(t, x) * inv_tau);
            // d log-gate_j / du_t = a_jt - h_t
            let mut du: f64 = (0..k).filter(|&j| g.codes[j][t]).map(|j| v[j]).sum();
            du -= ht * vsum;
            if du == 0.0 {
                continue;
            }
            let c = du * inv_tau;
            let wt = h.normal(t);
            for a in 0..d {
                grad_x[i * d + a] += c * wt[a];
                grad_w[t * d + a] += c * x[a];
            }
            grad_b[t] -= c;
        }
    }
    if let Some(idx) = grad_x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "point gradient",
            index: idx / d,
        });
    }
    grad_w.extend_from_slice(&grad_b);
    if let Some(idx) = grad_w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "hyperplane gradient",
            index: idx,
        });
    }
    Ok(EntropyReport {
        value,
        normalized: true,
        grad_points: Some(grad_x),
        grad_params: Some(grad_w),
    })
}

/// `min_{i,t} |w_t . x_i - b_t| / ||w_t||`.
pub fn empirical_margin(s: &PointSet, h: &HalfspaceSet) -> Result<f64> {
    h.check_points(s)?;
    let norms: Vec<f64> = (0..h.m()).map(|t| norm(h.normal(t))).collect();
    Ok(s.iter()
        .flat_map(|x| (0..h.m()).map(move |t| (x, t)))
        .map(|(x, t)| h.score(t, x).abs() / norms[t])
        .fold(f64::INFINITY, f64::min))
}

/// Hard cell of every point, as a partition whose part `j` is the `j`-th
/// realized cell of `g` (cells of `g` with no points are dropped).
pub fn hard_masses(s: &PointSet, h: &HalfspaceSet, g: &CellGating) -> Result<HardPartition> {
    h.check_points(s)?;
    check_codes(g, h)?;
    let mut labels = Vec::with_capacity(s.len());
    for (i, x) in s.iter().enumerate() {
        let code = h.sign_pattern(x);
        let j = g
            .index_of(&code)
            .ok_or_else(|| Error::invalid(format!("point {i} falls in a cell missing from the gating")))?;
        labels.push(j);
    }
    // Keep the gating's cell order for the parts.
    let mut order: Vec<usize> = labels.clone();
    order.sort_unstable();
    order.dedup();
    let mut remap = vec![usize::MAX; g.k()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let labels: Vec<usize> = labels.iter().map(|&l| remap[l]).collect();
    let mut part_sizes = vec![0; order.len()];
    for &l in &labels {
        part_sizes[l] += 1;
    }
    Ok(HardPartition { labels, part_sizes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    /// Normals along the leading principal axes, offsets at projection
    /// quantiles.
    #[default]
    Principal,
    /// Greedy widest gaps of 1-D projections over sampled directions.
    Maxmargin,
    /// Seeded Gaussian normals through the projected median.
    Random,
}

impl std::str::FromStr for InitStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "principal" => Ok(Self::Principal),
            "maxmargin" => Ok(Self::Maxmargin),
            "random" => Ok(Self::Random),
            other => Err(Error::invalid(format!("unknown halfspace init {other:?}"))),
        }
    }
}

fn covariance(s: &PointSet) -> DMatrix<f64> {
    let d = s.dim();
    let mean = s.centroid();
    let mut cov = DMatrix::zeros(d, d);
    for x in s.iter() {
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += (x[a] - mean[a]) * (x[b] - mean[b]);
            }
        }
    }
    cov / s.len() as f64
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn projections(s: &PointSet, dir: &[f64]) -> Vec<f64> {
    s.iter().map(|x| dot(dir, x)).collect()
}

/// Deterministic hyperplane initialization; `tau` is attached unchanged.
pub fn init_halfspaces(
    s: &PointSet,
    m: usize,
    strategy: InitStrategy,
    tau: f64,
    seed: u64,
) -> Result<HalfspaceSet> {
    if m == 0 {
        return Err(Error::invalid("need at least one hyperplane"));
    }
    let d = s.dim();
    let first = s.point(0);
    if s.iter().all(|x| x == first) {
        return Err(Error::DegenerateCovariance);
    }
    let mut w = Vec::with_capacity(m * d);
    let mut b = Vec::with_capacity(m);
    match strategy {
        InitStrategy::Principal => {
            let eig = SymmetricEigen::new(covariance(s));
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
            // Hyperplane t uses axis order[t % d]; axes used r times get
            // offsets at the quantiles 1/(r+1), ..., r/(r+1).
            let uses: Vec<usize> = (0..d).map(|a| (m + d - 1 - a) / d).collect();
            for t in 0..m {
                let a = t % d;
                let r = t / d;
                let axis: Vec<f64> = eig.eigenvectors.column(order[a]).iter().copied().collect();
                let mut proj = projections(s, &axis);
                proj.sort_by(f64::total_cmp);
                w.extend_from_slice(&axis);
                b.push(quantile_sorted(&proj, (r + 1) as f64 / (uses[a] + 1) as f64));
            }
        }
        InitStrategy::Maxmargin => {
            let dirs = sample_directions(d, seed);
            struct Cand {
                gap: f64,
                dir: usize,
                offset: f64,
            }
            let mut cands = Vec::new();
            for (di, dir) in dirs.iter().enumerate() {
                let mut proj = projections(s, dir);
                proj.sort_by(f64::total_cmp);
                for pair in proj.windows(2) {
                    let gap = pair[1] - pair[0];
                    if gap > 0.0 {
                        cands.push(Cand {
                            gap,
                            dir: di,
                            offset: 0.5 * (pair[0] + pair[1]),
                        });
                    }
                }
            }
            cands.sort_by(|a, b| b.gap.total_cmp(&a.gap).then(a.dir.cmp(&b.dir)).then(a.offset.total_cmp(&b.offset)));
            let mut used: HashSet<Vec<bool>> = HashSet::new();
            for c in &cands {
                if b.len() == m {
                    break;
                }
                let dir = &dirs[c.dir];
                let split: Vec<bool> = s.iter().map(|x| dot(dir, x) >= c.offset).collect();
                let flipped: Vec<bool> = split.iter().map(|v| !v).collect();
                if used.contains(&split) || used.contains(&flipped) {
                    continue;
                }
                used.insert(split);
                w.extend_from_slice(dir);
                b.push(c.offset);
            }
            // Fewer distinct splits than m: repeat the widest one.
            while b.len() < m {
                let w0: Vec<f64> = w[..d].to_vec();
                w.extend_from_slice(&w0);
                b.push(b[0]);
            }
        }
        InitStrategy::Random => {
            let mut rng = rng_for(seed, 0x4A1F);
            for _ in 0..m {
                let mut dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let len = norm(&dir);
                if len == 0.0 {
                    dir[0] = 1.0;
                } else {
                    dir.iter_mut().for_each(|v| *v /= len);
                }
                let mut proj = projections(s, &dir);
                proj.sort_by(f64::total_cmp);
                w.extend_from_slice(&dir);
                b.push(quantile_sorted(&proj, 0.5));
            }
        }
    }
    HalfspaceSet::new(w, b, d, tau)
}

/// Unit directions probed by the max-margin initializer: 180 evenly spaced
/// angles in 2-D, otherwise the coordinate axes plus 128 seeded samples.
fn sample_directions(d: usize, seed: u64) -> Vec<Vec<f64>> {
    if d == 1 {
        return vec![vec![1.0]];
    }
    if d == 2 {
        return (0..180)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 180.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    let mut out: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..d).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = rng_for(seed, 0xD1E5);
    while out.len() < d + 128 {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&v);
        if len > 0.0 {
            out.push(v.iter().map(|x| x / len).collect());
        }
    }
    out
}

/// Terms of the data-dependent bound on `|H_R(S) - H_soft(S)|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub empirical_margin: f64,
    pub tau: f64,
    pub eps_smooth: f64,
    pub lipschitz: f64,
    pub rademacher: f64,
    pub delta: f64,
    pub slack: f64,
    pub epsilon_total: f64,
    pub bound: f64,
    #[serde(rename = "constant_C")]
    pub constant_c: f64,
    pub k_cells: usize,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// `epsilon_total >= K`, where `x log(K/x)` stops being meaningful.
    pub vacuous: bool,
}

/// `e^{-margin / (4 tau)}`
pub fn eps_smooth(margin: f64, tau: f64) -> f64 {
    (-margin / (4.0 * tau)).exp()
}

/// `C * (1/(4 tau)) * sqrt(d log m / n)`
pub fn rademacher_term(constant_c: f64, tau: f64, d: usize, m: usize, n: usize) -> f64 {
    constant_c * (1.0 / (4.0 * tau)) * ((d as f64) * (m as f64).ln() / n as f64).sqrt()
}

/// `sqrt(log(2/delta) / (2n))`
pub fn confidence_slack(delta: f64, n: usize) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// `eps log(K / eps)`, with `0 log(K/0) = 0`; for `eps >= K` returns
/// `max(eps log K, 0)` and flags the bound as vacuous.
pub fn continuity_bound(eps_total: f64, k: usize) -> (f64, bool) {
    let kf = k as f64;
    if eps_total <= 0.0 {
        (0.0, false)
    } else if eps_total < kf {
        (eps_total * (kf / eps_total).ln(), false)
    } else {
        ((eps_total * kf.ln()).max(0.0), true)
    }
}

pub fn evaluate_bound(
    s: &PointSet,
    h: &HalfspaceSet,
    g: &CellGating,
    delta: f64,
    constant_c: f64,
) -> Result<BoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(constant_c > 0.0) {
        return Err(Error::invalid("constant C must be positive"));
    }
    let margin = empirical_margin(s, h)?;
    let n = s.len();
    let eps = eps_smooth(margin, h.tau);
    let rad = rademacher_term(constant_c, h.tau, s.dim(), h.m(), n);
    let slack = confidence_slack(delta, n);
    let total = eps + 2.0 * rad + slack;
    let (bound, vacuous) = continuity_bound(total, g.k());
    Ok(BoundReport {
        empirical_margin: margin,
        tau: h.tau,
        eps_smooth: eps,
        lipschitz: 1.0 / (4.0 * h.tau),
        rademacher: rad,
        delta,
        slack,
        epsilon_total: total,
        bound,
        constant_c,
        k_cells: g.k(),
        n,
        m: h.m(),
        d: s.dim(),
        vacuous,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfFitConfig {
    pub m: usize,
    pub tau: f64,
    pub strategy: InitStrategy,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct HalfFitResult {
    pub report: EntropyReport,
    pub halfspaces: HalfspaceSet,
    /// Cells enumerated at initialization; held fixed during descent.
    pub gating: CellGating,
    pub trace: Vec<f64>,
    /// Total number of step halvings performed.
    pub halvings: usize,
}

/// Initializes hyperplanes and descends `h_soft` over `(w, b)`.
pub fn h_diff_half(s: &PointSet, cfg: &HalfFitConfig) -> Result<HalfFitResult> {
    let h0 = init_halfspaces(s, cfg.m, cfg.strategy, cfg.tau, cfg.seed)?;
    let gating = enumerate_cells(s, &h0)?;
    descend_halfspaces(s, h0, gating, cfg.steps, cfg.lr)
}

fn unit_normalized(w: &[f64], b: &[f64], dim: usize, tau: f64) -> Result<HalfspaceSet> {
    let mut w = w.to_vec();
    let mut b = b.to_vec();
    for t in 0..b.len() {
        let len = norm(&w[t * dim..(t + 1) * dim]);
        if len == 0.0 || !len.is_finite() {
            return Err(Error::invalid("hyperplane normal collapsed"));
        }
        w[t * dim..(t + 1) * dim].iter_mut().for_each(|v| *v /= len);
        b[t] /= len;
    }
    HalfspaceSet::new(w, b, dim, tau)
}

/// Gradient descent on hyperplane parameters with fixed cell codes,
/// renormalizing every normal to unit length after each step and halving
/// the step while the entropy would increase.
pub fn descend_halfspaces(
    s: &PointSet,
    mut h: HalfspaceSet,
    gating: CellGating,
    steps: usize,
    lr: f64,
) -> Result<HalfFitResult> {
    if !(lr > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let d = h.dim();
    let m = h.m();
    let mut rep = h_soft(s, &h, &gating, true)?;
    let mut trace = vec![rep.value];
    let mut halvings = 0;
    for step in 1..=steps {
        let grad = rep.grad_params.clone().unwrap_or_default();
        if norm(&grad) < crate::entropy::GRAD_TOL {
            break;
        }
        let mut eta = lr;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let w: Vec<f64> = h.normals_flat().iter().zip(&grad[..m * d]).map(|(a, g)| a - eta * g).collect();
            let b: Vec<f64> = h.offsets().iter().zip(&grad[m * d..]).map(|(a, g)| a - eta * g).collect();
            let cand = match unit_normalized(&w, &b, d, h.tau) {
                Ok(c) => c,
                Err(_) => {
                    eta *= 0.5;
                    halvings += 1;
                    continue;
                }
            };
            let r = h_soft(s, &cand, &gating, true)?;
            if !r.value.is_finite() {
                return Err(Error::Divergence {
                    step,
                    what: "non-finite soft entropy".into(),
                });
            }
            if r.value <= rep.value {
                accepted = Some((cand, r));
                break;
            }
            eta *= 0.5;
            halvings += 1;
        }
        match accepted {
            Some((cand, r)) => {
                h = cand;
                rep = r;
                trace.push(rep.value);
            }
            None => break,
        }
    }
    let mut gating = gating;
    gating.soft_masses = gate_matrix(s, &h, &gating).1;
    Ok(HalfFitResult {
        report: rep,
        halfspaces: h,
        gating,
        trace,
        halvings,
    })
}
