//! Ball-based differentiable entropy.
//!
//! Every point is softly assigned to `k` anchors with
//! `p_ij = softmax_j(-alpha * ||x_i - c_j||^2)`, cluster masses are the
//! column means `p_j = (1/n) sum_i p_ij`, and the surrogate entropy is the
//! Shannon entropy of the masses, in nats.
//!
//! Gradients are the full chain rule through the softmax (including the
//! cross-cluster terms) and, in [`ScaleMode::Normalized`], through the
//! data-dependent temperature as well.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{sq_dist, PointSet};
use crate::rng::rng_for;

/// Lower clamp applied to probabilities before taking logarithms and to
/// soft-assignment entries after exponentiation.
pub const PROB_FLOOR: f64 = 1e-300;

/// Default ball sharpness.
pub const DEFAULT_ALPHA: f64 = 10.0;

/// Range of `alpha` known to trade smoothness against sharpness well.
pub const SAFE_ALPHA_RANGE: (f64, f64) = (5.0, 20.0);

/// Default anchor count `min(16, n/4)`, never below 1.
pub fn default_k(n: usize) -> usize {
    (n / 4).clamp(1, 16)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// `alpha` is used as given.
    #[default]
    Raw,
    /// `alpha` is divided by the mean squared pairwise distance of the
    /// point set, making the entropy invariant to joint rescaling.
    Normalized,
}

/// Learnable centers plus the sharpness they are evaluated with.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    centers: Vec<f64>,
    dim: usize,
    pub alpha: f64,
    pub scale_mode: ScaleMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorSetJson {
    pub centers: Vec<Vec<f64>>,
    pub alpha: f64,
    pub scale_mode: ScaleMode,
}

impl AnchorSet {
    pub fn new(centers: Vec<f64>, dim: usize, alpha: f64, scale_mode: ScaleMode) -> Result<Self> {
        if dim == 0 || centers.is_empty() || !centers.len().is_multiple_of(dim) {
            return Err(Error::invalid("anchor set needs k >= 1 centers of a common dimension"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive and finite, got {alpha}")));
        }
        if let Some(i) = centers.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                what: "anchor centers",
                index: i / dim,
            });
        }
        Ok(Self {
            centers,
            dim,
            alpha,
            scale_mode,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], alpha: f64, scale_mode: ScaleMode) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut centers = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.as_ref().len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.as_ref().len(),
                });
            }
            centers.extend_from_slice(r.as_ref());
        }
        Self::new(centers, dim, alpha, scale_mode)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.centers.len() / self.dim
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.dim..(j + 1) * self.dim]
    }

    pub fn centers_flat(&self) -> &[f64] {
        &self.centers
    }

    /// Same sharpness and mode, new centers.
    pub fn with_centers(&self, centers: Vec<f64>) -> Result<Self> {
        Self::new(centers, self.dim, self.alpha, self.scale_mode)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.centers.clone(), self.dim, alpha, self.scale_mode)
    }

    pub fn to_json(&self) -> AnchorSetJson {
        AnchorSetJson {
            centers: self.centers.chunks_exact(self.dim).map(|c| c.to_vec()).collect(),
            alpha: self.alpha,
            scale_mode: self.scale_mode,
        }
    }

    pub fn from_json(doc: &AnchorSetJson) -> Result<Self> {
        Self::from_rows(&doc.centers, doc.alpha, doc.scale_mode)
    }
}

/// Row-stochastic `n x k` membership matrix and its column means.
#[derive(Debug, Clone)]
pub struct SoftAssignment {
    pub matrix: Vec<f64>,
    pub k: usize,
    pub masses: Vec<f64>,
    /// Sharpness actually applied (after normalization, if any).
    pub alpha_eff: f64,
}

impl SoftAssignment {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.k..(i + 1) * self.k]
    }

    pub fn n(&self) -> usize {
        self.matrix.len() / self.k
    }
}

/// An entropy value with optional gradients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    /// Entropy in nats.
    pub value: f64,
    /// True for per-point (mass-normalized) entropies.
    pub normalized: bool,
    /// Row-major `n x d` gradient with respect to the points.
    pub grad_points: Option<Vec<f64>>,
    /// Gradient with respect to the estimator parameters, laid out like the
    /// parameters themselves.
    pub grad_params: Option<Vec<f64>>,
}

/// Shannon entropy `-sum p log p` with the `0 log 0 = 0` convention.
pub fn shannon(masses: &[f64]) -> f64 {
    let h: f64 = masses
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.max(PROB_FLOOR).ln())
        .sum();
    h.max(0.0)
}

/// Mean squared distance over distinct unordered pairs, via the identity
/// `sum_{i<j} ||x_i - x_j||^2 = n * sum_i ||x_i - mean||^2`.
pub fn mean_sq_pairwise_distance(s: &PointSet) -> f64 {
    let n = s.len();
    if n < 2 {
        return 0.0;
    }
    let mean = s.centroid();
    let total: f64 = s.iter().map(|p| sq_dist(p, &mean)).sum();
    2.0 * total / (n as f64 - 1.0)
}

fn check_compatible(s: &PointSet, anchors: &AnchorSet) -> Result<()> {
    if anchors.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: anchors.dim(),
        });
    }
    Ok(())
}

/// Scale statistic used in normalized mode, `None` in raw mode.
fn scale_stat(s: &PointSet, anchors: &AnchorSet) -> Result<Option<f64>> {
    match anchors.scale_mode {
        ScaleMode::Raw => Ok(None),
        ScaleMode::Normalized => {
            let m = mean_sq_pairwise_distance(s);
            if m <= 0.0 {
                return Err(Error::DegenerateScale);
            }
            Ok(Some(m))
        }
    }
}

fn assign_with(s: &PointSet, anchors: &AnchorSet, alpha_eff: f64) -> SoftAssignment {
    let n = s.len();
    let k = anchors.k();
    let mut matrix = vec![0.0; n * k];
    for (i, x) in s.iter().enumerate() {
        let row = &mut matrix[i * k..(i + 1) * k];
        let mut best = f64::NEG_INFINITY;
        for (j, r) in row.iter_mut().enumerate() {
            *r = -alpha_eff * sq_dist(x, anchors.center(j));
            best = best.max(*r);
        }
        let mut z = 0.0;
        for r in row.iter_mut() {
            *r = (*r - best).exp();
            z += *r;
        }
        for r in row.iter_mut() {
            *r = (*r / z).max(PROB_FLOOR);
        }
    }
    let mut masses = vec![0.0; k];
    for row in matrix.chunks_exact(k) {
        for (m, p) in masses.iter_mut().zip(row) {
            *m += p;
        }
    }
    masses.iter_mut().for_each(|m| *m /= n as f64);
    SoftAssignment {
        matrix,
        k,
        masses,
        alpha_eff,
    }
}

pub fn compute_soft_assignments(s: &PointSet, anchors: &AnchorSet) -> Result<SoftAssignment> {
    check_compatible(s, anchors)?;
    let alpha_eff = match scale_stat(s, anchors)? {
        Some(m) => anchors.alpha / m,
        None => anchors.alpha,
    };
    Ok(assign_with(s, anchors, alpha_eff))
}

/// Ball-based soft entropy, optionally with gradients with respect to the
/// points (`grad_points`) and the anchor centers (`grad_params`, `k x d`).
pub fn h_diff(s: &PointSet, anchors: &AnchorSet, with_grad: bool) -> Result<EntropyReport> {
    check_compatible(s, anchors)?;
    let scale = scale_stat(s, anchors)?;
    let alpha_eff = scale.map_or(anchors.alpha, |m| anchors.alpha / m);
    let sa = assign_with(s, anchors, alpha_eff);
    let value = shannon(&sa.masses);
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
    let k = anchors.k();
    let inv_n = 1.0 / n as f64;
    // dH/dp_j
    let g: Vec<f64> = sa.masses.iter().map(|&p| -(p.max(PROB_FLOOR).ln() + 1.0)).collect();

    let mut grad_x = vec![0.0; n * d];
    let mut grad_c = vec![0.0; k * d];
    // dH/d(alpha_eff), only needed in normalized mode.
    let mut d_alpha = 0.0;
    for i in 0..n {
        let x = s.point(i);
        let row = sa.row(i);
        let gbar: f64 = row.iter().zip(&g).map(|(p, gj)| p * gj).sum();
        let gx = &mut grad_x[i * d..(i + 1) * d];
        for j in 0..k {
            // dH/ds_ij with s_ij = -alpha_eff * ||x_i - c_j||^2
            let u = inv_n * row[j] * (g[j] - gbar);
            if u == 0.0 {
                continue;
            }
            let c = anchors.center(j);
            let coef = 2.0 * alpha_eff * u;
            let gc = &mut grad_c[j * d..(j + 1) * d];
            for t in 0..d {
                let diff = x[t] - c[t];
                gx[t] -= coef * diff;
                gc[t] += coef * diff;
            }
            if scale.is_some() {
                d_alpha -= u * sq_dist(x, c);
            }
        }
    }

    if let Some(m) = scale {
        // alpha_eff = alpha / M,  dM/dx_i = 4 (x_i - mean) / (n - 1)
        let coef = d_alpha * (-anchors.alpha / (m * m)) * 4.0 / (n as f64 - 1.0);
        let mean = s.centroid();
        for i in 0..n {
            let x = s.point(i);
            for t in 0..d {
                grad_x[i * d + t] += coef * (x[t] - mean[t]);
            }
        }
    }

    if let Some(idx) = grad_x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "point gradient",
            index: idx / d,
        });
    }
    if let Some(idx) = grad_c.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "anchor gradient",
            index: idx / d,
        });
    }
    Ok(EntropyReport {
        value,
        normalized: true,
        grad_points: Some(grad_x),
        grad_params: Some(grad_c),
    })
}

/// Gradients of [`h_diff`] as `(points n x d, anchors k x d)`.
pub fn grad_h_diff(s: &PointSet, anchors: &AnchorSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let rep = h_diff(s, anchors, true)?;
    Ok((
        rep.grad_points.expect("gradient requested"),
        rep.grad_params.expect("gradient requested"),
    ))
}

/// The simplified anchor gradient `alpha * sum_i p_ij (p_ij - p_j)(x_i - c_j)`.
///
/// It drops the cross-cluster softmax terms and the `1/n` mass factor, so
/// it is only kept for comparison against [`grad_h_diff`].
pub fn simplified_anchor_gradient(s: &PointSet, anchors: &AnchorSet) -> Result<Vec<f64>> {
    let sa = compute_soft_assignments(s, anchors)?;
    let d = s.dim();
    let k = anchors.k();
    let mut out = vec![0.0; k * d];
    for (i, x) in s.iter().enumerate() {
        let row = sa.row(i);
        for j in 0..k {
            let w = sa.alpha_eff * row[j] * (row[j] - sa.masses[j]);
            let c = anchors.center(j);
            for t in 0..d {
                out[j * d + t] += w * (x[t] - c[t]);
            }
        }
    }
    Ok(out)
}

/// Distance from each anchor to the `p_ij^2`-weighted centroid of the
/// points. Diagnostic only: the weighted centroid is not a stationary point
/// of [`h_diff`] in general.
pub fn paper_fixed_point_residual(s: &PointSet, anchors: &AnchorSet) -> Result<Vec<f64>> {
    let sa = compute_soft_assignments(s, anchors)?;
    let d = s.dim();
    let k = anchors.k();
    // Weights are rescaled per column so that p_ij^2 cannot underflow.
    let mut peak = vec![0.0f64; k];
    for i in 0..s.len() {
        for (m, &p) in peak.iter_mut().zip(sa.row(i)) {
            *m = m.max(p);
        }
    }
    let mut num = vec![0.0; k * d];
    let mut den = vec![0.0; k];
    for (i, x) in s.iter().enumerate() {
        for (j, &p) in sa.row(i).iter().enumerate() {
            let r = p / peak[j];
            let w = r * r;
            den[j] += w;
            for t in 0..d {
                num[j * d + t] += w * x[t];
            }
        }
    }
    Ok((0..k)
        .map(|j| {
            let c = anchors.center(j);
            (0..d)
                .map(|t| {
                    let diff = c[t] - num[j * d + t] / den[j];
                    diff * diff
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Index of the nearest anchor for every point; ties go to the lowest index.
pub fn hard_assign(s: &PointSet, anchors: &AnchorSet) -> Result<Vec<usize>> {
    check_compatible(s, anchors)?;
    Ok(s.iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for j in 0..anchors.k() {
                let dj = sq_dist(x, anchors.center(j));
                if dj < best_d {
                    best_d = dj;
                    best = j;
                }
            }
            best
        })
        .collect())
}

/// Entropy of the hard nearest-anchor assignment: the `alpha -> inf` limit
/// of [`h_diff`]. Empty clusters contribute nothing.
pub fn discrete_limit_entropy(s: &PointSet, anchors: &AnchorSet) -> Result<EntropyReport> {
    let labels = hard_assign(s, anchors)?;
    let mut counts = vec![0usize; anchors.k()];
    for l in labels {
        counts[l] += 1;
    }
    let n = s.len() as f64;
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(EntropyReport {
        value: shannon(&masses),
        normalized: true,
        grad_points: None,
        grad_params: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorInit {
    #[default]
    Kmeanspp,
    /// Uniform samples from the bounding box of the data.
    Random,
}

impl std::str::FromStr for AnchorInit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeanspp" | "kmeans++" => Ok(AnchorInit::Kmeanspp),
            "random" => Ok(AnchorInit::Random),
            other => Err(Error::invalid(format!("unknown anchor init {other:?}"))),
        }
    }
}

/// Seeded anchor initialization.
pub fn init_anchors(s: &PointSet, k: usize, init: AnchorInit, seed: u64) -> Result<Vec<f64>> {
    let n = s.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let d = s.dim();
    let mut rng = rng_for(seed, 0xA4C4);
    let mut centers = Vec::with_capacity(k * d);
    match init {
        AnchorInit::Kmeanspp => {
            let first = rng.random_range(0..n);
            centers.extend_from_slice(s.point(first));
            let mut dist: Vec<f64> = s.iter().map(|x| sq_dist(x, s.point(first))).collect();
            for _ in 1..k {
                let total: f64 = dist.iter().sum();
                let pick = if total > 0.0 {
                    let mut r = rng.random::<f64>() * total;
                    let mut chosen = n - 1;
                    for (i, &w) in dist.iter().enumerate() {
                        if r < w {
                            chosen = i;
                            break;
                        }
                        r -= w;
                    }
                    chosen
                } else {
                    rng.random_range(0..n)
                };
                let c = s.point(pick).to_vec();
                for (i, x) in s.iter().enumerate() {
                    dist[i] = dist[i].min(sq_dist(x, &c));
                }
                centers.extend_from_slice(&c);
            }
        }
        AnchorInit::Random => {
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for x in s.iter() {
                for t in 0..d {
                    lo[t] = lo[t].min(x[t]);
                    hi[t] = hi[t].max(x[t]);
                }
            }
            for _ in 0..k {
                for t in 0..d {
                    centers.push(lo[t] + rng.random::<f64>() * (hi[t] - lo[t]));
                }
            }
        }
    }
    Ok(centers)
}

/// Settings for [`fit_anchors`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub k: usize,
    pub alpha: f64,
    pub scale_mode: ScaleMode,
    pub init: AnchorInit,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(k: usize, alpha: f64) -> Self {
        Self {
            k,
            alpha,
            scale_mode: ScaleMode::Raw,
            init: AnchorInit::Kmeanspp,
            steps: 100,
            lr: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub anchors: AnchorSet,
    /// `trace[0]` is the entropy at initialization, `trace[t]` after step t.
    pub trace: Vec<f64>,
    pub steps_run: usize,
    pub final_grad_norm: f64,
    /// Stopped because the gradient norm fell below [`GRAD_TOL`].
    pub converged: bool,
}

pub const GRAD_TOL: f64 = 1e-8;
pub(crate) const MAX_HALVINGS: usize = 20;

/// Gradient descent on the anchor centers, minimizing [`h_diff`].
///
/// Each step backtracks by halving until the entropy does not increase
/// (at most 20 halvings), so the returned trace is non-increasing.
pub fn fit_anchors(s: &PointSet, cfg: &FitConfig) -> Result<FitResult> {
    let centers = init_anchors(s, cfg.k, cfg.init, cfg.seed)?;
    let anchors = AnchorSet::new(centers, s.dim(), cfg.alpha, cfg.scale_mode)?;
    descend_anchors(s, anchors, cfg.steps, cfg.lr)
}

/// Continues descent from existing anchors; shared by [`fit_anchors`] and
/// the restructuring loop.
pub fn descend_anchors(s: &PointSet, mut anchors: AnchorSet, steps: usize, lr: f64) -> Result<FitResult> {
    if !(lr > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let mut rep = h_diff(s, &anchors, true)?;
    let mut trace = vec![rep.value];
    let mut grad = rep.grad_params.take().unwrap_or_default();
    let mut gnorm = norm(&grad);
    let mut steps_run = 0;
    let mut converged = gnorm < GRAD_TOL;
    while steps_run < steps && !converged {
        steps_run += 1;
        let mut eta = lr;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = anchors
                .centers_flat()
                .iter()
                .zip(&grad)
                .map(|(c, g)| c - eta * g)
                .collect();
            let cand = anchors.with_centers(cand).map_err(|_| Error::Divergence {
                step: steps_run,
                what: "non-finite anchor update".into(),
            })?;
            let r = h_diff(s, &cand, true)?;
            if !r.value.is_finite() {
                return Err(Error::Divergence {
                    step: steps_run,
                    what: "non-finite entropy".into(),
                });
            }
            if r.value <= rep.value {
                accepted = Some((cand, r));
                break;
            }
            eta *= 0.5;
        }
        match accepted {
            Some((cand, mut r)) => {
                anchors = cand;
                grad = r.grad_params.take().unwrap_or_default();
                gnorm = norm(&grad);
                trace.push(r.value);
                rep = r;
                converged = gnorm < GRAD_TOL;
            }
            None => {
                // No descent direction at machine precision.
                trace.push(rep.value);
                break;
            }
        }
    }
    Ok(FitResult {
        anchors,
        trace,
        steps_run,
        final_grad_norm: gnorm,
        converged,
    })
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Result of the elbow heuristic.
#[derive(Debug, Clone, Serialize)]
pub struct ElbowResult {
    pub k: usize,
    pub ks: Vec<usize>,
    pub curve: Vec<f64>,
    /// `-(H(k+1) - 2H(k) + H(k-1))` for the interior ks, aligned with `ks[1..len-1]`.
    pub curvature: Vec<f64>,
    /// The range has fewer than three values, or the curve never bends.
    pub no_elbow: bool,
    /// The best bend is no sharper than that of `ln k`, the curve of evenly
    /// spread clusters.
    pub weak_curvature: bool,
}

/// Curvature excess over `ln k` below which an elbow is reported as weak.
pub const WEAK_CURVATURE: f64 = 0.05;

/// Picks `k` at the point of maximum curvature of the fitted-entropy curve.
pub fn select_k_elbow(s: &PointSet, k_min: usize, k_max: usize, base: &FitConfig) -> Result<ElbowResult> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::invalid(format!("empty k range [{k_min}, {k_max}]")));
    }
    if k_max > s.len() {
        return Err(Error::invalid(format!("k_max = {k_max} exceeds n = {}", s.len())));
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let curve = ks
        .iter()
        .map(|&k| {
            let cfg = FitConfig { k, ..*base };
            fit_anchors(s, &cfg).map(|r| *r.trace.last().expect("trace is never empty"))
        })
        .collect::<Result<Vec<_>>>()?;
    if ks.len() < 3 {
        return Ok(ElbowResult {
            k: k_min,
            ks,
            curve,
            curvature: vec![],
            no_elbow: true,
            weak_curvature: true,
        });
    }
    let curvature: Vec<f64> = (1..ks.len() - 1)
        .map(|i| -(curve[i + 1] - 2.0 * curve[i] + curve[i - 1]))
        .collect();
    let (best_i, best_c) = curvature
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
    let kk = ks[best_i + 1] as f64;
    let log_bend = -((kk + 1.0).ln() - 2.0 * kk.ln() + (kk - 1.0).ln());
    let no_elbow = best_c <= 0.0;
    let weak_curvature = no_elbow || best_c - log_bend < WEAK_CURVATURE;
    Ok(ElbowResult {
        k: if no_elbow { k_min } else { ks[best_i + 1] },
        ks,
        curve,
        curvature,
        no_elbow,
        weak_curvature,
    })
}

/// A row-stochastic matrix (each row a probability vector).
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    data: Vec<f64>,
    cols: usize,
}

impl StochasticMatrix {
    pub const ROW_SUM_TOL: f64 = 1e-9;

    pub fn new(data: Vec<f64>, cols: usize) -> Result<Self> {
        if cols == 0 || data.is_empty() || !data.len().is_multiple_of(cols) {
            return Err(Error::invalid("stochastic matrix needs a non-empty rectangular buffer"));
        }
        for (r, row) in data.chunks_exact(cols).enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!("row {r} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > Self::ROW_SUM_TOL {
                return Err(Error::invalid(format!("row {r} sums to {sum}, not 1")));
            }
        }
        Ok(Self { data, cols })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::new();
        for r in rows {
            if r.as_ref().len() != cols {
                return Err(Error::invalid("ragged stochastic matrix"));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(data, cols)
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Sum of the Shannon entropies of the rows, with gradient
/// `-(ln a_ij + 1)` on positive entries and 0 on zero entries.
pub fn row_entropy_sum(a: &StochasticMatrix, with_grad: bool) -> (f64, Option<Vec<f64>>) {
    let value = (0..a.rows()).map(|i| shannon(a.row(i))).sum();
    let grad = with_grad.then(|| {
        a.data
            .iter()
            .map(|&v| if v > 0.0 { -(v.ln() + 1.0) } else { 0.0 })
            .collect()
    });
    (value, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[[f64; 2]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    fn anchors(rows: &[[f64; 2]], alpha: f64) -> AnchorSet {
        AnchorSet::from_rows(rows, alpha, ScaleMode::Raw).unwrap()
    }

    #[test]
    fn single_anchor_is_certain() {
        let s = pts(&[[0.0, 0.0], [3.0, 1.0], [-2.0, 5.0]]);
        let a = anchors(&[[0.5, 0.5]], 1.0);
        let sa = compute_soft_assignments(&s, &a).unwrap();
        assert!(sa.matrix.iter().all(|&p| p == 1.0));
        assert_eq!(sa.masses, vec![1.0]);
        let rep = h_diff(&s, &a, true).unwrap();
        assert_eq!(rep.value, 0.0);
        assert!(rep.grad_points.unwrap().iter().all(|&g| g == 0.0));
        assert!(rep.grad_params.unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn symmetric_pair_has_ln2() {
        let s = pts(&[[0.0, 0.0], [1.0, 0.0]]);
        let a = anchors(&[[0.0, 0.0], [1.0, 0.0]], 1.0);
        let sa = compute_soft_assignments(&s, &a).unwrap();
        assert!((sa.masses[0] - 0.5).abs() < 1e-15);
        let h = h_diff(&s, &a, false).unwrap().value;
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_pair_matches_direct_evaluation() {
        // p_11 = 1 / (1 + e^-4), p_21 = 0.5
        let s = pts(&[[0.0, 0.0], [1.0, 0.0]]);
        let a = anchors(&[[0.0, 0.0], [2.0, 0.0]], 1.0);
        let sa = compute_soft_assignments(&s, &a).unwrap();
        assert!((sa.row(0)[0] - 0.982_013_790_037_908_4).abs() < 1e-12);
        assert!((sa.row(1)[0] - 0.5).abs() < 1e-15);
        assert!((sa.masses[0] - 0.741_006_895_018_954_2).abs() < 1e-12);
        let h = h_diff(&s, &a, false).unwrap().value;
        assert!((h - 0.572_001_099_678_947_8).abs() < 1e-12, "{h}");
    }

    #[test]
    fn normalized_mode_rejects_identical_points() {
        let s = pts(&[[1.0, 1.0], [1.0, 1.0]]);
        let a = AnchorSet::from_rows(&[[0.0, 0.0]], 1.0, ScaleMode::Normalized).unwrap();
        assert!(matches!(h_diff(&s, &a, false), Err(Error::DegenerateScale)));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = pts(&[[0.0, 0.0]]);
        let a = AnchorSet::from_rows(&[[0.0, 0.0, 0.0]], 1.0, ScaleMode::Raw).unwrap();
        assert!(matches!(
            compute_soft_assignments(&s, &a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mean_sq_pairwise_matches_double_loop() {
        let s = pts(&[[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5], [2.0, 2.0]]);
        let mut acc = 0.0;
        let mut cnt = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                acc += sq_dist(s.point(i), s.point(j));
                cnt += 1.0;
            }
        }
        assert!((mean_sq_pairwise_distance(&s) - acc / cnt).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_residual_single_anchor_is_distance_to_mean() {
        let s = pts(&[[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]]);
        let a = anchors(&[[4.0, 5.0]], 1.0);
        let r = paper_fixed_point_residual(&s, &a).unwrap();
        let expect = ((4.0f64 - 1.0).powi(2) + (5.0f64 - 1.0).powi(2)).sqrt();
        assert!((r[0] - expect).abs() < 1e-12);
        let at_mean = anchors(&[[1.0, 1.0]], 1.0);
        assert!(paper_fixed_point_residual(&s, &at_mean).unwrap()[0] < 1e-12);
    }

    #[test]
    fn discrete_limit_cases() {
        let s = pts(&[[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]]);
        let one = anchors(&[[0.0, 0.0]], 1.0);
        assert_eq!(discrete_limit_entropy(&s, &one).unwrap().value, 0.0);
        let two = anchors(&[[0.0, 0.0], [10.0, 0.0]], 1.0);
        let h = discrete_limit_entropy(&s, &two).unwrap().value;
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn hard_assign_breaks_ties_low() {
        let s = pts(&[[1.0, 0.0]]);
        let a = anchors(&[[0.0, 0.0], [2.0, 0.0]], 1.0);
        assert_eq!(hard_assign(&s, &a).unwrap(), vec![0]);
    }

    #[test]
    fn fit_with_zero_steps_is_identity() {
        let s = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]]);
        let cfg = FitConfig {
            steps: 0,
            ..FitConfig::new(2, 1.0)
        };
        let init = init_anchors(&s, 2, AnchorInit::Kmeanspp, cfg.seed).unwrap();
        let fit = fit_anchors(&s, &cfg).unwrap();
        assert_eq!(fit.anchors.centers_flat(), init.as_slice());
        assert_eq!(fit.trace.len(), 1);
    }

    #[test]
    fn fit_rejects_k_above_n() {
        let s = pts(&[[0.0, 0.0], [1.0, 0.0]]);
        assert!(fit_anchors(&s, &FitConfig::new(3, 1.0)).is_err());
    }

    #[test]
    fn fit_trace_is_monotone() {
        let s = pts(&[
            [0.0, 0.0],
            [0.2, 0.1],
            [0.9, 1.0],
            [1.0, 0.8],
            [0.5, 0.4],
            [0.3, 0.9],
        ]);
        let fit = fit_anchors(&s, &FitConfig { steps: 50, ..FitConfig::new(3, 5.0) }).unwrap();
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn elbow_singleton_range() {
        let s = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0], [2.0, 3.0]]);
        let e = select_k_elbow(&s, 4, 4, &FitConfig::new(1, 10.0)).unwrap();
        assert_eq!(e.k, 4);
        assert!(e.no_elbow);
        assert!(select_k_elbow(&s, 3, 2, &FitConfig::new(1, 10.0)).is_err());
    }

    #[test]
    fn row_entropy_examples() {
        let uni = StochasticMatrix::from_rows(&[[0.25; 4], [0.25; 4]]).unwrap();
        let (v, _) = row_entropy_sum(&uni, false);
        assert!((v - 2.0 * 4f64.ln()).abs() < 1e-12);
        let hot = StochasticMatrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let (v, g) = row_entropy_sum(&hot, true);
        assert_eq!(v, 0.0);
        assert_eq!(g.unwrap(), vec![0.0, -1.0, 0.0, -1.0, 0.0, 0.0]);
        let one = StochasticMatrix::from_rows(&[[0.5, 0.25, 0.25]]).unwrap();
        let (v, _) = row_entropy_sum(&one, false);
        // 0.5 ln 2 + 0.5 ln 4 = 1.5 ln 2
        assert!((v - 1.5 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((v - 1.03972).abs() < 1e-5);
    }

    #[test]
    fn row_entropy_rejects_bad_rows() {
        assert!(StochasticMatrix::from_rows(&[[0.5, 0.6]]).is_err());
        assert!(StochasticMatrix::from_rows(&[[1.5, -0.5]]).is_err());
    }

    #[test]
    fn anchor_json_round_trip() {
        let a = AnchorSet::from_rows(&[[0.0, 1.0], [2.0, 3.0]], 10.0, ScaleMode::Normalized).unwrap();
        let text = serde_json::to_string(&a.to_json()).unwrap();
        assert!(text.contains("\"scale_mode\":\"normalized\""));
        let back = AnchorSet::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(a, back);
    }
}
