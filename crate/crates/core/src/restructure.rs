//! Gradient-based restructuring of a point set toward low entropy while
//! staying close to the input.
//!
//! The loss is `chamfer(S, S') + lambda * H(S') + mu * mean_i |x'_i - x_i|^2`
//! with `S' = S + delta`. Descent runs on `delta` directly, starting from 0.

use serde::{Deserialize, Serialize};

use crate::entropy::{self, default_k, AnchorInit, AnchorSet, FitConfig, ScaleMode, MAX_HALVINGS};
use crate::error::{Error, Result};
use crate::geometry::metrics::chamfer_with_grad;
use crate::halfspace::{self, CellGating, HalfFitConfig, HalfspaceSet, InitStrategy};
use crate::partition::HardPartition;
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Ball,
    Halfspace,
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(Estimator::Ball),
            "halfspace" => Ok(Estimator::Halfspace),
            other => Err(Error::invalid(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestructureConfig {
    pub lambda: f64,
    pub mu: f64,
    pub estimator: Estimator,
    /// Anchor count; `None` means `min(16, n / 4)`.
    pub k: Option<usize>,
    pub alpha: f64,
    pub scale_mode: ScaleMode,
    pub init: AnchorInit,
    pub m: usize,
    pub tau: f64,
    pub refit_every: usize,
    /// Descent steps per estimator refit.
    pub refit_steps: usize,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for RestructureConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            mu: 0.01,
            estimator: Estimator::Ball,
            k: None,
            alpha: entropy::DEFAULT_ALPHA,
            scale_mode: ScaleMode::Raw,
            init: AnchorInit::Kmeanspp,
            m: 2,
            tau: 0.25,
            refit_every: 25,
            refit_steps: 25,
            steps: 500,
            lr: 1e-3,
            seed: 0,
        }
    }
}

impl RestructureConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.mu >= 0.0) {
            return Err(Error::invalid("lambda and mu must be non-negative"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be positive"));
        }
        Ok(())
    }
}

/// Estimator parameters held fixed between refits.
#[derive(Debug, Clone)]
pub enum EstimatorState {
    Ball(AnchorSet),
    Halfspace(HalfspaceSet, CellGating),
}

impl EstimatorState {
    /// Fits the estimator to `s` from the configured initialization.
    pub fn fit(s: &PointSet, cfg: &RestructureConfig) -> Result<Self> {
        match cfg.estimator {
            Estimator::Ball => {
                let k = cfg.k.unwrap_or_else(|| default_k(s.len())).clamp(1, s.len());
                let fc = FitConfig {
                    scale_mode: cfg.scale_mode,
                    init: cfg.init,
                    seed: cfg.seed,
                    ..FitConfig::new(k, cfg.alpha)
                };
                Ok(Self::Ball(entropy::fit_anchors(s, &fc)?.anchors))
            }
            Estimator::Halfspace => {
                let hc = HalfFitConfig {
                    m: cfg.m,
                    tau: cfg.tau,
                    strategy: InitStrategy::Principal,
                    steps: 100,
                    lr: 0.05,
                    seed: cfg.seed,
                };
                let r = halfspace::h_diff_half(s, &hc)?;
                Ok(Self::Halfspace(r.halfspaces, r.gating))
            }
        }
    }

    fn refit(self, s: &PointSet, steps: usize) -> Result<Self> {
        match self {
            Self::Ball(a) => Ok(Self::Ball(entropy::descend_anchors(s, a, steps, 0.05)?.anchors)),
            Self::Halfspace(h, g) => {
                let r = halfspace::descend_halfspaces(s, h, g, steps, 0.05)?;
                Ok(Self::Halfspace(r.halfspaces, r.gating))
            }
        }
    }

    pub fn entropy(&self, s: &PointSet, with_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        let r = match self {
            Self::Ball(a) => entropy::h_diff(s, a, with_grad)?,
            Self::Halfspace(h, g) => halfspace::h_soft(s, h, g, with_grad)?,
        };
        Ok((r.value, r.grad_points))
    }

    /// Hard partition of `s` induced by the estimator.
    pub fn hard_partition(&self, s: &PointSet) -> Result<HardPartition> {
        match self {
            Self::Ball(a) => HardPartition::from_labels(&entropy::hard_assign(s, a)?),
            Self::Halfspace(h, g) => halfspace::hard_masses(s, h, g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossTerms {
    pub chamfer: f64,
    pub entropy: f64,
    pub stability: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub chamfer: f64,
    pub entropy: f64,
    pub stability: f64,
    pub total: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct RestructureResult {
    pub output: PointSet,
    /// Row-major `n x d`.
    pub displacement: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub iterations_run: usize,
    pub estimator: EstimatorState,
}

pub const TRACE_HEADER: [&str; 6] = ["step", "chamfer", "entropy", "stability", "total", "lr"];

impl RestructureResult {
    pub fn write_trace_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        use crate::points::fmt_f64;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(TRACE_HEADER)?;
        for r in &self.trace {
            wr.write_record([
                r.step.to_string(),
                fmt_f64(r.chamfer),
                fmt_f64(r.entropy),
                fmt_f64(r.stability),
                fmt_f64(r.total),
                fmt_f64(r.lr),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn stability(delta: &[f64], n: usize) -> f64 {
    delta.iter().map(|v| v * v).sum::<f64>() / n as f64
}

fn combine(c: f64, e: f64, st: f64, cfg: &RestructureConfig) -> LossTerms {
    LossTerms {
        chamfer: c,
        entropy: e,
        stability: st,
        total: c + cfg.lambda * e + cfg.mu * st,
    }
}

fn check_same_shape(s: &PointSet, s2: &PointSet) -> Result<()> {
    if s.dim() != s2.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: s2.dim(),
        });
    }
    if s.len() != s2.len() {
        return Err(Error::invalid(format!("point counts differ: {} vs {}", s.len(), s2.len())));
    }
    Ok(())
}

/// Loss terms of `s2` against `s` under fixed estimator parameters.
pub fn loss_eval(s: &PointSet, s2: &PointSet, est: &EstimatorState, cfg: &RestructureConfig) -> Result<LossTerms> {
    check_same_shape(s, s2)?;
    let (c, _) = chamfer_with_grad(s, s2, false)?;
    let (e, _) = est.entropy(s2, false)?;
    let delta: Vec<f64> = s2.as_flat().iter().zip(s.as_flat()).map(|(a, b)| a - b).collect();
    Ok(combine(c, e, stability(&delta, s.len()), cfg))
}

fn loss_and_grad(
    s: &PointSet,
    delta: &[f64],
    est: &EstimatorState,
    cfg: &RestructureConfig,
    step: usize,
) -> Result<(LossTerms, Vec<f64>)> {
    let n = s.len();
    let s2 = s.displaced(delta)?;
    let (c, gc) = chamfer_with_grad(s, &s2, true)?;
    let (e, ge) = est.entropy(&s2, cfg.lambda > 0.0)?;
    let terms = combine(c, e, stability(delta, n), cfg);
    if !terms.total.is_finite() {
        return Err(Error::Divergence {
            step,
            what: "non-finite loss".into(),
        });
    }
    let mut g = gc.expect("requested");
    if let Some(ge) = ge {
        g.iter_mut().zip(&ge).for_each(|(a, b)| *a += cfg.lambda * b);
    }
    let two_mu_n = 2.0 * cfg.mu / n as f64;
    g.iter_mut().zip(delta).for_each(|(a, d)| *a += two_mu_n * d);
    Ok((terms, g))
}

fn cosine_lr(lr: f64, t: usize, steps: usize) -> f64 {
    if steps == 0 {
        return lr;
    }
    0.5 * lr * (1.0 + (std::f64::consts::PI * t as f64 / steps as f64).cos())
}

fn row(step: usize, t: &LossTerms, lr: f64) -> TraceRow {
    TraceRow {
        step,
        chamfer: t.chamfer,
        entropy: t.entropy,
        stability: t.stability,
        total: t.total,
        lr,
    }
}

/// Minimizes the restructuring loss by gradient descent on the displacement.
///
/// The learning rate follows a cosine schedule; a step that
/// would raise the loss is halved up to 20 times and otherwise skipped.
/// Estimator parameters are re-descended from their current values every
/// `refit_every` steps.
pub fn restructure(s: &PointSet, cfg: &RestructureConfig) -> Result<RestructureResult> {
    cfg.validate()?;
    if s.is_empty() {
        return Err(Error::invalid("empty point set"));
    }
    let n = s.len();
    let mut delta = vec![0.0; n * s.dim()];
    let mut est = EstimatorState::fit(s, cfg)?;
    if n < 2 {
        let t = loss_eval(s, s, &est, cfg)?;
        return Ok(RestructureResult {
            output: s.clone(),
            displacement: delta,
            trace: vec![row(0, &t, cfg.lr)],
            iterations_run: 0,
            estimator: est,
        });
    }
    let (mut cur, mut grad) = loss_and_grad(s, &delta, &est, cfg, 0)?;
    let mut trace = vec![row(0, &cur, cosine_lr(cfg.lr, 0, cfg.steps))];
    for step in 1..=cfg.steps {
        if cfg.refit_every > 0 && step % cfg.refit_every == 0 && cfg.lambda > 0.0 {
            let s2 = s.displaced(&delta)?;
            est = est.refit(&s2, cfg.refit_steps)?;
            (cur, grad) = loss_and_grad(s, &delta, &est, cfg, step)?;
        }
        let lr = cosine_lr(cfg.lr, step - 1, cfg.steps);
        let mut eta = lr;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = delta.iter().zip(&grad).map(|(d, g)| d - eta * g).collect();
            if cand.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step,
                    what: "non-finite displacement".into(),
                });
            }
            let (t, g) = loss_and_grad(s, &cand, &est, cfg, step)?;
            if t.total <= cur.total {
                accepted = Some((cand, t, g));
                break;
            }
            eta *= 0.5;
        }
        if let Some((cand, t, g)) = accepted {
            delta = cand;
            cur = t;
            grad = g;
        }
        trace.push(row(step, &cur, lr));
    }
    Ok(RestructureResult {
        output: s.displaced(&delta)?,
        displacement: delta,
        trace,
        iterations_run: cfg.steps,
        estimator: est,
    })
}
