//! Summary statistics: mean and deviation, paired t-test, R^2, normal CIs.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Sample mean and standard deviation (`n - 1` denominator; 0 for n < 2).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Normal-approximation 95% confidence interval of the mean.
pub fn ci95(xs: &[f64]) -> (f64, f64) {
    let (m, s) = mean_std(xs);
    let half = 1.959_963_984_540_054 * s / (xs.len() as f64).sqrt();
    (m - half, m + half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsSummary {
    pub t: f64,
    pub df: usize,
    /// Two-sided.
    pub p_value: f64,
    /// Zero variance of the differences.
    pub degenerate: bool,
}

fn t_density(x: f64, nu: f64) -> f64 {
    let ln_c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln();
    (ln_c - (nu + 1.0) / 2.0 * (1.0 + x * x / nu).ln()).exp()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom, integrating the density over the tail mapped onto
/// `[0, 1)`.
pub fn student_t_two_sided(t: f64, df: usize) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let nu = df as f64;
    let t0 = t.abs();
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let x = t0 + s / (1.0 - s);
        t_density(x, nu) / ((1.0 - s) * (1.0 - s))
    };
    let tail = integrate(&g, 0.0, 1.0, 1e-13);
    (2.0 * tail).clamp(0.0, 1.0)
}

/// Paired t-test on `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<StatsSummary> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("paired t-test needs two equal series of length >= 2"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, sd) = mean_std(&d);
    let df = d.len() - 1;
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            StatsSummary {
                t: 0.0,
                df,
                p_value: 1.0,
                degenerate: true,
            }
        } else {
            StatsSummary {
                t: mean.signum() * f64::INFINITY,
                df,
                p_value: 0.0,
                degenerate: true,
            }
        });
    }
    let t = mean / (sd / (d.len() as f64).sqrt());
    Ok(StatsSummary {
        t,
        df,
        p_value: student_t_two_sided(t, df),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    /// `r^2` before clamping.
    pub r2_raw: f64,
    /// `r^2`, reported as 0 for negative correlation.
    pub r2: f64,
}

/// Least-squares line `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<Regression> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("regression needs two equal series of length >= 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("regression on a constant series"));
    }
    let slope = sxy / sxx;
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let r2_raw = r * r;
    Ok(Regression {
        slope,
        intercept: my - slope * mx,
        pearson_r: r,
        r2_raw,
        r2: if r < 0.0 { 0.0 } else { r2_raw },
    })
}
