//! Experiment runners: hull/maxima speedup benchmark, estimator-oracle
//! correlation and estimator ablation.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::datasets::{gen_dataset, DatasetKind, DatasetSpec};
use super::stats::{ci95, linear_fit, mean_std, Regression};
use crate::entropy::{fit_anchors, AnchorInit, FitConfig, ScaleMode};
use crate::error::{Error, Result};
use crate::geometry::{
    adaptive_maxima, chans_hull, hausdorff, hull_error_pct, maxima_3d, monotone_chain_hull, partition_merge_hull,
};
use crate::oracle::{generating_partition_entropy, min_entropy_arrangement};
use crate::points::{fmt_f64, PointSet};
use crate::restructure::{restructure, EstimatorState, RestructureConfig};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Raw,
    Chan,
    HeuristicSort,
    RandomPermutation,
    /// Partition from the fitted estimator, no point motion.
    Adaptive,
    RestructureAdaptive,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Raw,
        Method::Chan,
        Method::HeuristicSort,
        Method::RandomPermutation,
        Method::Adaptive,
        Method::RestructureAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::Chan => "chan",
            Method::HeuristicSort => "heuristic_sort",
            Method::RandomPermutation => "random_permutation",
            Method::Adaptive => "adaptive",
            Method::RestructureAdaptive => "restructure+adaptive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub trials: usize,
    pub timing: bool,
    pub restructure: RestructureConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            trials: 5,
            timing: false,
            restructure: RestructureConfig::default(),
        }
    }
}

pub const BENCH_HEADER: [&str; 14] = [
    "dataset",
    "method",
    "n",
    "seed",
    "op_count_mean",
    "op_count_std",
    "runtime_ns_mean",
    "runtime_ns_std",
    "speedup",
    "hull_error_pct",
    "hausdorff",
    "entropy_before",
    "entropy_after",
    "preprocess_ns",
];

pub const WARMUP_TRIALS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub dataset: String,
    pub method: String,
    pub n: usize,
    pub seed: u64,
    pub op_count_mean: f64,
    pub op_count_std: f64,
    pub runtime_ns_mean: Option<f64>,
    pub runtime_ns_std: Option<f64>,
    /// Baseline mean op count over this method's mean op count.
    pub speedup: f64,
    pub hull_error_pct: Option<f64>,
    pub hausdorff: Option<f64>,
    pub entropy_before: Option<f64>,
    pub entropy_after: Option<f64>,
    pub preprocess_ns: Option<f64>,
    /// Per-trial op counts of this method and of the raw baseline.
    #[serde(skip)]
    pub op_counts: Vec<f64>,
    #[serde(skip)]
    pub baseline_op_counts: Vec<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_bench_csv<W: Write>(records: &[BenchRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(BENCH_HEADER)?;
    for r in records {
        wr.write_record([
            r.dataset.clone(),
            r.method.clone(),
            r.n.to_string(),
            r.seed.to_string(),
            fmt_f64(r.op_count_mean),
            fmt_f64(r.op_count_std),
            opt(r.runtime_ns_mean),
            opt(r.runtime_ns_std),
            fmt_f64(r.speedup),
            opt(r.hull_error_pct),
            opt(r.hausdorff),
            opt(r.entropy_before),
            opt(r.entropy_after),
            opt(r.preprocess_ns),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Output of one method on one trial instance.
struct Outcome {
    op_count: f64,
    elapsed_ns: f64,
    /// Hull vertices (2-D) or maxima points (3-D).
    output: PointSet,
    area: Option<f64>,
    entropy_before: Option<f64>,
    entropy_after: Option<f64>,
    preprocess_ns: f64,
}

fn vertices_set(v: &[[f64; 2]]) -> Result<PointSet> {
    PointSet::from_rows(v)
}

/// Core computation of a method on already-prepared input.
fn run_core(pts: &PointSet, part: Option<&crate::partition::HardPartition>, use_chan: bool) -> Result<(f64, f64, PointSet, Option<f64>)> {
    if pts.dim() == 2 {
        let h = match (part, use_chan) {
            (Some(p), _) => partition_merge_hull(pts, p)?,
            (None, true) => chans_hull(pts)?,
            (None, false) => monotone_chain_hull(pts)?,
        };
        Ok((
            h.op_count as f64,
            h.elapsed_ns.unwrap_or(0) as f64,
            vertices_set(&h.vertices)?,
            Some(h.area),
        ))
    } else {
        if use_chan {
            return Err(Error::invalid("chan applies to 2-D datasets only"));
        }
        let m = match part {
            Some(p) => adaptive_maxima(pts, p)?,
            None => maxima_3d(pts)?,
        };
        Ok((
            m.op_count as f64,
            m.elapsed_ns.unwrap_or(0) as f64,
            pts.select(&m.indices)?,
            None,
        ))
    }
}

fn timed_core(
    pts: &PointSet,
    part: Option<&crate::partition::HardPartition>,
    use_chan: bool,
    timing: bool,
) -> Result<(f64, f64, PointSet, Option<f64>)> {
    if timing {
        for _ in 0..WARMUP_TRIALS {
            run_core(pts, part, use_chan)?;
        }
    }
    run_core(pts, part, use_chan)
}

fn run_method(
    method: Method,
    s: &PointSet,
    est: &EstimatorState,
    h0: f64,
    trial_seed: u64,
    cfg: &BenchConfig,
) -> Result<Outcome> {
    let plain = |pts: &PointSet, pre: f64, chan: bool| -> Result<Outcome> {
        let (op_count, elapsed_ns, output, area) = timed_core(pts, None, chan, cfg.timing)?;
        Ok(Outcome {
            op_count,
            elapsed_ns,
            output,
            area,
            entropy_before: Some(h0),
            entropy_after: Some(h0),
            preprocess_ns: pre,
        })
    };
    match method {
        Method::Raw => plain(s, 0.0, false),
        Method::Chan => plain(s, 0.0, true),
        Method::HeuristicSort => {
            let start = Instant::now();
            let mut order: Vec<usize> = (0..s.len()).collect();
            order.sort_by(|&a, &b| s.point(a)[0].total_cmp(&s.point(b)[0]));
            let sorted = s.select(&order)?;
            plain(&sorted, start.elapsed().as_nanos() as f64, false)
        }
        Method::RandomPermutation => {
            let start = Instant::now();
            let mut order: Vec<usize> = (0..s.len()).collect();
            order.shuffle(&mut rng_for(trial_seed, 0x9E43));
            let shuffled = s.select(&order)?;
            plain(&shuffled, start.elapsed().as_nanos() as f64, false)
        }
        Method::Adaptive => {
            let start = Instant::now();
            let p = est.hard_partition(s)?;
            let pre = start.elapsed().as_nanos() as f64;
            let (op_count, elapsed_ns, output, area) = timed_core(s, Some(&p), false, cfg.timing)?;
            Ok(Outcome {
                op_count,
                elapsed_ns,
                output,
                area,
                entropy_before: Some(h0),
                entropy_after: Some(h0),
                preprocess_ns: pre,
            })
        }
        Method::RestructureAdaptive => {
            let start = Instant::now();
            let rcfg = RestructureConfig {
                seed: trial_seed,
                ..cfg.restructure
            };
            let r = restructure(s, &rcfg)?;
            let p = r.estimator.hard_partition(&r.output)?;
            let pre = start.elapsed().as_nanos() as f64;
            let (op_count, elapsed_ns, output, area) = timed_core(&r.output, Some(&p), false, cfg.timing)?;
            Ok(Outcome {
                op_count,
                elapsed_ns,
                output,
                area,
                entropy_before: r.trace.first().map(|t| t.entropy),
                entropy_after: r.trace.last().map(|t| t.entropy),
                preprocess_ns: pre,
            })
        }
    }
}

fn mean_opt(xs: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = xs.iter().copied().collect::<Option<Vec<f64>>>()?;
    Some(mean_std(&v).0)
}

/// Runs every method on `trials` seeded instances of every dataset. Trial
/// `t` of a dataset with seed `s` uses the instance seed `derive_seed(s, t)`.
/// Chan is skipped on 3-D datasets.
pub fn run_speedup_bench(datasets: &[DatasetSpec], methods: &[Method], cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.trials < 2 {
        return Err(Error::invalid("benchmark needs at least 2 trials"));
    }
    let mut records = Vec::new();
    for spec in datasets {
        let methods: Vec<Method> = methods
            .iter()
            .copied()
            .filter(|&m| spec.kind.dim() == 2 || m != Method::Chan)
            .collect();
        let mut outcomes: Vec<Vec<Outcome>> = methods.iter().map(|_| Vec::new()).collect();
        let mut baseline = Vec::with_capacity(cfg.trials);
        let mut hull_err: Vec<Vec<Option<f64>>> = methods.iter().map(|_| Vec::new()).collect();
        let mut hd: Vec<Vec<Option<f64>>> = methods.iter().map(|_| Vec::new()).collect();
        for t in 0..cfg.trials {
            let trial_seed = derive_seed(spec.seed, t as u64);
            let ds = gen_dataset(&DatasetSpec { seed: trial_seed, ..*spec })?;
            let s = ds.points;
            let rcfg = RestructureConfig {
                seed: trial_seed,
                ..cfg.restructure
            };
            let est = EstimatorState::fit(&s, &rcfg)?;
            let h0 = est.entropy(&s, false)?.0;
            let base = run_method(Method::Raw, &s, &est, h0, trial_seed, cfg)?;
            for (mi, &m) in methods.iter().enumerate() {
                let o = run_method(m, &s, &est, h0, trial_seed, cfg)?;
                let err = match (base.area, o.area) {
                    (Some(a), Some(b)) if a > 0.0 => Some((a - b).abs() / a * 100.0),
                    _ => None,
                };
                let h = if base.output.is_empty() || o.output.is_empty() {
                    None
                } else {
                    Some(hausdorff(&base.output, &o.output)?)
                };
                hull_err[mi].push(err);
                hd[mi].push(h);
                outcomes[mi].push(o);
            }
            baseline.push(base.op_count);
        }
        let base_mean = mean_std(&baseline).0;
        for (mi, &m) in methods.iter().enumerate() {
            let os = &outcomes[mi];
            let ops: Vec<f64> = os.iter().map(|o| o.op_count).collect();
            let (om, osd) = mean_std(&ops);
            let (rt_mean, rt_std, pre) = if cfg.timing {
                let rt: Vec<f64> = os.iter().map(|o| o.elapsed_ns).collect();
                let (a, b) = mean_std(&rt);
                let pre: Vec<f64> = os.iter().map(|o| o.preprocess_ns).collect();
                (Some(a), Some(b), Some(mean_std(&pre).0))
            } else {
                (None, None, None)
            };
            records.push(BenchRecord {
                dataset: spec.kind.name().to_string(),
                method: m.name().to_string(),
                n: spec.n,
                seed: spec.seed,
                op_count_mean: om,
                op_count_std: osd,
                runtime_ns_mean: rt_mean,
                runtime_ns_std: rt_std,
                speedup: if m == Method::Raw { 1.0 } else { base_mean / om },
                hull_error_pct: mean_opt(&hull_err[mi]),
                hausdorff: mean_opt(&hd[mi]),
                entropy_before: mean_opt(&os.iter().map(|o| o.entropy_before).collect::<Vec<_>>()),
                entropy_after: mean_opt(&os.iter().map(|o| o.entropy_after).collect::<Vec<_>>()),
                preprocess_ns: pre,
                op_counts: ops,
                baseline_op_counts: baseline.clone(),
            });
        }
    }
    Ok(records)
}

/// Hull error of a restructured set against the input, recomputed from
/// scratch; exposed for the CLI and tests.
pub fn restructure_hull_error(s: &PointSet, s2: &PointSet) -> Result<f64> {
    hull_error_pct(&monotone_chain_hull(s)?, &monotone_chain_hull(s2)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleMode {
    Generating,
    /// Minimum-entropy arrangement of this many lines.
    Arrangement(usize),
}

impl FromStr for OracleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "generating" {
            return Ok(OracleMode::Generating);
        }
        if let Some(m) = s.strip_prefix("arrangement_") {
            let m = m.parse().map_err(|_| Error::invalid(format!("bad oracle mode {s:?}")))?;
            return Ok(OracleMode::Arrangement(m));
        }
        Err(Error::invalid(format!("unknown oracle mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationConfig {
    pub n_instances: usize,
    pub n: usize,
    /// Blob counts, cycled over instances.
    pub levels: Vec<usize>,
    pub oracle: OracleMode,
    pub alpha: f64,
    pub scale_mode: ScaleMode,
    /// Blob standard deviation relative to the center spacing.
    pub sigma: f64,
    pub seed: u64,
}

/// Near the discrete limit, so the fitted estimator tracks hard cluster
/// masses.
pub const CORRELATION_ALPHA: f64 = 100.0;

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self {
            n_instances: 50,
            n: 12,
            levels: (1..=8).collect(),
            oracle: OracleMode::Generating,
            alpha: CORRELATION_ALPHA,
            scale_mode: ScaleMode::Normalized,
            sigma: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub instance: usize,
    pub blobs: usize,
    pub h_diff: f64,
    pub oracle_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rows: Vec<CorrelationRow>,
    pub fit: Regression,
    /// Same values with the oracle column shuffled.
    pub permuted: Regression,
}

pub const CORRELATION_HEADER: [&str; 4] = ["instance", "blobs", "h_diff", "oracle_entropy"];

impl CorrelationResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CORRELATION_HEADER)?;
        for r in &self.rows {
            wr.write_record([
                r.instance.to_string(),
                r.blobs.to_string(),
                fmt_f64(r.h_diff),
                fmt_f64(r.oracle_entropy),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Fitted ball-estimator entropy (one anchor per generating blob) against
/// the oracle's normalized entropy on seeded blob instances.
pub fn run_correlation(cfg: &CorrelationConfig) -> Result<CorrelationResult> {
    if cfg.n_instances < 10 {
        return Err(Error::invalid("correlation needs at least 10 instances"));
    }
    if cfg.levels.is_empty() || cfg.levels.contains(&0) {
        return Err(Error::invalid("blob levels must be positive"));
    }
    let mut rows = Vec::with_capacity(cfg.n_instances);
    for i in 0..cfg.n_instances {
        let blobs = cfg.levels[i % cfg.levels.len()];
        let seed = derive_seed(cfg.seed, i as u64);
        let spec = DatasetSpec::new(DatasetKind::Blobs2d, cfg.n, seed)
            .with_blobs(blobs)
            .with_sigma(cfg.sigma);
        let ds = gen_dataset(&spec)?;
        let fc = FitConfig {
            scale_mode: cfg.scale_mode,
            seed,
            ..FitConfig::new(blobs.min(cfg.n), cfg.alpha)
        };
        let fit = fit_anchors(&ds.points, &fc)?;
        let h = *fit.trace.last().expect("trace is never empty");
        let oracle = match cfg.oracle {
            OracleMode::Generating => {
                generating_partition_entropy(ds.labels.as_deref().expect("blob labels"))?.entropy_normalized
            }
            OracleMode::Arrangement(m) => min_entropy_arrangement(&ds.points, m)?.result.entropy_normalized,
        };
        rows.push(CorrelationRow {
            instance: i,
            blobs,
            h_diff: h,
            oracle_entropy: oracle,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.h_diff).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.oracle_entropy).collect();
    let fit = linear_fit(&x, &y)?;
    let mut shuffled = y.clone();
    shuffled.shuffle(&mut rng_for(cfg.seed, 0x5EED));
    let permuted = linear_fit(&x, &shuffled)?;
    Ok(CorrelationResult { rows, fit, permuted })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub alphas: Vec<f64>,
    pub ks: Vec<usize>,
    pub inits: Vec<AnchorInit>,
    pub dataset: DatasetSpec,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub factor: String,
    pub value: String,
    pub alpha: f64,
    pub k: Option<usize>,
    pub init: AnchorInit,
    pub speedup: f64,
    pub speedup_ci_low: f64,
    pub speedup_ci_high: f64,
    pub hull_error_pct: Option<f64>,
    pub entropy_after: Option<f64>,
    pub trials: usize,
    #[serde(skip)]
    pub record: BenchRecord,
}

pub const ABLATION_HEADER: [&str; 11] = [
    "factor",
    "value",
    "alpha",
    "k",
    "init",
    "speedup",
    "speedup_ci_low",
    "speedup_ci_high",
    "hull_error_pct",
    "entropy_after",
    "trials",
];

pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(ABLATION_HEADER)?;
    for r in rows {
        wr.write_record([
            r.factor.clone(),
            r.value.clone(),
            fmt_f64(r.alpha),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            serde_json::to_value(r.init)?.as_str().unwrap_or_default().to_string(),
            fmt_f64(r.speedup),
            fmt_f64(r.speedup_ci_low),
            fmt_f64(r.speedup_ci_high),
            opt(r.hull_error_pct),
            opt(r.entropy_after),
            r.trials.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// One-factor-at-a-time grid around the configured defaults, each cell a
/// restructure+adaptive speedup run.
pub fn run_ablation(cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    if cfg.alphas.is_empty() && cfg.ks.is_empty() && cfg.inits.is_empty() {
        return Err(Error::invalid("ablation grid is empty"));
    }
    let base = cfg.bench.restructure;
    let mut cells: Vec<(String, String, RestructureConfig)> = Vec::new();
    for &a in &cfg.alphas {
        cells.push(("alpha".into(), fmt_f64(a), RestructureConfig { alpha: a, ..base }));
    }
    for &k in &cfg.ks {
        cells.push(("k".into(), k.to_string(), RestructureConfig { k: Some(k), ..base }));
    }
    for &init in &cfg.inits {
        let name = serde_json::to_value(init)?.as_str().unwrap_or_default().to_string();
        cells.push(("init".into(), name, RestructureConfig { init, ..base }));
    }
    let mut rows = Vec::with_capacity(cells.len());
    for (factor, value, rc) in cells {
        let bench = BenchConfig {
            restructure: rc,
            ..cfg.bench
        };
        let rec = run_speedup_bench(&[cfg.dataset], &[Method::RestructureAdaptive], &bench)?
            .pop()
            .expect("one record");
        let per_trial: Vec<f64> = rec
            .baseline_op_counts
            .iter()
            .zip(&rec.op_counts)
            .map(|(b, m)| b / m)
            .collect();
        let (lo, hi) = ci95(&per_trial);
        rows.push(AblationRow {
            factor,
            value,
            alpha: rc.alpha,
            k: rc.k,
            init: rc.init,
            speedup: rec.speedup,
            speedup_ci_low: lo,
            speedup_ci_high: hi,
            hull_error_pct: rec.hull_error_pct,
            entropy_after: rec.entropy_after,
            trials: bench.trials,
            record: rec,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> BenchConfig {
        BenchConfig {
            trials: 2,
            timing: false,
            restructure: RestructureConfig {
                steps: 10,
                ..Default::default()
            },
        }
    }

    #[test]
    fn raw_only_has_unit_speedup() {
        let spec = DatasetSpec::new(DatasetKind::Uniform2d, 200, 1);
        let r = run_speedup_bench(&[spec], &[Method::Raw], &small_cfg()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].speedup, 1.0);
        assert_eq!(r[0].hull_error_pct, Some(0.0));
    }

    #[test]
    fn exact_methods_keep_the_hull() {
        let spec = DatasetSpec::new(DatasetKind::Parabolic2d, 300, 2);
        let methods = [Method::Chan, Method::HeuristicSort, Method::RandomPermutation, Method::Adaptive];
        for r in run_speedup_bench(&[spec], &methods, &small_cfg()).unwrap() {
            assert_eq!(r.hull_error_pct, Some(0.0), "{}", r.method);
            assert_eq!(r.hausdorff, Some(0.0), "{}", r.method);
        }
    }

    #[test]
    fn bench_is_deterministic() {
        let spec = DatasetSpec::new(DatasetKind::Blobs2d, 256, 3);
        let cfg = small_cfg();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let methods = [Method::Raw, Method::RestructureAdaptive];
        write_bench_csv(&run_speedup_bench(&[spec], &methods, &cfg).unwrap(), &mut a).unwrap();
        write_bench_csv(&run_speedup_bench(&[spec], &methods, &cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let header = String::from_utf8(a).unwrap();
        assert!(header.starts_with(&BENCH_HEADER.join(",")));
    }

    #[test]
    fn maxima_bench_on_3d() {
        let spec = DatasetSpec::new(DatasetKind::Pareto3d, 300, 4);
        let r = run_speedup_bench(&[spec], &[Method::Raw, Method::Adaptive], &small_cfg()).unwrap();
        assert_eq!(r[1].hausdorff, Some(0.0));
        assert!(r[1].hull_error_pct.is_none());
    }

    #[test]
    fn correlation_two_levels() {
        let cfg = CorrelationConfig {
            n_instances: 10,
            levels: vec![1, 2],
            ..Default::default()
        };
        let r = run_correlation(&cfg).unwrap();
        assert_eq!(r.rows.len(), 10);
        assert!(r.fit.r2 > 0.9);
    }

    #[test]
    fn parse_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("arrangement_2".parse::<OracleMode>().unwrap(), OracleMode::Arrangement(2));
    }
}
