use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rangent::bench::{
    emit_svg_scatter, gen_dataset, run_ablation, run_correlation, run_speedup_bench, write_ablation_csv,
    write_bench_csv, AblationConfig, BenchConfig, CorrelationConfig, DatasetKind, DatasetSpec, Method, OracleMode, CORRELATION_ALPHA,
};
use rangent::config::RunConfig;
use rangent::entropy::{
    default_k, fit_anchors, h_diff, select_k_elbow, AnchorInit, AnchorSet, AnchorSetJson, FitConfig, ScaleMode,
    DEFAULT_ALPHA,
};
use rangent::geometry::{adaptive_maxima, chans_hull, maxima_3d, monotone_chain_hull, partition_merge_hull};
use rangent::halfspace::{
    enumerate_cells, evaluate_bound, h_diff_half, h_soft, HalfFitConfig, HalfspaceSet, HalfspaceSetJson, InitStrategy,
};
use rangent::oracle::{
    generating_partition_entropy, min_entropy_arrangement, min_entropy_partition,
    realizable_subsets_2d,
};
use rangent::points::fmt_f64;
use rangent::restructure::{restructure, RestructureConfig};
use rangent::{Error, HardPartition, PointSet, Result};

#[derive(Parser)]
#[command(name = "rangent", version, about = "Range-partition entropy estimators, oracles and adaptive geometry")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (stdout if absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded dataset.
    Gen(GenArgs),
    /// Evaluate a differentiable entropy estimator.
    Entropy(EntropyArgs),
    /// Fit anchors for the ball estimator.
    FitAnchors(FitArgs),
    /// Move points toward low entropy.
    Restructure(RestructureArgs),
    /// Exact 2-D convex hull.
    Hull(HullArgs),
    /// 3-D maxima set.
    Maxima(MaximaArgs),
    /// Exact small-instance partition entropies.
    Oracle(OracleArgs),
    /// Data-dependent bound for the halfspace estimator.
    Bound(BoundArgs),
    /// Operation-count speedup benchmark.
    Bench(BenchArgs),
    /// Estimator vs oracle correlation study.
    Correlate(CorrelateArgs),
    /// Estimator design ablation.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: DatasetKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 16)]
    blobs: usize,
    /// Also write generating labels (blob kinds) to this CSV.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct InputArg {
    /// Points as CSV (header row) or JSON {"points": [[...]]}.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct EntropyArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long, value_enum, default_value = "ball")]
    estimator: EstimatorArg,
    /// Anchor JSON; fitted from the data if absent.
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// Halfspace JSON; fitted from the data if absent.
    #[arg(long)]
    halfspaces: Option<PathBuf>,
    /// Include gradients in the output.
    #[arg(long)]
    grad: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Ball,
    Halfspace,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long, default_value = "kmeanspp")]
    init: AnchorInit,
    /// Choose k by the elbow rule over `MIN:MAX`.
    #[arg(long)]
    elbow: Option<String>,
}

#[derive(Args)]
struct RestructureArgs {
    #[command(flatten)]
    input: InputArg,
    /// Per-step trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HullMethod {
    MonotoneChain,
    Chan,
    PartitionMerge,
}

#[derive(Args)]
struct HullArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long, value_enum, default_value = "monotone-chain")]
    method: HullMethod,
    /// Part labels CSV for partition-based methods.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaximaMethod {
    Sweep,
    Adaptive,
}

#[derive(Args)]
struct MaximaArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long, value_enum, default_value = "sweep")]
    method: MaximaMethod,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Subsets,
    Partition,
    Arrangement,
    Generating,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long, value_enum, default_value = "partition")]
    mode: OracleKind,
    /// Line count for the arrangement mode.
    #[arg(long = "lines", default_value_t = 1)]
    lines: usize,
    /// Labels CSV for the generating mode.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    input: InputArg,
    /// Halfspace JSON; fitted from the data if absent.
    #[arg(long)]
    halfspaces: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "uniform2d")]
    datasets: Vec<DatasetKind>,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "raw,heuristic_sort,random_permutation,restructure+adaptive")]
    methods: Vec<Method>,
    /// Record wall-clock times (sequential, with warmup).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value = "generating")]
    oracle_mode: OracleMode,
    /// Scatter plot of the pairs.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "4,16")]
    ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "kmeanspp,random")]
    inits: Vec<AnchorInit>,
    #[arg(long, default_value_t = 1024)]
    n: usize,
}

struct Ctx {
    seed: u64,
    cfg: RunConfig,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Ctx {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn json<T: Serialize>(&self, v: &T) -> Result<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn alpha(&self) -> f64 {
        self.cfg.alpha.unwrap_or(DEFAULT_ALPHA)
    }

    fn scale_mode(&self) -> ScaleMode {
        self.cfg.scale_mode.unwrap_or_default()
    }

    fn fit_config(&self, n: usize, init: AnchorInit) -> FitConfig {
        let base = FitConfig::new(self.cfg.k.unwrap_or_else(|| default_k(n)), self.alpha());
        FitConfig {
            scale_mode: self.scale_mode(),
            init,
            steps: self.cfg.steps.unwrap_or(base.steps),
            lr: self.cfg.lr.unwrap_or(base.lr),
            seed: self.seed,
            ..base
        }
    }

    fn half_config(&self) -> HalfFitConfig {
        HalfFitConfig {
            m: self.cfg.m.unwrap_or(2),
            tau: self.cfg.tau.unwrap_or(0.25),
            strategy: InitStrategy::Principal,
            steps: self.cfg.steps.unwrap_or(100),
            lr: self.cfg.lr.unwrap_or(0.05),
            seed: self.seed,
        }
    }

    fn restructure_config(&self) -> RestructureConfig {
        self.cfg.restructure(RestructureConfig {
            seed: self.seed,
            ..Default::default()
        })
    }

    fn trials(&self) -> usize {
        self.cfg.trials.unwrap_or(5)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(io::BufReader::new(File::open(path)?))?)
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            r.get(0)
                .unwrap_or_default()
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad label in {}", path.display())))
        })
        .collect()
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_points(ctx: &Ctx, s: &PointSet) -> Result<()> {
    match ctx.format(Format::Csv) {
        Format::Csv => {
            let mut w = ctx.writer()?;
            s.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => ctx.json(&s.to_json()),
    }
}

fn partition_arg(path: Option<&PathBuf>, n: usize) -> Result<Option<HardPartition>> {
    path.map(|p| {
        let h = HardPartition::from_labels(&read_labels(p)?)?;
        h.check_covers(n)?;
        Ok(h)
    })
    .transpose()
}

#[derive(Serialize)]
struct EntropyOut {
    estimator: &'static str,
    value: f64,
    grad_points: Option<Vec<f64>>,
    grad_params: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct FitOut {
    anchors: AnchorSetJson,
    trace: Vec<f64>,
    steps_run: usize,
    converged: bool,
    elbow: Option<rangent::entropy::ElbowResult>,
}

#[derive(Serialize)]
struct HullOut {
    vertices: Vec<[f64; 2]>,
    area: f64,
    op_count: u64,
}

#[derive(Serialize)]
struct MaximaOut {
    indices: Vec<usize>,
    op_count: u64,
}

#[derive(Serialize)]
struct CorrelateOut<'a> {
    r2: f64,
    r2_raw: f64,
    pearson_r: f64,
    slope: f64,
    intercept: f64,
    permuted_r2: f64,
    rows: &'a [rangent::bench::runners::CorrelationRow],
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed,
        cfg,
        out: cli.out,
        format: cli.format,
    };
    match cli.cmd {
        Cmd::Gen(a) => {
            let mut spec = DatasetSpec::new(a.kind, a.n, ctx.seed).with_blobs(a.blobs);
            spec.sigma = a.sigma;
            let ds = gen_dataset(&spec)?;
            if let Some(p) = &a.labels_out {
                let labels = ds
                    .labels
                    .as_ref()
                    .ok_or_else(|| Error::invalid("only blob datasets carry labels"))?;
                write_labels(p, labels)?;
            }
            write_points(&ctx, &ds.points)
        }
        Cmd::Entropy(a) => {
            let s = PointSet::load(&a.input.input)?;
            let (name, rep) = match a.estimator {
                EstimatorArg::Ball => {
                    let anchors = match &a.anchors {
                        Some(p) => AnchorSet::from_json(&read_json(p)?)?,
                        None => fit_anchors(&s, &ctx.fit_config(s.len(), AnchorInit::Kmeanspp))?.anchors,
                    };
                    ("ball", h_diff(&s, &anchors, a.grad)?)
                }
                EstimatorArg::Halfspace => {
                    let (h, g) = match &a.halfspaces {
                        Some(p) => {
                            let h = HalfspaceSet::from_json(&read_json::<HalfspaceSetJson>(p)?)?;
                            let g = enumerate_cells(&s, &h)?;
                            (h, g)
                        }
                        None => {
                            let r = h_diff_half(&s, &ctx.half_config())?;
                            (r.halfspaces, r.gating)
                        }
                    };
                    ("halfspace", h_soft(&s, &h, &g, a.grad)?)
                }
            };
            ctx.json(&EntropyOut {
                estimator: name,
                value: rep.value,
                grad_points: rep.grad_points,
                grad_params: rep.grad_params,
            })
        }
        Cmd::FitAnchors(a) => {
            let s = PointSet::load(&a.input.input)?;
            let mut fc = ctx.fit_config(s.len(), a.init);
            let elbow = match &a.elbow {
                Some(range) => {
                    let (lo, hi) = range
                        .split_once(':')
                        .and_then(|(l, h)| Some((l.parse().ok()?, h.parse().ok()?)))
                        .ok_or_else(|| Error::invalid("elbow range must be MIN:MAX"))?;
                    let e = select_k_elbow(&s, lo, hi, &fc)?;
                    fc.k = e.k;
                    Some(e)
                }
                None => None,
            };
            let r = fit_anchors(&s, &fc)?;
            ctx.json(&FitOut {
                anchors: r.anchors.to_json(),
                trace: r.trace,
                steps_run: r.steps_run,
                converged: r.converged,
                elbow,
            })
        }
        Cmd::Restructure(a) => {
            let s = PointSet::load(&a.input.input)?;
            let r = restructure(&s, &ctx.restructure_config())?;
            if let Some(p) = &a.trace {
                r.write_trace_csv(BufWriter::new(File::create(p)?))?;
            }
            write_points(&ctx, &r.output)
        }
        Cmd::Hull(a) => {
            let s = PointSet::load(&a.input.input)?;
            let h = match a.method {
                HullMethod::MonotoneChain => monotone_chain_hull(&s)?,
                HullMethod::Chan => chans_hull(&s)?,
                HullMethod::PartitionMerge => {
                    let p = partition_arg(a.labels.as_ref(), s.len())?
                        .ok_or_else(|| Error::invalid("partition-merge needs --labels"))?;
                    partition_merge_hull(&s, &p)?
                }
            };
            match ctx.format(Format::Csv) {
                Format::Csv => write_points(&ctx, &PointSet::from_rows(&h.vertices)?),
                Format::Json => ctx.json(&HullOut {
                    vertices: h.vertices,
                    area: h.area,
                    op_count: h.op_count,
                }),
            }
        }
        Cmd::Maxima(a) => {
            let s = PointSet::load(&a.input.input)?;
            let m = match a.method {
                MaximaMethod::Sweep => maxima_3d(&s)?,
                MaximaMethod::Adaptive => {
                    let p = partition_arg(a.labels.as_ref(), s.len())?
                        .ok_or_else(|| Error::invalid("adaptive maxima needs --labels"))?;
                    adaptive_maxima(&s, &p)?
                }
            };
            match ctx.format(Format::Csv) {
                Format::Csv => {
                    let mut w = ctx.writer()?;
                    writeln!(w, "index")?;
                    for i in &m.indices {
                        writeln!(w, "{i}")?;
                    }
                    w.flush()?;
                    Ok(())
                }
                Format::Json => ctx.json(&MaximaOut {
                    indices: m.indices,
                    op_count: m.op_count,
                }),
            }
        }
        Cmd::Oracle(a) => {
            let s = PointSet::load(&a.input.input)?;
            match a.mode {
                OracleKind::Subsets => ctx.json(&realizable_subsets_2d(&s)?),
                OracleKind::Partition => {
                    let r = min_entropy_partition(&s, ctx.cfg.parts_min.unwrap_or(2))?;
                    ctx.json(&r.to_json(None))
                }
                OracleKind::Arrangement => {
                    let r = min_entropy_arrangement(&s, ctx.cfg.m.unwrap_or(a.lines))?;
                    ctx.json(&r.result.to_json(Some(&r.lines)))
                }
                OracleKind::Generating => {
                    let labels = match &a.labels {
                        Some(p) => read_labels(p)?,
                        None => return Err(Error::invalid("generating mode needs --labels")),
                    };
                    if labels.len() != s.len() {
                        return Err(Error::invalid("one label per point required"));
                    }
                    let r = generating_partition_entropy(&labels)?;
                    ctx.json(&r.to_json(None))
                }
            }
        }
        Cmd::Bound(a) => {
            let s = PointSet::load(&a.input.input)?;
            let (h, g) = match &a.halfspaces {
                Some(p) => {
                    let h = HalfspaceSet::from_json(&read_json::<HalfspaceSetJson>(p)?)?;
                    let g = enumerate_cells(&s, &h)?;
                    (h, g)
                }
                None => {
                    let r = h_diff_half(&s, &ctx.half_config())?;
                    (r.halfspaces, r.gating)
                }
            };
            let rep = evaluate_bound(&s, &h, &g, ctx.cfg.delta.unwrap_or(0.05), ctx.cfg.constant_c.unwrap_or(1.0))?;
            ctx.json(&rep)
        }
        Cmd::Bench(a) => {
            let specs: Vec<DatasetSpec> = a.datasets.iter().map(|&k| DatasetSpec::new(k, a.n, ctx.seed)).collect();
            let bc = BenchConfig {
                trials: ctx.trials(),
                timing: a.timing,
                restructure: ctx.restructure_config(),
            };
            let recs = run_speedup_bench(&specs, &a.methods, &bc)?;
            match ctx.format(Format::Csv) {
                Format::Csv => {
                    let mut w = ctx.writer()?;
                    write_bench_csv(&recs, &mut w)?;
                    w.flush()?;
                    Ok(())
                }
                Format::Json => ctx.json(&recs),
            }
        }
        Cmd::Correlate(a) => {
            let cc = CorrelationConfig {
                n_instances: a.instances,
                n: a.n,
                oracle: a.oracle_mode,
                alpha: ctx.cfg.alpha.unwrap_or(CORRELATION_ALPHA),
                scale_mode: ctx.cfg.scale_mode.unwrap_or(ScaleMode::Normalized),
                seed: ctx.seed,
                ..Default::default()
            };
            let r = run_correlation(&cc)?;
            if let Some(p) = &a.svg {
                let pts: Vec<(f64, f64)> = r.rows.iter().map(|row| (row.h_diff, row.oracle_entropy)).collect();
                let svg = emit_svg_scatter(&pts, None, ("fitted H_diff (nats)", "oracle entropy (nats)"))?;
                std::fs::write(p, svg)?;
            }
            match ctx.format(Format::Csv) {
                Format::Csv => {
                    let mut w = ctx.writer()?;
                    r.write_csv(&mut w)?;
                    w.flush()?;
                    eprintln!(
                        "r2 {} permuted_r2 {}",
                        fmt_f64(r.fit.r2),
                        fmt_f64(r.permuted.r2)
                    );
                    Ok(())
                }
                Format::Json => ctx.json(&CorrelateOut {
                    r2: r.fit.r2,
                    r2_raw: r.fit.r2_raw,
                    pearson_r: r.fit.pearson_r,
                    slope: r.fit.slope,
                    intercept: r.fit.intercept,
                    permuted_r2: r.permuted.r2,
                    rows: &r.rows,
                }),
            }
        }
        Cmd::Ablate(a) => {
            let ac = AblationConfig {
                alphas: a.alphas,
                ks: a.ks,
                inits: a.inits,
                dataset: DatasetSpec::new(DatasetKind::Uniform2d, a.n, ctx.seed),
                bench: BenchConfig {
                    trials: ctx.trials(),
                    timing: false,
                    restructure: ctx.restructure_config(),
                },
            };
            let rows = run_ablation(&ac)?;
            match ctx.format(Format::Csv) {
                Format::Csv => {
                    let mut w = ctx.writer()?;
                    write_ablation_csv(&rows, &mut w)?;
                    w.flush()?;
                    Ok(())
                }
                Format::Json => ctx.json(&rows),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
