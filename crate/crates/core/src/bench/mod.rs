//! Dataset generators, experiment runners, statistics and plot output.

pub mod datasets;
pub mod runners;
pub mod stats;
pub mod svg;

pub use datasets::{gen_dataset, Dataset, DatasetKind, DatasetSpec};
pub use runners::{
    run_ablation, run_correlation, run_speedup_bench, write_ablation_csv, write_bench_csv, AblationConfig,
    AblationRow, BenchConfig, BenchRecord, CorrelationConfig, CorrelationResult, Method, OracleMode, BENCH_HEADER,
    CORRELATION_ALPHA,
};
pub use stats::{linear_fit, mean_std, paired_ttest, Regression, StatsSummary};
pub use svg::emit_svg_scatter;
