//! Recovery metrics, paired statistical tests and the experiment runner.

mod metrics;
mod stats;

pub use metrics::{compute_rates, score_s, split_system, MetricsReport, RateCounts, SystemTruth};
pub use stats::{
    paired_comparison, paired_t_upper, shapiro_wilk, wilcoxon_upper, PairedComparison, PairedTest, TestResult, ALPHA,
    WILCOXON_EXACT_MAX,
};

mod experiment;

pub use experiment::{
    run_experiment, Baseline, ComparisonReport, ExperimentConfig, ExperimentReport, ExperimentSystem,
    GeneralizationEntry, GroundTruth, LogConformance, ModelReport, SamplerConfig, SamplerMode, SamplerReport,
    SystemReport, TrainingSummary, REPORT_SCHEMA_VERSION,
};
