//! Experiment harness: input formats, synthetic workloads, timing and
//! accuracy experiments with CSV/JSON reports.

mod dataset;
mod experiment;
mod synthetic;

pub use dataset::{
    load_sparse, load_stream, parse_sparse, parse_sparse_line, parse_stream, SparseDataset,
};
pub use experiment::{
    run_rmse_experiment, run_speed_experiment, work_fit, ExperimentReport, Method, ReportConfig,
    RmseReport, RmseRow, RmseSpec, RmseTask, SpeedReport, SpeedRow, SpeedSpec, SpeedSummary,
    WorkFit, Workload,
};
pub use synthetic::{gen_synthetic, WeightDist};
