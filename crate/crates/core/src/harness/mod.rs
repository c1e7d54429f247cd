//! Chunked delayed-label evaluation, metrics, aggregation and tuning.

mod aggregate;
mod ledger;
mod metrics;
mod run;
mod tune;

pub use aggregate::{aggregate_results, average_ranks, mean_std, ResultCell, TableRow};
pub use ledger::{assign_chunk, poisson_sizes, ChunkLedger, ChunkPlan, LabelReceipt, LedgerStats};
pub use metrics::{auc_pr, auc_roc, Metric};
pub use run::{
    interleaved_reference, run_stream, ChunkReport, LearnerRef, RunOptions, RunOutput, StreamClock,
};
pub use tune::{
    sample_config, tune_random_search, ParamRange, ParamSet, ParamSpec, SearchSpace, Trial,
    TuneResult,
};
