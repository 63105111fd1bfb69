//! Validation statistics, aggregation over repeated runs, and
//! cross-model comparison.

mod aggregate;
mod clumping;
mod compare;
mod stats;

pub use aggregate::{aggregate_runs, MeanStd, RunAggregate, StatsReport};
pub use clumping::{effective_lai, EffectiveLai};
pub use compare::{
    cross_model_bias, load_scatter, scatter_export, scatter_summary, ScatterSummary,
};
pub use stats::{compute_stats, compute_stats_with, EvalStats, R2Mode};
