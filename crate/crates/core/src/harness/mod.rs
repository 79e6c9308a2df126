//! Metrics, result tables, batches and benchmark conversion.

mod batch;
mod dtop;
mod metrics;

pub use batch::{
    read_references, report_rows, run_batch, write_table, BatchInstance, HarnessError, MetricsRow, NamedPolicy,
    References, RunFile, COLUMNS,
};
pub use dtop::{DtopCustomer, DtopInstance};
pub use metrics::{agg_gap, gap_cp, gap_mip, mean_sd, round2, MetricsError};
