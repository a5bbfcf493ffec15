//! Run configuration, field snapshots, and metrics output.

mod config;
mod metrics;
mod snapshot;

pub use config::{
    load_config, parse_config, single_mode_pair, InitialData, RunConfig, DEFAULT_HORIZON, DEFAULT_MAX_ITER,
    DEFAULT_NODE_COUNT, DEFAULT_TOLERANCE,
};
pub use metrics::{
    read_metrics, read_metrics_from, write_decay_csv, write_probe_csv, MetricsLog, MetricsWriter, ProbeRow,
    DECAY_COLUMNS, PROBE_COLUMNS, SUMMARY_KIND,
};
pub use snapshot::{decode, encode, load_field, load_snapshot, save_snapshot, Snapshot, SNAPSHOT_VERSION};
