//! Run configuration, initial data, ledgers, snapshots and checkpoints.

mod config;
mod initial;
mod output;
mod run;

pub use config::{
    DiagnosticsConfig, GridConfig, InitialCondition, InitialKind, OutputConfig, RunConfig, TauKind,
};
pub use initial::make_initial;
pub use output::{
    format_value, read_checkpoint, read_snapshot, write_checkpoint, write_snapshot, CheckpointMeta,
    Ledger, LedgerWriter, SnapshotHeader, CHECKPOINT_META, CHECKPOINT_STATE, LEDGER_FILE,
    SNAPSHOT_VERSION,
};
pub use run::{resume_in_dir, run_to_dir, simulate, simulate_from, RunOutcome, CONFIG_FILE, SUMMARY_FILE};

#[cfg(test)]
mod tests;
