//! Parameter sweeps and twin-run stability experiments built on the run
//! driver.

mod sweep;
mod twin;

pub use sweep::{default_metrics, run_sweep, SweepAxis, SweepRow, SweepSpec, SweepTable};
pub use twin::{perturbation, run_twin, TwinReport, TwinRow, TwinSpec};
