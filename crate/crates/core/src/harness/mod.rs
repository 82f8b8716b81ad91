//! Experiment sweeps over training-set size, noise, ambient dimension and
//! chart count, with log-log slope fitting and CSV/JSON output.

mod fit;
mod report;
mod sweep;

pub use fit::{fit_linear, fit_slope, Fit, FitKind, MIN_FIT_POINTS};
pub use report::{SweepReport, REPORT_FORMAT, REPORT_VERSION};
pub use sweep::{
    run_sweep, surface_for, threads_from_env, CellResult, CellSeeds, GridPoint, Plan, RunRecord, Sweep,
    SweepCharts, SweepConfig, SweepD, SweepN, SweepNoise, SweepRegistry, SweepResult, THREADS_ENV,
};
