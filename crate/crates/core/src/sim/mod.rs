//! Scenarios, deterministic Monte-Carlo sweeps, the identity verification
//! suite and CSV/JSON reports.

pub mod report;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use report::{write_windows_csv, SinrMapReport};
pub use scenario::{
    default_seed, parse_snr_grid, snr_to_sigma2, ConfigMap, Scenario, Waveform, WaveformKind, SEED_ENV,
};
pub use sweep::{
    average_analytic_ser, read_csv, run_sweep, scenario_channel, scenario_window, to_csv_string, write_csv, ResultRow,
};
pub use verify::{verify, CheckResult, VerifyOptions, VerifyReport};
