//! Configuration, sweeps, presets and verification behind the `ambc` binary.

pub mod config;
pub mod presets;
pub mod sweep;
pub mod verify;

pub use config::{parse_config, Config, ConfigError, Numerics};
pub use sweep::{evaluate, render_csv, run_sweep, ClosedForm, Evaluator, SweepSpec, Table};
