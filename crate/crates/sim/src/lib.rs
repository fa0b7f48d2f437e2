//! Seeded Monte Carlo experiments for grid data attacks: scenario files,
//! the run loop and CSV metrics.

mod error;
mod metrics;
mod runner;
mod scenario;

pub use error::{Result, SimError};
pub use metrics::{compare_methods, Comparison, MetricsRow, MetricsTable, CSV_HEADER};
pub use runner::{run_rng, run_scenario, Experiment};
pub use scenario::{AttackKind, ModelKind, Scenario, Training};
