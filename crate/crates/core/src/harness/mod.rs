//! Experiment plumbing: environments, runs, CSV, plots and oracle sweeps.

pub mod audit;
pub mod csv;
pub mod envfile;
pub mod experiment;
pub mod generate;
pub mod plot;
pub mod record;

pub use envfile::EnvSpec;
pub use experiment::{run_experiment, Algorithm, ExperimentConfig, ExperimentOutput, Overrides, Summary};
pub use generate::{catalog, generate_random_linear, generate_random_tabular};
pub use record::{ExperimentRecord, RegretLog};
