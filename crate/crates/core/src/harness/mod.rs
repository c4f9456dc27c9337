//! Seeded Monte Carlo experiments and their persisted outputs.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]: trial
//! `t` draws only from streams indexed by `t`, trials run in parallel and
//! are gathered back in trial order before anything is aggregated.

mod compressible;
mod config;
mod events;
mod example1;
pub mod output;
mod tail;

pub use compressible::{
    compressible_infimum, run_compressible_infimum, CompressibleOptions, CompressibleResult, SupportMode,
};
pub use config::{ExperimentConfig, GammaCheck, Model, OptimizerKnobs};
pub use events::{corollary_witness, run_corollary_events, EventCriticals, EventEstimates};
pub use example1::{run_example1, Example1Result};
pub use output::{read_outputs, write_outputs, Artifact, ConcentrationTable, OpnormTable, OutputPaths, Sidecar};
pub use tail::{run_tail, TailCurve, TailMetadata};
