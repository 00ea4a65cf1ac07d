//! Experiment runner for `ergolab`: JSON configs in, cached reports with
//! CSV curves and SVG plots out.

pub mod cache;
pub mod config;
pub mod error;
pub mod plot;
pub mod run;

pub use cache::{Cache, CacheEntry, CACHE_ENV};
pub use config::{ExperimentConfig, Kind};
pub use error::{LabError, LabResult, EXIT_CONFIG_INVALID, EXIT_FAILURE, EXIT_GATE_FAILED, EXIT_OK};
pub use plot::{emit_plot, plot_csv, PlotStyle};
pub use run::{run, Gate, Payload, RunOptions, RunReport};
