//! End-to-end experiments: universal decoders, channel coding,
//! resolvability and private coding, each checked against its finite-n
//! bound.

pub mod bounds;
pub mod cli;
pub mod decoders;
pub mod experiments;

pub use bounds::{alpha_grid, auto_threshold, evaluate_bounds, BoundKind, BoundRow, BoundTable, DEFAULT_GRID_POINTS};
pub use decoders::{build_division_decoder, build_threshold_decoder, DecoderPovm, ThresholdDecoder};
pub use experiments::{
    experiment, experiments, run_channel_coding, run_private, run_resolvability, Experiment, ExperimentInputs, ExperimentReport,
    PrivateReport, RunOptions, Threshold,
};
