//! Simulation of time-multiplexed delay-line reservoir computers driven
//! through harmonic (one- or two-sine) input masks, with the benchmark tasks,
//! readout training and parameter sweeps used to evaluate them.

pub mod cli;
pub mod config;
pub mod error;
pub mod mask;
pub mod pipeline;
pub mod readout;
pub mod reservoir;
pub mod sweep;
pub mod tasks;

pub use error::{RcError, Result};
pub use mask::{continuous_mask_value, generate_mask, mask_degeneracy_report, Mask, MaskFamily, MaskSpec};
pub use readout::{nmse, predict, ser, train, Metric, MetricKind, Readout};
pub use reservoir::{
    fading_memory_probe, run_continuous, run_discrete, run_discrete_from, EmulatorConfig, InitialState, NonlinearityKind,
    NonlinearitySpec, ReservoirConfig, StateMatrix,
};
pub use sweep::{landscape_export, run_sweep, snr_curve, SweepGrid, SweepResult};
