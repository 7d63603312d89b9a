//! Monte Carlo harness: configuration, BER engine, calibration and outputs.

pub mod calibrate;
pub mod config;
pub mod convergence;
pub mod engine;
pub mod output;
pub mod stats;
pub mod validate;

pub use calibrate::{calibrate, CalibrationEntry, CalibrationOutcome, CalibrationPlan, ParamGrid};
pub use config::{calibrated_params, DetectorConfig, SimulationConfig, CALIBRATED_RHO};
pub use convergence::{convergence_eval, convergence_study, iterations_to_reach, ConvergenceRow};
pub use engine::{Arm, BerRecord, Column, Evaluation, FrameData, Point, Simulator, StopRule};
pub use validate::{validate_channel, ChannelValidation};
