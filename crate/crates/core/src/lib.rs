//! Detectors for spatially multiplexed MIMO-OFDM links.
//!
//! Linear equalizers (MF, ZF, MMSE), exhaustive ML search, particle swarm and
//! differential evolution searches over the real-valued model, and hybrids
//! that start the searches from a linear estimate. The [`sim`] module runs
//! Monte Carlo BER studies and [`flops`] prices each detector.
//!
//! All numerical code is generic over [`Real`]; the aliases below fix the
//! scalar for the common cases.

// `!(x > 0.0)` style guards are deliberate: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detector;
pub mod error;
pub mod flops;
pub mod heuristic;
pub mod linalg;
pub mod linear;
pub mod ofdm;
pub mod real;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use detector::DetectorKind;
pub use error::{Error, Result};
pub use heuristic::{DeParams, Detection, HeuristicParams, InitStrategy, Problem, PsoParams, SearchObjective};
pub use linalg::{ComplexMatrix, Matrix, RealMatrix};
pub use rng::RngStream;
pub use scalar::Real;
pub use sim::{DetectorConfig, SimulationConfig, Simulator};

pub type ComplexMatrixF64 = ComplexMatrix<f64>;
pub type ComplexMatrixF32 = ComplexMatrix<f32>;
pub type RealMatrixF64 = RealMatrix<f64>;
pub type RealMatrixF32 = RealMatrix<f32>;
pub type ConstellationF64 = ofdm::Constellation<f64>;
pub type ConstellationF32 = ofdm::Constellation<f32>;
pub type SimulatorF64 = Simulator<f64>;
pub type SimulatorF32 = Simulator<f32>;
