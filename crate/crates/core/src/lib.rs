//! Simulation toolkit for Grover search on a two-ion trapped-ion register.
//!
//! * [`state`]: dense state vectors and gate application (defines the bit order)
//! * [`gates`]: native and standard gate matrices (defines the rotation convention)
//! * [`grover`]: circuit builders and closed-form success formulas
//! * [`noise`]: stochastic Pauli noise and shot-based execution
//! * [`compile`]: lowering to native pulses and pulse timing
//! * [`analysis`]: confusion matrices, success and mutual information
//! * [`cli`]: report generation behind the `iongrover` binary

pub mod analysis;
pub mod cli;
pub mod compile;
pub mod error;
pub mod gates;
pub mod grover;
pub mod noise;
pub mod state;

pub use error::{Error, Result};
pub use gates::{GateKind, GateSpec};
pub use grover::{Circuit, Marking};
pub use noise::NoiseModel;
pub use state::{StateVector, UnitaryMatrix};
