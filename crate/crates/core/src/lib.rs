//! Gradient estimation for parametric multi-qubit evolutions by stochastic
//! parameter-shift sampling, with exact oracles to check it against.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line and
//! multi-threaded shot execution live in the `shiftrule` crate.

#![no_std]

extern crate alloc;

pub mod circuit;
pub mod error;
pub mod estimate;
pub mod families;
pub mod gradients;
pub mod noise;
pub mod optimize;
pub mod linalg;
pub mod metric;
pub mod pauli;
pub mod quadrature;
pub mod quantum;
pub mod rng;

pub use circuit::{CircuitSlice, Gate, JacobianEntry, ParamExpr, ParametricCircuit};
pub use error::{Error, Result};
pub use gradients::{Estimator, EstimatorConfig, Pulse};
pub use estimate::{GradientEstimate, Sequential, ShotExecutor};
pub use linalg::{CMatrix, CVector, MAX_DENSE_QUBITS};
pub use num_complex::Complex64;
pub use metric::{MetricEstimate, MetricMatrix, MetricMode};
pub use noise::{Block, NoisyCircuit, NoisyGateSpec};
pub use optimize::{Adam, Direction, GradientSource, OptimizerConfig, OptimizerState, PulseKind, PulseModel};
pub use pauli::{Axis, Phase, PauliString, PauliSum};
pub use quantum::{DensityMatrix, ObservableSpec, StateVector};
pub use rng::ShotRng;
