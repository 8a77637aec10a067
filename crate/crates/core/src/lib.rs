//! Device-level simulator for an analog Softmax processor built from an
//! N-branch differential network.
//!
//! Branch currents of emitter- (or source-) coupled transistors sharing one
//! tail current are a Softmax of the input voltages. This crate solves the
//! network's DC operating point with realistic device models, scores it
//! against the exact function, and provides noise budgets, noisy transient
//! simulation and Monte-Carlo mismatch analysis.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the tolerances in the
//! test-suite assume.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod devices;
pub mod error;
pub mod network;
pub mod noise;
pub mod oracle;
pub mod report;
pub mod scalar;
pub mod transient;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EnvParams64 = devices::EnvParams<f64>;
pub type NpnParams64 = devices::NpnParams<f64>;
pub type NmosParams64 = devices::NmosParams<f64>;
pub type PmosLinearParams64 = devices::PmosLinearParams<f64>;
pub type TailSourceSpec64 = devices::TailSourceSpec<f64>;
pub type BranchDevice64 = network::BranchDevice<f64>;
pub type LoadSpec64 = network::LoadSpec<f64>;
pub type NetworkConfig64 = network::NetworkConfig<f64>;
pub type OperatingPoint64 = network::OperatingPoint<f64>;
pub type ProbabilityVector64 = oracle::ProbabilityVector<f64>;
pub type NoiseBudget64 = noise::NoiseBudget<f64>;
pub type TransientConfig64 = transient::TransientConfig<f64>;
pub type TransientResult64 = transient::TransientResult<f64>;
pub type SweepResult64 = analysis::SweepResult<f64>;
pub type MonteCarloResult64 = analysis::MonteCarloResult<f64>;

pub type NetworkConfig32 = network::NetworkConfig<f32>;
pub type OperatingPoint32 = network::OperatingPoint<f32>;
