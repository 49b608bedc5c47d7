//! Photon-number statistics of coherent pulses scattered by a two-level
//! emitter coupled to one or two one-dimensional transmission lines.
//!
//! The numerical core is generic over the real scalar ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`, which is what the
//! tolerances in the test suites assume.

pub mod counting;
pub mod error;
pub mod linalg;
pub mod liouville;
pub mod propagator;
pub mod scalar;
pub mod sweeps;
pub mod trajectories;

pub use counting::{CutoffPolicy, Method};
pub use error::{Error, Result};
pub use liouville::InitialState;
pub use scalar::Real;

pub type Operator2 = liouville::Operator2<f64>;
pub type DensityMatrix = liouville::DensityMatrix<f64>;
pub type SuperOp = liouville::SuperOp<f64>;
pub type DriveSpec = liouville::DriveSpec<f64>;
pub type Envelope = liouville::Envelope<f64>;
pub type Topology = liouville::Topology<f64>;
pub type PropagatorGrid = propagator::PropagatorGrid<f64>;
pub type PhotonStats = counting::PhotonStats<f64>;

pub type Operator2F32 = liouville::Operator2<f32>;
pub type SuperOpF32 = liouville::SuperOp<f32>;
pub type DriveSpecF32 = liouville::DriveSpec<f32>;
