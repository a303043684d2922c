//! Steady-state Gaussian entanglement for a double-cavity molecular
//! optomechanical system with an intracavity parametric amplifier.
//!
//! All numerics are generic over [`Scalar`] (`f32`, `f64`); the `*F64` and
//! `*F32` aliases below fix the precision.

pub mod cli;
pub mod dynamics;
pub mod entanglement;
pub mod lyapunov;
pub mod meanfield;
pub mod model;
pub mod scalar;
pub mod sweep;

pub use dynamics::{build_diffusion, build_drift, stability, DiffusionMatrix, DriftMatrix, StabilityReport};
pub use entanglement::{extract_pair, log_negativity, Mode, ModePair, PairCovariance};
pub use lyapunov::{solve_lyapunov, CovarianceMatrix};
pub use meanfield::{integrate_classical, solve_mean_field, MeanFieldMode, SteadyState};
pub use model::{ParamError, ParamField, SystemParams};
pub use scalar::Scalar;

pub type SystemParamsF64 = SystemParams<f64>;
pub type SystemParamsF32 = SystemParams<f32>;
pub type SteadyStateF64 = SteadyState<f64>;
pub type SteadyStateF32 = SteadyState<f32>;
pub type DriftMatrixF64 = DriftMatrix<f64>;
pub type DriftMatrixF32 = DriftMatrix<f32>;
pub type CovarianceMatrixF64 = CovarianceMatrix<f64>;
pub type CovarianceMatrixF32 = CovarianceMatrix<f32>;
