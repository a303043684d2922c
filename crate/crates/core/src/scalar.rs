//! Floating point abstraction shared by every numerical module.

use nalgebra as na;
use num_traits as nt;
use std::fmt::{Debug, Display};

pub use na::Complex;

/// Real scalar the simulator can run on: `f32` or `f64`.
///
/// Tolerances scale with the precision of the type. The `f64` values are the
/// ones the documented contracts are stated in.
pub trait Scalar:
    na::RealField
    + nt::FloatConst
    + nt::FromPrimitive
    + nt::ToPrimitive
    + Copy
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Points with `max Re(λ) > -STABILITY_EPS` are classified unstable.
    const STABILITY_EPS: f64;
    /// Relative residual the mean-field iteration must reach.
    const MEANFIELD_TOL: f64;
    /// Slack on physicality and discriminant checks.
    const PHYSICAL_TOL: f64;

    /// Lossless for `f64`, rounds for `f32`.
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    fn neg_infinity() -> Self {
        Self::lit(f64::NEG_INFINITY)
    }

    fn nan() -> Self {
        Self::lit(f64::NAN)
    }
}

/// `|z|` without overflow in the intermediate square.
pub fn modulus<T: Scalar>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

impl Scalar for f64 {
    const STABILITY_EPS: f64 = 1e-12;
    const MEANFIELD_TOL: f64 = 1e-10;
    const PHYSICAL_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const STABILITY_EPS: f64 = 1e-5;
    const MEANFIELD_TOL: f64 = 1e-5;
    const PHYSICAL_TOL: f64 = 1e-4;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.3), 0.3);
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(0.25f32.as_f64(), 0.25);
    }
}
