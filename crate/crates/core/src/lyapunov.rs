//! Steady-state covariance from `A V + V Aᵀ = −D`.
//!
//! The production route vectorizes the equation with the Kronecker identity
//! `(I⊗A + A⊗I) vec(V) = −vec(D)` and solves the 64×64 system by LU.
//! [`integrate_covariance`] evolves `dV/dt = A V + V Aᵀ + D` with an exact
//! one-step propagator and serves as an independent check.

use crate::dynamics::{stability, DiffusionMatrix, DriftMatrix, DynamicsError, Matrix8, DIM};
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector, SMatrix};
use thiserror::Error;

const DIVERGENCE_GUARD: f64 = 1e12;
pub const MAX_TIME_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("system unstable (max Re λ = {max_real_part:.6e})")]
    UnstableSystem { max_real_part: f64 },
    #[error("Lyapunov operator is numerically singular (marginal stability)")]
    SingularSolve,
    #[error("covariance diverged at t = {time}")]
    Diverged { time: f64 },
    #[error("time step {0} must lie in (0, {MAX_TIME_STEP}]")]
    BadTimeStep(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Symmetric quadrature covariance, vacuum = ½·I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix<T = f64>(pub Matrix8<T>);

impl<T: Scalar> CovarianceMatrix<T> {
    pub fn vacuum() -> Self {
        Self(Matrix8::identity() * T::lit(0.5))
    }

    /// Smallest eigenvalue of `V + (i/2)Ω`; non-negative for a physical state.
    pub fn uncertainty_margin(&self) -> T {
        uncertainty_margin(&DMatrix::from_column_slice(DIM, DIM, self.0.as_slice()))
    }

    pub fn is_physical(&self) -> bool {
        self.uncertainty_margin() >= -T::lit(T::PHYSICAL_TOL)
    }

    pub fn asymmetry(&self) -> T {
        (self.0 - self.0.transpose()).abs().max()
    }
}

/// Block-diagonal symplectic form with `[[0, 1], [−1, 0]]` per mode.
pub fn symplectic_form<T: Scalar>(modes: usize) -> DMatrix<T> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = T::one();
        omega[(2 * k + 1, 2 * k)] = -T::one();
    }
    omega
}

/// Minimum eigenvalue of the Hermitian matrix `V + (i/2)Ω`.
///
/// Uses the real symmetric embedding `[[V, −Ω/2], [Ω/2, V]]`, whose spectrum
/// is that of the Hermitian matrix with every eigenvalue doubled.
pub fn uncertainty_margin<T: Scalar>(v: &DMatrix<T>) -> T {
    let n = v.nrows();
    let half_omega = symplectic_form::<T>(n / 2) * T::lit(0.5);
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(v);
    big.view_mut((n, n), (n, n)).copy_from(v);
    big.view_mut((0, n), (n, n)).copy_from(&(-&half_omega));
    big.view_mut((n, 0), (n, n)).copy_from(&half_omega);
    let sym = (&big + big.transpose()) * T::lit(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::infinity(), |m, x| m.min(x))
}

/// Frobenius norm of `A V + V Aᵀ + D`.
pub fn residual<T: Scalar, const N: usize>(
    a: &SMatrix<T, N, N>,
    v: &SMatrix<T, N, N>,
    d: &SMatrix<T, N, N>,
) -> T {
    (a * v + v * a.transpose() + d).norm()
}

fn kronecker_operator<T: Scalar, const N: usize>(a: &SMatrix<T, N, N>) -> DMatrix<T> {
    let nn = N * N;
    let mut k = DMatrix::zeros(nn, nn);
    // Column-major vec: vec(AV) = (I⊗A) vec(V), vec(VAᵀ) = (A⊗I) vec(V).
    for j in 0..N {
        for r in 0..N {
            for c in 0..N {
                k[(j * N + r, j * N + c)] += a[(r, c)];
                k[(r * N + j, c * N + j)] += a[(r, c)];
            }
        }
    }
    k
}

/// Solves `A V + V Aᵀ = −D` without checking stability first.
///
/// Fails with [`LyapunovError::SingularSolve`] when the LU pivots span more
/// than the working precision can resolve.
pub fn solve_kronecker<T: Scalar, const N: usize>(
    a: &SMatrix<T, N, N>,
    d: &SMatrix<T, N, N>,
) -> Result<SMatrix<T, N, N>, LyapunovError> {
    let k = kronecker_operator(a);
    let lu = k.clone().lu();
    let u = lu.u();
    let pivots = u.diagonal().map(|x| x.abs());
    let (lo, hi) = (pivots.min(), pivots.max());
    if !(hi > T::zero()) || lo <= hi * T::default_epsilon() * T::lit(16.0) {
        return Err(LyapunovError::SingularSolve);
    }
    let rhs = -DVector::from_column_slice(d.as_slice());
    let mut x = lu.solve(&rhs).ok_or(LyapunovError::SingularSolve)?;
    // One step of iterative refinement.
    let r = &rhs - &k * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LyapunovError::SingularSolve);
    }
    let v = SMatrix::<T, N, N>::from_column_slice(x.as_slice());
    Ok((v + v.transpose()) * T::lit(0.5))
}

/// Steady-state covariance for a stable drift matrix.
pub fn solve_lyapunov<T: Scalar>(
    a: &DriftMatrix<T>,
    d: &DiffusionMatrix<T>,
) -> Result<CovarianceMatrix<T>, LyapunovError> {
    let report = stability(a)?;
    if !report.stable {
        return Err(LyapunovError::UnstableSystem {
            max_real_part: report.max_real_part.as_f64(),
        });
    }
    solve_kronecker(&a.0, &d.to_matrix()).map(CovarianceMatrix)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
fn expm<T: Scalar, const N: usize>(m: &SMatrix<T, N, N>) -> SMatrix<T, N, N> {
    let norm1 = (0..N)
        .map(|c| m.column(c).iter().fold(T::zero(), |s, x| s + x.abs()))
        .fold(T::zero(), |a, b| a.max(b));
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm1 * scale > T::lit(0.5) {
        scale = scale * T::lit(0.5);
        squarings += 1;
    }
    let x = m * scale;
    let mut term = SMatrix::<T, N, N>::identity();
    let mut sum = term;
    for k in 1..=18 {
        term = term * x / T::lit(k as f64);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// One-step affine propagator `V ↦ Φ V Φᵀ + Q` of the differential
/// Lyapunov equation over `dt` (Van Loan block exponential).
fn step_propagator<T: Scalar>(
    a: &Matrix8<T>,
    d: &Matrix8<T>,
    dt: T,
) -> (Matrix8<T>, Matrix8<T>) {
    let mut block = SMatrix::<T, 16, 16>::zeros();
    block.view_mut((0, 0), (DIM, DIM)).copy_from(&(-a * dt));
    block.view_mut((0, DIM), (DIM, DIM)).copy_from(&(d * dt));
    block
        .view_mut((DIM, DIM), (DIM, DIM))
        .copy_from(&(a.transpose() * dt));
    let e = expm(&block);
    let f12: Matrix8<T> = e.fixed_view::<DIM, DIM>(0, DIM).into_owned();
    let f22: Matrix8<T> = e.fixed_view::<DIM, DIM>(DIM, DIM).into_owned();
    let phi = f22.transpose();
    let q = phi * f12;
    (phi, (q + q.transpose()) * T::lit(0.5))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedCovariance<T = f64> {
    pub v: CovarianceMatrix<T>,
    /// Time actually reached, a multiple of `dt`.
    pub time: T,
    /// `‖dV/dt‖_F` at the returned state.
    pub derivative_norm: T,
}

/// Evolves `dV/dt = A V + V Aᵀ + D` from `v0` to `t_end` in steps of `dt`.
///
/// Steps are composed by repeated squaring of the exact one-step map, so the
/// state after `n` steps costs `O(log n)` matrix products. Stops early once
/// `‖dV/dt‖_F ≤ 1e-12`.
pub fn integrate_covariance<T: Scalar>(
    a: &DriftMatrix<T>,
    d: &DiffusionMatrix<T>,
    v0: &CovarianceMatrix<T>,
    t_end: T,
    dt: T,
) -> Result<IntegratedCovariance<T>, LyapunovError> {
    if !(dt > T::zero() && dt.as_f64() <= MAX_TIME_STEP) {
        return Err(LyapunovError::BadTimeStep(dt.as_f64()));
    }
    let dm = d.to_matrix();
    let derivative = |v: &Matrix8<T>| residual(&a.0, v, &dm);
    let converged = T::lit(1e-12);
    let guard = T::lit(DIVERGENCE_GUARD);

    let mut steps = (t_end / dt).round().to_u64().unwrap_or(0);
    let (mut phi, mut q) = step_propagator(&a.0, &dm, dt);
    let mut span = dt;
    let mut v = v0.0;
    let mut time = T::zero();
    while steps > 0 {
        if steps & 1 == 1 {
            v = phi * v * phi.transpose() + q;
            v = (v + v.transpose()) * T::lit(0.5);
            time = time + span;
            if !(v.abs().max() <= guard) {
                return Err(LyapunovError::Diverged {
                    time: time.as_f64(),
                });
            }
            if derivative(&v) <= converged {
                break;
            }
        }
        steps >>= 1;
        if steps > 0 {
            q = phi * q * phi.transpose() + q;
            phi = phi * phi;
            span = span + span;
            if !(phi.abs().max() <= guard) {
                return Err(LyapunovError::Diverged {
                    time: span.as_f64(),
                });
            }
        }
    }
    Ok(IntegratedCovariance {
        derivative_norm: derivative(&v),
        v: CovarianceMatrix(v),
        time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(x: f64) -> DiffusionMatrix<f64> {
        DiffusionMatrix(nalgebra::SVector::repeat(x))
    }

    #[test]
    fn scaled_identity() {
        let (kappa, c) = (0.7, 1.3);
        let a = DriftMatrix(Matrix8::identity() * -kappa);
        let v = solve_lyapunov(&a, &diag(2.0 * kappa * c)).unwrap();
        assert!((v.0 - Matrix8::identity() * c).abs().max() < 1e-14);
    }

    fn vacuum_drift() -> DriftMatrix<f64> {
        let mut a = Matrix8::zeros();
        let blocks = [(0.3, 1.0), (0.3, 1.2), (1e-4, 1.0), (2e-4, 1.0)];
        for (k, (damp, freq)) in blocks.into_iter().enumerate() {
            a[(2 * k, 2 * k)] = -damp;
            a[(2 * k + 1, 2 * k + 1)] = -damp;
            a[(2 * k, 2 * k + 1)] = freq;
            a[(2 * k + 1, 2 * k)] = -freq;
        }
        DriftMatrix(a)
    }

    fn vacuum_diffusion() -> DiffusionMatrix<f64> {
        DiffusionMatrix(nalgebra::SVector::from([
            0.3, 0.3, 0.3, 0.3, 1e-4, 1e-4, 2e-4, 2e-4,
        ]))
    }

    #[test]
    fn vacuum_covariance() {
        let v = solve_lyapunov(&vacuum_drift(), &vacuum_diffusion()).unwrap();
        assert!((v.0 - CovarianceMatrix::<f64>::vacuum().0).abs().max() < 1e-12);
        assert!(v.uncertainty_margin().abs() < 1e-12);
    }

    #[test]
    fn unstable_drift_rejected() {
        let a = DriftMatrix(Matrix8::identity() * 0.1);
        assert!(matches!(
            solve_lyapunov(&a, &diag(1.0)),
            Err(LyapunovError::UnstableSystem { .. })
        ));
    }

    #[test]
    fn singular_operator_detected() {
        let mut a = Matrix8::identity() * -1.0;
        a[(0, 0)] = 0.0;
        assert_eq!(
            solve_kronecker(&a, &Matrix8::identity()),
            Err(LyapunovError::SingularSolve)
        );
    }

    #[test]
    fn integrator_relaxes_exponentially() {
        let (kappa, c) = (0.4, 0.9);
        let a = DriftMatrix(Matrix8::identity() * -kappa);
        let zero = CovarianceMatrix(Matrix8::zeros());
        for t in [0.5, 1.0, 3.0] {
            let out = integrate_covariance(&a, &diag(2.0 * kappa * c), &zero, t, 0.01).unwrap();
            assert_relative_eq!(out.time, t, max_relative = 1e-12);
            let expected = c * (1.0 - (-2.0 * kappa * t).exp());
            assert!((out.v.0 - Matrix8::identity() * expected).abs().max() < 1e-12);
        }
        let out = integrate_covariance(&a, &diag(2.0 * kappa * c), &zero, 200.0, 0.01).unwrap();
        assert!((out.v.0 - Matrix8::identity() * c).abs().max() < 1e-12);
        assert!(out.derivative_norm <= 1e-12);
    }

    #[test]
    fn integrator_keeps_vacuum() {
        let v0 = CovarianceMatrix::vacuum();
        let out =
            integrate_covariance(&vacuum_drift(), &vacuum_diffusion(), &v0, 1e5, 0.01).unwrap();
        assert!((out.v.0 - v0.0).abs().max() < 1e-12);
    }

    #[test]
    fn integrator_detects_divergence() {
        let a = DriftMatrix(Matrix8::identity() * 0.5);
        let err = integrate_covariance(&a, &diag(1.0), &CovarianceMatrix::vacuum(), 1e4, 0.01);
        assert!(matches!(err, Err(LyapunovError::Diverged { .. })));
        assert!(matches!(
            integrate_covariance(&a, &diag(1.0), &CovarianceMatrix::vacuum(), 1.0, 0.02),
            Err(LyapunovError::BadTimeStep(_))
        ));
    }

    #[test]
    fn uncertainty_margin_of_thermal_and_squeezed_states() {
        let thermal = DMatrix::<f64>::identity(2, 2) * 1.5;
        assert_relative_eq!(uncertainty_margin(&thermal), 1.0, epsilon = 1e-12);
        // Over-squeezed: det = 0.1² < 1/4.
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.1]));
        assert!(uncertainty_margin(&bad) < -0.3);
        let r: f64 = 0.8;
        let squeezed = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.5 * (-2.0 * r).exp(),
            0.5 * (2.0 * r).exp(),
        ]));
        assert!(uncertainty_margin(&squeezed) > -1e-12);
    }

    #[test]
    fn expm_of_rotation() {
        let t = 2.5f64;
        let m = nalgebra::Matrix2::new(0.0, t, -t, 0.0);
        let e = expm(&m);
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-14);
        assert_relative_eq!(e[(0, 1)], t.sin(), epsilon = 1e-14);
    }
}
