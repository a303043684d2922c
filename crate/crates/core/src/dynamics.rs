//! Linearized fluctuation dynamics: drift matrix, diffusion matrix and the
//! stability verdict.
//!
//! Quadrature order throughout the crate is
//! `(δx_a, δy_a, δx_c, δy_c, δq_1, δp_1, δq_2, δp_2)`.

use crate::meanfield::SteadyState;
use crate::model::SystemParams;
use crate::scalar::Scalar;
use nalgebra::{Complex, SMatrix, SVector};
use thiserror::Error;

pub const DIM: usize = 8;
pub type Matrix8<T> = SMatrix<T, DIM, DIM>;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("eigenvalue solver did not converge")]
    EigenvalueFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix<T = f64>(pub Matrix8<T>);

/// Diagonal noise matrix, stored as its diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix<T = f64>(pub SVector<T, DIM>);

impl<T: Scalar> DiffusionMatrix<T> {
    pub fn to_matrix(&self) -> Matrix8<T> {
        Matrix8::from_diagonal(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T = f64> {
    pub stable: bool,
    pub max_real_part: T,
    pub eigenvalues: Vec<Complex<T>>,
}

/// Drift matrix of the linearized quadrature equations around `ss`.
pub fn build_drift<T: Scalar>(ss: &SteadyState<T>, params: &SystemParams<T>) -> DriftMatrix<T> {
    let p = params;
    let two = T::lit(2.0);
    let z = T::zero();
    let w = T::one();
    let (lc, ls) = (
        two * p.lambda_opa * p.theta.cos(),
        two * p.lambda_opa * p.theta.sin(),
    );
    let (g1, g2) = (two * ss.g_cap_1, two * ss.g_cap_2);
    let dc = ss.delta_c_eff;
    #[rustfmt::skip]
    let a = Matrix8::from_row_slice(&[
        lc - p.kappa_a,  ls + p.delta_a,    z,          p.j_1,      z,           z,           z,           z,
        ls - p.delta_a,  -(lc + p.kappa_a), -p.j_1,     z,          z,           z,           z,           z,
        z,               p.j_2,             -p.kappa_c, dc,         z,           z,           z,           z,
        -p.j_2,          z,                 -dc,        -p.kappa_c, g1,          z,           g2,          z,
        z,               z,                 z,          z,          -p.gamma_1,  w,           z,           z,
        z,               z,                 g1,         z,          -w,          -p.gamma_1,  z,           z,
        z,               z,                 z,          z,          z,           z,           -p.gamma_2,  w,
        z,               z,                 g2,         z,          z,           z,           -w,          -p.gamma_2,
    ]);
    DriftMatrix(a)
}

/// `diag[κ_a, κ_a, κ_c, κ_c, γ_1(2n+1), γ_1(2n+1), γ_2(2n+1), γ_2(2n+1)]`.
pub fn build_diffusion<T: Scalar>(params: &SystemParams<T>, n_th: T) -> DiffusionMatrix<T> {
    let thermal = T::lit(2.0) * n_th + T::one();
    let (v1, v2) = (params.gamma_1 * thermal, params.gamma_2 * thermal);
    DiffusionMatrix(SVector::from([
        params.kappa_a,
        params.kappa_a,
        params.kappa_c,
        params.kappa_c,
        v1,
        v1,
        v2,
        v2,
    ]))
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues<T: Scalar, const N: usize>(
    m: &SMatrix<T, N, N>,
) -> Result<Vec<Complex<T>>, DynamicsError> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::EigenvalueFailure);
    }
    let dense = nalgebra::DMatrix::from_column_slice(N, N, m.as_slice());
    let schur = nalgebra::Schur::try_new(dense, T::default_epsilon(), SCHUR_MAX_ITER)
        .ok_or(DynamicsError::EigenvalueFailure)?;
    let eig = schur.complex_eigenvalues();
    if eig.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(DynamicsError::EigenvalueFailure);
    }
    Ok(eig.iter().copied().collect())
}

/// Stable iff every eigenvalue has real part below `-STABILITY_EPS`.
pub fn stability<T: Scalar>(a: &DriftMatrix<T>) -> Result<StabilityReport<T>, DynamicsError> {
    let eigenvalues = eigenvalues(&a.0)?;
    let max_real_part = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(T::neg_infinity(), |m, x| m.max(x));
    Ok(StabilityReport {
        stable: max_real_part < -T::lit(T::STABILITY_EPS),
        max_real_part,
        eigenvalues,
    })
}
