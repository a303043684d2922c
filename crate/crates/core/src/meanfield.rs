//! Classical steady state of the driven system.
//!
//! Once the vibrational amplitudes are written in terms of `|α_c|²` the
//! cavity amplitudes solve a linear system, so the whole fixed point reduces
//! to a scalar iteration on `s = |α_c|²`. Each iterate re-solves the cavity
//! pair exactly and updates `s ← (s + |α_c(s)|²) / 2`.

use crate::model::{collective_couplings, ParamError, SystemParams};
use crate::scalar::{modulus, Scalar};
use nalgebra::{Complex, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const MAX_ITERATIONS: usize = 10_000;
const DAMPING: f64 = 0.5;
/// Consecutive sign-alternating, non-shrinking residuals before giving up.
const OSCILLATION_WINDOW: usize = 50;
/// Amplitude guard for [`integrate_classical`].
const OVERFLOW_GUARD: f64 = 1e12;
pub const MAX_TIME_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanFieldError {
    #[error("mean-field iteration did not converge after {iterations} iterations (residual {residual:.3e}{})",
        if *.oscillating { ", period-2 oscillation: possible multistability" } else { "" })]
    NonConvergence {
        iterations: usize,
        residual: f64,
        oscillating: bool,
    },
    #[error("classical trajectory diverged at t = {time}")]
    Diverged { time: f64 },
    #[error("cavity amplitude equations are singular")]
    Singular,
    #[error("time step {0} must lie in (0, {MAX_TIME_STEP}]")]
    BadTimeStep(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// How the parametric-amplifier term enters the classical equations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanFieldMode {
    /// `2Λe^{iθ}` multiplies `α_a` itself, as in the closed-form amplitude
    /// `α_a = (𝓔_a − iJ_1α_c)/((iΔ_a+κ_a) − 2Λe^{iθ})`.
    #[default]
    Paper,
    /// `2Λe^{iθ}` multiplies `conj(α_a)`; the cavity pair is solved as a
    /// real 4×4 system in `(Re α_a, Im α_a, Re α_c, Im α_c)`.
    Exact,
}

impl fmt::Display for MeanFieldMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Exact => "exact",
        })
    }
}

impl FromStr for MeanFieldMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "exact" => Ok(Self::Exact),
            other => Err(format!("unknown mean-field mode `{other}` (paper|exact)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T = f64> {
    pub alpha_a: Complex<T>,
    pub alpha_c: Complex<T>,
    pub beta_1: Complex<T>,
    pub beta_2: Complex<T>,
    /// Effective detuning `Δ_c − Σ_k 2 g_k Re β_k`.
    pub delta_c_eff: T,
    /// `G_1 = g_1 |α_c|`.
    pub g_cap_1: T,
    /// `G_2 = g_2 |α_c|`.
    pub g_cap_2: T,
    /// Fixed-point iterations, or time steps for the ODE route.
    pub iterations: usize,
    /// Relative residual of `s = |α_c(s)|²` at the returned point.
    pub residual: T,
}

/// `β_k = −i g_k s / (iω_m + γ_k)` with `ω_m = 1`.
fn vibrational_amplitude<T: Scalar>(g: T, gamma: T, s: T) -> Complex<T> {
    let num = Complex::new(T::zero(), -g * s);
    num / Complex::new(gamma, T::one())
}

fn effective_detuning<T: Scalar>(
    p: &SystemParams<T>,
    g: (T, T),
    beta: (Complex<T>, Complex<T>),
) -> T {
    let two = T::lit(2.0);
    p.delta_c - two * g.0 * beta.0.re - two * g.1 * beta.1.re
}

/// Solves the linear cavity pair for a given effective detuning.
fn cavity_amplitudes<T: Scalar>(
    p: &SystemParams<T>,
    delta_c_eff: T,
    mode: MeanFieldMode,
) -> Result<(Complex<T>, Complex<T>), MeanFieldError> {
    let i = Complex::new(T::zero(), T::one());
    let two = T::lit(2.0);
    let opa = Complex::new(two * p.lambda_opa * p.theta.cos(), two * p.lambda_opa * p.theta.sin());
    let drive_a = Complex::new(p.drive_a, T::zero());
    let drive_c = Complex::new(p.drive_c, T::zero());
    match mode {
        MeanFieldMode::Paper => {
            let m11 = Complex::new(p.kappa_a, p.delta_a) - opa;
            let m12 = i * p.j_1;
            let m21 = i * p.j_2;
            let m22 = Complex::new(p.kappa_c, delta_c_eff);
            let det = m11 * m22 - m12 * m21;
            if det.norm_sqr() == T::zero() || !det.norm_sqr().is_finite() {
                return Err(MeanFieldError::Singular);
            }
            let a = (drive_a * m22 - m12 * drive_c) / det;
            let c = (m11 * drive_c - m21 * drive_a) / det;
            Ok((a, c))
        }
        MeanFieldMode::Exact => {
            let (lc, ls) = (two * p.lambda_opa * p.theta.cos(), two * p.lambda_opa * p.theta.sin());
            let z = T::zero();
            #[rustfmt::skip]
            let m = Matrix4::new(
                p.kappa_a - lc, -p.delta_a - ls, z,           -p.j_1,
                p.delta_a - ls, p.kappa_a + lc,  p.j_1,       z,
                z,              -p.j_2,          p.kappa_c,   -delta_c_eff,
                p.j_2,          z,               delta_c_eff, p.kappa_c,
            );
            let rhs = Vector4::new(p.drive_a, z, p.drive_c, z);
            let x = m.lu().solve(&rhs).ok_or(MeanFieldError::Singular)?;
            Ok((Complex::new(x[0], x[1]), Complex::new(x[2], x[3])))
        }
    }
}

fn state_at<T: Scalar>(
    p: &SystemParams<T>,
    g: (T, T),
    s: T,
    mode: MeanFieldMode,
) -> Result<SteadyState<T>, MeanFieldError> {
    let beta = (
        vibrational_amplitude(g.0, p.gamma_1, s),
        vibrational_amplitude(g.1, p.gamma_2, s),
    );
    let delta_c_eff = effective_detuning(p, g, beta);
    let (alpha_a, alpha_c) = cavity_amplitudes(p, delta_c_eff, mode)?;
    let amp = modulus(alpha_c);
    Ok(SteadyState {
        alpha_a,
        alpha_c,
        beta_1: beta.0,
        beta_2: beta.1,
        delta_c_eff,
        g_cap_1: g.0 * amp,
        g_cap_2: g.1 * amp,
        iterations: 0,
        residual: T::zero(),
    })
}

fn relative_residual<T: Scalar>(s: T, next: T) -> T {
    let diff = (next - s).abs();
    if diff == T::zero() {
        T::zero()
    } else {
        diff / next.abs().max(s.abs())
    }
}

/// Self-consistent classical fixed point, starting from `|α_c|² = 0`.
pub fn solve_mean_field<T: Scalar>(
    params: &SystemParams<T>,
    mode: MeanFieldMode,
) -> Result<SteadyState<T>, MeanFieldError> {
    let p = params.validate()?;
    let g = collective_couplings(&p);
    let tol = T::lit(T::MEANFIELD_TOL * 0.1);
    let damping = T::lit(DAMPING);

    let mut s = T::zero();
    let mut prev_step: Option<T> = None;
    let mut alternating = 0usize;
    let mut last_residual = T::infinity();
    for iteration in 1..=MAX_ITERATIONS {
        let mut st = state_at(&p, g, s, mode)?;
        let next = st.alpha_c.norm_sqr();
        let residual = relative_residual(s, next);
        if !next.is_finite() {
            break;
        }
        if residual <= tol {
            st.iterations = iteration;
            st.residual = residual;
            return Ok(st);
        }
        let step = next - s;
        if let Some(prev) = prev_step {
            if step * prev < T::zero() && step.abs() >= prev.abs() * T::lit(0.999) {
                alternating += 1;
            } else {
                alternating = 0;
            }
        }
        if alternating >= OSCILLATION_WINDOW {
            return Err(MeanFieldError::NonConvergence {
                iterations: iteration,
                residual: residual.as_f64(),
                oscillating: true,
            });
        }
        prev_step = Some(step);
        last_residual = residual;
        s = s + damping * step;
    }
    Err(MeanFieldError::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual: last_residual.as_f64(),
        oscillating: false,
    })
}

/// Classical amplitudes `(α_a, α_c, β_1, β_2)`.
type Amplitudes<T> = [Complex<T>; 4];

fn classical_rhs<T: Scalar>(
    p: &SystemParams<T>,
    g: (T, T),
    mode: MeanFieldMode,
    y: &Amplitudes<T>,
) -> Amplitudes<T> {
    let i = Complex::new(T::zero(), T::one());
    let two = T::lit(2.0);
    let [a, c, b1, b2] = *y;
    let opa = Complex::new(two * p.lambda_opa * p.theta.cos(), two * p.lambda_opa * p.theta.sin())
        * match mode {
            MeanFieldMode::Paper => a,
            MeanFieldMode::Exact => a.conj(),
        };
    let da = -Complex::new(p.kappa_a, p.delta_a) * a - i * c * p.j_1 + opa + p.drive_a;
    let shift = two * (g.0 * b1.re + g.1 * b2.re);
    let dc = -Complex::new(p.kappa_c, p.delta_c) * c + i * c * shift - i * a * p.j_2 + p.drive_c;
    let n = c.norm_sqr();
    let db1 = -Complex::new(p.gamma_1, T::one()) * b1 - i * (g.0 * n);
    let db2 = -Complex::new(p.gamma_2, T::one()) * b2 - i * (g.1 * n);
    [da, dc, db1, db2]
}

fn axpy<T: Scalar>(y: &Amplitudes<T>, h: T, k: &Amplitudes<T>) -> Amplitudes<T> {
    std::array::from_fn(|j| y[j] + k[j] * h)
}

/// Integrates the deterministic classical equations from rest with RK4.
///
/// The vibrational drive enters as `−i g_k |α_c|²`, so a stationary point of
/// this flow satisfies the same relations [`solve_mean_field`] solves.
pub fn integrate_classical<T: Scalar>(
    params: &SystemParams<T>,
    mode: MeanFieldMode,
    t_end: T,
    dt: T,
) -> Result<SteadyState<T>, MeanFieldError> {
    let p = params.validate()?;
    if !(dt > T::zero() && dt.as_f64() <= MAX_TIME_STEP) {
        return Err(MeanFieldError::BadTimeStep(dt.as_f64()));
    }
    let g = collective_couplings(&p);
    let zero = Complex::new(T::zero(), T::zero());
    let mut y: Amplitudes<T> = [zero; 4];
    let steps = (t_end / dt).ceil().to_usize().unwrap_or(0);
    let half = dt * T::lit(0.5);
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let guard = T::lit(OVERFLOW_GUARD);
    for step in 0..steps {
        let k1 = classical_rhs(&p, g, mode, &y);
        let k2 = classical_rhs(&p, g, mode, &axpy(&y, half, &k1));
        let k3 = classical_rhs(&p, g, mode, &axpy(&y, half, &k2));
        let k4 = classical_rhs(&p, g, mode, &axpy(&y, dt, &k3));
        y = std::array::from_fn(|j| y[j] + (k1[j] + (k2[j] + k3[j]) * two + k4[j]) * sixth);
        if y.iter().any(|z| !(modulus(*z) <= guard)) {
            return Err(MeanFieldError::Diverged {
                time: (T::lit((step + 1) as f64) * dt).as_f64(),
            });
        }
    }
    let [alpha_a, alpha_c, beta_1, beta_2] = y;
    let amp = modulus(alpha_c);
    let s = alpha_c.norm_sqr();
    let drift = relative_residual(
        s,
        state_at(&p, g, s, mode).map(|st| st.alpha_c.norm_sqr()).unwrap_or(s),
    );
    Ok(SteadyState {
        alpha_a,
        alpha_c,
        beta_1,
        beta_2,
        delta_c_eff: effective_detuning(&p, g, (beta_1, beta_2)),
        g_cap_1: g.0 * amp,
        g_cap_2: g.1 * amp,
        iterations: steps,
        residual: drift,
    })
}
