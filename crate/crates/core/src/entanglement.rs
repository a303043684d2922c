//! Bipartite logarithmic negativity of two-mode Gaussian states.

use crate::dynamics::eigenvalues;
use crate::lyapunov::CovarianceMatrix;
use crate::scalar::Scalar;
use nalgebra::{Matrix2, Matrix4};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntanglementError {
    #[error("a mode pair needs two distinct modes, got {0} twice")]
    SameMode(Mode),
    #[error("non-physical two-mode state (discriminant {discriminant:.3e})")]
    NonPhysicalState { discriminant: f64 },
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("symplectic eigenvalue solver failed")]
    EigenvalueFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    CavityA,
    CavityC,
    Vib1,
    Vib2,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::CavityA, Mode::CavityC, Mode::Vib1, Mode::Vib2];

    /// Position of the mode's first quadrature in the covariance matrix.
    pub fn offset(self) -> usize {
        2 * self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::CavityA => "cavity_a",
            Mode::CavityC => "cavity_c",
            Mode::Vib1 => "vib_1",
            Mode::Vib2 => "vib_2",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = EntanglementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| EntanglementError::UnknownMode(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModePair {
    first: Mode,
    second: Mode,
}

impl ModePair {
    pub fn new(first: Mode, second: Mode) -> Result<Self, EntanglementError> {
        if first == second {
            return Err(EntanglementError::SameMode(first));
        }
        Ok(Self { first, second })
    }

    pub fn first(&self) -> Mode {
        self.first
    }

    pub fn second(&self) -> Mode {
        self.second
    }

    pub fn swapped(&self) -> Self {
        Self {
            first: self.second,
            second: self.first,
        }
    }

    /// Covariance rows/columns of the pair, 0-based, in pair order.
    pub fn indices(&self) -> [usize; 4] {
        let (i, j) = (self.first.offset(), self.second.offset());
        [i, i + 1, j, j + 1]
    }

    pub fn involves(&self, mode: Mode) -> bool {
        self.first == mode || self.second == mode
    }
}

/// `V_sub = [[Φ_1, Φ_3], [Φ_3ᵀ, Φ_2]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCovariance<T = f64> {
    pub phi_1: Matrix2<T>,
    pub phi_2: Matrix2<T>,
    pub phi_3: Matrix2<T>,
}

impl<T: Scalar> PairCovariance<T> {
    pub fn from_matrix(m: &Matrix4<T>) -> Self {
        Self {
            phi_1: m.fixed_view::<2, 2>(0, 0).into_owned(),
            phi_2: m.fixed_view::<2, 2>(2, 2).into_owned(),
            phi_3: m.fixed_view::<2, 2>(0, 2).into_owned(),
        }
    }

    pub fn to_matrix(&self) -> Matrix4<T> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.phi_1);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.phi_2);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.phi_3);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.phi_3.transpose());
        m
    }

    /// `Σ = det Φ_1 + det Φ_2 − 2 det Φ_3`.
    pub fn seralian(&self) -> T {
        self.phi_1.determinant() + self.phi_2.determinant()
            - T::lit(2.0) * self.phi_3.determinant()
    }
}

pub fn extract_pair<T: Scalar>(v: &CovarianceMatrix<T>, pair: ModePair) -> PairCovariance<T> {
    let idx = pair.indices();
    PairCovariance::from_matrix(&Matrix4::from_fn(|r, c| v.0[(idx[r], idx[c])]))
}

fn from_symplectic_eigenvalue<T: Scalar>(nu: T) -> T {
    let e = -(T::lit(2.0) * nu).ln();
    if e > T::zero() {
        e
    } else {
        T::zero()
    }
}

/// Smallest partially-transposed symplectic eigenvalue from the closed form
/// `ζ = 2^{−1/2} (Σ − (Σ² − 4 det V)^{1/2})^{1/2}`.
///
/// Evaluated as `ζ² = 2 det V / (Σ + (Σ² − 4 det V)^{1/2})`, the same root
/// without the cancellation at strong squeezing.
pub fn min_symplectic_eigenvalue<T: Scalar>(
    pc: &PairCovariance<T>,
) -> Result<T, EntanglementError> {
    let tol = T::lit(T::PHYSICAL_TOL);
    let sigma = pc.seralian();
    let det = pc.to_matrix().determinant();
    let disc = sigma * sigma - T::lit(4.0) * det;
    let non_physical = || EntanglementError::NonPhysicalState {
        discriminant: disc.as_f64(),
    };
    if disc < -tol || !disc.is_finite() || det < -tol {
        return Err(non_physical());
    }
    let root = if disc > T::zero() { disc.sqrt() } else { T::zero() };
    let denom = sigma + root;
    if denom <= T::zero() {
        return Err(non_physical());
    }
    let det = if det > T::zero() { det } else { T::zero() };
    Ok((T::lit(2.0) * det / denom).sqrt())
}

/// `E_N = max[0, −ln 2ζ]`.
pub fn log_negativity<T: Scalar>(pc: &PairCovariance<T>) -> Result<T, EntanglementError> {
    min_symplectic_eigenvalue(pc).map(from_symplectic_eigenvalue)
}

/// Same quantity through the spectrum of `iΩ Ṽ`, where `Ṽ` is the pair
/// covariance with the second mode's momentum reflected.
pub fn log_negativity_ppt_oracle<T: Scalar>(
    pc: &PairCovariance<T>,
) -> Result<T, EntanglementError> {
    let tol = T::lit(T::PHYSICAL_TOL);
    let reflect = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        T::one(),
        T::one(),
        T::one(),
        -T::one(),
    ));
    let transposed = reflect * pc.to_matrix() * reflect;
    let (o, l) = (T::zero(), T::one());
    #[rustfmt::skip]
    let omega = Matrix4::new(
        o,  l,  o,  o,
        -l, o,  o,  o,
        o,  o,  o,  l,
        o,  o,  -l, o,
    );
    // iΩṼ is Hermitian-similar; its eigenvalues are ±ν. ΩṼ has ±iν.
    let spectrum =
        eigenvalues(&(omega * transposed)).map_err(|_| EntanglementError::EigenvalueFailure)?;
    if spectrum.iter().any(|z| z.re.abs() > tol * (T::one() + crate::scalar::modulus(*z))) {
        return Err(EntanglementError::NonPhysicalState {
            discriminant: spectrum
                .iter()
                .map(|z| z.re.abs())
                .fold(T::zero(), |a, b| a.max(b))
                .as_f64(),
        });
    }
    let nu = spectrum
        .iter()
        .map(|z| z.im.abs())
        .fold(T::infinity(), |a, b| a.min(b));
    Ok(from_symplectic_eigenvalue(nu))
}
