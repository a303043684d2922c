//! Physical parameters of the double-cavity molecular optomechanical system.
//!
//! Every rate, detuning, coupling and drive is stored in units of the
//! vibrational frequency `omega_m`. Only [`thermal_occupation`] needs the SI
//! value of `omega_m`, which is kept in rad/s alongside the temperature in
//! Kelvin.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (CODATA 2018, exact).
pub const K_B: f64 = 1.380_649e-23;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("m_split exceeds n_total ({m} > {n})")]
    MSplitExceedsN { m: u64, n: u64 },
    #[error("unknown parameter field `{0}`")]
    UnknownField(String),
    #[error("field `{field}` expects {expected}, got {value}")]
    BadValue {
        field: String,
        expected: &'static str,
        value: f64,
    },
    #[error("invalid parameter json: {0}")]
    Json(String),
}

/// All physical inputs of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Scalar"))]
pub struct SystemParams<T = f64> {
    /// Vibrational angular frequency in rad/s; used for the thermal occupation only.
    pub omega_m: T,
    pub g_m: T,
    pub kappa_a: T,
    pub kappa_c: T,
    pub delta_a: T,
    pub delta_c: T,
    pub gamma_1: T,
    pub gamma_2: T,
    pub drive_a: T,
    pub drive_c: T,
    pub j_1: T,
    pub j_2: T,
    pub lambda_opa: T,
    /// Parametric amplifier phase, radians.
    pub theta: T,
    pub n_total: u64,
    pub m_split: u64,
    /// Bath temperature, Kelvin.
    pub temperature: T,
}

impl<T: Scalar> Default for SystemParams<T> {
    /// Reference working point: ω_m/2π = 30 THz, g_m/2π = 30 GHz, drive 16,
    /// J = (0.9, 0.3), Λ = 0.2, θ = π/2, N = 100, M = 50, T = 312 K.
    fn default() -> Self {
        let l = T::lit;
        Self {
            omega_m: l(2.0 * PI * 30e12),
            g_m: l(1e-3),
            kappa_a: l(0.3),
            kappa_c: l(0.3),
            delta_a: l(1.0),
            delta_c: l(1.0),
            gamma_1: l(1e-4),
            gamma_2: l(1e-4),
            drive_a: l(16.0),
            drive_c: l(16.0),
            j_1: l(0.9),
            j_2: l(0.3),
            lambda_opa: l(0.2),
            theta: l(PI / 2.0),
            n_total: 100,
            m_split: 50,
            temperature: l(312.0),
        }
    }
}

/// Collective couplings and thermal occupation derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCouplings<T = f64> {
    pub g_1: T,
    pub g_2: T,
    pub n_th: T,
}

/// A numeric parameter addressable by name, as used by sweeps and `--set`.
///
/// `Drive` is a convenience handle writing both `drive_a` and `drive_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamField {
    OmegaM,
    GM,
    KappaA,
    KappaC,
    DeltaA,
    DeltaC,
    Gamma1,
    Gamma2,
    Drive,
    DriveA,
    DriveC,
    J1,
    J2,
    LambdaOpa,
    Theta,
    NTotal,
    MSplit,
    Temperature,
}

impl ParamField {
    pub const ALL: [ParamField; 18] = [
        Self::OmegaM,
        Self::GM,
        Self::KappaA,
        Self::KappaC,
        Self::DeltaA,
        Self::DeltaC,
        Self::Gamma1,
        Self::Gamma2,
        Self::Drive,
        Self::DriveA,
        Self::DriveC,
        Self::J1,
        Self::J2,
        Self::LambdaOpa,
        Self::Theta,
        Self::NTotal,
        Self::MSplit,
        Self::Temperature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::OmegaM => "omega_m",
            Self::GM => "g_m",
            Self::KappaA => "kappa_a",
            Self::KappaC => "kappa_c",
            Self::DeltaA => "delta_a",
            Self::DeltaC => "delta_c",
            Self::Gamma1 => "gamma_1",
            Self::Gamma2 => "gamma_2",
            Self::Drive => "drive",
            Self::DriveA => "drive_a",
            Self::DriveC => "drive_c",
            Self::J1 => "j_1",
            Self::J2 => "j_2",
            Self::LambdaOpa => "lambda_opa",
            Self::Theta => "theta",
            Self::NTotal => "n_total",
            Self::MSplit => "m_split",
            Self::Temperature => "temperature",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Self::NTotal | Self::MSplit)
    }
}

impl fmt::Display for ParamField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamField {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| ParamError::UnknownField(s.to_owned()))
    }
}

impl<T: Scalar> SystemParams<T> {
    /// Reads a field; integer fields are returned as their float value.
    /// `Drive` reads `drive_a`.
    pub fn get(&self, field: ParamField) -> T {
        use ParamField::*;
        match field {
            OmegaM => self.omega_m,
            GM => self.g_m,
            KappaA => self.kappa_a,
            KappaC => self.kappa_c,
            DeltaA => self.delta_a,
            DeltaC => self.delta_c,
            Gamma1 => self.gamma_1,
            Gamma2 => self.gamma_2,
            Drive | DriveA => self.drive_a,
            DriveC => self.drive_c,
            J1 => self.j_1,
            J2 => self.j_2,
            LambdaOpa => self.lambda_opa,
            Theta => self.theta,
            NTotal => T::lit(self.n_total as f64),
            MSplit => T::lit(self.m_split as f64),
            Temperature => self.temperature,
        }
    }

    /// Writes a field. Integer fields reject fractional or negative values.
    pub fn set(&mut self, field: ParamField, value: T) -> Result<(), ParamError> {
        use ParamField::*;
        if field.is_integer() {
            let v = value.as_f64();
            if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0) {
                return Err(ParamError::BadValue {
                    field: field.name().to_owned(),
                    expected: "a non-negative integer",
                    value: v,
                });
            }
            match field {
                NTotal => self.n_total = v as u64,
                _ => self.m_split = v as u64,
            }
            return Ok(());
        }
        let slot = match field {
            OmegaM => &mut self.omega_m,
            GM => &mut self.g_m,
            KappaA => &mut self.kappa_a,
            KappaC => &mut self.kappa_c,
            DeltaA => &mut self.delta_a,
            DeltaC => &mut self.delta_c,
            Gamma1 => &mut self.gamma_1,
            Gamma2 => &mut self.gamma_2,
            Drive => {
                self.drive_a = value;
                &mut self.drive_c
            }
            DriveA => &mut self.drive_a,
            DriveC => &mut self.drive_c,
            J1 => &mut self.j_1,
            J2 => &mut self.j_2,
            LambdaOpa => &mut self.lambda_opa,
            Theta => &mut self.theta,
            Temperature => &mut self.temperature,
            NTotal | MSplit => unreachable!(),
        };
        *slot = value;
        Ok(())
    }

    /// Builder-style [`SystemParams::set`].
    pub fn with(mut self, field: ParamField, value: T) -> Result<Self, ParamError> {
        self.set(field, value)?;
        Ok(self)
    }

    /// Returns the parameter set unchanged if every invariant holds, otherwise
    /// the first violation.
    pub fn validate(self) -> Result<Self, ParamError> {
        let zero = T::zero();
        let floats = [
            ("omega_m", self.omega_m),
            ("g_m", self.g_m),
            ("kappa_a", self.kappa_a),
            ("kappa_c", self.kappa_c),
            ("delta_a", self.delta_a),
            ("delta_c", self.delta_c),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("drive_a", self.drive_a),
            ("drive_c", self.drive_c),
            ("j_1", self.j_1),
            ("j_2", self.j_2),
            ("lambda_opa", self.lambda_opa),
            ("theta", self.theta),
            ("temperature", self.temperature),
        ];
        if let Some((name, _)) = floats.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ParamError::NonFinite(name));
        }
        for (name, v) in [
            ("omega_m", self.omega_m),
            ("kappa_a", self.kappa_a),
            ("kappa_c", self.kappa_c),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
        ] {
            if v <= zero {
                return Err(ParamError::NonPositive(name));
            }
        }
        for (name, v) in [
            ("g_m", self.g_m),
            ("lambda_opa", self.lambda_opa),
            ("temperature", self.temperature),
        ] {
            if v < zero {
                return Err(ParamError::Negative(name));
            }
        }
        if self.m_split > self.n_total {
            return Err(ParamError::MSplitExceedsN {
                m: self.m_split,
                n: self.n_total,
            });
        }
        Ok(self)
    }

    pub fn derived(&self) -> DerivedCouplings<T> {
        let (g_1, g_2) = collective_couplings(self);
        DerivedCouplings {
            g_1,
            g_2,
            n_th: thermal_occupation(self.omega_m, self.temperature),
        }
    }

    pub fn cast<U: Scalar>(&self) -> SystemParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        SystemParams {
            omega_m: c(self.omega_m),
            g_m: c(self.g_m),
            kappa_a: c(self.kappa_a),
            kappa_c: c(self.kappa_c),
            delta_a: c(self.delta_a),
            delta_c: c(self.delta_c),
            gamma_1: c(self.gamma_1),
            gamma_2: c(self.gamma_2),
            drive_a: c(self.drive_a),
            drive_c: c(self.drive_c),
            j_1: c(self.j_1),
            j_2: c(self.j_2),
            lambda_opa: c(self.lambda_opa),
            theta: c(self.theta),
            n_total: self.n_total,
            m_split: self.m_split,
            temperature: c(self.temperature),
        }
    }
}

impl SystemParams<f64> {
    /// Parses a JSON object of parameter keys. Missing keys keep their
    /// defaults; `drive` sets both drives before `drive_a`/`drive_c` apply.
    pub fn from_json_value(value: &serde_json::Value) -> Result<Self, ParamError> {
        let obj = value
            .as_object()
            .ok_or_else(|| ParamError::Json("expected a JSON object".into()))?;
        let mut rest = obj.clone();
        let drive = rest.remove("drive");
        let mut params: Self = serde_json::from_value(serde_json::Value::Object(rest))
            .map_err(|e| ParamError::Json(e.to_string()))?;
        if let Some(d) = drive {
            let d = d
                .as_f64()
                .ok_or_else(|| ParamError::Json("`drive` must be a number".into()))?;
            if !obj.contains_key("drive_a") {
                params.drive_a = d;
            }
            if !obj.contains_key("drive_c") {
                params.drive_c = d;
            }
        }
        Ok(params)
    }

    /// Canonical single-line JSON, stable key order, shortest round-trip floats.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("parameters always serialize")
    }
}

/// `(g_1, g_2) = (g_m √M, g_m √(N − M))`.
pub fn collective_couplings<T: Scalar>(params: &SystemParams<T>) -> (T, T) {
    let m = params.m_split;
    let rest = params.n_total.saturating_sub(m);
    (
        params.g_m * T::lit(m as f64).sqrt(),
        params.g_m * T::lit(rest as f64).sqrt(),
    )
}

/// Bose–Einstein occupation `1 / (exp(ħω/k_B T) − 1)`, exactly zero at `T = 0`.
pub fn thermal_occupation<T: Scalar>(omega_m_si: T, temperature: T) -> T {
    if temperature <= T::zero() {
        return T::zero();
    }
    let x = T::lit(HBAR / K_B) * omega_m_si / temperature;
    let denom = x.exp_m1();
    if !denom.is_finite() {
        T::zero()
    } else {
        denom.recip()
    }
}
