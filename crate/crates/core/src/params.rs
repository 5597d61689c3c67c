//! Physical constants, atom and drive parameters, unit conversions and
//! parameter validation.
//!
//! Every frequency-like drive quantity is stored as a dimensionless multiple
//! of the frequency scale `gamma_unit`. SI values are only produced through
//! [`angular`], and only the response module needs them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// SI constants used by the polarizability and Clausius-Mossotti formulas.
///
/// The shipped set is CODATA 2018 rounded to ten significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Vacuum permittivity, F/m.
    pub epsilon0: f64,
    /// Vacuum permeability, H/m.
    pub mu0: f64,
    /// Speed of light in vacuum, m/s.
    pub c: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: Self = Self {
        hbar: 1.054571817e-34,
        epsilon0: 8.854187813e-12,
        mu0: 1.256637062e-6,
        c: 299_792_458.0,
    };

    /// Relative deviation of `c² ε₀ μ₀` from one.
    pub fn consistency_defect(&self) -> f64 {
        (self.c * self.c * self.epsilon0 * self.mu0 - 1.0).abs()
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// Dipole moments and number density of the atomic vapor (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomParameters {
    /// Electric dipole moment of the |3⟩–|4⟩ transition, C·m.
    pub d43: f64,
    /// Magnetic dipole moment of the |2⟩–|4⟩ transition, A·m².
    pub mu42: f64,
    /// Atomic number density, m⁻³.
    #[serde(rename = "density_N")]
    pub density_n: f64,
}

impl Default for AtomParameters {
    fn default() -> Self {
        Self {
            d43: 2.5e-29,
            mu42: 7.0e-23,
            density_n: 5.0e22,
        }
    }
}

/// Drive and relaxation parameters of the master equation.
///
/// All fields except `gamma_unit` (s⁻¹) and `phi` (rad) are multiples of
/// `gamma_unit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveParameters {
    pub gamma_unit: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta_p: f64,
    /// Common magnitude of the two coupling Rabi frequencies.
    pub omega_mag: f64,
    /// Coupling-field phase.
    pub phi: f64,
    /// Probe Rabi frequency, taken real.
    pub omega_p: f64,
}

impl Default for DriveParameters {
    fn default() -> Self {
        Self {
            gamma_unit: 1.0e6,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma3: 1.0,
            delta1: -1.5,
            delta2: 1.5,
            delta_p: 0.0,
            omega_mag: 2.5,
            phi: -0.75 * std::f64::consts::PI,
            omega_p: 0.01,
        }
    }
}

impl DriveParameters {
    /// Drive with every Rabi frequency set to zero; decay rates and detunings
    /// are kept.
    pub fn undriven(self) -> Self {
        Self {
            omega_mag: 0.0,
            omega_p: 0.0,
            ..self
        }
    }

    pub fn with_probe_detuning(self, delta_p: f64) -> Self {
        Self { delta_p, ..self }
    }

    /// Coupling Rabi frequency Ω₁ = |Ω| e^{iΦ}.
    pub fn omega1(&self) -> Complex64 {
        Complex64::from_polar(self.omega_mag, self.phi)
    }

    /// Coupling Rabi frequency Ω₂, equal to Ω₁.
    pub fn omega2(&self) -> Complex64 {
        self.omega1()
    }

    /// Sum of the three decay rates out of |3⟩.
    pub fn total_decay(&self) -> f64 {
        self.gamma1 + self.gamma2 + self.gamma3
    }
}

/// A broken parameter invariant. Violations are collected, not thrown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every invariant of `atom` and `drive`; an empty list means valid.
pub fn validate(atom: &AtomParameters, drive: &DriveParameters) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, field: &'static str, message: &str| {
        if !ok {
            out.push(Violation {
                field,
                message: message.to_owned(),
            });
        }
    };

    check(
        atom.d43.is_finite() && atom.d43 > 0.0,
        "d43",
        "electric dipole moment must be positive",
    );
    check(
        atom.mu42.is_finite() && atom.mu42 > 0.0,
        "mu42",
        "magnetic dipole moment must be positive",
    );
    check(
        atom.density_n.is_finite() && atom.density_n > 0.0,
        "density_N",
        "density must be positive",
    );

    check(
        drive.gamma_unit.is_finite() && drive.gamma_unit > 0.0,
        "gamma_unit",
        "frequency scale must be positive",
    );
    for (field, v) in [
        ("gamma1", drive.gamma1),
        ("gamma2", drive.gamma2),
        ("gamma3", drive.gamma3),
    ] {
        check(
            v.is_finite() && v >= 0.0,
            field,
            "decay rate must be non-negative",
        );
    }
    for (field, v) in [
        ("delta1", drive.delta1),
        ("delta2", drive.delta2),
        ("delta_p", drive.delta_p),
        ("phi", drive.phi),
    ] {
        check(v.is_finite(), field, "must be finite");
    }
    check(
        drive.omega_mag.is_finite() && drive.omega_mag >= 0.0,
        "omega_mag",
        "coupling Rabi frequency must be non-negative",
    );
    check(
        drive.omega_p.is_finite() && drive.omega_p > 0.0,
        "omega_p",
        "probe Rabi frequency must be positive",
    );
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("number density must be non-negative, got {0}")]
    NegativeDensity(f64),
    #[error("unknown gamma-scaled field `{0}`")]
    UnknownField(String),
}

/// Converts a number density from cm⁻³ to m⁻³.
pub fn density_from_cm3(n_cm3: f64) -> Result<f64, ParamError> {
    if n_cm3 < 0.0 || n_cm3.is_nan() {
        return Err(ParamError::NegativeDensity(n_cm3));
    }
    Ok(n_cm3 * 1.0e6)
}

/// The γ-scaled fields of [`DriveParameters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaledField {
    Gamma1,
    Gamma2,
    Gamma3,
    Delta1,
    Delta2,
    DeltaP,
    OmegaMag,
    OmegaP,
}

impl ScaledField {
    pub const ALL: [ScaledField; 8] = [
        ScaledField::Gamma1,
        ScaledField::Gamma2,
        ScaledField::Gamma3,
        ScaledField::Delta1,
        ScaledField::Delta2,
        ScaledField::DeltaP,
        ScaledField::OmegaMag,
        ScaledField::OmegaP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScaledField::Gamma1 => "gamma1",
            ScaledField::Gamma2 => "gamma2",
            ScaledField::Gamma3 => "gamma3",
            ScaledField::Delta1 => "delta1",
            ScaledField::Delta2 => "delta2",
            ScaledField::DeltaP => "delta_p",
            ScaledField::OmegaMag => "omega_mag",
            ScaledField::OmegaP => "omega_p",
        }
    }

    fn get(self, drive: &DriveParameters) -> f64 {
        match self {
            ScaledField::Gamma1 => drive.gamma1,
            ScaledField::Gamma2 => drive.gamma2,
            ScaledField::Gamma3 => drive.gamma3,
            ScaledField::Delta1 => drive.delta1,
            ScaledField::Delta2 => drive.delta2,
            ScaledField::DeltaP => drive.delta_p,
            ScaledField::OmegaMag => drive.omega_mag,
            ScaledField::OmegaP => drive.omega_p,
        }
    }
}

impl FromStr for ScaledField {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| ParamError::UnknownField(s.to_owned()))
    }
}

/// SI value (s⁻¹) of a γ-scaled drive quantity.
pub fn angular(drive: &DriveParameters, field: ScaledField) -> f64 {
    field.get(drive) * drive.gamma_unit
}

/// [`angular`] addressed by field name.
pub fn angular_by_name(drive: &DriveParameters, field: &str) -> Result<f64, ParamError> {
    Ok(angular(drive, field.parse()?))
}
