//! Density-matrix equations of motion for the four-level quasi-Λ system,
//! their stationary solution, and a fixed-step time integrator used as an
//! independent check of the stationary solver.
//!
//! Levels |1⟩ and |2⟩ are the ground pair driven to |3⟩ by the coupling
//! field (Ω₁ = Ω₂ = |Ω| e^{iΦ}); the probe Ω_p drives |3⟩–|4⟩. Time is
//! measured in 1/γ and all rates in γ.
//!
//! Only the upper-triangle coherences are dynamical variables; lower-triangle
//! elements are always the conjugates. No equation is given for ρ44: its
//! derivative is fixed by trace conservation.

mod evolve;
mod liouvillian;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::DensityMatrix;
use crate::params::DriveParameters;

pub use evolve::{evolve, Evolution, DEFAULT_DT, DEFAULT_T_FINAL, MAX_DT};
pub use liouvillian::{
    build_liouvillian, solve_steady, LiouvillianSystem, CONSTRAINT_ROW, REAL_UNKNOWNS,
    SINGULAR_TOLERANCE,
};

/// Which reading of the ρ24 equation to use.
///
/// The two variants differ only in the last term of dρ24/dt: `AsPrinted`
/// couples ρ24 back to itself through −iΩ₂*ρ24, `Corrected` couples it to
/// ρ34 through −iΩ₂*ρ34, following the ladder structure of the other
/// coherence equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationVariant {
    #[serde(alias = "as_printed")]
    AsPrinted,
    #[default]
    Corrected,
}

impl EquationVariant {
    pub const ALL: [EquationVariant; 2] = [EquationVariant::AsPrinted, EquationVariant::Corrected];

    pub fn as_str(self) -> &'static str {
        match self {
            EquationVariant::AsPrinted => "as-printed",
            EquationVariant::Corrected => "corrected",
        }
    }
}

impl fmt::Display for EquationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquationVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "as-printed" | "as_printed" => Ok(EquationVariant::AsPrinted),
            "corrected" => Ok(EquationVariant::Corrected),
            other => Err(format!(
                "unknown equation variant `{other}` (expected as-printed or corrected)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("steady-state system is singular (condition estimate {condition:.3e}); the stationary state is not unique")]
    SingularSteadySystem { condition: f64 },
    #[error("integration unstable at t = {time}/γ: population ρ{level}{level} = {value} left [-0.01, 1.01]")]
    StepTooLarge { time: f64, level: usize, value: f64 },
    #[error("time step must lie in (0, {max}], got {dt}")]
    InvalidStep { dt: f64, max: f64 },
    #[error("final time must be zero or at least one step, got t_final = {t_final}, dt = {dt}")]
    InvalidDuration { t_final: f64, dt: f64 },
}

/// Drive quantities in the form the equations consume them.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Couplings {
    pub o1: Complex64,
    pub o2: Complex64,
    pub op: f64,
    pub g1: f64,
    pub g2: f64,
    pub g_total: f64,
    pub d1: f64,
    pub d2: f64,
    pub dp: f64,
    pub variant: EquationVariant,
}

impl Couplings {
    pub fn new(drive: &DriveParameters, variant: EquationVariant) -> Self {
        Self {
            o1: drive.omega1(),
            o2: drive.omega2(),
            op: drive.omega_p,
            g1: drive.gamma1,
            g2: drive.gamma2,
            g_total: drive.total_decay(),
            d1: drive.delta1,
            d2: drive.delta2,
            dp: drive.delta_p,
            variant,
        }
    }
}

/// Compact state: populations ρ11..ρ44 and coherences ρ12, ρ13, ρ14, ρ23,
/// ρ24, ρ34.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct State {
    pub pops: [f64; 4],
    pub coh: [Complex64; 6],
}

impl State {
    pub fn from_matrix(rho: &DensityMatrix) -> Self {
        Self {
            pops: rho.populations(),
            coh: rho.coherences(),
        }
    }

    pub fn to_matrix(self) -> DensityMatrix {
        DensityMatrix::from_parts(self.pops, self.coh)
    }

    /// `self + h·k`.
    #[inline]
    pub fn axpy(&self, h: f64, k: &State) -> State {
        State {
            pops: std::array::from_fn(|i| self.pops[i] + h * k.pops[i]),
            coh: std::array::from_fn(|i| self.coh[i] + k.coh[i] * h),
        }
    }
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Term-by-term evaluation of the equations of motion.
#[inline]
pub(crate) fn derivative(c: &Couplings, s: &State) -> State {
    let [r11, r22, r33, r44] = s.pops;
    let [r12, r13, r14, r23, r24, r34] = s.coh;
    let (r21, r31, r32) = (r12.conj(), r13.conj(), r23.conj());
    let (o1, o2, op) = (c.o1, c.o2, c.op);
    let (o1c, o2c) = (o1.conj(), o2.conj());
    let half = 0.5 * c.g_total;

    let x = -I * o1c * r31;
    let d11 = c.g1 * r33 + 2.0 * x.re;

    let d12 = I * ((c.d1 - c.d2) * r12 + o2 * r13 - o1c * r32);

    let d13 = -half * r13 + I * o1c * (r11 - r33) + I * (o2c * r12 + c.d1 * r13 + op * r14);

    let d14 = I * ((c.d1 - c.dp) * r14 + op * r13 - o1c * r34);

    let x = -I * o2c * r32;
    let d22 = c.g2 * r33 + 2.0 * x.re;

    let d23 = -half * r23 + I * o1 * (r22 - r33) + I * (o1c * r21 + c.d2 * r23 + op * r24);

    let fed_back = match c.variant {
        EquationVariant::AsPrinted => r24,
        EquationVariant::Corrected => r34,
    };
    let d24 = I * ((c.d2 - c.dp) * r24 + op * r23 - o2c * fed_back);

    let x = I * o1c * r31 + I * o2c * r32 + I * op * r34;
    let d33 = -c.g_total * r33 + 2.0 * x.re;

    let d34 = -half * r34 - I * op * (r44 - r33) - I * (o1 * r14 + o2 * r24) - I * c.dp * r34;

    let d44 = -(d11 + d22 + d33);

    State {
        pops: [d11, d22, d33, d44],
        coh: [d12, d13, d14, d23, d24, d34],
    }
}

/// Time derivative dρ/dt (in units of γ) of a Hermitian density matrix.
///
/// Only the diagonal and upper triangle of `rho` are read; the result is
/// Hermitian by construction.
pub fn rhs(
    drive: &DriveParameters,
    rho: &DensityMatrix,
    variant: EquationVariant,
) -> DensityMatrix {
    derivative(&Couplings::new(drive, variant), &State::from_matrix(rho)).to_matrix()
}

/// Max-norm of [`rhs`]; zero exactly at a stationary state.
pub fn steady_residual(
    drive: &DriveParameters,
    rho: &DensityMatrix,
    variant: EquationVariant,
) -> f64 {
    rhs(drive, rho, variant).max_norm()
}
