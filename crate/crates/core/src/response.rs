//! Electromagnetic response of the vapor to the probe.
//!
//! The stationary coherences ρ34 and ρ24 give the atomic electric and
//! magnetic polarizabilities. Local-field (Clausius-Mossotti) corrections turn
//! them into the relative permittivity and permeability, from which the
//! refractive index and the figure of merit −Re(n)/|Im(n)| follow.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::DensityMatrix;
use crate::dynamics::{self, DynamicsError, EquationVariant};
use crate::params::{angular, AtomParameters, DriveParameters, PhysicalConstants, ScaledField};

/// Relative tolerance on a vanishing Clausius-Mossotti denominator.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// |Im n| below which the figure of merit is reported as lossless.
pub const LOSSLESS_THRESHOLD: f64 = 1e-15;

/// Eigenvalues of ρ below this raise a positivity warning.
pub const POSITIVITY_TOLERANCE: f64 = -1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("probe Rabi frequency is zero; polarizabilities are undefined")]
    ProbeZero,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Choice of square-root branch for n = ±√(ε_r μ_r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchMode {
    /// n = −√(ε_r μ_r) with the principal root; Re n ≤ 0 always.
    #[default]
    Literal,
    /// The root with Im n ≥ 0 (ties broken towards Re n ≤ 0).
    Passive,
}

impl BranchMode {
    pub const ALL: [BranchMode; 2] = [BranchMode::Literal, BranchMode::Passive];

    pub fn as_str(self) -> &'static str {
        match self {
            BranchMode::Literal => "literal",
            BranchMode::Passive => "passive",
        }
    }
}

impl fmt::Display for BranchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BranchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(BranchMode::Literal),
            "passive" => Ok(BranchMode::Passive),
            other => Err(format!(
                "unknown branch mode `{other}` (expected literal or passive)"
            )),
        }
    }
}

/// Probe field amplitudes implied by the probe Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeFieldAmplitudes {
    /// Electric amplitude, V/m.
    pub e_p: f64,
    /// Magnetic amplitude, T.
    pub b_p: f64,
}

impl ProbeFieldAmplitudes {
    /// E_p = ħΩ_p/d43 and B_p = E_p/c, with Ω_p in rad/s.
    pub fn new(drive: &DriveParameters, atom: &AtomParameters, consts: &PhysicalConstants) -> Self {
        let e_p = consts.hbar * angular(drive, ScaledField::OmegaP) / atom.d43;
        Self {
            e_p,
            b_p: e_p / consts.c,
        }
    }
}

fn probe_si(drive: &DriveParameters) -> Result<f64, ResponseError> {
    let omega_p = angular(drive, ScaledField::OmegaP);
    if omega_p == 0.0 {
        Err(ResponseError::ProbeZero)
    } else {
        Ok(omega_p)
    }
}

/// Electric polarizability 2 d43² ρ34 / (ε₀ ħ Ω_p), m³.
pub fn electric_polarizability(
    rho34: Complex64,
    drive: &DriveParameters,
    atom: &AtomParameters,
    consts: &PhysicalConstants,
) -> Result<Complex64, ResponseError> {
    let omega_p = probe_si(drive)?;
    Ok(rho34 * (2.0 * atom.d43 * atom.d43 / (consts.epsilon0 * consts.hbar * omega_p)))
}

/// Magnetic polarizability 2 μ₀ μ42 ρ24 / B_p with B_p = ħΩ_p/(d43 c), m³.
pub fn magnetic_polarizability(
    rho24: Complex64,
    drive: &DriveParameters,
    atom: &AtomParameters,
    consts: &PhysicalConstants,
) -> Result<Complex64, ResponseError> {
    let omega_p = probe_si(drive)?;
    Ok(rho24 * (2.0 * consts.mu0 * atom.mu42 * consts.c * atom.d43 / (consts.hbar * omega_p)))
}

fn is_pole(denominator: Complex64, scale: f64) -> bool {
    denominator.norm() < POLE_TOLERANCE * scale.max(1.0)
}

/// Local-field-corrected electric susceptibility Nγ_e / (1 − Nγ_e/3).
///
/// `None` at the Clausius-Mossotti pole.
pub fn susceptibility_e(gamma_e: Complex64, density_n: f64) -> Option<Complex64> {
    let x = gamma_e * density_n;
    let third = x / 3.0;
    let den = 1.0 - third;
    (!is_pole(den, third.norm())).then(|| x / den)
}

/// Relative permeability (1 + 2Nγ_m/3) / (1 − Nγ_m/3), the inverse of the
/// magnetic Clausius-Mossotti relation.
///
/// `None` at the pole.
pub fn permeability(gamma_m: Complex64, density_n: f64) -> Option<Complex64> {
    let third = gamma_m * density_n / 3.0;
    let den = 1.0 - third;
    (!is_pole(den, third.norm())).then(|| (1.0 + 2.0 * third) / den)
}

/// Refractive index ±√(ε_r μ_r) on the requested branch.
pub fn refractive_index(eps_r: Complex64, mu_r: Complex64, mode: BranchMode) -> Complex64 {
    let root = (eps_r * mu_r).sqrt();
    match mode {
        BranchMode::Literal => -root,
        BranchMode::Passive => {
            if root.im > 0.0 {
                root
            } else if root.im < 0.0 {
                -root
            } else {
                Complex64::new(-root.re.abs(), 0.0)
            }
        }
    }
}

/// Figure of merit −Re(n)/|Im(n)|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FigureOfMerit {
    Finite(f64),
    /// |Im n| below [`LOSSLESS_THRESHOLD`] with Re n < 0.
    Lossless,
}

impl FigureOfMerit {
    pub fn finite(self) -> Option<f64> {
        match self {
            FigureOfMerit::Finite(v) => Some(v),
            FigureOfMerit::Lossless => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn is_lossless(self) -> bool {
        self == FigureOfMerit::Lossless
    }
}

pub fn figure_of_merit(n: Complex64) -> FigureOfMerit {
    if n.im.abs() >= LOSSLESS_THRESHOLD {
        FigureOfMerit::Finite(-n.re / n.im.abs())
    } else if n.re < 0.0 {
        FigureOfMerit::Lossless
    } else {
        FigureOfMerit::Finite(0.0)
    }
}

/// Diagnostic flags attached to a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleFlags {
    pub em_pole: bool,
    pub mm_pole: bool,
    pub positivity_warning: bool,
    /// The stationary state could not be determined.
    pub singular: bool,
}

impl SampleFlags {
    pub const NAMES: [&'static str; 4] = ["em_pole", "mm_pole", "positivity_warning", "singular"];

    fn bits(&self) -> [bool; 4] {
        [
            self.em_pole,
            self.mm_pole,
            self.positivity_warning,
            self.singular,
        ]
    }

    pub fn names(&self) -> Vec<&'static str> {
        Self::NAMES
            .iter()
            .zip(self.bits())
            .filter_map(|(n, b)| b.then_some(*n))
            .collect()
    }

    /// A pole or singular sample: its ε/μ/n values are missing and it
    /// interrupts bands.
    pub fn is_flagged(&self) -> bool {
        self.em_pole || self.mm_pole || self.singular
    }

    pub fn set(&mut self, name: &str) -> bool {
        match name {
            "em_pole" => self.em_pole = true,
            "mm_pole" => self.mm_pole = true,
            "positivity_warning" => self.positivity_warning = true,
            "singular" => self.singular = true,
            _ => return false,
        }
        true
    }
}

impl fmt::Display for SampleFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join("|"))
    }
}

impl FromStr for SampleFlags {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut flags = SampleFlags::default();
        for name in s.split('|').filter(|n| !n.is_empty()) {
            if !flags.set(name) {
                return Err(format!("unknown flag `{name}`"));
            }
        }
        Ok(flags)
    }
}

/// Response of the medium at one probe detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseSample {
    /// Probe detuning in units of γ.
    pub delta_p: f64,
    pub rho: Option<DensityMatrix>,
    pub gamma_e: Option<Complex64>,
    pub gamma_m: Option<Complex64>,
    pub chi_e: Option<Complex64>,
    pub eps_r: Option<Complex64>,
    pub mu_r: Option<Complex64>,
    pub n: Option<Complex64>,
    pub fom: Option<FigureOfMerit>,
    pub flags: SampleFlags,
    pub variant: EquationVariant,
    pub mode: BranchMode,
}

impl ResponseSample {
    /// Placeholder for a detuning where the stationary state is not unique.
    pub fn singular(delta_p: f64, variant: EquationVariant, mode: BranchMode) -> Self {
        Self {
            delta_p,
            rho: None,
            gamma_e: None,
            gamma_m: None,
            chi_e: None,
            eps_r: None,
            mu_r: None,
            n: None,
            fom: None,
            flags: SampleFlags {
                singular: true,
                ..Default::default()
            },
            variant,
            mode,
        }
    }

    /// Builds the optical quantities from a known stationary state.
    pub fn from_steady_state(
        rho: DensityMatrix,
        drive: &DriveParameters,
        atom: &AtomParameters,
        consts: &PhysicalConstants,
        variant: EquationVariant,
        mode: BranchMode,
    ) -> Result<Self, ResponseError> {
        let gamma_e = electric_polarizability(rho[(3, 4)], drive, atom, consts)?;
        let gamma_m = magnetic_polarizability(rho[(2, 4)], drive, atom, consts)?;
        let chi_e = susceptibility_e(gamma_e, atom.density_n);
        let eps_r = chi_e.map(|chi| 1.0 + chi);
        let mu_r = permeability(gamma_m, atom.density_n);
        let n = eps_r.zip(mu_r).map(|(e, m)| refractive_index(e, m, mode));
        let flags = SampleFlags {
            em_pole: chi_e.is_none(),
            mm_pole: mu_r.is_none(),
            positivity_warning: rho.min_eigenvalue() < POSITIVITY_TOLERANCE,
            singular: false,
        };
        Ok(Self {
            delta_p: drive.delta_p,
            rho: Some(rho),
            gamma_e: Some(gamma_e),
            gamma_m: Some(gamma_m),
            chi_e,
            eps_r,
            mu_r,
            n,
            fom: n.map(figure_of_merit),
            flags,
            variant,
            mode,
        })
    }
}

/// Solves for the stationary state at `drive` and evaluates the full optical
/// response.
pub fn sample_response(
    drive: &DriveParameters,
    atom: &AtomParameters,
    consts: &PhysicalConstants,
    variant: EquationVariant,
    mode: BranchMode,
) -> Result<ResponseSample, ResponseError> {
    probe_si(drive)?;
    let rho = dynamics::solve_steady(drive, variant)?;
    ResponseSample::from_steady_state(rho, drive, atom, consts, variant, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    // Reference values evaluated in 40-digit arithmetic with the pinned
    // constants.
    const GAMMA_E_AT_1E_3: f64 = 1.3387057300663524e-19;
    const GAMMA_M_AT_1E_3: f64 = 1.2503236635500514e-21;

    #[test]
    fn electric_polarizability_matches_reference() {
        let d = DriveParameters::default();
        let a = AtomParameters::default();
        let k = PhysicalConstants::default();
        let g = electric_polarizability(c(0.001, 0.0), &d, &a, &k).unwrap();
        assert!((g.re - GAMMA_E_AT_1E_3).abs() <= 1e-14 * GAMMA_E_AT_1E_3);
        assert_eq!(g.im, 0.0);
        assert_eq!(
            electric_polarizability(c(0.0, 0.0), &d, &a, &k).unwrap(),
            c(0.0, 0.0)
        );
        let one = electric_polarizability(c(3e-4, -2e-4), &d, &a, &k).unwrap();
        let two = electric_polarizability(c(6e-4, -4e-4), &d, &a, &k).unwrap();
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn magnetic_polarizability_matches_reference() {
        let d = DriveParameters::default();
        let a = AtomParameters::default();
        let k = PhysicalConstants::default();
        let g = magnetic_polarizability(c(0.001, 0.0), &d, &a, &k).unwrap();
        assert!((g.re - GAMMA_M_AT_1E_3).abs() <= 1e-14 * GAMMA_M_AT_1E_3);
        assert_eq!(
            magnetic_polarizability(c(0.0, 0.0), &d, &a, &k).unwrap(),
            c(0.0, 0.0)
        );
        let z = c(3e-4, -7e-4);
        assert_eq!(
            magnetic_polarizability(z.conj(), &d, &a, &k).unwrap(),
            magnetic_polarizability(z, &d, &a, &k).unwrap().conj()
        );
    }

    #[test]
    fn magnetic_polarizability_agrees_with_field_route() {
        let d = DriveParameters::default();
        let a = AtomParameters::default();
        let k = PhysicalConstants::default();
        let fields = ProbeFieldAmplitudes::new(&d, &a, &k);
        assert!((fields.e_p / fields.b_p / k.c - 1.0).abs() <= 1e-12);
        let z = c(0.002, 0.0005);
        let via_field = z * (2.0 * k.mu0 * a.mu42 / fields.b_p);
        let closed = magnetic_polarizability(z, &d, &a, &k).unwrap();
        assert!(close(via_field, closed, 1e-13 * closed.norm()));
    }

    #[test]
    fn zero_probe_is_rejected() {
        let d = DriveParameters {
            omega_p: 0.0,
            ..Default::default()
        };
        let (a, k) = (AtomParameters::default(), PhysicalConstants::default());
        assert_eq!(
            electric_polarizability(c(1.0, 0.0), &d, &a, &k),
            Err(ResponseError::ProbeZero)
        );
        assert_eq!(
            magnetic_polarizability(c(1.0, 0.0), &d, &a, &k),
            Err(ResponseError::ProbeZero)
        );
        assert_eq!(
            sample_response(&d, &a, &k, EquationVariant::Corrected, BranchMode::Literal),
            Err(ResponseError::ProbeZero)
        );
    }

    #[test]
    fn clausius_mossotti_limits() {
        assert_eq!(susceptibility_e(c(0.0, 0.0), 5e22), Some(c(0.0, 0.0)));
        assert_eq!(susceptibility_e(c(3.0, 0.0), 1.0), None);
        let chi = susceptibility_e(c(3e6, 0.0), 1.0).unwrap();
        assert!((chi.re + 3.000003000003).abs() < 1e-12);

        assert_eq!(permeability(c(0.0, 0.0), 5e22), Some(c(1.0, 0.0)));
        assert_eq!(permeability(c(1.5, 0.0), 1.0), Some(c(4.0, 0.0)));
        assert_eq!(permeability(c(3.0, 0.0), 1.0), None);
        let mu = permeability(c(1e12, 0.0), 1.0).unwrap();
        assert!((mu.re + 2.0).abs() < 1e-10);
    }

    #[test]
    fn literal_branch_examples() {
        let l = BranchMode::Literal;
        assert_eq!(refractive_index(c(1.0, 0.0), c(1.0, 0.0), l), c(-1.0, 0.0));
        assert_eq!(
            refractive_index(c(-2.0, 0.0), c(-2.0, 0.0), l),
            c(-2.0, 0.0)
        );
        let z = c(-1.0, 0.01);
        assert!(close(refractive_index(z, z, l), c(-1.0, 0.01), 1e-15));
    }

    #[test]
    fn passive_branch_examples() {
        let p = BranchMode::Passive;
        // positive real product: tie resolves to the negative root
        assert_eq!(refractive_index(c(1.0, 0.0), c(1.0, 0.0), p), c(-1.0, 0.0));
        // negative real product: root on the imaginary axis, Im > 0
        assert_eq!(refractive_index(c(-4.0, 0.0), c(1.0, 0.0), p), c(0.0, 2.0));
        let z = c(-1.0, 0.01);
        assert!(close(refractive_index(z, z, p), c(-1.0, 0.01), 1e-15));
        let n = refractive_index(c(2.0, 0.1), c(1.0, 0.0), p);
        assert!(n.im > 0.0 && n.re > 0.0);
    }

    #[test]
    fn figure_of_merit_examples() {
        assert_eq!(
            figure_of_merit(c(-2.0, 0.02))
                .finite()
                .map(|v| (v - 100.0).abs() < 1e-12),
            Some(true)
        );
        assert_eq!(
            figure_of_merit(c(-1.0, -0.01))
                .finite()
                .map(|v| (v - 100.0).abs() < 1e-12),
            Some(true)
        );
        assert_eq!(figure_of_merit(c(-2.0, 0.0)), FigureOfMerit::Lossless);
        assert_eq!(figure_of_merit(c(1.0, 0.0)), FigureOfMerit::Finite(0.0));
        assert_eq!(figure_of_merit(c(0.0, 0.0)), FigureOfMerit::Finite(0.0));
        assert!(figure_of_merit(c(-2.0, 0.0)).as_f64().is_infinite());
    }

    #[test]
    fn flags_round_trip_through_text() {
        let f = SampleFlags {
            em_pole: true,
            positivity_warning: true,
            ..Default::default()
        };
        assert_eq!(f.to_string(), "em_pole|positivity_warning");
        assert_eq!(f.to_string().parse::<SampleFlags>().unwrap(), f);
        assert_eq!("".parse::<SampleFlags>().unwrap(), SampleFlags::default());
        assert!("bogus".parse::<SampleFlags>().is_err());
    }

    #[test]
    fn pole_sample_carries_no_index() {
        // ρ34 tuned so that Nγ_e = 3 exactly hits the electric pole
        let d = DriveParameters::default();
        let a = AtomParameters::default();
        let k = PhysicalConstants::default();
        let unit = electric_polarizability(c(1.0, 0.0), &d, &a, &k).unwrap().re * a.density_n;
        let rho = DensityMatrix::from_parts(
            [1.0, 0.0, 0.0, 0.0],
            [
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(3.0 / unit, 0.0),
            ],
        );
        let s = ResponseSample::from_steady_state(
            rho,
            &d,
            &a,
            &k,
            EquationVariant::Corrected,
            BranchMode::Literal,
        )
        .unwrap();
        assert!(s.flags.em_pole && !s.flags.mm_pole);
        assert!(s.eps_r.is_none() && s.n.is_none() && s.fom.is_none());
        assert_eq!(s.mu_r, Some(c(1.0, 0.0)));
    }

    proptest::proptest! {
        #[test]
        fn literal_branch_has_nonpositive_real_part(a in -1e3f64..1e3, b in -1e3f64..1e3, x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let n = refractive_index(c(a, b), c(x, y), BranchMode::Literal);
            proptest::prop_assert!(n.re <= 0.0);
        }

        #[test]
        fn passive_branch_has_nonnegative_imaginary_part(a in -1e3f64..1e3, b in -1e3f64..1e3, x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let (e, m) = (c(a, b), c(x, y));
            let n = refractive_index(e, m, BranchMode::Passive);
            proptest::prop_assert!(n.im >= 0.0);
            proptest::prop_assert!(close(n * n, e * m, 1e-9 * (e * m).norm().max(1.0)));
        }

        #[test]
        fn literal_branch_commutes_with_conjugation(a in -1e3f64..1e3, b in -1e3f64..1e3, x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let (e, m) = (c(a, b), c(x, y));
            let p = e * m;
            proptest::prop_assume!(!(p.re < 0.0 && p.im.abs() <= 1e-9 * p.norm()));
            let n = refractive_index(e, m, BranchMode::Literal);
            let nc = refractive_index(e.conj(), m.conj(), BranchMode::Literal);
            proptest::prop_assert!(close(nc, n.conj(), 1e-12 * n.norm().max(1.0)));
        }

        #[test]
        fn fom_positive_iff_negative_index_with_loss(re in -10.0f64..10.0, im in -1.0f64..1.0) {
            let fom = figure_of_merit(c(re, im));
            let positive = match fom {
                FigureOfMerit::Finite(v) => v > 0.0,
                FigureOfMerit::Lossless => true,
            };
            let lossy = im.abs() >= LOSSLESS_THRESHOLD;
            proptest::prop_assert_eq!(positive && lossy, re < 0.0 && lossy);
        }

        #[test]
        fn saturated_polarizabilities_give_index_near_minus_two(x in 1e3f64..1e9, y in 1e3f64..1e9) {
            let eps = 1.0 + susceptibility_e(c(x, 0.0), 1.0).unwrap();
            let mu = permeability(c(y, 0.0), 1.0).unwrap();
            proptest::prop_assert!((eps + 2.0).norm() <= 0.01);
            proptest::prop_assert!((mu + 2.0).norm() <= 0.01);
            proptest::prop_assert!((refractive_index(eps, mu, BranchMode::Literal) + 2.0).norm() <= 0.02);
        }
    }
}
