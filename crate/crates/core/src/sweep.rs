//! Probe-detuning sweeps, sign-definite band detection and spectrum
//! summaries.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, EquationVariant};
use crate::params::{validate, AtomParameters, DriveParameters, PhysicalConstants, Violation};
use crate::response::{sample_response, BranchMode, ResponseError, ResponseSample};

/// Detuning grid and model choices for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub dp_min: f64,
    pub dp_max: f64,
    pub points: usize,
    pub variant: EquationVariant,
    pub mode: BranchMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dp_min: -2.5,
            dp_max: 2.5,
            points: 1001,
            variant: EquationVariant::Corrected,
            mode: BranchMode::Literal,
        }
    }
}

impl SweepConfig {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.dp_min.is_finite() && self.dp_max.is_finite() && self.dp_min < self.dp_max) {
            out.push(Violation {
                field: "dp_min",
                message: format!(
                    "detuning range must satisfy dp_min < dp_max, got [{}, {}]",
                    self.dp_min, self.dp_max
                ),
            });
        }
        if self.points < 2 {
            out.push(Violation {
                field: "points",
                message: format!("at least 2 grid points are required, got {}", self.points),
            });
        }
        out
    }

    /// Uniform grid including both endpoints exactly.
    pub fn grid(&self) -> Vec<f64> {
        let last = self.points.saturating_sub(1);
        let span = self.dp_max - self.dp_min;
        (0..self.points)
            .map(|i| {
                if i == last {
                    self.dp_max
                } else {
                    self.dp_min + span * (i as f64 / last as f64)
                }
            })
            .collect()
    }
}

/// Echo of everything that determined a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub variant: EquationVariant,
    pub mode: BranchMode,
    pub atom: AtomParameters,
    pub drive: DriveParameters,
    pub constants: PhysicalConstants,
    pub sweep: SweepConfig,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSpectrum {
    pub config: SweepConfig,
    /// Ascending in detuning, one per grid point.
    pub samples: Vec<ResponseSample>,
    pub metadata: SpectrumMetadata,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid parameters: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("every grid point failed; first failure: {0}")]
    AllPointsFailed(ResponseError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

pub(crate) fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Evaluates the response at every grid point of `config`, in parallel on
/// the current rayon pool. The result does not depend on the pool size.
pub fn scan(
    drive: &DriveParameters,
    atom: &AtomParameters,
    consts: &PhysicalConstants,
    config: &SweepConfig,
) -> Result<ResponseSpectrum, SweepError> {
    let mut violations = validate(atom, drive);
    violations.extend(config.violations());
    if !violations.is_empty() {
        return Err(SweepError::Invalid(violations));
    }

    let results: Vec<Result<ResponseSample, ResponseError>> = config
        .grid()
        .into_par_iter()
        .map(|dp| {
            let point = drive.with_probe_detuning(dp);
            match sample_response(&point, atom, consts, config.variant, config.mode) {
                Err(ResponseError::Dynamics(DynamicsError::SingularSteadySystem { .. })) => {
                    Ok(ResponseSample::singular(dp, config.variant, config.mode))
                }
                other => other,
            }
        })
        .collect();

    let mut samples = Vec::with_capacity(results.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(SweepError::AllPointsFailed(e));
    }
    if samples.iter().all(|s| s.flags.singular) {
        return Err(SweepError::AllPointsFailed(ResponseError::Dynamics(
            DynamicsError::SingularSteadySystem {
                condition: f64::INFINITY,
            },
        )));
    }

    Ok(ResponseSpectrum {
        config: *config,
        samples,
        metadata: SpectrumMetadata {
            variant: config.variant,
            mode: config.mode,
            atom: *atom,
            drive: *drive,
            constants: *consts,
            sweep: *config,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        },
    })
}

/// [`scan`] on a dedicated pool of `workers` threads.
pub fn scan_with_workers(
    drive: &DriveParameters,
    atom: &AtomParameters,
    consts: &PhysicalConstants,
    config: &SweepConfig,
    workers: usize,
) -> Result<ResponseSpectrum, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    pool.install(|| scan(drive, atom, consts, config))
}

/// Sign condition defining a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandPredicate {
    ReEpsNeg,
    ReMuNeg,
    /// Re ε_r < 0 and Re μ_r < 0.
    LeftHanded,
}

impl BandPredicate {
    pub const ALL: [BandPredicate; 3] = [
        BandPredicate::ReEpsNeg,
        BandPredicate::ReMuNeg,
        BandPredicate::LeftHanded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BandPredicate::ReEpsNeg => "re_eps_neg",
            BandPredicate::ReMuNeg => "re_mu_neg",
            BandPredicate::LeftHanded => "left_handed",
        }
    }

    /// Real parts the predicate requires to be negative, or `None` when the
    /// sample is flagged.
    fn quantities(self, s: &ResponseSample) -> Option<Vec<f64>> {
        if s.flags.is_flagged() {
            return None;
        }
        let eps = s.eps_r?.re;
        let mu = s.mu_r?.re;
        Some(match self {
            BandPredicate::ReEpsNeg => vec![eps],
            BandPredicate::ReMuNeg => vec![mu],
            BandPredicate::LeftHanded => vec![eps, mu],
        })
    }

    /// `None` for flagged samples.
    pub fn holds(self, s: &ResponseSample) -> Option<bool> {
        self.quantities(s).map(|q| q.iter().all(|v| *v < 0.0))
    }
}

impl fmt::Display for BandPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandPredicate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown band predicate `{s}`"))
    }
}

/// Detuning interval (units of γ) on which a predicate holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub predicate: BandPredicate,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, dp: f64) -> bool {
        self.lo <= dp && dp <= self.hi
    }
}

/// Maximal index runs `[first, last]` of samples satisfying `predicate`.
fn runs(samples: &[ResponseSample], predicate: BandPredicate) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, s) in samples.iter().enumerate() {
        match (predicate.holds(s) == Some(true), start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                out.push((a, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        out.push((a, samples.len() - 1));
    }
    out
}

/// Where the predicate stops holding between an inside and an outside
/// sample. Each failing quantity is interpolated linearly to its zero and the
/// crossing nearest the inside sample wins. A flagged outside sample gives
/// the midpoint.
fn edge(inside: &ResponseSample, outside: &ResponseSample, predicate: BandPredicate) -> f64 {
    let (x0, x1) = (inside.delta_p, outside.delta_p);
    let (Some(yin), Some(yout)) = (predicate.quantities(inside), predicate.quantities(outside))
    else {
        return 0.5 * (x0 + x1);
    };
    yin.iter()
        .zip(&yout)
        .filter(|(_, out)| **out >= 0.0)
        .map(|(y0, y1)| x0 + (0.0 - y0) * (x1 - x0) / (y1 - y0))
        .min_by(|a, b| (a - x0).abs().total_cmp(&(b - x0).abs()))
        .unwrap_or(0.5 * (x0 + x1))
}

fn band_from_run(
    samples: &[ResponseSample],
    (a, b): (usize, usize),
    predicate: BandPredicate,
) -> Band {
    let lo = if a == 0 {
        samples[0].delta_p
    } else {
        edge(&samples[a], &samples[a - 1], predicate)
    };
    let hi = if b + 1 == samples.len() {
        samples[b].delta_p
    } else {
        edge(&samples[b], &samples[b + 1], predicate)
    };
    Band { lo, hi, predicate }
}

/// Bands of `predicate` in ascending order, one per maximal run of
/// satisfying samples. Flagged samples break runs.
pub fn find_bands(spectrum: &ResponseSpectrum, predicate: BandPredicate) -> Vec<Band> {
    find_bands_in(&spectrum.samples, predicate)
}

/// [`find_bands`] on a bare sample sequence (ascending in detuning).
pub fn find_bands_in(samples: &[ResponseSample], predicate: BandPredicate) -> Vec<Band> {
    runs(samples, predicate)
        .into_iter()
        .map(|run| band_from_run(samples, run, predicate))
        .collect()
}

/// Statistics of one left-handed band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    pub band: Band,
    pub samples: usize,
    pub min_re_n: Option<f64>,
    pub mean_re_n: Option<f64>,
    pub max_finite_fom: Option<f64>,
    pub max_fom_detuning: Option<f64>,
    pub lossless_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FlagTally {
    pub em_pole: usize,
    pub mm_pole: usize,
    pub positivity_warning: usize,
    pub singular: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub variant: EquationVariant,
    pub mode: BranchMode,
    pub points: usize,
    pub left_handed: Vec<BandStats>,
    pub re_eps_neg: Vec<Band>,
    pub re_mu_neg: Vec<Band>,
    /// Detunings where Re μ_r changes sign (band edges not on the grid
    /// boundary).
    pub re_mu_sign_changes: Vec<f64>,
    pub min_re_n_in_bands: Option<f64>,
    pub mean_re_n_in_bands: Option<f64>,
    pub max_finite_fom_in_bands: Option<f64>,
    pub max_fom_detuning_in_bands: Option<f64>,
    pub lossless_in_bands: usize,
    pub max_finite_fom: Option<f64>,
    pub max_fom_detuning: Option<f64>,
    pub lossless_count: usize,
    pub flags: FlagTally,
}

#[derive(Default)]
struct Accumulator {
    count: usize,
    n_count: usize,
    min_re_n: Option<f64>,
    sum_re_n: f64,
    max_fom: Option<(f64, f64)>,
    lossless: usize,
}

impl Accumulator {
    fn push(&mut self, s: &ResponseSample) {
        self.count += 1;
        if let Some(n) = s.n {
            self.n_count += 1;
            self.sum_re_n += n.re;
            self.min_re_n = Some(self.min_re_n.map_or(n.re, |m| m.min(n.re)));
        }
        match s.fom {
            Some(f) if f.is_lossless() => self.lossless += 1,
            Some(f) => {
                let v = f.as_f64();
                if self.max_fom.is_none_or(|(best, _)| v > best) {
                    self.max_fom = Some((v, s.delta_p));
                }
            }
            None => {}
        }
    }

    fn mean_re_n(&self) -> Option<f64> {
        (self.n_count > 0).then(|| self.sum_re_n / self.n_count as f64)
    }
}

/// Aggregates bands, index levels, figure-of-merit extremes and flag counts.
pub fn summarize(spectrum: &ResponseSpectrum) -> SummaryReport {
    let samples = &spectrum.samples;
    let mut all = Accumulator::default();
    let mut flags = FlagTally::default();
    for s in samples {
        all.push(s);
        flags.em_pole += s.flags.em_pole as usize;
        flags.mm_pole += s.flags.mm_pole as usize;
        flags.positivity_warning += s.flags.positivity_warning as usize;
        flags.singular += s.flags.singular as usize;
    }

    let mut in_bands = Accumulator::default();
    let left_handed = runs(samples, BandPredicate::LeftHanded)
        .into_iter()
        .map(|run| {
            let mut acc = Accumulator::default();
            for s in &samples[run.0..=run.1] {
                acc.push(s);
                in_bands.push(s);
            }
            BandStats {
                band: band_from_run(samples, run, BandPredicate::LeftHanded),
                samples: acc.count,
                min_re_n: acc.min_re_n,
                mean_re_n: acc.mean_re_n(),
                max_finite_fom: acc.max_fom.map(|m| m.0),
                max_fom_detuning: acc.max_fom.map(|m| m.1),
                lossless_count: acc.lossless,
            }
        })
        .collect();

    let re_mu_neg = find_bands_in(samples, BandPredicate::ReMuNeg);
    let (first, last) = (
        samples.first().map(|s| s.delta_p),
        samples.last().map(|s| s.delta_p),
    );
    let re_mu_sign_changes = re_mu_neg
        .iter()
        .flat_map(|b| [b.lo, b.hi])
        .filter(|x| Some(*x) != first && Some(*x) != last)
        .collect();

    SummaryReport {
        variant: spectrum.metadata.variant,
        mode: spectrum.metadata.mode,
        points: samples.len(),
        left_handed,
        re_eps_neg: find_bands_in(samples, BandPredicate::ReEpsNeg),
        re_mu_neg,
        re_mu_sign_changes,
        min_re_n_in_bands: in_bands.min_re_n,
        mean_re_n_in_bands: in_bands.mean_re_n(),
        max_finite_fom_in_bands: in_bands.max_fom.map(|m| m.0),
        max_fom_detuning_in_bands: in_bands.max_fom.map(|m| m.1),
        lossless_in_bands: in_bands.lossless,
        max_finite_fom: all.max_fom.map(|m| m.0),
        max_fom_detuning: all.max_fom.map(|m| m.1),
        lossless_count: all.lossless,
        flags,
    }
}
