use super::{derivative, Couplings, DynamicsError, EquationVariant, State};
use crate::density::DensityMatrix;
use crate::params::DriveParameters;

/// Largest accepted step, in 1/γ.
pub const MAX_DT: f64 = 0.01;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_FINAL: f64 = 2000.0;

/// Trace drift above which the final state is renormalized.
const TRACE_DRIFT_LIMIT: f64 = 1e-9;
const POPULATION_RANGE: (f64, f64) = (-0.01, 1.01);

/// Result of a fixed-step integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evolution {
    pub rho: DensityMatrix,
    pub steps: usize,
    /// |tr ρ − 1| of the raw integrated state.
    pub trace_drift: f64,
    /// Whether the final state was rescaled to unit trace.
    pub renormalized: bool,
}

/// Integrates the equations of motion with classical fourth-order
/// Runge-Kutta from `rho0` up to `t_final` (both in 1/γ).
///
/// The number of steps is `t_final / dt` rounded to the nearest integer and
/// the step is then adjusted to land exactly on `t_final`.
pub fn evolve(
    drive: &DriveParameters,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    variant: EquationVariant,
) -> Result<Evolution, DynamicsError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(DynamicsError::InvalidStep { dt, max: MAX_DT });
    }
    if t_final == 0.0 {
        return Ok(Evolution {
            rho: *rho0,
            steps: 0,
            trace_drift: (rho0.trace() - 1.0).norm(),
            renormalized: false,
        });
    }
    if !(t_final.is_finite() && t_final >= dt) {
        return Err(DynamicsError::InvalidDuration { t_final, dt });
    }

    let steps = (t_final / dt).round() as usize;
    let h = t_final / steps as f64;
    let c = Couplings::new(drive, variant);
    let mut s = State::from_matrix(rho0);

    for n in 0..steps {
        let k1 = derivative(&c, &s);
        let k2 = derivative(&c, &s.axpy(0.5 * h, &k1));
        let k3 = derivative(&c, &s.axpy(0.5 * h, &k2));
        let k4 = derivative(&c, &s.axpy(h, &k3));
        let sixth = h / 6.0;
        s = State {
            pops: std::array::from_fn(|i| {
                s.pops[i] + sixth * (k1.pops[i] + 2.0 * (k2.pops[i] + k3.pops[i]) + k4.pops[i])
            }),
            coh: std::array::from_fn(|i| {
                s.coh[i] + (k1.coh[i] + 2.0 * (k2.coh[i] + k3.coh[i]) + k4.coh[i]) * sixth
            }),
        };

        for (level, &p) in s.pops.iter().enumerate() {
            // also rejects NaN
            if !(p >= POPULATION_RANGE.0 && p <= POPULATION_RANGE.1) {
                return Err(DynamicsError::StepTooLarge {
                    time: (n + 1) as f64 * h,
                    level: level + 1,
                    value: p,
                });
            }
        }
    }

    let rho = s.to_matrix().hermitized();
    let trace = rho.trace().re;
    let trace_drift = (trace - 1.0).abs();
    let renormalized = trace_drift > TRACE_DRIFT_LIMIT;
    let rho = if renormalized {
        rho.scaled(1.0 / trace)
    } else {
        rho
    };
    Ok(Evolution {
        rho,
        steps,
        trace_drift,
        renormalized,
    })
}
