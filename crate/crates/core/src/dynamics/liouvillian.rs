use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use super::{Couplings, DynamicsError, EquationVariant, State};
use crate::density::{DensityMatrix, COHERENCE_PAIRS};
use crate::params::DriveParameters;

/// Real unknowns: four populations, then (Re, Im) of each coherence in
/// [`COHERENCE_PAIRS`] order.
pub const REAL_UNKNOWNS: usize = 16;

/// Row of the ρ44 closure equation; replaced by the trace condition when
/// solving for the stationary state.
pub const CONSTRAINT_ROW: usize = 3;

/// Smallest admissible ratio of extreme singular values of the constrained
/// system.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

type Mat = SMatrix<f64, REAL_UNKNOWNS, REAL_UNKNOWNS>;
type Vector = SVector<f64, REAL_UNKNOWNS>;

/// Linear generator of the equations of motion on the real unknown vector.
///
/// The coherent couplings mix a coherence with the conjugate of another
/// (ρ31 = ρ13*, …), so the map is only real-linear; it is therefore stored
/// as a real 16×16 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianSystem {
    pub generator: Mat,
    pub variant: EquationVariant,
}

#[derive(Clone, Copy)]
enum Unknown {
    Pop(usize),
    Coh(usize),
}

/// ρ_ij (1-based) as a stored unknown, plus whether it enters conjugated.
fn element(i: usize, j: usize) -> (Unknown, bool) {
    if i == j {
        return (Unknown::Pop(i - 1), false);
    }
    let (a, b, conj) = if i < j { (i, j, false) } else { (j, i, true) };
    let k = COHERENCE_PAIRS
        .iter()
        .position(|&p| p == (a, b))
        .expect("level pair in range");
    (Unknown::Coh(k), conj)
}

struct Assembler {
    m: Mat,
}

impl Assembler {
    /// d(ρ_target)/dt += coef · ρ_ij.
    fn add(&mut self, target: (usize, usize), coef: Complex64, i: usize, j: usize) {
        let (row, _) = element(target.0, target.1);
        let (col, conj) = element(i, j);
        let (cr, ci) = (coef.re, coef.im);
        // (re, im) parts of coef·z expressed on the columns of z's real unknowns
        let contrib: [(usize, f64, f64); 2] = match col {
            Unknown::Pop(p) => [(p, cr, ci), (p, 0.0, 0.0)],
            Unknown::Coh(k) => {
                let (a, b) = (4 + 2 * k, 5 + 2 * k);
                if conj {
                    [(a, cr, ci), (b, ci, -cr)]
                } else {
                    [(a, cr, ci), (b, -ci, cr)]
                }
            }
        };
        match row {
            Unknown::Pop(p) => {
                for (c, re, _) in contrib {
                    self.m[(p, c)] += re;
                }
            }
            Unknown::Coh(k) => {
                for (c, re, im) in contrib {
                    self.m[(4 + 2 * k, c)] += re;
                    self.m[(5 + 2 * k, c)] += im;
                }
            }
        }
    }

    /// d(ρ_target)/dt += coef · ρ_ij + H.c.
    fn add_with_hc(&mut self, target: (usize, usize), coef: Complex64, i: usize, j: usize) {
        self.add(target, coef, i, j);
        self.add(target, coef.conj(), j, i);
    }
}

/// Assembles the generator directly from the component equations.
pub fn build_liouvillian(drive: &DriveParameters, variant: EquationVariant) -> LiouvillianSystem {
    let c = Couplings::new(drive, variant);
    let i = Complex64::i();
    let re = |x: f64| Complex64::new(x, 0.0);
    let (o1, o2, op) = (c.o1, c.o2, re(c.op));
    let (o1c, o2c) = (o1.conj(), o2.conj());
    let half = 0.5 * c.g_total;
    let mut a = Assembler { m: Mat::zeros() };

    // ρ11
    a.add((1, 1), re(c.g1), 3, 3);
    a.add_with_hc((1, 1), -i * o1c, 3, 1);

    // ρ12
    a.add((1, 2), i * (c.d1 - c.d2), 1, 2);
    a.add((1, 2), i * o2, 1, 3);
    a.add((1, 2), -i * o1c, 3, 2);

    // ρ13
    a.add((1, 3), re(-half) + i * c.d1, 1, 3);
    a.add((1, 3), i * o1c, 1, 1);
    a.add((1, 3), -i * o1c, 3, 3);
    a.add((1, 3), i * o2c, 1, 2);
    a.add((1, 3), i * op, 1, 4);

    // ρ14
    a.add((1, 4), i * (c.d1 - c.dp), 1, 4);
    a.add((1, 4), i * op, 1, 3);
    a.add((1, 4), -i * o1c, 3, 4);

    // ρ22
    a.add((2, 2), re(c.g2), 3, 3);
    a.add_with_hc((2, 2), -i * o2c, 3, 2);

    // ρ23
    a.add((2, 3), re(-half) + i * c.d2, 2, 3);
    a.add((2, 3), i * o1, 2, 2);
    a.add((2, 3), -i * o1, 3, 3);
    a.add((2, 3), i * o1c, 2, 1);
    a.add((2, 3), i * op, 2, 4);

    // ρ24
    a.add((2, 4), i * (c.d2 - c.dp), 2, 4);
    a.add((2, 4), i * op, 2, 3);
    match variant {
        EquationVariant::AsPrinted => a.add((2, 4), -i * o2c, 2, 4),
        EquationVariant::Corrected => a.add((2, 4), -i * o2c, 3, 4),
    }

    // ρ33
    a.add((3, 3), re(-c.g_total), 3, 3);
    a.add_with_hc((3, 3), i * o1c, 3, 1);
    a.add_with_hc((3, 3), i * o2c, 3, 2);
    a.add_with_hc((3, 3), i * op, 3, 4);

    // ρ34
    a.add((3, 4), re(-half) - i * c.dp, 3, 4);
    a.add((3, 4), -i * op, 4, 4);
    a.add((3, 4), i * op, 3, 3);
    a.add((3, 4), -i * o1, 1, 4);
    a.add((3, 4), -i * o2, 2, 4);

    // ρ44 by trace closure
    for col in 0..REAL_UNKNOWNS {
        a.m[(CONSTRAINT_ROW, col)] = -(a.m[(0, col)] + a.m[(1, col)] + a.m[(2, col)]);
    }

    LiouvillianSystem {
        generator: a.m,
        variant,
    }
}

fn to_real(rho: &DensityMatrix) -> Vector {
    let s = State::from_matrix(rho);
    let mut v = Vector::zeros();
    for (k, p) in s.pops.iter().enumerate() {
        v[k] = *p;
    }
    for (k, z) in s.coh.iter().enumerate() {
        v[4 + 2 * k] = z.re;
        v[5 + 2 * k] = z.im;
    }
    v
}

fn from_real(v: &Vector) -> DensityMatrix {
    DensityMatrix::from_parts(
        std::array::from_fn(|k| v[k]),
        std::array::from_fn(|k| Complex64::new(v[4 + 2 * k], v[5 + 2 * k])),
    )
}

impl LiouvillianSystem {
    /// dρ/dt computed through the assembled matrix.
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        from_real(&(self.generator * to_real(rho)))
    }

    /// Generator with the closure row replaced by ρ11+ρ22+ρ33+ρ44 = 1,
    /// together with the right-hand side of the stationarity equations.
    pub fn constrained(&self) -> (Mat, Vector) {
        let mut m = self.generator;
        let mut b = Vector::zeros();
        for col in 0..REAL_UNKNOWNS {
            m[(CONSTRAINT_ROW, col)] = if col < 4 { 1.0 } else { 0.0 };
        }
        b[CONSTRAINT_ROW] = 1.0;
        (m, b)
    }

    /// Ratio of largest to smallest singular value of the constrained system.
    pub fn condition_estimate(&self) -> f64 {
        let (m, _) = self.constrained();
        let sv = m.singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Stationary density matrix of this generator.
    pub fn solve(&self) -> Result<DensityMatrix, DynamicsError> {
        let condition = self.condition_estimate();
        if !(condition.is_finite() && condition * SINGULAR_TOLERANCE < 1.0) {
            return Err(DynamicsError::SingularSteadySystem { condition });
        }
        let (m, b) = self.constrained();
        let x = m
            .lu()
            .solve(&b)
            .ok_or(DynamicsError::SingularSteadySystem { condition })?;
        Ok(from_real(&x))
    }
}

/// Stationary solution of the equations of motion with unit trace.
pub fn solve_steady(
    drive: &DriveParameters,
    variant: EquationVariant,
) -> Result<DensityMatrix, DynamicsError> {
    build_liouvillian(drive, variant).solve()
}
