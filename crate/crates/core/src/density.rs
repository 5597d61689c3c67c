//! Four-level density matrix.

use std::fmt;
use std::ops::Index;

use nalgebra::Matrix4;
use num_complex::Complex64;

/// Number of atomic levels.
pub const LEVELS: usize = 4;

/// Upper-triangle coherences in storage order (1-based level pairs).
pub const COHERENCE_PAIRS: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

/// A 4×4 complex matrix indexed by 1-based level numbers.
///
/// Constructors that take populations and upper-triangle coherences produce
/// an exactly Hermitian matrix. The type itself does not enforce unit trace,
/// since the same shape is used for time derivatives.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    elems: [[Complex64; LEVELS]; LEVELS],
}

impl DensityMatrix {
    pub fn zeros() -> Self {
        Self {
            elems: [[Complex64::new(0.0, 0.0); LEVELS]; LEVELS],
        }
    }

    /// Diagonal matrix of populations ρ11..ρ44.
    pub fn diagonal(pops: [f64; LEVELS]) -> Self {
        Self::from_parts(pops, [Complex64::new(0.0, 0.0); 6])
    }

    /// Hermitian matrix from populations and the coherences listed in
    /// [`COHERENCE_PAIRS`] order.
    pub fn from_parts(pops: [f64; LEVELS], coherences: [Complex64; 6]) -> Self {
        let mut m = Self::zeros();
        for (i, p) in pops.iter().enumerate() {
            m.elems[i][i] = Complex64::new(*p, 0.0);
        }
        for (&(i, j), z) in COHERENCE_PAIRS.iter().zip(coherences) {
            m.elems[i - 1][j - 1] = z;
            m.elems[j - 1][i - 1] = z.conj();
        }
        m
    }

    /// Builds a matrix from arbitrary (not necessarily Hermitian) entries,
    /// rows first, 0-based.
    pub fn from_rows(elems: [[Complex64; LEVELS]; LEVELS]) -> Self {
        Self { elems }
    }

    /// Maximally mixed state, ρ = I/4.
    pub fn maximally_mixed() -> Self {
        Self::diagonal([0.25; LEVELS])
    }

    /// Element ρ_ij with 1-based level indices.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.elems[i - 1][j - 1]
    }

    pub fn population(&self, level: usize) -> f64 {
        self.get(level, level).re
    }

    pub fn populations(&self) -> [f64; LEVELS] {
        std::array::from_fn(|k| self.elems[k][k].re)
    }

    pub fn coherences(&self) -> [Complex64; 6] {
        COHERENCE_PAIRS.map(|(i, j)| self.get(i, j))
    }

    pub fn trace(&self) -> Complex64 {
        (0..LEVELS).map(|k| self.elems[k][k]).sum()
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..LEVELS {
            for j in i..LEVELS {
                worst = worst.max((self.elems[i][j] - self.elems[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Largest |Im ρ_ii|.
    pub fn diagonal_imag_defect(&self) -> f64 {
        (0..LEVELS)
            .map(|k| self.elems[k][k].im.abs())
            .fold(0.0, f64::max)
    }

    /// Largest elementwise modulus.
    pub fn max_norm(&self) -> f64 {
        self.elems
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest elementwise |a_ij − b_ij|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.elems
            .iter()
            .flatten()
            .zip(other.elems.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Average with the conjugate transpose.
    pub fn hermitized(&self) -> Self {
        let mut out = *self;
        for i in 0..LEVELS {
            for j in 0..LEVELS {
                out.elems[i][j] = 0.5 * (self.elems[i][j] + self.elems[j][i].conj());
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        out.elems.iter_mut().flatten().for_each(|z| *z *= factor);
        out
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; LEVELS] {
        let h = self.hermitized();
        let m = Matrix4::from_fn(|i, j| h.elems[i][j]);
        let values = m.symmetric_eigenvalues();
        let mut ev: [f64; LEVELS] = std::array::from_fn(|k| values[k]);
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Rows of the matrix, 0-based.
    pub fn rows(&self) -> &[[Complex64; LEVELS]; LEVELS] {
        &self.elems
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = Complex64;

    /// 1-based `(row, column)`.
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.elems[i - 1][j - 1]
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.elems.iter()).finish()
    }
}

impl fmt::Display for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.elems {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:>+.12e}{:+.12e}i", z.re, z.im))
                .collect();
            writeln!(f, "{}", cells.join("  "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_parts_is_hermitian() {
        let coh = [
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.3, 0.05),
            Complex64::new(0.0, -0.1),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.01, 0.02),
            Complex64::new(-0.04, -0.03),
        ];
        let rho = DensityMatrix::from_parts([0.4, 0.3, 0.2, 0.1], coh);
        assert_eq!(rho.hermiticity_defect(), 0.0);
        assert_eq!(rho.diagonal_imag_defect(), 0.0);
        assert!((rho.trace() - 1.0).norm() < 1e-15);
        assert_eq!(rho[(3, 1)], coh[1].conj());
        assert_eq!(rho.coherences(), coh);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let rho = DensityMatrix::diagonal([0.1, 0.6, -0.2, 0.5]);
        let ev = rho.eigenvalues();
        let want = [-0.2, 0.1, 0.5, 0.6];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn hermitize_fixes_defect() {
        let mut rows = [[Complex64::new(0.0, 0.0); 4]; 4];
        rows[0][1] = Complex64::new(1.0, 1.0);
        rows[1][0] = Complex64::new(0.0, 0.0);
        let m = DensityMatrix::from_rows(rows);
        assert!(m.hermiticity_defect() > 1.0);
        assert!(m.hermitized().hermiticity_defect() < 1e-16);
    }
}
