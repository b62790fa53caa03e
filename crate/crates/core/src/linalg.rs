//! Dense complex linear algebra shared by the simulators.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest register simulated with dense matrices.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Tolerance on `max |m - m†|` for an input to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// `e^{i angle}`.
#[inline]
pub(crate) fn cis(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

pub(crate) fn check_dense_cap(qubits: usize) -> Result<()> {
    if qubits > MAX_DENSE_QUBITS {
        Err(Error::TooManyQubits { qubits, cap: MAX_DENSE_QUBITS })
    } else {
        Ok(())
    }
}

/// Qubit count of a square matrix of dimension `2^n`.
pub fn qubits_of_dimension(rows: usize, cols: usize) -> Result<usize> {
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 || !rows.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(rows));
    }
    Ok(rows.trailing_zeros() as usize)
}

pub fn max_hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            let d = (m[(r, c)] - m[(c, r)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let dev = max_hermitian_deviation(m);
    if dev >= HERMITIAN_TOL {
        Err(Error::NotHermitian(dev))
    } else {
        Ok(())
    }
}

/// Largest entry of `|m† m - 1|`.
pub fn max_unitary_deviation(m: &CMatrix) -> f64 {
    let prod = m.adjoint() * m;
    let mut worst = 0.0f64;
    for r in 0..prod.nrows() {
        for c in 0..prod.ncols() {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((prod[(r, c)] - target).norm());
        }
    }
    worst
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Eigendecomposition `m = W diag(λ) W†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl Spectrum {
    /// Decomposes `m`, which is assumed Hermitian; the anti-Hermitian part is discarded.
    pub fn of(m: &CMatrix) -> Self {
        let sym = (m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        Spectrum { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Columns are the eigenvectors, in the order of [`Spectrum::values`].
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Dense `e^{i·scale·m}`.
    pub fn exp_i(&self, scale: f64) -> CMatrix {
        let phases = CVector::from_iterator(self.dim(), self.values.iter().map(|&v| cis(scale * v)));
        let mut scaled = self.vectors.clone();
        for (c, ph) in phases.iter().enumerate() {
            scaled.column_mut(c).scale_mut_complex(*ph);
        }
        scaled * self.vectors.adjoint()
    }

    /// `e^{i·scale·m} v` without forming the exponential.
    pub fn apply_exp_i(&self, scale: f64, v: &CVector) -> CVector {
        let mut coeffs = self.vectors.ad_mul(v);
        for (c, &val) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= cis(scale * val);
        }
        &self.vectors * coeffs
    }

    /// Distinct eigenvalues, clustered with tolerance `tol`, ascending.
    pub fn distinct_values(&self, tol: f64) -> Vec<f64> {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut out: Vec<f64> = Vec::new();
        for v in sorted {
            match out.last() {
                Some(&last) if (v - last).abs() <= tol => {}
                _ => out.push(v),
            }
        }
        out
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Rebuilds `W diag(λ) W†`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (c, &v) in self.values.iter().enumerate() {
            scaled.column_mut(c).scale_mut(v);
        }
        scaled * self.vectors.adjoint()
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, factor: Complex64);
}

impl<S> ScaleComplex for nalgebra::Matrix<Complex64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<Complex64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, factor: Complex64) {
        for x in self.iter_mut() {
            *x *= factor;
        }
    }
}

/// Largest entry of `|a - b|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}
