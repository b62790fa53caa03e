//! Dense state-vector and density-matrix simulation.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    check_dense_cap, check_hermitian, kron, qubits_of_dimension, trace, CMatrix, CVector, Spectrum,
    I, ONE, ZERO,
};
use crate::pauli::{PauliString, PauliSum};
use crate::rng::ShotRng;

/// Tolerance on the squared norm of a state, and on trace and eigenvalue floor of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

/// Normalized pure state on `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zeros(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        check_dense_cap(qubits)?;
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = ONE;
        Ok(StateVector { qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        let qubits = qubits_of_dimension(dim, dim)?;
        check_dense_cap(qubits)?;
        let s = StateVector { qubits, amplitudes: CVector::from_vec(amplitudes) };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(s)
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::from_amplitudes(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub(crate) fn from_vector_unchecked(qubits: usize, amplitudes: CVector) -> Self {
        StateVector { qubits, amplitudes }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same(other.qubits)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|self⟩ ⊗ |other⟩`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let qubits = self.qubits + other.qubits;
        check_dense_cap(qubits)?;
        Ok(StateVector { qubits, amplitudes: self.amplitudes.kronecker(&other.amplitudes) })
    }

    pub fn apply_matrix(&self, m: &CMatrix) -> Result<StateVector> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: m.nrows() });
        }
        Ok(StateVector { qubits: self.qubits, amplitudes: m * &self.amplitudes })
    }

    /// `σ|self⟩`.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector> {
        self.check_same(p.qubits())?;
        Ok(StateVector { qubits: self.qubits, amplitudes: pauli_apply(p, &self.amplitudes) })
    }

    /// `e^{i angle σ}|self⟩ = cos(angle)|self⟩ + i sin(angle) σ|self⟩`.
    pub fn rotate_pauli(&self, p: &PauliString, angle: f64) -> Result<StateVector> {
        self.check_same(p.qubits())?;
        Ok(StateVector { qubits: self.qubits, amplitudes: pauli_rotate(p, angle, &self.amplitudes) })
    }

    /// `Σ c_ν σ_ν |self⟩` (not normalized; returned as a raw vector).
    pub fn apply_sum(&self, sum: &PauliSum) -> Result<CVector> {
        self.check_same(sum.qubits())?;
        let mut out = CVector::zeros(self.dim());
        for (p, c) in sum.terms() {
            out += pauli_apply(p, &self.amplitudes) * Complex64::new(c, 0.0);
        }
        Ok(out)
    }

    /// Outer product `|self⟩⟨self|`.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { qubits: self.qubits, entries: &self.amplitudes * self.amplitudes.adjoint() }
    }

    fn check_same(&self, qubits: usize) -> Result<()> {
        if qubits != self.qubits {
            Err(Error::QubitMismatch { left: self.qubits, right: qubits })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn pauli_apply(p: &PauliString, v: &CVector) -> CVector {
    let mut out = CVector::zeros(v.len());
    for (k, &a) in v.iter().enumerate() {
        let (amp, row) = p.apply_to_basis(k);
        out[row] = amp * a;
    }
    out
}

pub(crate) fn pauli_rotate(p: &PauliString, angle: f64, v: &CVector) -> CVector {
    let c = Complex64::new(libm::cos(angle), 0.0);
    let s = I * libm::sin(angle);
    let mut out = v * c;
    for (k, &a) in v.iter().enumerate() {
        let (amp, row) = p.apply_to_basis(k);
        out[row] += s * amp * a;
    }
    out
}

/// `e^{i·scale·generator}|state⟩` by exact eigendecomposition.
pub fn expm_apply(generator: &PauliSum, scale: f64, state: &StateVector) -> Result<StateVector> {
    state.check_same(generator.qubits())?;
    let spectrum = Spectrum::of(&generator.to_matrix()?);
    Ok(StateVector { qubits: state.qubits, amplitudes: spectrum.apply_exp_i(scale, &state.amplitudes) })
}

/// Dense `e^{i·scale·generator}`.
pub fn expm(generator: &PauliSum, scale: f64) -> Result<CMatrix> {
    Ok(Spectrum::of(&generator.to_matrix()?).exp_i(scale))
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        state.density()
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn zeros(qubits: usize) -> Result<Self> {
        Ok(StateVector::zeros(qubits)?.density())
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        check_dense_cap(qubits)?;
        let dim = 1usize << qubits;
        Ok(DensityMatrix { qubits, entries: CMatrix::identity(dim, dim).scale(1.0 / dim as f64) })
    }

    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        let qubits = qubits_of_dimension(entries.nrows(), entries.ncols())?;
        check_dense_cap(qubits)?;
        if check_hermitian(&entries).is_err() {
            return Err(Error::InvalidDensityMatrix("not Hermitian"));
        }
        let tr = trace(&entries);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidDensityMatrix("trace differs from 1"));
        }
        let min_eig = Spectrum::of(&entries).values().iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidDensityMatrix("negative eigenvalue"));
        }
        Ok(DensityMatrix { qubits, entries })
    }

    pub(crate) fn from_matrix_unchecked(qubits: usize, entries: CMatrix) -> Self {
        DensityMatrix { qubits, entries }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        trace(&self.entries).re
    }

    /// `Tr[ρ²]`.
    pub fn purity(&self) -> f64 {
        self.overlap(self)
    }

    /// `Tr[self · other]`, real for Hermitian arguments.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        // Tr[AB] = Σ_{ij} A_ij B_ji = Σ_{ij} A_ij conj(B_ij) for Hermitian B
        self.entries.iter().zip(other.entries.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let qubits = self.qubits + other.qubits;
        check_dense_cap(qubits)?;
        Ok(DensityMatrix { qubits, entries: kron(&self.entries, &other.entries) })
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.nrows() });
        }
        Ok(DensityMatrix { qubits: self.qubits, entries: u * &self.entries * u.adjoint() })
    }

    /// `e^{i·scale·generator} ρ e^{-i·scale·generator}`.
    pub fn evolve(&self, generator: &PauliSum, scale: f64) -> Result<DensityMatrix> {
        if generator.qubits() != self.qubits {
            return Err(Error::QubitMismatch { left: self.qubits, right: generator.qubits() });
        }
        self.conjugate(&expm(generator, scale)?)
    }

    /// Reduced state on the qubits in `keep` (0-based, leftmost qubit is 0), in ascending order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let n = self.qubits;
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&q| q >= n) {
            return Err(Error::QubitOutOfRange { index: bad, qubits: n });
        }
        let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
        let bit = |q: usize| 1usize << (n - 1 - q);
        // scatter a compact index over the given qubit positions
        let spread = |compact: usize, qs: &[usize]| -> usize {
            let m = qs.len();
            qs.iter().enumerate().fold(0usize, |acc, (j, &q)| {
                if compact & (1 << (m - 1 - j)) != 0 {
                    acc | bit(q)
                } else {
                    acc
                }
            })
        };
        let dk = 1usize << kept.len();
        let de = 1usize << traced.len();
        let kept_idx: Vec<usize> = (0..dk).map(|a| spread(a, &kept)).collect();
        let env_idx: Vec<usize> = (0..de).map(|e| spread(e, &traced)).collect();
        let mut out = CMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = ZERO;
                for &e in &env_idx {
                    acc += self.entries[(kept_idx[a] | e, kept_idx[b] | e)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(DensityMatrix { qubits: kept.len(), entries: out })
    }
}

/// Free-function form of [`DensityMatrix::partial_trace`].
pub fn partial_trace(joint: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    joint.partial_trace(keep)
}

pub fn dm_evolve(generator: &PauliSum, scale: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    rho.evolve(generator, scale)
}

pub fn dm_expectation(rho: &DensityMatrix, obs: &ObservableSpec) -> Result<f64> {
    obs.dm_expectation(rho)
}

pub fn expectation(state: &StateVector, obs: &ObservableSpec) -> Result<f64> {
    obs.expectation(state)
}

pub fn sample_eigenvalue(state: &StateVector, obs: &ObservableSpec, rng: &mut ShotRng) -> Result<f64> {
    obs.sample(state, rng)
}

/// A Hermitian observable with its eigendecomposition computed once.
#[derive(Clone, Debug)]
pub struct ObservableSpec {
    operator: PauliSum,
    matrix: CMatrix,
    spectrum: Spectrum,
}

impl ObservableSpec {
    pub fn new(operator: PauliSum) -> Result<Self> {
        let matrix = operator.to_matrix()?;
        let spectrum = Spectrum::of(&matrix);
        Ok(ObservableSpec { operator, matrix, spectrum })
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let operator = PauliSum::decompose(&matrix)?;
        let spectrum = Spectrum::of(&matrix);
        Ok(ObservableSpec { operator, matrix: (&matrix + matrix.adjoint()).scale(0.5), spectrum })
    }

    /// `U† A U` for a unitary `U`.
    pub fn conjugated_by(&self, u: &CMatrix) -> Result<ObservableSpec> {
        if u.nrows() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: self.matrix.nrows(), found: u.nrows() });
        }
        ObservableSpec::from_matrix(u.adjoint() * &self.matrix * u)
    }

    pub fn qubits(&self) -> usize {
        self.operator.qubits()
    }

    pub fn operator(&self) -> &PauliSum {
        &self.operator
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.values()
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        self.spectrum.vectors()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Operator norm, the largest |eigenvalue|.
    pub fn norm_inf(&self) -> f64 {
        self.spectrum.max_abs_value()
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        self.check(state.qubits())?;
        Ok(self.expectation_raw(state.amplitudes()))
    }

    pub(crate) fn expectation_raw(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.matrix * v)).re
    }

    pub fn dm_expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        self.check(rho.qubits())?;
        // Tr[A ρ] = Σ_ij A_ij ρ_ji
        let m = &self.matrix;
        let r = rho.entries();
        let mut acc = ZERO;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                acc += m[(i, j)] * r[(j, i)];
            }
        }
        Ok(acc.re)
    }

    /// Born-rule probabilities `|⟨m|state⟩|²`, in eigenvalue order.
    pub fn probabilities(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.check(state.qubits())?;
        Ok(self.probabilities_raw(state.amplitudes()))
    }

    pub(crate) fn probabilities_raw(&self, v: &CVector) -> Vec<f64> {
        self.spectrum.vectors().ad_mul(v).iter().map(|c| c.norm_sqr()).collect()
    }

    /// One measurement outcome drawn by the Born rule.
    pub fn sample(&self, state: &StateVector, rng: &mut ShotRng) -> Result<f64> {
        self.check(state.qubits())?;
        Ok(self.sample_raw(state.amplitudes(), rng))
    }

    pub(crate) fn sample_raw(&self, v: &CVector, rng: &mut ShotRng) -> f64 {
        let probs = self.probabilities_raw(v);
        self.spectrum.values()[rng.weighted_index(&probs)]
    }

    fn check(&self, qubits: usize) -> Result<()> {
        if qubits != self.qubits() {
            Err(Error::QubitMismatch { left: self.qubits(), right: qubits })
        } else {
            Ok(())
        }
    }
}
