//! N-qubit Pauli strings and real-weighted Pauli sums.
//!
//! A [`PauliString`] is stored as an `(x, z)` bitmask pair, with the operator on
//! each qubit equal to `i^{x·z} X^x Z^z`. Qubit `j` is the `j`-th tensor factor from
//! the left (the `j`-th character of the text form) and maps to bit `n - 1 - j` of
//! a computational-basis index.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{check_dense_cap, check_hermitian, qubits_of_dimension, CMatrix, I, ONE, ZERO};

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

impl Axis {
    fn bits(self) -> (bool, bool) {
        match self {
            Axis::I => (false, false),
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Axis {
        match (x, z) {
            (false, false) => Axis::I,
            (true, false) => Axis::X,
            (true, true) => Axis::Y,
            (false, true) => Axis::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::I => 'I',
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Axis> {
        match c {
            'I' => Ok(Axis::I),
            'X' => Ok(Axis::X),
            'Y' => Ok(Axis::Y),
            'Z' => Ok(Axis::Z),
            other => Err(Error::InvalidPauliChar(other)),
        }
    }
}

/// Phase picked up by a product of Pauli strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    fn from_power(k: u32) -> Phase {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => ONE,
            Phase::PlusI => I,
            Phase::MinusOne => -ONE,
            Phase::MinusI => -I,
        }
    }
}

/// Tensor product of single-qubit Pauli operators.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    qubits: u8,
    x: u64,
    z: u64,
}

fn check_qubits(qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > 64 {
        Err(Error::InvalidQubitCount(qubits))
    } else {
        Ok(())
    }
}

impl PauliString {
    /// The identity on `qubits` qubits.
    pub fn identity(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        Ok(PauliString { qubits: qubits as u8, x: 0, z: 0 })
    }

    pub fn from_axes(axes: &[Axis]) -> Result<Self> {
        check_qubits(axes.len())?;
        let n = axes.len();
        let mut p = PauliString { qubits: n as u8, x: 0, z: 0 };
        for (j, a) in axes.iter().enumerate() {
            let (xb, zb) = a.bits();
            let bit = 1u64 << (n - 1 - j);
            if xb {
                p.x |= bit;
            }
            if zb {
                p.z |= bit;
            }
        }
        Ok(p)
    }

    /// Single non-identity axis on `qubit` of an `n`-qubit register.
    pub fn single(qubits: usize, qubit: usize, axis: Axis) -> Result<Self> {
        check_qubits(qubits)?;
        if qubit >= qubits {
            return Err(Error::QubitOutOfRange { index: qubit, qubits });
        }
        let mut axes = alloc::vec![Axis::I; qubits];
        axes[qubit] = axis;
        Self::from_axes(&axes)
    }

    pub fn qubits(&self) -> usize {
        self.qubits as usize
    }

    fn bit(&self, qubit: usize) -> u64 {
        1u64 << (self.qubits() - 1 - qubit)
    }

    pub fn axis(&self, qubit: usize) -> Axis {
        let b = self.bit(qubit);
        Axis::from_bits(self.x & b != 0, self.z & b != 0)
    }

    pub fn axes(&self) -> Vec<Axis> {
        (0..self.qubits()).map(|j| self.axis(j)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `phase · result = self · other` as matrices.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.qubits != other.qubits {
            return Err(Error::QubitMismatch { left: self.qubits(), right: other.qubits() });
        }
        let result = PauliString { qubits: self.qubits, x: self.x ^ other.x, z: self.z ^ other.z };
        // X^a Z^b X^c Z^d = (-1)^{b·c} X^{a^c} Z^{b^d}, plus the i^{x·z} prefactors.
        let sign = 2 * (self.z & other.x).count_ones();
        let power = self.y_count() + other.y_count() + sign + 4 * 64 - result.y_count();
        Ok((Phase::from_power(power), result))
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        anti % 2 == 0
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &PauliString) -> Result<PauliString> {
        let n = self.qubits() + other.qubits();
        check_qubits(n)?;
        let shift = other.qubits();
        Ok(PauliString { qubits: n as u8, x: (self.x << shift) | other.x, z: (self.z << shift) | other.z })
    }

    /// Places `self` on qubits `offset..offset + self.qubits()` of a `total`-qubit register.
    pub fn embed(&self, total: usize, offset: usize) -> Result<PauliString> {
        check_qubits(total)?;
        if offset + self.qubits() > total {
            return Err(Error::QubitOutOfRange { index: offset + self.qubits() - 1, qubits: total });
        }
        let shift = total - offset - self.qubits();
        Ok(PauliString { qubits: total as u8, x: self.x << shift, z: self.z << shift })
    }

    /// Action on a basis state: `σ|k⟩ = amplitude · |index⟩`.
    #[inline]
    pub fn apply_to_basis(&self, k: usize) -> (Complex64, usize) {
        let k64 = k as u64;
        let mut power = self.y_count();
        if (k64 & self.z).count_ones() % 2 == 1 {
            power += 2;
        }
        (Phase::from_power(power).to_complex(), (k64 ^ self.x) as usize)
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_dense_cap(self.qubits())?;
        let dim = 1usize << self.qubits();
        let mut m = CMatrix::zeros(dim, dim);
        for k in 0..dim {
            let (amp, row) = self.apply_to_basis(k);
            m[(row, k)] = amp;
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.qubits() {
            write!(f, "{}", self.axis(j).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s.chars().map(Axis::from_char).collect::<Result<Vec<_>>>()?;
        PauliString::from_axes(&axes)
    }
}

/// Real linear combination of Pauli strings on a common register.
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliSum {
    pub fn zero(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        Ok(PauliSum { qubits, terms: BTreeMap::new() })
    }

    pub fn from_string(p: PauliString, coefficient: f64) -> Self {
        let mut s = PauliSum { qubits: p.qubits(), terms: BTreeMap::new() };
        s.add_term(p, coefficient).expect("qubit counts agree");
        s
    }

    /// Sums the given terms; repeated strings accumulate.
    pub fn from_terms<I>(qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut s = PauliSum::zero(qubits)?;
        for (p, c) in terms {
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    /// Parses text keys such as `"XZI"`.
    pub fn parse<'a, I>(qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut s = PauliSum::zero(qubits)?;
        for (key, c) in terms {
            let p: PauliString = key.parse()?;
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn add_term(&mut self, p: PauliString, coefficient: f64) -> Result<()> {
        if p.qubits() != self.qubits {
            return Err(Error::QubitMismatch { left: self.qubits, right: p.qubits() });
        }
        let entry = self.terms.entry(p).or_insert(0.0);
        *entry += coefficient;
        if *entry == 0.0 {
            self.terms.remove(&p);
        }
        Ok(())
    }

    pub fn remove_term(&mut self, p: &PauliString) -> f64 {
        self.terms.remove(p).unwrap_or(0.0)
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> + '_ {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Drops terms with `|c| <= tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.abs() > tol);
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        let mut out = PauliSum { qubits: self.qubits, terms: BTreeMap::new() };
        for (p, c) in self.terms() {
            out.add_term(*p, c * factor).expect("same register");
        }
        out
    }

    pub fn plus(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        for (p, c) in other.terms() {
            out.add_term(*p, c)?;
        }
        Ok(out)
    }

    /// `Σ c_ν²`.
    pub fn coefficient_norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    /// Places the sum on qubits `offset..` of a `total`-qubit register.
    pub fn embed(&self, total: usize, offset: usize) -> Result<PauliSum> {
        let mut out = PauliSum::zero(total)?;
        for (p, c) in self.terms() {
            out.add_term(p.embed(total, offset)?, c)?;
        }
        Ok(out)
    }

    /// Dense `Σ_ν x_ν σ_ν`.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_dense_cap(self.qubits)?;
        let dim = 1usize << self.qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (p, c) in self.terms() {
            for k in 0..dim {
                let (amp, row) = p.apply_to_basis(k);
                m[(row, k)] += amp * c;
            }
        }
        Ok(m)
    }

    /// Pauli coefficients `Tr[m σ_ν] / 2^N` of a Hermitian matrix.
    ///
    /// For each x-mask the diagonal of `m σ` is a signed sum over basis states, which a
    /// Walsh–Hadamard transform evaluates for every z-mask at once.
    pub fn decompose(m: &CMatrix) -> Result<PauliSum> {
        let n = qubits_of_dimension(m.nrows(), m.ncols())?;
        check_dense_cap(n)?;
        check_qubits(n)?;
        check_hermitian(m)?;
        let dim = 1usize << n;
        let mut out = PauliSum::zero(n)?;
        let mut buf: Vec<Complex64> = alloc::vec![ZERO; dim];
        for x in 0..dim {
            // (m σ)_{kk} = m[k, k^x] · ⟨k^x|σ|k⟩; the z-dependent sign (-1)^{k·z} is left to the transform.
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = m[(k, k ^ x)];
            }
            walsh_hadamard(&mut buf);
            for (z, &acc) in buf.iter().enumerate() {
                let y_count = (x & z).count_ones();
                let value = acc * Phase::from_power(y_count).to_complex() / dim as f64;
                let p = PauliString { qubits: n as u8, x: x as u64, z: z as u64 };
                if value.re.abs() > 1e-14 {
                    out.terms.insert(p, value.re);
                }
            }
        }
        Ok(out)
    }
}

fn walsh_hadamard(buf: &mut [Complex64]) {
    let mut h = 1;
    while h < buf.len() {
        for i in (0..buf.len()).step_by(2 * h) {
            for j in i..i + h {
                let a = buf[j];
                let b = buf[j + h];
                buf[j] = a + b;
                buf[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter().map(|(p, c)| (alloc::format!("{p}"), c))).finish()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·{p}")?;
        }
        Ok(())
    }
}

/// Text keys and coefficients, for serialization.
pub fn to_text_map(sum: &PauliSum) -> Vec<(String, f64)> {
    sum.terms().map(|(p, c)| (alloc::format!("{p}"), c)).collect()
}
