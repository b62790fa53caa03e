//! Noisy gates as unitaries on register ⊗ environment followed by a partial trace.
//!
//! `E(ρ) = Tr_E[e^{−iτ(H_RE + θ H_R)} (ρ ⊗ σ_E) e^{+iτ(H_RE + θ H_R)}]`.
//!
//! The `θ` gradient is estimated on a pure-state dilation: each environment is
//! purified with as many ancilla qubits as it has, and the noisy gate becomes an
//! ordinary parametric gate on register ⊗ environment.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::circuit::{Gate, ParamExpr, ParametricCircuit};
use crate::error::{Error, Result};
use crate::estimate::{GradientEstimate, ShotExecutor};
use crate::gradients::{estimate_gradient, expected_gradient, Estimator, EstimatorConfig, Pulse};
use crate::linalg::{check_dense_cap, CMatrix, CVector, Spectrum, ZERO};
use crate::pauli::{PauliString, PauliSum};
use crate::quantum::{DensityMatrix, ObservableSpec, StateVector};

/// Largest environment attached to one noisy gate.
pub const MAX_ENV_QUBITS: usize = 2;

const TAU_REASON: &str = "tau only rescales the evolution; a shift along it needs a tuned pulse \
coupling register and environment, which the device cannot apply";

/// One noisy gate: register Hamiltonian `H_R`, coupling `H_RE`, environment state `σ_E`, time `τ`, strength `θ`.
#[derive(Clone, Debug)]
pub struct NoisyGateSpec {
    name: String,
    register_h: PauliSum,
    coupling_h: PauliSum,
    env_qubits: usize,
    env_state: DensityMatrix,
    tau: f64,
    theta: f64,
}

impl NoisyGateSpec {
    /// Spec with `σ_E = |0…0⟩⟨0…0|`.
    pub fn new(
        name: impl Into<String>,
        register_h: PauliSum,
        coupling_h: PauliSum,
        env_qubits: usize,
        tau: f64,
        theta: f64,
    ) -> Result<Self> {
        if env_qubits > MAX_ENV_QUBITS {
            return Err(Error::EnvironmentTooLarge(env_qubits));
        }
        let r = register_h.qubits();
        if coupling_h.qubits() != r + env_qubits {
            return Err(Error::QubitMismatch { left: r + env_qubits, right: coupling_h.qubits() });
        }
        let env_state = if env_qubits == 0 {
            DensityMatrix::from_matrix(CMatrix::identity(1, 1))?
        } else {
            DensityMatrix::zeros(env_qubits)?
        };
        Ok(NoisyGateSpec {
            name: name.into(),
            register_h,
            coupling_h,
            env_qubits,
            env_state,
            tau,
            theta,
        })
    }

    pub fn with_env_state(mut self, env_state: DensityMatrix) -> Result<Self> {
        if env_state.dim() != 1usize << self.env_qubits {
            return Err(Error::DimensionMismatch { expected: 1usize << self.env_qubits, found: env_state.dim() });
        }
        self.env_state = env_state;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn register_qubits(&self) -> usize {
        self.register_h.qubits()
    }

    pub fn env_qubits(&self) -> usize {
        self.env_qubits
    }

    pub fn register_h(&self) -> &PauliSum {
        &self.register_h
    }

    pub fn coupling_h(&self) -> &PauliSum {
        &self.coupling_h
    }

    pub fn env_state(&self) -> &DensityMatrix {
        &self.env_state
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        NoisyGateSpec { tau, ..self.clone() }
    }

    /// `−τ(H_RE + θ H_R ⊗ 1)` on register ⊗ environment.
    pub fn joint_generator(&self, theta: f64) -> Result<PauliSum> {
        let total = self.register_qubits() + self.env_qubits;
        let hr = self.register_h.embed(total, 0)?;
        Ok(self.coupling_h.plus(&hr.scaled(theta))?.scaled(-self.tau))
    }

    pub fn joint_unitary(&self, theta: f64) -> Result<CMatrix> {
        Ok(Spectrum::of(&self.joint_generator(theta)?.to_matrix()?).exp_i(1.0))
    }

    /// Channel applied to an arbitrary (not necessarily Hermitian) register operator.
    pub fn map_operator(&self, theta: f64, m: &CMatrix) -> Result<CMatrix> {
        let dr = 1usize << self.register_qubits();
        if m.nrows() != dr || m.ncols() != dr {
            return Err(Error::DimensionMismatch { expected: dr, found: m.nrows() });
        }
        let u = self.joint_unitary(theta)?;
        let joint = &u * m.kronecker(self.env_state.entries()) * u.adjoint();
        let de = 1usize << self.env_qubits;
        let mut out = CMatrix::zeros(dr, dr);
        for a in 0..dr {
            for b in 0..dr {
                let mut acc = ZERO;
                for e in 0..de {
                    acc += joint[(a * de + e, b * de + e)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(out)
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|) / d`.
    pub fn choi_matrix(&self) -> Result<CMatrix> {
        let dr = 1usize << self.register_qubits();
        let mut choi = CMatrix::zeros(dr * dr, dr * dr);
        for i in 0..dr {
            for j in 0..dr {
                let mut eij = CMatrix::zeros(dr, dr);
                eij[(i, j)] = Complex64::new(1.0, 0.0);
                let image = self.map_operator(self.theta, &eij)?;
                for a in 0..dr {
                    for b in 0..dr {
                        choi[(i * dr + a, j * dr + b)] = image[(a, b)] / dr as f64;
                    }
                }
            }
        }
        Ok(choi)
    }
}

/// `E(ρ_R)` at the gate's own `θ`.
pub fn apply_channel(spec: &NoisyGateSpec, rho: &DensityMatrix) -> Result<DensityMatrix> {
    apply_channel_at(spec, spec.theta, rho)
}

pub fn apply_channel_at(spec: &NoisyGateSpec, theta: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.qubits() != spec.register_qubits() {
        return Err(Error::QubitMismatch { left: spec.register_qubits(), right: rho.qubits() });
    }
    let out = spec.map_operator(theta, rho.entries())?;
    Ok(DensityMatrix::from_matrix_unchecked(rho.qubits(), out))
}

/// Always fails: `∂_τ` is not available with the device operations.
pub fn tau_gradient_unsupported(spec: &NoisyGateSpec) -> Error {
    Error::TauGradientUnsupported { spec: spec.name.clone(), reason: TAU_REASON }
}

/// A value that can only be computed on a classical simulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulatorOnly {
    pub value: f64,
    pub label: &'static str,
}

/// One step of a noisy circuit.
#[derive(Clone, Debug)]
pub enum Block {
    /// Fixed unitary `e^{iX}` on the register.
    Unitary(PauliSum),
    Noisy(NoisyGateSpec),
}

/// Register circuit mixing fixed unitaries and noisy gates; the `θ` of the `k`-th noisy gate is parameter `k`.
#[derive(Clone, Debug)]
pub struct NoisyCircuit {
    register_qubits: usize,
    initial: StateVector,
    blocks: Vec<Block>,
    observable: ObservableSpec,
}

impl NoisyCircuit {
    pub fn new(initial: StateVector, blocks: Vec<Block>, observable: ObservableSpec) -> Result<Self> {
        let r = initial.qubits();
        for b in &blocks {
            let q = match b {
                Block::Unitary(g) => g.qubits(),
                Block::Noisy(s) => s.register_qubits(),
            };
            if q != r {
                return Err(Error::QubitMismatch { left: r, right: q });
            }
        }
        if observable.qubits() != r {
            return Err(Error::QubitMismatch { left: r, right: observable.qubits() });
        }
        let circuit = NoisyCircuit { register_qubits: r, initial, blocks, observable };
        check_dense_cap(circuit.dilated_qubits())?;
        Ok(circuit)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn noisy_specs(&self) -> Vec<&NoisyGateSpec> {
        self.blocks
            .iter()
            .filter_map(|b| match b {
                Block::Noisy(s) => Some(s),
                Block::Unitary(_) => None,
            })
            .collect()
    }

    /// The `θ` values stored in the specs.
    pub fn thetas(&self) -> Vec<f64> {
        self.noisy_specs().iter().map(|s| s.theta()).collect()
    }

    pub fn register_qubits(&self) -> usize {
        self.register_qubits
    }

    /// Register plus each environment and its purifying ancillas.
    pub fn dilated_qubits(&self) -> usize {
        self.register_qubits + self.noisy_specs().iter().map(|s| 2 * s.env_qubits()).sum::<usize>()
    }

    fn check_thetas(&self, theta: &[f64]) -> Result<()> {
        let n = self.noisy_specs().len();
        if theta.len() != n {
            return Err(Error::ParameterCount { expected: n, found: theta.len() });
        }
        Ok(())
    }

    /// Final register state with the given noisy-gate strengths.
    pub fn final_density(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_thetas(theta)?;
        let mut rho = self.initial.density();
        let mut k = 0;
        for b in &self.blocks {
            rho = match b {
                Block::Unitary(g) => rho.evolve(g, 1.0)?,
                Block::Noisy(spec) => {
                    let out = apply_channel_at(spec, theta[k], &rho)?;
                    k += 1;
                    out
                }
            };
        }
        Ok(rho)
    }

    /// `Tr[Ĉ ρ(θ)]` through the channels.
    pub fn channel_expectation(&self, theta: &[f64]) -> Result<f64> {
        self.observable.dm_expectation(&self.final_density(theta)?)
    }

    /// Central difference of the channel expectation in `θ_k`.
    pub fn channel_finite_difference(&self, theta: &[f64], k: usize, eps: f64) -> Result<f64> {
        self.check_thetas(theta)?;
        if k >= theta.len() {
            return Err(Error::ParameterOutOfRange { index: k, count: theta.len() });
        }
        let mut a = theta.to_vec();
        let mut b = theta.to_vec();
        a[k] += eps;
        b[k] -= eps;
        Ok((self.channel_expectation(&a)? - self.channel_expectation(&b)?) / (2.0 * eps))
    }

    /// `∂_τ` of noisy gate `k` by central differences, labelled as a simulator-only oracle.
    pub fn simulator_tau_derivative(&self, k: usize, eps: f64) -> Result<SimulatorOnly> {
        let specs = self.noisy_specs();
        let spec = specs.get(k).ok_or(Error::ParameterOutOfRange { index: k, count: specs.len() })?;
        let theta = self.thetas();
        let with_tau = |tau: f64| -> Result<f64> {
            let mut blocks = self.blocks.clone();
            let mut seen = 0;
            for b in blocks.iter_mut() {
                if let Block::Noisy(s) = b {
                    if seen == k {
                        *s = spec.with_tau(tau);
                    }
                    seen += 1;
                }
            }
            NoisyCircuit { blocks, ..self.clone() }.channel_expectation(&theta)
        };
        let value = (with_tau(spec.tau() + eps)? - with_tau(spec.tau() - eps)?) / (2.0 * eps);
        Ok(SimulatorOnly { value, label: "simulator-only oracle" })
    }

    /// Pure-state dilation: register, then for each noisy gate its environment and ancillas.
    pub fn dilate(&self) -> Result<ParametricCircuit> {
        let total = self.dilated_qubits();
        let r = self.register_qubits;
        let mut gates = Vec::new();
        let mut state = self.initial.clone();
        let mut offset = r;
        let mut k = 0;
        for b in &self.blocks {
            match b {
                Block::Unitary(g) => gates.push(Gate::fixed(g.embed(total, 0)?)),
                Block::Noisy(spec) => {
                    gates.push(dilated_gate(spec, total, offset, k)?);
                    state = state.tensor(&purification(spec.env_state())?)?;
                    offset += 2 * spec.env_qubits();
                    k += 1;
                }
            }
        }
        let obs = ObservableSpec::new(self.observable.operator().embed(total, 0)?)?;
        ParametricCircuit::new(total, k, gates, state, obs)
    }

    /// Sampled `∂C/∂θ_k` on the dilation; pulses realized per `cfg.pulse`.
    pub fn theta_gradient<E: ShotExecutor + ?Sized>(
        &self,
        theta: &[f64],
        k: usize,
        cfg: &EstimatorConfig,
        executor: &E,
    ) -> Result<GradientEstimate> {
        self.check_thetas(theta)?;
        estimate_gradient(&self.dilate()?, theta, k, Estimator::Spsr, cfg, executor)
    }

    /// Expectation-level mean of [`NoisyCircuit::theta_gradient`].
    pub fn theta_gradient_expected(&self, theta: &[f64], k: usize, pulse: Pulse, quad_points: usize) -> Result<f64> {
        self.check_thetas(theta)?;
        expected_gradient(&self.dilate()?, theta, k, pulse, quad_points)
    }
}

fn dilated_gate(spec: &NoisyGateSpec, total: usize, env_offset: usize, k: usize) -> Result<Gate> {
    let r = spec.register_qubits();
    // coupling acts on register qubits 0..r and environment qubits env_offset..env_offset+e
    let mut coupling = PauliSum::zero(total)?;
    for (p, c) in spec.coupling_h().terms() {
        coupling.add_term(split_embed(p, r, total, env_offset)?, c)?;
    }
    let template = coupling.scaled(-spec.tau());
    let mut params = Vec::new();
    for (p, h) in spec.register_h().terms() {
        let wide = p.embed(total, 0)?;
        params.push((wide, ParamExpr::affine(template.coefficient(&wide), k, -spec.tau() * h)));
    }
    Gate::new(template, params)
}

/// Places the first `r` tensor factors of `p` on qubits `0..r` and the rest at `env_offset`.
fn split_embed(p: &PauliString, r: usize, total: usize, env_offset: usize) -> Result<PauliString> {
    let axes = p.axes();
    let mut wide = alloc::vec![crate::pauli::Axis::I; total];
    for (j, a) in axes.iter().enumerate() {
        let q = if j < r { j } else { env_offset + (j - r) };
        wide[q] = *a;
    }
    PauliString::from_axes(&wide)
}

/// `Σ_j √p_j |v_j⟩|j⟩` for `σ = Σ_j p_j |v_j⟩⟨v_j|`, environment first.
pub fn purification(sigma: &DensityMatrix) -> Result<StateVector> {
    let d = sigma.dim();
    let spectrum = Spectrum::of(sigma.entries());
    let mut v = CVector::zeros(d * d);
    for (j, &p) in spectrum.values().iter().enumerate() {
        let w = libm::sqrt(p.max(0.0));
        for e in 0..d {
            v[e * d + j] = spectrum.vectors()[(e, j)] * w;
        }
    }
    StateVector::normalized(v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Sequential;
    use crate::linalg::{max_abs_diff, trace};
    use crate::rng::ShotRng;
    use proptest::prelude::*;

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::parse(n, terms.iter().copied()).unwrap()
    }

    fn reference_spec() -> NoisyGateSpec {
        NoisyGateSpec::new("g0", sum(1, &[("X", -1.0)]), sum(2, &[("ZZ", 0.2)]), 1, 1.0, 0.7).unwrap()
    }

    fn random_density(qubits: usize, rng: &mut ShotRng) -> DensityMatrix {
        let d = 1usize << qubits;
        let a = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5));
        let m = &a * a.adjoint();
        let tr = trace(&m).re;
        DensityMatrix::from_matrix(m.scale(1.0 / tr)).unwrap()
    }

    fn random_sum(qubits: usize, terms: usize, rng: &mut ShotRng) -> PauliSum {
        let mut s = PauliSum::zero(qubits).unwrap();
        let d = 1u64 << qubits;
        for _ in 0..terms {
            let x = rng.next_u64() % d;
            let z = rng.next_u64() % d;
            let axes: Vec<crate::pauli::Axis> = (0..qubits)
                .map(|j| {
                    let bit = 1 << (qubits - 1 - j);
                    match (x & bit != 0, z & bit != 0) {
                        (false, false) => crate::pauli::Axis::I,
                        (true, false) => crate::pauli::Axis::X,
                        (true, true) => crate::pauli::Axis::Y,
                        (false, true) => crate::pauli::Axis::Z,
                    }
                })
                .collect();
            s.add_term(PauliString::from_axes(&axes).unwrap(), rng.uniform() - 0.5).unwrap();
        }
        s
    }

    fn random_spec(rng: &mut ShotRng) -> NoisyGateSpec {
        let r = 1 + (rng.next_u64() % 2) as usize;
        let e = 1 + (rng.next_u64() % 2) as usize;
        let spec = NoisyGateSpec::new(
            "random",
            random_sum(r, 2, rng),
            random_sum(r + e, 3, rng),
            e,
            0.5 + rng.uniform(),
            2.0 * rng.uniform() - 1.0,
        )
        .unwrap();
        let env = random_density(e, rng);
        spec.with_env_state(env).unwrap()
    }

    #[test]
    fn zero_coupling_is_unitary_conjugation() {
        let spec = NoisyGateSpec::new("g", sum(1, &[("Y", 0.8)]), PauliSum::zero(2).unwrap(), 1, 0.9, 1.3).unwrap();
        let mut rng = ShotRng::new(1, 0);
        let rho = random_density(1, &mut rng);
        let out = apply_channel(&spec, &rho).unwrap();
        let want = rho.evolve(&sum(1, &[("Y", 0.8)]), -0.9 * 1.3).unwrap();
        assert!(max_abs_diff(out.entries(), want.entries()) < 1e-12);
    }

    #[test]
    fn reference_spec_matches_dense_dilation() {
        let spec = reference_spec();
        let mut rng = ShotRng::new(2, 0);
        let rho = random_density(1, &mut rng);
        let out = apply_channel(&spec, &rho).unwrap();
        // explicit 4x4: H = 0.2 Z⊗Z + θ(−X)⊗1, U = e^{−iτH}
        let (tau, theta) = (1.0, 0.7);
        let z = sum(1, &[("Z", 1.0)]).to_matrix().unwrap();
        let x = sum(1, &[("X", 1.0)]).to_matrix().unwrap();
        let id = CMatrix::identity(2, 2);
        let h = z.kronecker(&z).scale(0.2) - x.kronecker(&id).scale(theta);
        let u = Spectrum::of(&h).exp_i(-tau);
        let mut env = CMatrix::zeros(2, 2);
        env[(0, 0)] = Complex64::new(1.0, 0.0);
        let joint = &u * rho.entries().kronecker(&env) * u.adjoint();
        let mut oracle = CMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                oracle[(a, b)] = joint[(2 * a, 2 * b)] + joint[(2 * a + 1, 2 * b + 1)];
            }
        }
        assert!(max_abs_diff(out.entries(), &oracle) < 1e-12);
        assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert_eq!(
            NoisyGateSpec::new("g", sum(1, &[("X", 1.0)]), PauliSum::zero(4).unwrap(), 3, 1.0, 1.0).unwrap_err(),
            Error::EnvironmentTooLarge(3)
        );
        assert!(NoisyGateSpec::new("g", sum(1, &[("X", 1.0)]), PauliSum::zero(3).unwrap(), 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn tau_refusal_names_spec() {
        let err = tau_gradient_unsupported(&reference_spec());
        match &err {
            Error::TauGradientUnsupported { spec, reason } => {
                assert_eq!(spec, "g0");
                assert!(!reason.is_empty());
            }
            other => panic!("{other:?}"),
        }
        assert!(alloc::format!("{err}").contains("g0"));
    }

    fn reference_circuit() -> NoisyCircuit {
        NoisyCircuit::new(
            StateVector::zeros(1).unwrap(),
            alloc::vec![Block::Noisy(reference_spec())],
            ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn dilation_reproduces_channel_expectation() {
        let mut rng = ShotRng::new(8, 0);
        let spec = random_spec(&mut rng);
        let r = spec.register_qubits();
        let circuit = NoisyCircuit::new(
            StateVector::zeros(r).unwrap(),
            alloc::vec![Block::Unitary(random_sum(r, 2, &mut rng)), Block::Noisy(spec), Block::Unitary(random_sum(r, 2, &mut rng))],
            ObservableSpec::new(random_sum(r, 3, &mut rng)).unwrap(),
        )
        .unwrap();
        let dilated = circuit.dilate().unwrap();
        for th in [-0.4, 0.3, 1.7] {
            let a = circuit.channel_expectation(&[th]).unwrap();
            let b = dilated.evaluate(&[th]).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_coupling_reduces_to_register_spsr() {
        let spec = NoisyGateSpec::new("g", sum(1, &[("X", -1.0)]), PauliSum::zero(2).unwrap(), 1, 1.0, 0.7).unwrap();
        let circuit = NoisyCircuit::new(
            StateVector::zeros(1).unwrap(),
            alloc::vec![Block::Noisy(spec)],
            ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap(),
        )
        .unwrap();
        // e^{iθX}|0⟩ with tau = 1: C = cos(2θ), dC/dθ = −2 sin(2θ)
        let want = -2.0 * libm::sin(1.4);
        let exp = circuit.theta_gradient_expected(&[0.7], 0, Pulse::Approximate(0.1), 16).unwrap();
        assert!((exp - want).abs() < 1e-12);
        let fd = circuit.channel_finite_difference(&[0.7], 0, 1e-5).unwrap();
        assert!((fd - want).abs() < 1e-8);
    }

    #[test]
    fn theta_gradient_with_approximate_pulses() {
        let circuit = reference_circuit();
        let theta = circuit.thetas();
        let fd = circuit.channel_finite_difference(&theta, 0, 1e-5).unwrap();
        let biases: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&e| (circuit.theta_gradient_expected(&theta, 0, Pulse::Approximate(e), 64).unwrap() - fd).abs())
            .collect();
        assert!(biases[0] > biases[1] && biases[1] > biases[2], "{biases:?}");
        let eps = 0.05;
        let cfg = EstimatorConfig::new(10_000, 3).approximate(eps);
        let est = circuit.theta_gradient(&theta, 0, &cfg, &Sequential).unwrap();
        let budget = f64::max(3.0 * est.sem(), 2.0 * eps * 0.2);
        assert!((est.mean - fd).abs() <= budget, "{} vs {fd}", est.mean);
    }

    #[test]
    fn mixed_environment_gradient_matches_fd() {
        let mut rng = ShotRng::new(31, 0);
        let spec = NoisyGateSpec::new("m", sum(1, &[("Y", 1.0)]), sum(2, &[("XZ", 0.3), ("ZX", 0.2)]), 1, 0.8, 0.4)
            .unwrap()
            .with_env_state(random_density(1, &mut rng))
            .unwrap();
        let circuit = NoisyCircuit::new(
            StateVector::zeros(1).unwrap(),
            alloc::vec![Block::Unitary(sum(1, &[("X", 0.3)])), Block::Noisy(spec)],
            ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap(),
        )
        .unwrap();
        let fd = circuit.channel_finite_difference(&[0.4], 0, 1e-5).unwrap();
        let exact = circuit.theta_gradient_expected(&[0.4], 0, Pulse::Exact, 64).unwrap();
        assert!((fd - exact).abs() < 1e-8);
    }

    #[test]
    fn simulator_tau_oracle_is_labelled() {
        let circuit = reference_circuit();
        let d = circuit.simulator_tau_derivative(0, 1e-5).unwrap();
        assert_eq!(d.label, "simulator-only oracle");
        assert!(d.value.is_finite());
    }

    #[test]
    fn purification_reduces_to_sigma() {
        let mut rng = ShotRng::new(4, 0);
        let sigma = random_density(2, &mut rng);
        let psi = purification(&sigma).unwrap();
        let reduced = psi.density().partial_trace(&[0, 1]).unwrap();
        assert!(max_abs_diff(reduced.entries(), sigma.entries()) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn channel_is_cptp(seed in 0u64..100_000) {
            let mut rng = ShotRng::new(seed, 0);
            let spec = random_spec(&mut rng);
            let choi = spec.choi_matrix().unwrap();
            let min = Spectrum::of(&choi).values().iter().fold(f64::INFINITY, |m, &v| m.min(v));
            prop_assert!(min >= -1e-10);
            let rho = random_density(spec.register_qubits(), &mut rng);
            let out = apply_channel(&spec, &rho).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn purity_stays_physical(seed in 0u64..100_000) {
            let mut rng = ShotRng::new(seed, 1);
            let spec = random_spec(&mut rng);
            let rho = random_density(spec.register_qubits(), &mut rng);
            let out = apply_channel(&spec, &rho).unwrap();
            let d = (1usize << spec.register_qubits()) as f64;
            prop_assert!(out.purity() <= 1.0 + 1e-10);
            prop_assert!(out.purity() >= 1.0 / d - 1e-10);
            // the joint evolution is unitary, so the joint purity is that of ρ ⊗ σ_E
            let joint = rho.tensor(spec.env_state()).unwrap();
            let evolved = joint.conjugate(&spec.joint_unitary(spec.theta()).unwrap()).unwrap();
            prop_assert!((evolved.purity() - rho.purity() * spec.env_state().purity()).abs() < 1e-10);
        }
    }
}
