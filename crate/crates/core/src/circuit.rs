//! Parametric evolutions `U(θ) = U_T ⋯ U_1` with `U_t = e^{i X_t(θ)}`.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{check_dense_cap, max_unitary_deviation, trace, CMatrix, CVector, Spectrum};
use crate::pauli::{PauliString, PauliSum};
use crate::quantum::{ObservableSpec, StateVector};

/// A user-supplied coefficient function `θ ↦ x(θ)` with analytic partials.
pub trait CoefficientFn: Send + Sync {
    fn value(&self, theta: &[f64]) -> f64;
    fn partial(&self, theta: &[f64], p: usize) -> f64;
    /// Parameters the value may depend on.
    fn dependencies(&self) -> Vec<usize>;
}

/// `offset + Σ a θ_p + Σ c θ_p θ_q`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    pub offset: f64,
    pub linear: Vec<(usize, f64)>,
    pub products: Vec<(usize, usize, f64)>,
}

/// One term `weight · θ_amp · cos(ω·time + θ_phase)` of a Fourier-expanded pulse.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMode {
    pub weight: f64,
    pub amplitude: usize,
    pub phase: usize,
    pub omega: f64,
}

/// `offset + Σ_m weight_m θ_{a_m} cos(ω_m time + θ_{φ_m})`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    pub offset: f64,
    pub time: f64,
    pub modes: Vec<FourierMode>,
}

/// Coefficient `x_{t,ν}(θ)` of one Pauli term of one gate.
#[derive(Clone)]
pub enum ParamExpr {
    Polynomial(Polynomial),
    Fourier(FourierSeries),
    Custom(Arc<dyn CoefficientFn>),
}

impl fmt::Debug for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamExpr::Polynomial(p) => p.fmt(f),
            ParamExpr::Fourier(s) => s.fmt(f),
            ParamExpr::Custom(c) => write!(f, "Custom(deps={:?})", c.dependencies()),
        }
    }
}

impl ParamExpr {
    pub fn constant(value: f64) -> Self {
        ParamExpr::Polynomial(Polynomial { offset: value, ..Polynomial::default() })
    }

    /// `scale · θ_p`.
    pub fn linear(p: usize, scale: f64) -> Self {
        Self::affine(0.0, p, scale)
    }

    /// `offset + scale · θ_p`.
    pub fn affine(offset: f64, p: usize, scale: f64) -> Self {
        ParamExpr::Polynomial(Polynomial { offset, linear: alloc::vec![(p, scale)], products: Vec::new() })
    }

    /// `scale · θ_p · θ_q`.
    pub fn product(p: usize, q: usize, scale: f64) -> Self {
        ParamExpr::Polynomial(Polynomial { offset: 0.0, linear: Vec::new(), products: alloc::vec![(p, q, scale)] })
    }

    pub fn custom(f: impl CoefficientFn + 'static) -> Self {
        ParamExpr::Custom(Arc::new(f))
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        match self {
            ParamExpr::Polynomial(p) => {
                p.offset
                    + p.linear.iter().map(|&(i, a)| a * theta[i]).sum::<f64>()
                    + p.products.iter().map(|&(i, j, c)| c * theta[i] * theta[j]).sum::<f64>()
            }
            ParamExpr::Fourier(s) => {
                s.offset
                    + s.modes
                        .iter()
                        .map(|m| m.weight * theta[m.amplitude] * libm::cos(m.omega * s.time + theta[m.phase]))
                        .sum::<f64>()
            }
            ParamExpr::Custom(c) => c.value(theta),
        }
    }

    pub fn partial(&self, theta: &[f64], p: usize) -> f64 {
        match self {
            ParamExpr::Polynomial(poly) => {
                let lin: f64 = poly.linear.iter().filter(|&&(i, _)| i == p).map(|&(_, a)| a).sum();
                let prod: f64 = poly
                    .products
                    .iter()
                    .map(|&(i, j, c)| {
                        let mut d = 0.0;
                        if i == p {
                            d += c * theta[j];
                        }
                        if j == p {
                            d += c * theta[i];
                        }
                        d
                    })
                    .sum();
                lin + prod
            }
            ParamExpr::Fourier(s) => s
                .modes
                .iter()
                .map(|m| {
                    let arg = m.omega * s.time + theta[m.phase];
                    let mut d = 0.0;
                    if m.amplitude == p {
                        d += m.weight * libm::cos(arg);
                    }
                    if m.phase == p {
                        d -= m.weight * theta[m.amplitude] * libm::sin(arg);
                    }
                    d
                })
                .sum(),
            ParamExpr::Custom(c) => c.partial(theta, p),
        }
    }

    /// Declared sparsity pattern, sorted and without duplicates.
    pub fn dependencies(&self) -> Vec<usize> {
        let mut deps: Vec<usize> = match self {
            ParamExpr::Polynomial(p) => p
                .linear
                .iter()
                .map(|&(i, _)| i)
                .chain(p.products.iter().flat_map(|&(i, j, _)| [i, j]))
                .collect(),
            ParamExpr::Fourier(s) => s.modes.iter().flat_map(|m| [m.amplitude, m.phase]).collect(),
            ParamExpr::Custom(c) => c.dependencies(),
        };
        deps.sort_unstable();
        deps.dedup();
        deps
    }

    pub fn depends_on(&self, p: usize) -> bool {
        self.dependencies().contains(&p)
    }

    /// Whether the value is affine in `θ_p` with all other parameters held fixed.
    pub fn is_affine_in(&self, p: usize) -> bool {
        match self {
            ParamExpr::Polynomial(poly) => !poly.products.iter().any(|&(i, j, _)| i == p && j == p),
            ParamExpr::Fourier(s) => !s.modes.iter().any(|m| m.phase == p),
            ParamExpr::Custom(c) => !c.dependencies().contains(&p),
        }
    }
}

/// One gate `e^{i X_t(θ)}`: a constant generator template whose listed terms are
/// replaced by parameter-dependent coefficients.
#[derive(Clone, Debug)]
pub struct Gate {
    template: PauliSum,
    params: Vec<(PauliString, ParamExpr)>,
}

impl Gate {
    pub fn fixed(generator: PauliSum) -> Self {
        Gate { template: generator, params: Vec::new() }
    }

    pub fn new(template: PauliSum, params: Vec<(PauliString, ParamExpr)>) -> Result<Self> {
        for (i, (p, _)) in params.iter().enumerate() {
            if p.qubits() != template.qubits() {
                return Err(Error::QubitMismatch { left: template.qubits(), right: p.qubits() });
            }
            if params[..i].iter().any(|(q, _)| q == p) {
                return Err(Error::DuplicateTerm(p.to_string()));
            }
        }
        Ok(Gate { template, params })
    }

    /// Gate whose template is the Pauli decomposition of a Hermitian matrix.
    pub fn from_matrix(generator: &CMatrix, params: Vec<(PauliString, ParamExpr)>) -> Result<Self> {
        Gate::new(PauliSum::decompose(generator)?, params)
    }

    pub fn qubits(&self) -> usize {
        self.template.qubits()
    }

    pub fn template(&self) -> &PauliSum {
        &self.template
    }

    pub fn params(&self) -> &[(PauliString, ParamExpr)] {
        &self.params
    }

    pub fn param_for(&self, term: &PauliString) -> Option<&ParamExpr> {
        self.params.iter().find(|(p, _)| p == term).map(|(_, e)| e)
    }

    /// `X_t(θ)`.
    pub fn generator(&self, theta: &[f64]) -> PauliSum {
        let mut g = self.template.clone();
        for (p, expr) in &self.params {
            g.remove_term(p);
            // qubit counts were checked at construction
            let _ = g.add_term(*p, expr.value(theta));
        }
        g
    }

    /// `∂X_t/∂θ_p`.
    pub fn generator_partial(&self, theta: &[f64], p: usize) -> PauliSum {
        let mut d = PauliSum::zero(self.qubits()).expect("gate qubit count is valid");
        for (term, expr) in &self.params {
            if expr.depends_on(p) {
                let _ = d.add_term(*term, expr.partial(theta, p));
            }
        }
        d
    }

    /// Copy acting on qubits `offset..offset + n` of a `total`-qubit register.
    pub fn embed(&self, total: usize, offset: usize) -> Result<Gate> {
        let params = self
            .params
            .iter()
            .map(|(p, e)| Ok((p.embed(total, offset)?, e.clone())))
            .collect::<Result<Vec<_>>>()?;
        Gate::new(self.template.embed(total, offset)?, params)
    }

    fn max_param_index(&self) -> Option<usize> {
        self.params.iter().flat_map(|(_, e)| e.dependencies()).max()
    }
}

/// Nonzero-pattern entry `∂x_{t,ν}/∂θ_p` of one Jacobian row.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianEntry {
    pub gate: usize,
    pub term: PauliString,
    pub value: f64,
}

/// Gate list, parameter count, initial state and observable.
#[derive(Clone, Debug)]
pub struct ParametricCircuit {
    qubits: usize,
    param_count: usize,
    gates: Vec<Gate>,
    initial: StateVector,
    observable: Arc<ObservableSpec>,
}

impl ParametricCircuit {
    pub fn new(
        qubits: usize,
        param_count: usize,
        gates: Vec<Gate>,
        initial: StateVector,
        observable: ObservableSpec,
    ) -> Result<Self> {
        Self::with_shared_observable(qubits, param_count, gates, initial, Arc::new(observable))
    }

    pub fn with_shared_observable(
        qubits: usize,
        param_count: usize,
        gates: Vec<Gate>,
        initial: StateVector,
        observable: Arc<ObservableSpec>,
    ) -> Result<Self> {
        check_dense_cap(qubits)?;
        for g in &gates {
            if g.qubits() != qubits {
                return Err(Error::QubitMismatch { left: qubits, right: g.qubits() });
            }
            if let Some(max) = g.max_param_index() {
                if max >= param_count {
                    return Err(Error::ParameterOutOfRange { index: max, count: param_count });
                }
            }
        }
        if initial.qubits() != qubits {
            return Err(Error::QubitMismatch { left: qubits, right: initial.qubits() });
        }
        if observable.qubits() != qubits {
            return Err(Error::QubitMismatch { left: qubits, right: observable.qubits() });
        }
        Ok(ParametricCircuit { qubits, param_count, gates, initial, observable })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn observable(&self) -> &ObservableSpec {
        &self.observable
    }

    pub fn shared_observable(&self) -> Arc<ObservableSpec> {
        self.observable.clone()
    }

    /// Same gates with a different observable.
    pub fn with_observable(&self, observable: ObservableSpec) -> Result<Self> {
        Self::new(self.qubits, self.param_count, self.gates.clone(), self.initial.clone(), observable)
    }

    pub fn with_initial(&self, initial: StateVector) -> Result<Self> {
        Self::with_shared_observable(
            self.qubits,
            self.param_count,
            self.gates.clone(),
            initial,
            self.observable.clone(),
        )
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count {
            Err(Error::ParameterCount { expected: self.param_count, found: theta.len() })
        } else {
            Ok(())
        }
    }

    /// Resolved generators `X_1(θ), …, X_T(θ)`.
    pub fn generators(&self, theta: &[f64]) -> Result<Vec<PauliSum>> {
        self.check_theta(theta)?;
        Ok(self.gates.iter().map(|g| g.generator(theta)).collect())
    }

    /// `U(θ)|ψ₀⟩`.
    pub fn final_state(&self, theta: &[f64]) -> Result<StateVector> {
        let gens = self.generators(theta)?;
        apply_generators(&self.initial, &gens)
    }

    /// `C(θ) = ⟨ψ₀|U†(θ) Ĉ U(θ)|ψ₀⟩`.
    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        self.observable.expectation(&self.final_state(theta)?)
    }

    /// Dense `U(θ) = U_T ⋯ U_1`.
    pub fn unitary(&self, theta: &[f64]) -> Result<CMatrix> {
        let gens = self.generators(theta)?;
        product_unitary(self.qubits, &gens)
    }

    /// Declared Jacobian row `∂x_{t,ν}/∂θ_p`, in gate then term order.
    pub fn jacobian_row(&self, theta: &[f64], p: usize) -> Result<Vec<JacobianEntry>> {
        self.check_theta(theta)?;
        if p >= self.param_count {
            return Err(Error::ParameterOutOfRange { index: p, count: self.param_count });
        }
        let mut row = Vec::new();
        for (t, g) in self.gates.iter().enumerate() {
            for (term, expr) in g.params() {
                if expr.depends_on(p) {
                    row.push(JacobianEntry { gate: t, term: *term, value: expr.partial(theta, p) });
                }
            }
        }
        Ok(row)
    }

    /// Slice at gate `t` and term `ν`: `Ĥ = X_t − x σ_ν`, `V̂ = σ_ν`, `x = x_{t,ν}(θ)`.
    pub fn slice(&self, theta: &[f64], t: usize, nu: &PauliString) -> Result<CircuitSlice> {
        let gens = self.generators(theta)?;
        let gate = self.gate(t)?;
        if gate.param_for(nu).is_none() && gate.template().coefficient(nu) == 0.0 {
            return Err(Error::UnknownTerm { gate: t, pauli: nu.to_string() });
        }
        let x = gens[t].coefficient(nu);
        let mut fixed = gens[t].clone();
        fixed.remove_term(nu);
        let target = PauliSum::from_string(*nu, 1.0);
        self.assemble_slice(&gens, t, fixed, target, x)
    }

    /// Slice along `∂X_t/∂θ_p`: `V̂ = ∂_p X_t`, `x = θ_p`, `Ĥ = X_t − θ_p V̂`.
    ///
    /// The slice reproduces `C` as a function of `θ_p` only when `X_t` is affine in `θ_p`.
    pub fn parameter_slice(&self, theta: &[f64], t: usize, p: usize) -> Result<CircuitSlice> {
        let gens = self.generators(theta)?;
        let gate = self.gate(t)?;
        if p >= self.param_count {
            return Err(Error::ParameterOutOfRange { index: p, count: self.param_count });
        }
        let target = gate.generator_partial(theta, p);
        let mut fixed = gens[t].plus(&target.scaled(-theta[p]))?;
        fixed.prune(1e-14);
        self.assemble_slice(&gens, t, fixed, target, theta[p])
    }

    /// Gates that depend on `θ_p`.
    pub fn gates_depending_on(&self, p: usize) -> Vec<usize> {
        (0..self.gates.len())
            .filter(|&t| self.gates[t].params().iter().any(|(_, e)| e.depends_on(p)))
            .collect()
    }

    fn gate(&self, t: usize) -> Result<&Gate> {
        self.gates.get(t).ok_or(Error::GateOutOfRange { index: t, count: self.gates.len() })
    }

    fn assemble_slice(
        &self,
        gens: &[PauliSum],
        t: usize,
        fixed: PauliSum,
        target: PauliSum,
        x: f64,
    ) -> Result<CircuitSlice> {
        let prefix = apply_generators(&self.initial, &gens[..t])?;
        CircuitSlice::from_parts(prefix, fixed, target, x, gens[t + 1..].to_vec(), self.observable.clone())
    }

    /// Circuit on `2N` qubits preparing `(1 ⊗ U(θ))|Φ⟩` from the maximally entangled
    /// state, measured against the projector on `(1 ⊗ G)|Φ⟩`; its cost is the control fidelity.
    pub fn choi(&self, target: &CMatrix) -> Result<ParametricCircuit> {
        let n = self.qubits;
        let d = 1usize << n;
        if target.nrows() != d || target.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: target.nrows() });
        }
        let dev = max_unitary_deviation(target);
        if dev > 1e-8 {
            return Err(Error::NotUnitary(dev));
        }
        check_dense_cap(2 * n)?;
        let phi = maximally_entangled(n);
        // (1 ⊗ G)|Φ⟩ has amplitude G[j, i]/√d on |i, j⟩
        let mut g_phi = CVector::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                g_phi[i * d + j] = target[(j, i)] / libm::sqrt(d as f64);
            }
        }
        let projector = &g_phi * g_phi.adjoint();
        let observable = ObservableSpec::from_matrix(projector)?;
        let gates = self.gates.iter().map(|g| g.embed(2 * n, n)).collect::<Result<Vec<_>>>()?;
        ParametricCircuit::new(2 * n, self.param_count, gates, phi, observable)
    }
}

/// `Σ_i |i⟩|i⟩ / √d` on `2n` qubits.
pub fn maximally_entangled(n: usize) -> StateVector {
    let d = 1usize << n;
    let mut v = CVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = Complex64::new(1.0 / libm::sqrt(d as f64), 0.0);
    }
    StateVector::from_vector_unchecked(2 * n, v)
}

/// `(|Tr G† U(θ)| / d)²` via the Choi-state construction.
pub fn control_fidelity(circuit: &ParametricCircuit, theta: &[f64], target: &CMatrix) -> Result<f64> {
    circuit.choi(target)?.evaluate(theta)
}

/// Direct trace formula `(|Tr G† U| / d)²`.
pub fn trace_fidelity(u: &CMatrix, target: &CMatrix) -> f64 {
    let d = u.nrows() as f64;
    (trace(&(target.adjoint() * u)).norm() / d).powi(2)
}

pub(crate) fn apply_generators(initial: &StateVector, gens: &[PauliSum]) -> Result<StateVector> {
    let mut v = initial.amplitudes().clone();
    for g in gens {
        if g.is_empty() {
            continue;
        }
        v = Spectrum::of(&g.to_matrix()?).apply_exp_i(1.0, &v);
    }
    Ok(StateVector::from_vector_unchecked(initial.qubits(), v))
}

pub(crate) fn product_unitary(qubits: usize, gens: &[PauliSum]) -> Result<CMatrix> {
    let d = 1usize << qubits;
    let mut u = CMatrix::identity(d, d);
    for g in gens {
        if g.is_empty() {
            continue;
        }
        u = Spectrum::of(&g.to_matrix()?).exp_i(1.0) * u;
    }
    Ok(u)
}

/// A circuit cut open at one term: `C(x) = ⟨φ| e^{-i(Ĥ+xV̂)} Â e^{i(Ĥ+xV̂)} |φ⟩`
/// with `Â = U_{t+}† Ĉ U_{t+}`.
#[derive(Clone, Debug)]
pub struct CircuitSlice {
    prefix: StateVector,
    fixed: PauliSum,
    target: PauliSum,
    coefficient: f64,
    suffix: Vec<PauliSum>,
    observable: Arc<ObservableSpec>,
    generator: Spectrum,
    suffix_unitary: CMatrix,
    effective: ObservableSpec,
}

impl CircuitSlice {
    pub fn from_parts(
        prefix: StateVector,
        fixed: PauliSum,
        target: PauliSum,
        coefficient: f64,
        suffix: Vec<PauliSum>,
        observable: Arc<ObservableSpec>,
    ) -> Result<Self> {
        let n = prefix.qubits();
        for q in [fixed.qubits(), target.qubits(), observable.qubits()]
            .into_iter()
            .chain(suffix.iter().map(|g| g.qubits()))
        {
            if q != n {
                return Err(Error::QubitMismatch { left: n, right: q });
            }
        }
        let generator = Spectrum::of(&fixed.plus(&target.scaled(coefficient))?.to_matrix()?);
        let suffix_unitary = product_unitary(n, &suffix)?;
        let effective = observable.conjugated_by(&suffix_unitary)?;
        Ok(CircuitSlice { prefix, fixed, target, coefficient, suffix, observable, generator, suffix_unitary, effective })
    }

    pub fn qubits(&self) -> usize {
        self.prefix.qubits()
    }

    /// `|φ⟩`.
    pub fn prefix_state(&self) -> &StateVector {
        &self.prefix
    }

    /// `Ĥ`.
    pub fn fixed_part(&self) -> &PauliSum {
        &self.fixed
    }

    /// `V̂`.
    pub fn target(&self) -> &PauliSum {
        &self.target
    }

    /// `x`.
    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn suffix(&self) -> &[PauliSum] {
        &self.suffix
    }

    pub fn observable(&self) -> &ObservableSpec {
        &self.observable
    }

    /// `U_{t+}`.
    pub fn suffix_unitary(&self) -> &CMatrix {
        &self.suffix_unitary
    }

    /// `Â = U_{t+}† Ĉ U_{t+}`.
    pub fn effective_observable(&self) -> &ObservableSpec {
        &self.effective
    }

    /// Spectrum of `Ĥ + xV̂`.
    pub fn generator_spectrum(&self) -> &Spectrum {
        &self.generator
    }

    /// `Ĥ + xV̂`.
    pub fn generator(&self) -> PauliSum {
        let mut g = self.fixed.plus(&self.target.scaled(self.coefficient)).expect("qubit counts checked");
        g.prune(0.0);
        g
    }

    /// The shift target as a single Pauli string with its sign, if `V̂ = ±σ`.
    pub fn target_string(&self) -> Option<(PauliString, f64)> {
        if self.target.len() != 1 {
            return None;
        }
        let (p, c) = self.target.terms().next()?;
        if (c.abs() - 1.0).abs() < 1e-12 {
            Some((*p, c.signum()))
        } else {
            None
        }
    }

    /// `C` at the slice's own coefficient.
    pub fn cost(&self) -> f64 {
        self.effective.expectation_raw(&self.generator.apply_exp_i(1.0, self.prefix.amplitudes()))
    }

    /// `C` with `x` replaced by `x_new`.
    pub fn cost_at(&self, x_new: f64) -> Result<f64> {
        let g = self.fixed.plus(&self.target.scaled(x_new))?;
        let v = Spectrum::of(&g.to_matrix()?).apply_exp_i(1.0, self.prefix.amplitudes());
        Ok(self.effective.expectation_raw(&v))
    }

    /// Copy with a different coefficient.
    pub fn with_coefficient(&self, x_new: f64) -> Result<CircuitSlice> {
        let mut s = self.clone();
        s.coefficient = x_new;
        s.generator = Spectrum::of(&self.fixed.plus(&self.target.scaled(x_new))?.to_matrix()?);
        Ok(s)
    }

    /// Final state of the reassembled circuit, `U_{t+} e^{i(Ĥ+xV̂)} |φ⟩`.
    pub fn final_state(&self) -> StateVector {
        let v = self.generator.apply_exp_i(1.0, self.prefix.amplitudes());
        StateVector::from_vector_unchecked(self.qubits(), &self.suffix_unitary * v)
    }
}

/// Boxed coefficient closure with fixed dependencies, for library callers.
pub struct FnCoefficient<F, D>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    D: Fn(&[f64], usize) -> f64 + Send + Sync,
{
    pub value: F,
    pub partial: D,
    pub deps: Vec<usize>,
}

impl<F, D> CoefficientFn for FnCoefficient<F, D>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    D: Fn(&[f64], usize) -> f64 + Send + Sync,
{
    fn value(&self, theta: &[f64]) -> f64 {
        (self.value)(theta)
    }
    fn partial(&self, theta: &[f64], p: usize) -> f64 {
        (self.partial)(theta, p)
    }
    fn dependencies(&self) -> Vec<usize> {
        self.deps.clone()
    }
}

impl<T: CoefficientFn + ?Sized> CoefficientFn for Box<T> {
    fn value(&self, theta: &[f64]) -> f64 {
        (**self).value(theta)
    }
    fn partial(&self, theta: &[f64], p: usize) -> f64 {
        (**self).partial(theta, p)
    }
    fn dependencies(&self) -> Vec<usize> {
        (**self).dependencies()
    }
}
