//! Parameter-shift gradient estimators and the deterministic oracles they are checked against.
//!
//! Slice-level routines act on a [`CircuitSlice`] and estimate `∂C/∂x`; circuit-level
//! routines combine slices through the Jacobian row of one parameter.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::circuit::{CircuitSlice, JacobianEntry, ParametricCircuit};
use crate::error::{Error, Result};
use crate::estimate::{collect, GradientEstimate, ShotExecutor};
use crate::linalg::{cis, CMatrix, CVector, Spectrum};
use crate::pauli::{PauliString, PauliSum};
use crate::quadrature::{GaussLegendre, DEFAULT_NODES};
use crate::quantum::pauli_rotate;
use crate::rng::ShotRng;

/// Tolerance for clustering generator eigenvalues when checking the two-eigenvalue condition.
pub const SPECTRUM_TOL: f64 = 1e-9;

/// Sign of the `π/4` pulse in `U_±(x, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// How the `e^{±iπ/4 V̂}` pulse is realized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pulse {
    Exact,
    /// `e^{iε[Ĥ ± π/(4ε) V̂]}`.
    Approximate(f64),
}

impl Pulse {
    fn check(self) -> Result<()> {
        match self {
            Pulse::Approximate(eps) if !(eps > 0.0 && eps.is_finite()) => Err(Error::InvalidEpsilon(eps)),
            _ => Ok(()),
        }
    }
}

/// Shot-level gradient estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    /// Two-eigenvalue parameter-shift rule on each gate depending on the parameter.
    Psr,
    /// One `s`, all Jacobian terms, paired `±` runs.
    Spsr,
    /// One randomly chosen term per sample, paired `±` runs.
    DoublyStochastic,
    /// One randomly chosen term and a fair coin for the pulse sign: a single run per sample.
    SingleMeasurement,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Psr => "psr",
            Estimator::Spsr => "spsr",
            Estimator::DoublyStochastic => "doubly-stochastic",
            Estimator::SingleMeasurement => "single-measurement",
        }
    }

    pub fn parse(name: &str) -> Option<Estimator> {
        match name {
            "psr" => Some(Estimator::Psr),
            "spsr" => Some(Estimator::Spsr),
            "doubly-stochastic" => Some(Estimator::DoublyStochastic),
            "single-measurement" => Some(Estimator::SingleMeasurement),
            _ => None,
        }
    }
}

/// Shot count, seed and pulse realization shared by all sampled estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub shots: usize,
    pub seed: u64,
    pub pulse: Pulse,
}

impl EstimatorConfig {
    pub fn new(shots: usize, seed: u64) -> Self {
        EstimatorConfig { shots, seed, pulse: Pulse::Exact }
    }

    pub fn approximate(mut self, epsilon: f64) -> Self {
        self.pulse = Pulse::Approximate(epsilon);
        self
    }

    /// Rejects zero shots and invalid pulse widths.
    pub fn check(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        self.pulse.check()
    }
}

/// Tag recorded on estimates: estimator name, `approx-` prefixed for approximate pulses.
pub fn estimator_tag(estimator: Estimator, pulse: Pulse) -> String {
    match (estimator, pulse) {
        (Estimator::Psr, _) | (_, Pulse::Exact) => String::from(estimator.name()),
        (_, Pulse::Approximate(eps)) => format!("approx-{}(eps={eps})", estimator.name()),
    }
}

enum PulseOp {
    Pauli { string: PauliString, sign: f64 },
    Dense { plus: CMatrix, minus: CMatrix },
}

/// Precomputed evolution `U_±(x, s)|φ⟩` for one slice, expressed in the eigenbasis of `Â`.
pub struct ShiftKernel {
    lambda: Vec<f64>,
    basis: CMatrix,
    phi: CVector,
    to_observable: CMatrix,
    outcomes: Vec<f64>,
    pulse: PulseOp,
}

impl ShiftKernel {
    pub fn new(slice: &CircuitSlice, pulse: Pulse) -> Result<Self> {
        pulse.check()?;
        let (string, sign) = slice.target_string().ok_or(Error::TargetNotInvolution)?;
        let spectrum = slice.generator_spectrum();
        let basis = spectrum.vectors().clone();
        let effective = slice.effective_observable();
        let op = match pulse {
            Pulse::Exact => PulseOp::Pauli { string, sign },
            Pulse::Approximate(eps) => {
                let pulse_gen = |m: f64| -> Result<CMatrix> {
                    let g = slice.fixed_part().scaled(eps).plus(&slice.target().scaled(m * FRAC_PI_4))?;
                    Ok(Spectrum::of(&g.to_matrix()?).exp_i(1.0))
                };
                PulseOp::Dense { plus: pulse_gen(1.0)?, minus: pulse_gen(-1.0)? }
            }
        };
        Ok(ShiftKernel {
            lambda: spectrum.values().to_vec(),
            phi: basis.ad_mul(slice.prefix_state().amplitudes()),
            to_observable: effective.eigenvectors().ad_mul(&basis),
            basis,
            outcomes: effective.eigenvalues().to_vec(),
            pulse: op,
        })
    }

    /// Amplitudes of `U_±(x, s)|φ⟩` on the eigenvectors of `Â`.
    pub fn coefficients(&self, s: f64, sign: Sign) -> CVector {
        &self.to_observable * self.rotated(s, sign)
    }

    /// `U_±(x, s)|φ⟩` in the computational basis, before the suffix.
    pub fn shifted_state(&self, s: f64, sign: Sign) -> CVector {
        &self.basis * self.rotated(s, sign)
    }

    fn rotated(&self, s: f64, sign: Sign) -> CVector {
        let mut a = self.phi.clone();
        for (c, &l) in a.iter_mut().zip(&self.lambda) {
            *c *= cis((1.0 - s) * l);
        }
        let v = &self.basis * a;
        let v = match &self.pulse {
            PulseOp::Pauli { string, sign: target_sign } => {
                pauli_rotate(string, sign.value() * target_sign * FRAC_PI_4, &v)
            }
            PulseOp::Dense { plus, minus } => match sign {
                Sign::Plus => plus * v,
                Sign::Minus => minus * v,
            },
        };
        let mut b = self.basis.ad_mul(&v);
        for (c, &l) in b.iter_mut().zip(&self.lambda) {
            *c *= cis(s * l);
        }
        b
    }

    /// `C_±(x, s) = ⟨Â⟩` on `U_±(x, s)|φ⟩`.
    pub fn expectation(&self, s: f64, sign: Sign) -> f64 {
        self.coefficients(s, sign).iter().zip(&self.outcomes).map(|(c, a)| c.norm_sqr() * a).sum()
    }

    /// One Born-rule outcome of `Â` on `U_±(x, s)|φ⟩`.
    pub fn sample(&self, s: f64, sign: Sign, rng: &mut ShotRng) -> f64 {
        let probs: Vec<f64> = self.coefficients(s, sign).iter().map(|c| c.norm_sqr()).collect();
        self.outcomes[rng.weighted_index(&probs)]
    }

    /// `r₊ − r₋` with a shared `s`.
    pub fn paired_sample(&self, s: f64, rng: &mut ShotRng) -> f64 {
        let plus = self.sample(s, Sign::Plus, rng);
        let minus = self.sample(s, Sign::Minus, rng);
        plus - minus
    }

    /// `∫₀¹ [C₊(x,s) − C₋(x,s)] ds` by Gauss–Legendre quadrature.
    pub fn expected(&self, quad: &GaussLegendre) -> f64 {
        quad.integrate(|s| self.expectation(s, Sign::Plus) - self.expectation(s, Sign::Minus))
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }
}

/// Parameter-shift rule for a drift-free slice whose target has eigenvalues `c ± u`.
pub struct PsrKernel {
    u: f64,
    plus: Vec<f64>,
    minus: Vec<f64>,
    outcomes: Vec<f64>,
    expected_plus: f64,
    expected_minus: f64,
}

impl PsrKernel {
    pub fn new(slice: &CircuitSlice) -> Result<Self> {
        let drift = slice.fixed_part().terms().filter(|(_, c)| c.abs() > 1e-12).count();
        if drift > 0 {
            return Err(Error::PsrDrift(drift));
        }
        let spectrum = Spectrum::of(&slice.target().to_matrix()?);
        let distinct = spectrum.distinct_values(SPECTRUM_TOL);
        if distinct.len() != 2 {
            return Err(Error::PsrSpectrum(distinct.len()));
        }
        let u = 0.5 * (distinct[1] - distinct[0]);
        let x = slice.coefficient();
        let effective = slice.effective_observable();
        let probs = |shift: f64| {
            let v = spectrum.apply_exp_i(x + shift, slice.prefix_state().amplitudes());
            effective.probabilities_raw(&v)
        };
        let plus = probs(FRAC_PI_4 / u);
        let minus = probs(-FRAC_PI_4 / u);
        let outcomes = effective.eigenvalues().to_vec();
        let dot = |p: &[f64]| p.iter().zip(&outcomes).map(|(p, a)| p * a).sum::<f64>();
        let (expected_plus, expected_minus) = (dot(&plus), dot(&minus));
        Ok(PsrKernel { u, plus, minus, outcomes, expected_plus, expected_minus })
    }

    /// Half-gap `u` of the target spectrum.
    pub fn u(&self) -> f64 {
        self.u
    }

    /// `u (r₊ − r₋)` with `r_±` drawn at `x ± π/(4u)`.
    pub fn sample(&self, rng: &mut ShotRng) -> f64 {
        let plus = self.outcomes[rng.weighted_index(&self.plus)];
        let minus = self.outcomes[rng.weighted_index(&self.minus)];
        self.u * (plus - minus)
    }

    /// `u [C(x + π/4u) − C(x − π/4u)]`.
    pub fn expected(&self) -> f64 {
        self.u * (self.expected_plus - self.expected_minus)
    }
}

pub fn psr_sample(slice: &CircuitSlice, rng: &mut ShotRng) -> Result<f64> {
    Ok(PsrKernel::new(slice)?.sample(rng))
}

/// Draws `s ~ U[0,1]` and returns `r₊ − r₋`.
pub fn spsr_sample(slice: &CircuitSlice, rng: &mut ShotRng) -> Result<f64> {
    let kernel = ShiftKernel::new(slice, Pulse::Exact)?;
    let s = rng.uniform();
    Ok(kernel.paired_sample(s, rng))
}

pub fn approx_spsr_sample(slice: &CircuitSlice, epsilon: f64, rng: &mut ShotRng) -> Result<f64> {
    let kernel = ShiftKernel::new(slice, Pulse::Approximate(epsilon))?;
    let s = rng.uniform();
    Ok(kernel.paired_sample(s, rng))
}

/// `∫₀¹ [C₊(x,s) − C₋(x,s)] ds` at expectation level.
pub fn spsr_expected(slice: &CircuitSlice, quad_points: usize) -> Result<f64> {
    Ok(ShiftKernel::new(slice, Pulse::Exact)?.expected(&GaussLegendre::new(quad_points)?))
}

/// Expectation-level mean of the approximate-pulse estimator.
pub fn approx_spsr_expected(slice: &CircuitSlice, epsilon: f64, quad_points: usize) -> Result<f64> {
    Ok(ShiftKernel::new(slice, Pulse::Approximate(epsilon))?.expected(&GaussLegendre::new(quad_points)?))
}

/// `(2ε)⁻¹ [C(x+ε) − C(x−ε)]` on the slice coefficient.
pub fn slice_finite_difference(slice: &CircuitSlice, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let x = slice.coefficient();
    Ok((slice.cost_at(x + eps)? - slice.cost_at(x - eps)?) / (2.0 * eps))
}

/// Deterministic gradient `i⟨ψ|[Â, Ŷ]|ψ⟩` with `Ŷ = ∫₀¹ e^{isG} V̂ e^{−isG} ds` expanded in Pauli strings.
pub fn hadamard_gradient(slice: &CircuitSlice, quad_points: usize) -> Result<f64> {
    let quad = GaussLegendre::new(quad_points)?;
    let spectrum = slice.generator_spectrum();
    let v = slice.target().to_matrix()?;
    let d = v.nrows();
    let mut y = CMatrix::zeros(d, d);
    for (s, w) in quad.pairs() {
        let u = spectrum.exp_i(s);
        y += (&u * &v * u.adjoint()).scale(w);
    }
    let y_sum = PauliSum::decompose(&((&y + y.adjoint()).scale(0.5)))?;
    let psi = spectrum.apply_exp_i(1.0, slice.prefix_state().amplitudes());
    let a_psi: CVector = slice.effective_observable().matrix() * &psi;
    let mut grad = 0.0;
    for (p, c) in y_sum.terms() {
        let sigma_psi = crate::quantum::pauli_apply(p, &psi);
        let im: Complex64 = a_psi.dotc(&sigma_psi);
        grad += -2.0 * c * im.im;
    }
    Ok(grad)
}

/// Central difference `(2ε)⁻¹ [C(θ + ε e_p) − C(θ − ε e_p)]`.
pub fn finite_difference(circuit: &ParametricCircuit, theta: &[f64], p: usize, eps: f64) -> Result<f64> {
    circuit.check_theta(theta)?;
    if p >= circuit.param_count() {
        return Err(Error::ParameterOutOfRange { index: p, count: circuit.param_count() });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let mut a = theta.to_vec();
    let mut b = theta.to_vec();
    a[p] += eps;
    b[p] -= eps;
    Ok((circuit.evaluate(&a)? - circuit.evaluate(&b)?) / (2.0 * eps))
}

/// Monte Carlo estimate of `∂C/∂x` on one slice.
pub fn estimate_slice<E: ShotExecutor + ?Sized>(
    slice: &CircuitSlice,
    estimator: Estimator,
    cfg: &EstimatorConfig,
    executor: &E,
) -> Result<GradientEstimate> {
    cfg.check()?;
    let tag = estimator_tag(estimator, cfg.pulse);
    let samples = match estimator {
        Estimator::Psr => {
            let k = PsrKernel::new(slice)?;
            collect(executor, cfg.shots, cfg.seed, |rng| k.sample(rng))?
        }
        Estimator::Spsr | Estimator::DoublyStochastic => {
            let k = ShiftKernel::new(slice, cfg.pulse)?;
            collect(executor, cfg.shots, cfg.seed, |rng| {
                let s = rng.uniform();
                k.paired_sample(s, rng)
            })?
        }
        Estimator::SingleMeasurement => {
            let k = ShiftKernel::new(slice, cfg.pulse)?;
            collect(executor, cfg.shots, cfg.seed, |rng| single_draw(&k, rng, 1.0))?
        }
    };
    GradientEstimate::from_samples(&samples, cfg.seed, tag)
}

fn single_draw(kernel: &ShiftKernel, rng: &mut ShotRng, weight: f64) -> f64 {
    let s = rng.uniform();
    let m = rng.coin();
    let sign = if m > 0.0 { Sign::Plus } else { Sign::Minus };
    2.0 * m * kernel.sample(s, sign, rng) * weight
}

/// Slices and kernels along the Jacobian row of one parameter.
pub struct GradientPlan {
    entries: Vec<JacobianEntry>,
    kernels: Vec<ShiftKernel>,
    norm: f64,
}

impl GradientPlan {
    pub fn new(circuit: &ParametricCircuit, theta: &[f64], p: usize, pulse: Pulse) -> Result<Self> {
        pulse.check()?;
        let row = circuit.jacobian_row(theta, p)?;
        let mut entries = Vec::new();
        let mut kernels = Vec::new();
        for e in row {
            if e.value == 0.0 {
                continue;
            }
            let slice = circuit.slice(theta, e.gate, &e.term)?;
            kernels.push(ShiftKernel::new(&slice, pulse)?);
            entries.push(e);
        }
        let norm = entries.iter().map(|e| e.value.abs()).sum();
        Ok(GradientPlan { entries, kernels, norm })
    }

    pub fn entries(&self) -> &[JacobianEntry] {
        &self.entries
    }

    /// `N_p = Σ |∂_p x_{t,ν}|`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Term distribution `q_p(t, ν) = |∂_p x_{t,ν}| / N_p`.
    pub fn distribution(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value.abs() / self.norm).collect()
    }

    /// One sample of the full stochastic gradient: a shared `s`, every term.
    pub fn spsr_sample(&self, rng: &mut ShotRng) -> f64 {
        let s = rng.uniform();
        self.entries.iter().zip(&self.kernels).map(|(e, k)| k.paired_sample(s, rng) * e.value).sum()
    }

    /// One doubly stochastic sample: `(r₊ − r₋) N_p sign(∂_p x)` for a term drawn from `q_p`.
    pub fn doubly_stochastic_sample(&self, rng: &mut ShotRng) -> Result<f64> {
        let i = self.draw_term(rng)?;
        let s = rng.uniform();
        Ok(self.kernels[i].paired_sample(s, rng) * self.norm * self.entries[i].value.signum())
    }

    /// One single-run sample: `2 m r N_p sign(∂_p x)` with a fair coin `m`.
    pub fn single_measurement_sample(&self, rng: &mut ShotRng) -> Result<f64> {
        let i = self.draw_term(rng)?;
        Ok(single_draw(&self.kernels[i], rng, self.norm * self.entries[i].value.signum()))
    }

    /// `Σ ∂_p x · ∫[C₊ − C₋] ds`, the mean of every sampled estimator on this plan.
    pub fn expected(&self, quad: &GaussLegendre) -> f64 {
        self.entries.iter().zip(&self.kernels).map(|(e, k)| k.expected(quad) * e.value).sum()
    }

    fn draw_term(&self, rng: &mut ShotRng) -> Result<usize> {
        if self.entries.is_empty() {
            return Err(Error::ZeroJacobian(0));
        }
        let weights: Vec<f64> = self.entries.iter().map(|e| e.value.abs()).collect();
        Ok(rng.weighted_index(&weights))
    }
}

/// `u`-scaled shift rule for every gate that depends on `θ_p`.
pub struct PsrPlan {
    kernels: Vec<PsrKernel>,
}

impl PsrPlan {
    pub fn new(circuit: &ParametricCircuit, theta: &[f64], p: usize) -> Result<Self> {
        circuit.check_theta(theta)?;
        if p >= circuit.param_count() {
            return Err(Error::ParameterOutOfRange { index: p, count: circuit.param_count() });
        }
        let mut kernels = Vec::new();
        for t in circuit.gates_depending_on(p) {
            let gate = &circuit.gates()[t];
            if !gate.params().iter().all(|(_, e)| e.is_affine_in(p)) {
                return Err(Error::InvalidArgument("parameter-shift rule needs gates affine in the parameter"));
            }
            let slice = circuit.parameter_slice(theta, t, p)?;
            if slice.target().is_empty() {
                continue;
            }
            kernels.push(PsrKernel::new(&slice)?);
        }
        Ok(PsrPlan { kernels })
    }

    pub fn sample(&self, rng: &mut ShotRng) -> f64 {
        self.kernels.iter().map(|k| k.sample(rng)).sum()
    }

    pub fn expected(&self) -> f64 {
        self.kernels.iter().map(|k| k.expected()).sum()
    }
}

/// Monte Carlo estimate of `∂C/∂θ_p`.
pub fn estimate_gradient<E: ShotExecutor + ?Sized>(
    circuit: &ParametricCircuit,
    theta: &[f64],
    p: usize,
    estimator: Estimator,
    cfg: &EstimatorConfig,
    executor: &E,
) -> Result<GradientEstimate> {
    cfg.check()?;
    let tag = estimator_tag(estimator, cfg.pulse);
    let samples = match estimator {
        Estimator::Psr => {
            let plan = PsrPlan::new(circuit, theta, p)?;
            collect(executor, cfg.shots, cfg.seed, |rng| plan.sample(rng))?
        }
        Estimator::Spsr => {
            let plan = GradientPlan::new(circuit, theta, p, cfg.pulse)?;
            collect(executor, cfg.shots, cfg.seed, |rng| plan.spsr_sample(rng))?
        }
        Estimator::DoublyStochastic | Estimator::SingleMeasurement => {
            let plan = GradientPlan::new(circuit, theta, p, cfg.pulse)?;
            if plan.entries().is_empty() {
                return Err(Error::ZeroJacobian(p));
            }
            let single = estimator == Estimator::SingleMeasurement;
            collect(executor, cfg.shots, cfg.seed, |rng| {
                let draw =
                    if single { plan.single_measurement_sample(rng) } else { plan.doubly_stochastic_sample(rng) };
                draw.expect("plan has terms")
            })?
        }
    };
    GradientEstimate::from_samples(&samples, cfg.seed, tag)
}

/// Expectation-level mean of the sampled shift estimators, `Σ ∂_p x ∫[C₊ − C₋] ds`.
pub fn expected_gradient(
    circuit: &ParametricCircuit,
    theta: &[f64],
    p: usize,
    pulse: Pulse,
    quad_points: usize,
) -> Result<f64> {
    Ok(GradientPlan::new(circuit, theta, p, pulse)?.expected(&GaussLegendre::new(quad_points)?))
}

/// Exact `∇C` by quadrature over every parameter.
pub fn exact_gradient(circuit: &ParametricCircuit, theta: &[f64]) -> Result<Vec<f64>> {
    (0..circuit.param_count()).map(|p| expected_gradient(circuit, theta, p, Pulse::Exact, DEFAULT_NODES)).collect()
}
