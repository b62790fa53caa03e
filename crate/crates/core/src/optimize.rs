//! Gradient descent and ascent over estimator outputs, and pulse parametrizations for control problems.

use alloc::vec::Vec;

use crate::circuit::{FourierMode, FourierSeries, Gate, ParamExpr, ParametricCircuit, Polynomial};
use crate::error::{Error, Result};
use crate::estimate::ShotExecutor;
use crate::gradients::{estimate_gradient, exact_gradient, Estimator, EstimatorConfig};
use crate::metric::{metric_tensor, MetricMode, DEFAULT_METRIC_NODES, DEFAULT_REGULARIZER};
use crate::pauli::{PauliString, PauliSum};
use crate::quantum::{ObservableSpec, StateVector};
use crate::rng::derive_seed;

pub const DEFAULT_LEARNING_RATE: f64 = 0.05;

/// Minimize or maximize the cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    /// `-1` for descent, `+1` for ascent.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Min => -1.0,
            Direction::Max => 1.0,
        }
    }

    pub fn parse(name: &str) -> Option<Direction> {
        match name {
            "min" => Some(Direction::Min),
            "max" => Some(Direction::Max),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Min => "min",
            Direction::Max => "max",
        }
    }
}

/// Where each step's gradient comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GradientSource {
    /// Expectation-level quadrature, no shot noise.
    Exact,
    /// Shot estimates; iteration `k`, parameter `p` use seed `derive_seed(derive_seed(seed, k), p)`.
    Sampled { estimator: Estimator, config: EstimatorConfig },
}

/// Precondition the gradient with `(F + λ1)⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaturalGradient {
    pub mode: MetricMode,
    pub regularizer: f64,
    pub quad_points: usize,
}

impl Default for NaturalGradient {
    fn default() -> Self {
        NaturalGradient { mode: MetricMode::Full, regularizer: DEFAULT_REGULARIZER, quad_points: DEFAULT_METRIC_NODES }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub direction: Direction,
    pub source: GradientSource,
    pub natural: Option<NaturalGradient>,
}

impl OptimizerConfig {
    pub fn new(iterations: usize, direction: Direction, source: GradientSource) -> Self {
        OptimizerConfig { learning_rate: DEFAULT_LEARNING_RATE, iterations, direction, source, natural: None }
    }
}

/// First/second moment decay and denominator offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    pub theta: Vec<f64>,
    /// Exact `C(θ)` from the simulator.
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub theta: Vec<f64>,
    pub iteration: usize,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub learning_rate: f64,
    pub history: Vec<HistoryEntry>,
}

impl OptimizerState {
    fn start(circuit: &ParametricCircuit, theta: &[f64], learning_rate: f64) -> Result<Self> {
        let cost = circuit.evaluate(theta)?;
        Ok(OptimizerState {
            theta: theta.to_vec(),
            iteration: 0,
            first_moment: alloc::vec![0.0; theta.len()],
            second_moment: alloc::vec![0.0; theta.len()],
            learning_rate,
            history: alloc::vec![HistoryEntry { theta: theta.to_vec(), cost }],
        })
    }

    pub fn final_cost(&self) -> f64 {
        self.history.last().map(|h| h.cost).unwrap_or(f64::NAN)
    }
}

fn gradient<E: ShotExecutor + ?Sized>(
    circuit: &ParametricCircuit,
    theta: &[f64],
    cfg: &OptimizerConfig,
    iteration: usize,
    executor: &E,
) -> Result<Vec<f64>> {
    let mut g = match &cfg.source {
        GradientSource::Exact => exact_gradient(circuit, theta)?,
        GradientSource::Sampled { estimator, config } => {
            let base = derive_seed(config.seed, iteration as u64);
            (0..circuit.param_count())
                .map(|p| {
                    let c = EstimatorConfig { seed: derive_seed(base, p as u64), ..*config };
                    estimate_gradient(circuit, theta, p, *estimator, &c, executor).map(|e| e.mean)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    if let Some(ng) = &cfg.natural {
        let f = metric_tensor(circuit, theta, ng.mode, ng.quad_points)?;
        let n = g.len();
        let reg = f + crate::metric::MetricMatrix::identity(n, n) * ng.regularizer;
        let solved = reg.lu().solve(&nalgebra::DVector::from_column_slice(&g)).ok_or(Error::SingularMetric)?;
        if solved.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMetric);
        }
        g = solved.iter().copied().collect();
    }
    Ok(g)
}

fn check_run(circuit: &ParametricCircuit, theta: &[f64], cfg: &OptimizerConfig) -> Result<()> {
    circuit.check_theta(theta)?;
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1"));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("learning rate must be positive"));
    }
    Ok(())
}

/// `θ ← θ ± η ĝ` for `cfg.iterations` steps.
pub fn sgd_run<E: ShotExecutor + ?Sized>(
    circuit: &ParametricCircuit,
    theta: &[f64],
    cfg: &OptimizerConfig,
    executor: &E,
) -> Result<OptimizerState> {
    check_run(circuit, theta, cfg)?;
    let mut state = OptimizerState::start(circuit, theta, cfg.learning_rate)?;
    let sign = cfg.direction.sign();
    for k in 0..cfg.iterations {
        let g = gradient(circuit, &state.theta, cfg, k, executor)?;
        for (t, g) in state.theta.iter_mut().zip(&g) {
            *t += sign * cfg.learning_rate * g;
        }
        state.iteration += 1;
        let cost = circuit.evaluate(&state.theta)?;
        state.history.push(HistoryEntry { theta: state.theta.clone(), cost });
    }
    Ok(state)
}

/// Adam steps along `±ĝ`.
pub fn adam_run<E: ShotExecutor + ?Sized>(
    circuit: &ParametricCircuit,
    theta: &[f64],
    cfg: &OptimizerConfig,
    adam: Adam,
    executor: &E,
) -> Result<OptimizerState> {
    check_run(circuit, theta, cfg)?;
    let mut state = OptimizerState::start(circuit, theta, cfg.learning_rate)?;
    let sign = cfg.direction.sign();
    for k in 0..cfg.iterations {
        let g = gradient(circuit, &state.theta, cfg, k, executor)?;
        let step = (k + 1) as i32;
        let c1 = 1.0 - libm::pow(adam.beta1, step as f64);
        let c2 = 1.0 - libm::pow(adam.beta2, step as f64);
        for i in 0..g.len() {
            let gi = sign * g[i];
            state.first_moment[i] = adam.beta1 * state.first_moment[i] + (1.0 - adam.beta1) * gi;
            state.second_moment[i] = adam.beta2 * state.second_moment[i] + (1.0 - adam.beta2) * gi * gi;
            let m = state.first_moment[i] / c1;
            let v = state.second_moment[i] / c2;
            state.theta[i] += cfg.learning_rate * m / (libm::sqrt(v) + adam.epsilon);
        }
        state.iteration += 1;
        let cost = circuit.evaluate(&state.theta)?;
        state.history.push(HistoryEntry { theta: state.theta.clone(), cost });
    }
    Ok(state)
}

/// Time dependence of the controls.
#[derive(Clone, Debug, PartialEq)]
pub enum PulseKind {
    /// One amplitude per control per step: `θ[j·N_T + p] = λ_j(pΔT)`.
    Piecewise,
    /// `λ_j(t) = Σ_m a_{jm} cos(ω_m t + φ_{jm})` with `a_{jm} = θ[2(jM+m)]`, `φ_{jm} = θ[2(jM+m)+1]`.
    Fourier { frequencies: Vec<f64> },
}

/// `Π_p e^{−iΔT(H₀ + Σ_j λ_j(pΔT) V̂_j)}` with `ΔT = T / N_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseModel {
    pub kind: PulseKind,
    pub steps: usize,
    pub horizon: f64,
    pub drift: PauliSum,
    pub controls: Vec<PauliSum>,
}

impl PulseModel {
    pub fn qubits(&self) -> usize {
        self.drift.qubits()
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn param_count(&self) -> usize {
        match &self.kind {
            PulseKind::Piecewise => self.controls.len() * self.steps,
            PulseKind::Fourier { frequencies } => 2 * self.controls.len() * frequencies.len(),
        }
    }

    /// Piecewise parameters sampling `λ_j(t)` at the step starts.
    pub fn sample_piecewise<F: Fn(usize, f64) -> f64>(&self, lambda: F) -> Vec<f64> {
        let dt = self.step();
        let mut theta = Vec::with_capacity(self.controls.len() * self.steps);
        for j in 0..self.controls.len() {
            for p in 0..self.steps {
                theta.push(lambda(j, p as f64 * dt));
            }
        }
        theta
    }

    fn check(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::NonPositiveHorizon(self.horizon));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("pulse needs at least one step"));
        }
        if let PulseKind::Fourier { frequencies } = &self.kind {
            if frequencies.is_empty() {
                return Err(Error::InvalidArgument("fourier pulse needs at least one mode"));
            }
        }
        for c in &self.controls {
            if c.qubits() != self.qubits() {
                return Err(Error::QubitMismatch { left: self.qubits(), right: c.qubits() });
            }
        }
        Ok(())
    }
}

/// Circuit of `N_T` gates whose coefficients carry the pulse parametrization.
pub fn build_control_circuit(
    model: &PulseModel,
    initial: StateVector,
    observable: ObservableSpec,
) -> Result<ParametricCircuit> {
    model.check()?;
    let dt = model.step();
    let mut strings: Vec<PauliString> = Vec::new();
    for c in &model.controls {
        for (p, _) in c.terms() {
            if !strings.contains(p) {
                strings.push(*p);
            }
        }
    }
    let template = model.drift.scaled(-dt);
    let mut gates = Vec::with_capacity(model.steps);
    for step in 0..model.steps {
        let time = step as f64 * dt;
        let mut params = Vec::with_capacity(strings.len());
        for s in &strings {
            let offset = template.coefficient(s);
            let expr = match &model.kind {
                PulseKind::Piecewise => {
                    let linear = model
                        .controls
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| c.coefficient(s) != 0.0)
                        .map(|(j, c)| (j * model.steps + step, -dt * c.coefficient(s)))
                        .collect();
                    ParamExpr::Polynomial(Polynomial { offset, linear, products: Vec::new() })
                }
                PulseKind::Fourier { frequencies } => {
                    let m_count = frequencies.len();
                    let mut modes = Vec::new();
                    for (j, c) in model.controls.iter().enumerate() {
                        let v = c.coefficient(s);
                        if v == 0.0 {
                            continue;
                        }
                        for (m, &omega) in frequencies.iter().enumerate() {
                            let k = j * m_count + m;
                            modes.push(FourierMode { weight: -dt * v, amplitude: 2 * k, phase: 2 * k + 1, omega });
                        }
                    }
                    ParamExpr::Fourier(FourierSeries { offset, time, modes })
                }
            };
            params.push((*s, expr));
        }
        gates.push(Gate::new(template.clone(), params)?);
    }
    ParametricCircuit::new(model.qubits(), model.param_count(), gates, initial, observable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{control_fidelity, trace_fidelity};
    use crate::estimate::Sequential;
    use crate::families::single_term_circuit;
    use crate::linalg::{max_abs_diff, CMatrix};
    use crate::quantum::expm;
    use alloc::vec;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::parse(n, terms.iter().copied()).unwrap()
    }

    // C(x) = cos(2x)
    fn cosine() -> ParametricCircuit {
        single_term_circuit("X".parse::<PauliString>().unwrap(), sum(1, &[("Z", 1.0)])).unwrap()
    }

    fn piecewise(steps: usize, horizon: f64) -> PulseModel {
        PulseModel {
            kind: PulseKind::Piecewise,
            steps,
            horizon,
            drift: sum(1, &[("Z", 1.0)]),
            controls: vec![sum(1, &[("X", 1.0)])],
        }
    }

    fn z_obs() -> ObservableSpec {
        ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap()
    }

    #[test]
    fn exact_sgd_reaches_minimum() {
        let cfg = OptimizerConfig::new(500, Direction::Min, GradientSource::Exact);
        let st = sgd_run(&cosine(), &[0.3], &cfg, &Sequential).unwrap();
        assert!((st.theta[0] - FRAC_PI_2).abs() < 1e-3, "{}", st.theta[0]);
        assert_eq!(st.history.len(), st.iteration + 1);
        let costs: Vec<f64> = st.history.iter().map(|h| h.cost).collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn ascent_moves_uphill() {
        let cfg = OptimizerConfig::new(300, Direction::Max, GradientSource::Exact);
        let st = sgd_run(&cosine(), &[0.3], &cfg, &Sequential).unwrap();
        assert!(st.theta[0].abs() < 1e-3);
        assert!(st.history.windows(2).all(|w| w[1].cost >= w[0].cost - 1e-15));
    }

    #[test]
    fn sampled_sgd_lands_near_exact_endpoint() {
        let exact = sgd_run(&cosine(), &[0.3], &OptimizerConfig::new(500, Direction::Min, GradientSource::Exact), &Sequential).unwrap();
        for seed in [1, 2, 3] {
            let source = GradientSource::Sampled { estimator: Estimator::Spsr, config: EstimatorConfig::new(200, seed) };
            let st = sgd_run(&cosine(), &[0.3], &OptimizerConfig::new(500, Direction::Min, source), &Sequential).unwrap();
            assert!((st.final_cost() - exact.final_cost()).abs() < 0.02, "{}", st.final_cost());
        }
    }

    #[test]
    fn adam_matches_sgd_endpoint() {
        let cfg = OptimizerConfig::new(500, Direction::Min, GradientSource::Exact);
        let sgd = sgd_run(&cosine(), &[0.3], &cfg, &Sequential).unwrap();
        let adam = adam_run(&cosine(), &[0.3], &cfg, Adam::default(), &Sequential).unwrap();
        assert!((sgd.theta[0] - adam.theta[0]).abs() < 1e-2, "{} vs {}", sgd.theta[0], adam.theta[0]);
    }

    #[test]
    fn unused_parameter_stays_put() {
        let gate = Gate::new(PauliSum::zero(1).unwrap(), vec![("X".parse::<PauliString>().unwrap(), ParamExpr::linear(0, 1.0))]).unwrap();
        let c = ParametricCircuit::new(1, 2, vec![gate], StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let cfg = OptimizerConfig::new(20, Direction::Min, GradientSource::Exact);
        let st = sgd_run(&c, &[0.3, 0.7], &cfg, &Sequential).unwrap();
        assert_eq!(st.theta[1], 0.7);
        let st = adam_run(&c, &[0.3, 0.7], &cfg, Adam::default(), &Sequential).unwrap();
        assert_eq!(st.theta[1], 0.7);
        let source = GradientSource::Sampled { estimator: Estimator::Spsr, config: EstimatorConfig::new(50, 4) };
        let st = adam_run(&c, &[0.3, 0.7], &OptimizerConfig::new(10, Direction::Min, source), Adam::default(), &Sequential).unwrap();
        assert_eq!(st.theta[1], 0.7);
    }

    #[test]
    fn sampled_runs_are_deterministic() {
        let source = GradientSource::Sampled { estimator: Estimator::SingleMeasurement, config: EstimatorConfig::new(30, 11) };
        let cfg = OptimizerConfig::new(25, Direction::Min, source);
        let a = adam_run(&cosine(), &[0.3], &cfg, Adam::default(), &Sequential).unwrap();
        let b = adam_run(&cosine(), &[0.3], &cfg, Adam::default(), &Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimator_errors_surface() {
        let model = piecewise(2, 1.0);
        let c = build_control_circuit(&model, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let source = GradientSource::Sampled { estimator: Estimator::Psr, config: EstimatorConfig::new(10, 0) };
        let err = sgd_run(&c, &[0.1, 0.2], &OptimizerConfig::new(3, Direction::Min, source), &Sequential).unwrap_err();
        assert!(matches!(err, Error::PsrDrift(_)));
        assert!(sgd_run(&c, &[0.1, 0.2], &OptimizerConfig::new(0, Direction::Min, GradientSource::Exact), &Sequential).is_err());
    }

    #[test]
    fn natural_gradient_halves_single_gate_step() {
        let mut cfg = OptimizerConfig::new(1, Direction::Min, GradientSource::Exact);
        let plain = sgd_run(&cosine(), &[0.3], &cfg, &Sequential).unwrap();
        cfg.natural = Some(NaturalGradient { regularizer: 0.0, ..NaturalGradient::default() });
        let natural = sgd_run(&cosine(), &[0.3], &cfg, &Sequential).unwrap();
        let step_plain = plain.theta[0] - 0.3;
        let step_natural = natural.theta[0] - 0.3;
        assert!((step_natural - step_plain / 2.0).abs() < 1e-8);
    }

    #[test]
    fn zero_controls_give_pure_drift() {
        let model = piecewise(5, 1.3);
        let c = build_control_circuit(&model, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let u = c.unitary(&[0.0; 5]).unwrap();
        let want = expm(&sum(1, &[("Z", 1.0)]), -1.3).unwrap();
        assert!(max_abs_diff(&u, &want) < 1e-12);
    }

    #[test]
    fn horizon_must_be_positive() {
        let model = piecewise(4, 0.0);
        assert_eq!(
            build_control_circuit(&model, StateVector::zeros(1).unwrap(), z_obs()).unwrap_err(),
            Error::NonPositiveHorizon(0.0)
        );
    }

    #[test]
    fn constant_fourier_matches_piecewise() {
        let pw = piecewise(6, 1.1);
        let fourier = PulseModel { kind: PulseKind::Fourier { frequencies: vec![0.0] }, ..pw.clone() };
        let a = build_control_circuit(&pw, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let b = build_control_circuit(&fourier, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let ua = a.unitary(&[1.0; 6]).unwrap();
        let ub = b.unitary(&[1.0, 0.0]).unwrap();
        assert!(max_abs_diff(&ua, &ub) < 1e-10);
    }

    #[test]
    fn fourier_matches_piecewise_samples() {
        let freqs = vec![0.7, 2.0];
        let theta = [0.4, 0.3, -0.6, 1.1];
        let amp = |t: f64| 0.4 * libm::cos(0.7 * t + 0.3) - 0.6 * libm::cos(2.0 * t + 1.1);
        let pw = piecewise(10, 1.5);
        let fourier = PulseModel { kind: PulseKind::Fourier { frequencies: freqs }, ..pw.clone() };
        let a = build_control_circuit(&pw, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let b = build_control_circuit(&fourier, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let samples = pw.sample_piecewise(|_, t| amp(t));
        assert!((a.evaluate(&samples).unwrap() - b.evaluate(&theta).unwrap()).abs() < 1e-12);
        // phase derivatives go through the chain rule
        let fd = crate::gradients::finite_difference(&b, &theta, 3, 1e-6).unwrap();
        let g = exact_gradient(&b, &theta).unwrap();
        assert!((fd - g[3]).abs() < 1e-7);
    }

    fn pulse_unitary(steps: usize, horizon: f64, lambda: impl Fn(f64) -> f64) -> CMatrix {
        let model = piecewise(steps, horizon);
        let c = build_control_circuit(&model, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        c.unitary(&model.sample_piecewise(|_, t| lambda(t))).unwrap()
    }

    #[test]
    fn trotter_error_scaling() {
        let lambda = |t: f64| 1.0 + libm::sin(2.0 * t);
        let horizon = 1.0;
        // global: error ∝ N_T ΔT², so doubling N_T halves it
        let reference = pulse_unitary(4000, horizon, lambda);
        let e = |n: usize| (pulse_unitary(n, horizon, lambda) - &reference).norm();
        let ratio = e(20) / e(40);
        assert!((1.7..2.3).contains(&ratio), "{ratio}");
        // local: one step of length ΔT against a 10x finer split of the same interval
        let local = |dt: f64| {
            let coarse = pulse_unitary(1, dt, lambda);
            let fine = pulse_unitary(200, dt, lambda);
            (coarse - fine).norm()
        };
        let ratio = local(0.1) / local(0.05);
        assert!((3.4..4.6).contains(&ratio), "{ratio}");
    }

    #[test]
    fn x_gate_control_reaches_high_fidelity() {
        let model = piecewise(8, PI / 2.0);
        let c = build_control_circuit(&model, StateVector::zeros(1).unwrap(), z_obs()).unwrap();
        let x = sum(1, &[("X", 1.0)]).to_matrix().unwrap();
        let choi = c.choi(&x).unwrap();
        let cfg = OptimizerConfig::new(150, Direction::Max, GradientSource::Exact);
        let st = adam_run(&choi, &[0.5; 8], &cfg, Adam::default(), &Sequential).unwrap();
        let f = control_fidelity(&c, &st.theta, &x).unwrap();
        assert!(f >= 0.99, "{f}");
        assert!((f - trace_fidelity(&c.unitary(&st.theta).unwrap(), &x)).abs() < 1e-10);
    }
}
