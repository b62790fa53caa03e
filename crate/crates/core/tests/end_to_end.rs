use shiftrule_core::families::{cross_resonance_circuit, model_a};
use shiftrule_core::gradients::{estimate_gradient, exact_gradient, expected_gradient, finite_difference};
use shiftrule_core::noise::{Block, NoisyCircuit, NoisyGateSpec};
use shiftrule_core::optimize::{sgd_run, GradientSource};
use shiftrule_core::{
    Complex64, Direction, Estimator, EstimatorConfig, Gate, ObservableSpec, OptimizerConfig, ParamExpr, ParametricCircuit,
    PauliSum, Pulse, Sequential, StateVector,
};

fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
    PauliSum::parse(n, terms.iter().copied()).unwrap()
}

/// `e^{i(hZ + xX)}|0⟩` measured in Z, written out by hand from the Bloch form
/// `cos ω + i sin ω (n·σ)`.
fn closed_form_cost(h: f64, x: f64) -> f64 {
    let w = (h * h + x * x).sqrt();
    let (nx, nz) = (x / w, h / w);
    let a = Complex64::new(w.cos(), w.sin() * nz);
    let b = Complex64::new(0.0, w.sin() * nx);
    a.norm_sqr() - b.norm_sqr()
}

fn closed_form_derivative(h: f64, x: f64) -> f64 {
    let e = 1e-5;
    (closed_form_cost(h, x + e) - closed_form_cost(h, x - e)) / (2.0 * e)
}

fn drift_qubit(h: f64) -> ParametricCircuit {
    let gate = Gate::new(sum(1, &[("Z", h)]), vec![("X".parse().unwrap(), ParamExpr::linear(0, 1.0))]).unwrap();
    ParametricCircuit::new(1, 1, vec![gate], StateVector::zeros(1).unwrap(), ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap())
        .unwrap()
}

#[test]
fn cost_matches_hand_computation() {
    for (h, x) in [(0.0, 0.3), (0.7, 0.3), (-1.2, 2.0)] {
        let c = drift_qubit(h);
        assert!((c.evaluate(&[x]).unwrap() - closed_form_cost(h, x)).abs() < 1e-12);
    }
}

#[test]
fn exact_gradient_matches_hand_derivative_with_drift() {
    for (h, x) in [(0.7, 0.3), (-1.2, 2.0), (2.5, -0.4)] {
        let g = exact_gradient(&drift_qubit(h), &[x]).unwrap()[0];
        assert!((g - closed_form_derivative(h, x)).abs() < 1e-8, "h={h} x={x}: {g}");
    }
}

#[test]
fn sampled_estimators_agree_with_hand_derivative() {
    let (h, x) = (0.7, 0.3);
    let c = drift_qubit(h);
    let truth = closed_form_derivative(h, x);
    for (k, est) in [Estimator::Spsr, Estimator::DoublyStochastic, Estimator::SingleMeasurement].into_iter().enumerate() {
        let cfg = EstimatorConfig::new(20_000, 50 + k as u64);
        let e = estimate_gradient(&c, &[x], 0, est, &cfg, &Sequential).unwrap();
        assert!((e.mean - truth).abs() < 4.0 * e.sem(), "{est:?}: {} vs {truth}", e.mean);
    }
}

#[test]
fn estimates_replay_from_seed() {
    let c = cross_resonance_circuit(sum(2, &[("YY", 1.0)])).unwrap();
    let theta = [0.4, 1.0, 0.3];
    let cfg = EstimatorConfig::new(500, 77);
    let a = estimate_gradient(&c, &theta, 1, Estimator::Spsr, &cfg, &Sequential).unwrap();
    let b = estimate_gradient(&c, &theta, 1, Estimator::Spsr, &cfg, &Sequential).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.sample_variance.to_bits(), b.sample_variance.to_bits());
    let other = estimate_gradient(&c, &theta, 1, Estimator::Spsr, &EstimatorConfig::new(500, 78), &Sequential).unwrap();
    assert_ne!(a.mean.to_bits(), other.mean.to_bits());
}

#[test]
fn approximate_pulses_on_shared_parameters() {
    let c = cross_resonance_circuit(sum(2, &[("YI", 1.0)])).unwrap();
    let theta = [0.9, -0.6, 0.2];
    let fd = finite_difference(&c, &theta, 0, 1e-5).unwrap();
    let coarse = (expected_gradient(&c, &theta, 0, Pulse::Approximate(0.1), 64).unwrap() - fd).abs();
    let fine = (expected_gradient(&c, &theta, 0, Pulse::Approximate(0.01), 64).unwrap() - fd).abs();
    assert!(fine < coarse);
    assert!(fine < 0.05);
}

#[test]
fn descent_lowers_model_a_cost() {
    let c = model_a(3).unwrap();
    let cfg = OptimizerConfig::new(25, Direction::Min, GradientSource::Exact);
    let state = sgd_run(&c, &[0.6], &cfg, &Sequential).unwrap();
    assert_eq!(state.history.len(), 26);
    assert!(state.final_cost() < state.history[0].cost);
    assert!((state.history[0].cost - c.evaluate(&[0.6]).unwrap()).abs() < 1e-12);
}

#[test]
fn noisy_gate_gradient_through_public_api() {
    let spec = NoisyGateSpec::new("g", sum(1, &[("X", 1.0)]), sum(2, &[("XZ", 0.3)]), 1, 0.8, 0.4).unwrap();
    let circuit = NoisyCircuit::new(
        StateVector::zeros(1).unwrap(),
        vec![Block::Noisy(spec)],
        ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap(),
    )
    .unwrap();
    let dilated = circuit.dilate().unwrap();
    let theta = circuit.thetas();
    assert!((dilated.evaluate(&theta).unwrap() - circuit.channel_expectation(&theta).unwrap()).abs() < 1e-10);
    let fd = circuit.channel_finite_difference(&theta, 0, 1e-5).unwrap();
    let exact = circuit.theta_gradient_expected(&theta, 0, Pulse::Exact, 64).unwrap();
    assert!((exact - fd).abs() < 1e-6, "{exact} vs {fd}");
}
