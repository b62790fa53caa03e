//! Built-in gate families and the benchmark models.

use alloc::vec::Vec;

use crate::circuit::{Gate, ParamExpr, ParametricCircuit, Polynomial};
use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString, PauliSum};
use crate::quantum::{ObservableSpec, StateVector};

fn string(text: &str) -> PauliString {
    text.parse().expect("built-in Pauli string")
}

/// `exp[i t (X⊗1 − b Z⊗X + c 1⊗X)]`, with `(t, b, c)` read from `theta[idx[0..3]]`.
///
/// Terms: `x₀ = t` on `XI`, `x₁ = −bt` on `ZX`, `x₂ = ct` on `IX`.
pub fn cross_resonance(idx: [usize; 3]) -> Gate {
    let [t, b, c] = idx;
    let template = PauliSum::zero(2).expect("two qubits");
    Gate::new(
        template,
        alloc::vec![
            (string("XI"), ParamExpr::linear(t, 1.0)),
            (string("ZX"), ParamExpr::product(b, t, -1.0)),
            (string("IX"), ParamExpr::product(c, t, 1.0)),
        ],
    )
    .expect("distinct terms")
}

/// Two-qubit circuit with one cross-resonance gate on `|00⟩`; `θ = (t, b, c)`.
pub fn cross_resonance_circuit(observable: PauliSum) -> Result<ParametricCircuit> {
    ParametricCircuit::new(
        2,
        3,
        alloc::vec![cross_resonance([0, 1, 2])],
        StateVector::zeros(2)?,
        ObservableSpec::new(observable)?,
    )
}

/// Drift gate `exp[i(t H₀ + b t H₁)]` with `(t, b)` at `theta[idx[0..2]]`.
///
/// Each string `μ` gets `x_μ = t·h₀_μ + b t·h₁_μ`, so `x₀ = t` and `x₁ = bt` for single-string `H₀, H₁`.
pub fn drift_gate(idx: [usize; 2], h0: &PauliSum, h1: &PauliSum) -> Result<Gate> {
    if h0.qubits() != h1.qubits() {
        return Err(Error::QubitMismatch { left: h0.qubits(), right: h1.qubits() });
    }
    let [t, b] = idx;
    let mut strings: Vec<PauliString> = h0.terms().map(|(p, _)| *p).collect();
    for (p, _) in h1.terms() {
        if !strings.contains(p) {
            strings.push(*p);
        }
    }
    let params = strings
        .into_iter()
        .map(|p| {
            let mut poly = Polynomial::default();
            let a0 = h0.coefficient(&p);
            let a1 = h1.coefficient(&p);
            if a0 != 0.0 {
                poly.linear.push((t, a0));
            }
            if a1 != 0.0 {
                poly.products.push((b, t, a1));
            }
            (p, ParamExpr::Polynomial(poly))
        })
        .collect();
    Gate::new(PauliSum::zero(h0.qubits())?, params)
}

/// `Σ_j [σx⁽ʲ⁾σx⁽ʲ⁺¹⁾ + σx⁽ʲ⁾/3 + σz⁽ʲ⁾/2]` with periodic boundary `σ⁽ᴺ⁺¹⁾ = σ⁽¹⁾`.
///
/// The bond sum runs over all `j = 1..N`, so for `N = 2` the single bond appears twice.
pub fn ising_hamiltonian(n: usize) -> Result<PauliSum> {
    let mut h = PauliSum::zero(n)?;
    for j in 0..n {
        let k = (j + 1) % n;
        if n > 1 {
            let mut axes = alloc::vec![Axis::I; n];
            axes[j] = Axis::X;
            axes[k] = Axis::X;
            let bond = PauliString::from_axes(&axes)?;
            h.add_term(bond, 1.0)?;
        }
        let x = PauliString::single(n, j, Axis::X)?;
        h.add_term(x, 1.0 / 3.0)?;
        let z = PauliString::single(n, j, Axis::Z)?;
        h.add_term(z, 0.5)?;
    }
    Ok(h)
}

/// `Σ_j σz⁽ʲ⁾`.
pub fn total_z(n: usize) -> Result<PauliSum> {
    let mut a = PauliSum::zero(n)?;
    for j in 0..n {
        a.add_term(PauliString::single(n, j, Axis::Z)?, 1.0)?;
    }
    Ok(a)
}

/// `σz` on the first qubit.
pub fn first_z(n: usize) -> Result<PauliString> {
    PauliString::single(n, 0, Axis::Z)
}

/// Single gate `e^{i(H + θ₀ σz⁽¹⁾)}` on `|0…0⟩`, observable `Σσz`.
///
/// The `σz⁽¹⁾` coefficient of the gate is `h_{Z1} + θ₀`.
pub fn model_a_with(h: &PauliSum) -> Result<ParametricCircuit> {
    let n = h.qubits();
    let z1 = first_z(n)?;
    let gate = Gate::new(h.clone(), alloc::vec![(z1, ParamExpr::affine(h.coefficient(&z1), 0, 1.0))])?;
    ParametricCircuit::new(n, 1, alloc::vec![gate], StateVector::zeros(n)?, ObservableSpec::new(total_z(n)?)?)
}

/// Many-body benchmark: drift `H_a`, shift target `σz⁽¹⁾`, observable `Σσz`.
pub fn model_a(n: usize) -> Result<ParametricCircuit> {
    model_a_with(&ising_hamiltonian(n)?)
}

/// Drift-free counterpart: `e^{iH/2}`, then `e^{iθ₀σz⁽¹⁾}`, then `e^{iH/2}`, observable `Σσz`.
pub fn model_b_with(h: &PauliSum) -> Result<ParametricCircuit> {
    let n = h.qubits();
    let half = h.scaled(0.5);
    let gates = alloc::vec![
        Gate::fixed(half.clone()),
        Gate::new(PauliSum::zero(n)?, alloc::vec![(first_z(n)?, ParamExpr::linear(0, 1.0))])?,
        Gate::fixed(half),
    ];
    ParametricCircuit::new(n, 1, gates, StateVector::zeros(n)?, ObservableSpec::new(total_z(n)?)?)
}

pub fn model_b(n: usize) -> Result<ParametricCircuit> {
    model_b_with(&ising_hamiltonian(n)?)
}

/// One gate `e^{iθ₀ σ}` on `|0…0⟩` measured with `observable`.
pub fn single_term_circuit(nu: PauliString, observable: PauliSum) -> Result<ParametricCircuit> {
    let n = nu.qubits();
    let gate = Gate::new(PauliSum::zero(n)?, alloc::vec![(nu, ParamExpr::linear(0, 1.0))])?;
    ParametricCircuit::new(n, 1, alloc::vec![gate], StateVector::zeros(n)?, ObservableSpec::new(observable)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{control_fidelity, trace_fidelity, FnCoefficient};
    use crate::linalg::{max_abs_diff, Spectrum};
    use crate::quantum::expm;
    use crate::rng::ShotRng;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::parse(n, terms.iter().copied()).unwrap()
    }

    fn fd(c: &ParametricCircuit, theta: &[f64], p: usize, eps: f64) -> f64 {
        let mut a = theta.to_vec();
        let mut b = theta.to_vec();
        a[p] += eps;
        b[p] -= eps;
        (c.evaluate(&a).unwrap() - c.evaluate(&b).unwrap()) / (2.0 * eps)
    }

    /// Random circuit: `gates` gates on `n` qubits, each with three random terms, some parametric.
    fn random_circuit(n: usize, gates: usize, seed: u64) -> (ParametricCircuit, Vec<f64>) {
        let mut rng = ShotRng::new(seed, 99);
        let dim = 1u64 << n;
        let pick = |rng: &mut ShotRng| -> PauliString {
            loop {
                let x = rng.next_u64() % dim;
                let z = rng.next_u64() % dim;
                let axes: Vec<Axis> = (0..n)
                    .map(|j| {
                        let bit = 1 << (n - 1 - j);
                        match (x & bit != 0, z & bit != 0) {
                            (false, false) => Axis::I,
                            (true, false) => Axis::X,
                            (true, true) => Axis::Y,
                            (false, true) => Axis::Z,
                        }
                    })
                    .collect();
                let p = PauliString::from_axes(&axes).unwrap();
                if !p.is_identity() {
                    return p;
                }
            }
        };
        let p_count = 3;
        let mut list = Vec::new();
        for _ in 0..gates {
            let mut template = PauliSum::zero(n).unwrap();
            let mut params = Vec::new();
            for k in 0..3 {
                let p = pick(&mut rng);
                if template.coefficient(&p) != 0.0 || params.iter().any(|(q, _)| *q == p) {
                    continue;
                }
                match k {
                    0 => params.push((p, ParamExpr::affine(rng.uniform() - 0.5, (rng.next_u64() % 3) as usize, 1.0))),
                    1 => params.push((
                        p,
                        ParamExpr::product((rng.next_u64() % 3) as usize, (rng.next_u64() % 3) as usize, rng.uniform()),
                    )),
                    _ => template.add_term(p, 2.0 * rng.uniform() - 1.0).unwrap(),
                }
            }
            list.push(Gate::new(template, params).unwrap());
        }
        let obs = ObservableSpec::new(PauliSum::from_string(pick(&mut rng), 1.0)).unwrap();
        let theta: Vec<f64> = (0..p_count).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        (ParametricCircuit::new(n, p_count, list, StateVector::zeros(n).unwrap(), obs).unwrap(), theta)
    }

    #[test]
    fn single_x_gate_cost() {
        let c = single_term_circuit(string("X"), sum(1, &[("Z", 1.0)])).unwrap();
        for x in [0.0, 0.3, 1.1] {
            assert!((c.evaluate(&[x]).unwrap() - libm::cos(2.0 * x)).abs() < 1e-14);
        }
        assert_eq!(c.evaluate(&[]).unwrap_err(), Error::ParameterCount { expected: 1, found: 0 });
    }

    #[test]
    fn empty_circuit_cost() {
        let c = ParametricCircuit::new(
            1,
            0,
            Vec::new(),
            StateVector::zeros(1).unwrap(),
            ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap(),
        )
        .unwrap();
        assert_eq!(c.evaluate(&[]).unwrap(), 1.0);
    }

    #[test]
    fn cross_resonance_templates() {
        let g = cross_resonance([0, 1, 2]);
        assert!(g.generator(&[0.0, 0.7, 0.3]).is_empty());
        let gen = g.generator(&[1.0, 0.5, 0.0]);
        let spec = Spectrum::of(&gen.to_matrix().unwrap());
        let distinct = spec.distinct_values(1e-9);
        assert_eq!(distinct.len(), 2);
        assert!((distinct[1] - libm::sqrt(1.25)).abs() < 1e-12);
        assert!((distinct[0] + libm::sqrt(1.25)).abs() < 1e-12);
    }

    #[test]
    fn cross_resonance_jacobian_matches_fd() {
        let g = cross_resonance([0, 1, 2]);
        let theta = [0.8, -1.3, 0.45];
        let eps = 1e-6;
        for p in 0..3 {
            let analytic = g.generator_partial(&theta, p);
            let mut a = theta;
            let mut b = theta;
            a[p] += eps;
            b[p] -= eps;
            let numeric = g.generator(&a).plus(&g.generator(&b).scaled(-1.0)).unwrap().scaled(0.5 / eps);
            for term in ["XI", "ZX", "IX"] {
                let s = string(term);
                assert!((analytic.coefficient(&s) - numeric.coefficient(&s)).abs() < 1e-8, "p={p} {term}");
            }
        }
        let partial_t = g.generator_partial(&theta, 0);
        assert_eq!(partial_t.coefficient(&string("XI")), 1.0);
        assert_eq!(partial_t.coefficient(&string("ZX")), 1.3);
        assert_eq!(partial_t.coefficient(&string("IX")), 0.45);
        let partial_b = g.generator_partial(&theta, 1);
        assert_eq!(partial_b.coefficient(&string("ZX")), -0.8);
        assert_eq!(partial_b.len(), 1);
    }

    #[test]
    fn cross_resonance_slice_parts() {
        let c = cross_resonance_circuit(sum(2, &[("YI", 1.0)])).unwrap();
        let theta = [0.9, 0.6, 0.4];
        let s = c.slice(&theta, 0, &string("ZX")).unwrap();
        assert!((s.coefficient() + 0.6 * 0.9).abs() < 1e-15);
        assert!((s.fixed_part().coefficient(&string("XI")) - 0.9).abs() < 1e-15);
        assert!((s.fixed_part().coefficient(&string("IX")) - 0.4 * 0.9).abs() < 1e-15);
        assert_eq!(s.fixed_part().len(), 2);
        assert_eq!(s.target_string(), Some((string("ZX"), 1.0)));
        assert!((s.cost() - c.evaluate(&theta).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn trivial_slice() {
        let c = single_term_circuit(string("X"), sum(1, &[("Z", 1.0)])).unwrap();
        let s = c.slice(&[0.4], 0, &string("X")).unwrap();
        assert!(s.fixed_part().is_empty());
        assert_eq!(s.target_string(), Some((string("X"), 1.0)));
        assert_eq!(s.prefix_state(), c.initial());
        assert!(matches!(c.slice(&[0.4], 0, &string("Y")), Err(Error::UnknownTerm { gate: 0, .. })));
        assert!(matches!(c.slice(&[0.4], 1, &string("X")), Err(Error::GateOutOfRange { .. })));
    }

    #[test]
    fn drift_gate_examples() {
        let h0 = sum(1, &[("X", 1.0)]);
        let h1 = sum(1, &[("Z", 1.0)]);
        let g = drift_gate([0, 1], &h0, &h1).unwrap();
        assert!(g.generator(&[0.0, 2.0]).is_empty());
        let obs = sum(1, &[("Y", 1.0)]);
        let c = ParametricCircuit::new(
            1,
            2,
            alloc::vec![g],
            StateVector::zeros(1).unwrap(),
            ObservableSpec::new(obs.clone()).unwrap(),
        )
        .unwrap();
        let (t, b) = (0.7, 1.3);
        let oracle_u = expm(&sum(1, &[("X", t), ("Z", b * t)]), 1.0).unwrap();
        let psi = oracle_u.column(0).into_owned();
        let y = obs.to_matrix().unwrap();
        let want = psi.dotc(&(&y * &psi)).re;
        assert!((c.evaluate(&[t, b]).unwrap() - want).abs() < 1e-10);
        assert!(drift_gate([0, 1], &h0, &sum(2, &[("ZZ", 1.0)])).is_err());
    }

    #[test]
    fn drift_gate_chain_rule() {
        let h0 = sum(2, &[("XI", 1.0), ("ZZ", 0.3)]);
        let h1 = sum(2, &[("IY", 1.0), ("ZZ", -0.5)]);
        let c = ParametricCircuit::new(
            2,
            2,
            alloc::vec![drift_gate([0, 1], &h0, &h1).unwrap()],
            StateVector::zeros(2).unwrap(),
            ObservableSpec::new(sum(2, &[("YX", 1.0), ("ZI", 0.4)])).unwrap(),
        )
        .unwrap();
        let theta = [0.8, 1.4];
        let eps = 1e-6;
        for p in 0..2 {
            let row = c.jacobian_row(&theta, p).unwrap();
            let mut chain = 0.0;
            for e in &row {
                let s = c.slice(&theta, e.gate, &e.term).unwrap();
                let x = s.coefficient();
                let d = (s.cost_at(x + eps).unwrap() - s.cost_at(x - eps).unwrap()) / (2.0 * eps);
                chain += d * e.value;
            }
            assert!((chain - fd(&c, &theta, p, eps)).abs() < 1e-7, "p={p}");
        }
    }

    #[test]
    fn drift_gate_jacobian_row() {
        let g = drift_gate([0, 1], &sum(1, &[("X", 1.0)]), &sum(1, &[("Z", 1.0)])).unwrap();
        let c = ParametricCircuit::new(
            1,
            2,
            alloc::vec![g],
            StateVector::zeros(1).unwrap(),
            ObservableSpec::new(sum(1, &[("Y", 1.0)])).unwrap(),
        )
        .unwrap();
        let row = c.jacobian_row(&[0.6, -0.75], 0).unwrap();
        let vals: Vec<f64> = row.iter().map(|e| e.value).collect();
        assert_eq!(vals, alloc::vec![1.0, -0.75]);
        let row_b = c.jacobian_row(&[0.6, -0.75], 1).unwrap();
        assert_eq!(row_b.len(), 1);
        assert_eq!(row_b[0].value, 0.6);
    }

    #[test]
    fn fidelity_examples() {
        let c = single_term_circuit(string("X"), sum(1, &[("Z", 1.0)])).unwrap();
        let x_gate = string("X").to_matrix().unwrap();
        assert!(control_fidelity(&c, &[0.0], &x_gate).unwrap().abs() < 1e-14);
        let u = c.unitary(&[0.37]).unwrap();
        assert!((control_fidelity(&c, &[0.37], &u).unwrap() - 1.0).abs() < 1e-12);
        let target = expm(&sum(1, &[("X", 0.3), ("Y", -0.8), ("Z", 0.5)]), 1.0).unwrap();
        for x in [0.0, 0.4, 1.3, 2.9] {
            let f = control_fidelity(&c, &[x], &target).unwrap();
            let oracle = trace_fidelity(&c.unitary(&[x]).unwrap(), &target);
            assert!((f - oracle).abs() < 1e-12);
        }
        let mut bad = x_gate.clone();
        bad[(0, 0)] = Complex64::new(0.1, 0.0);
        assert!(matches!(control_fidelity(&c, &[0.0], &bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn semigroup_split_of_gate() {
        let (c, theta) = random_circuit(2, 3, 17);
        let gens = c.generators(&theta).unwrap();
        let want = c.evaluate(&theta).unwrap();
        for s in [0.0, 0.25, 0.6, 1.0] {
            let mut split = Vec::new();
            for (t, g) in gens.iter().enumerate() {
                if t == 1 {
                    split.push(g.scaled(1.0 - s));
                    split.push(g.scaled(s));
                } else {
                    split.push(g.clone());
                }
            }
            let state = crate::circuit::apply_generators(c.initial(), &split).unwrap();
            assert!((c.observable().expectation(&state).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficient_slice_reassembles() {
        let mut template = PauliSum::zero(2).unwrap();
        template.add_term(string("XX"), 0.7).unwrap();
        let gate = Gate::new(template, alloc::vec![(string("ZY"), ParamExpr::linear(0, 1.0))]).unwrap();
        let c = ParametricCircuit::new(
            2,
            1,
            alloc::vec![Gate::fixed(sum(2, &[("YI", 0.3)])), gate],
            StateVector::zeros(2).unwrap(),
            ObservableSpec::new(sum(2, &[("ZZ", 1.0)])).unwrap(),
        )
        .unwrap();
        let s = c.slice(&[0.0], 1, &string("ZY")).unwrap();
        assert_eq!(s.coefficient(), 0.0);
        assert!((s.cost() - c.evaluate(&[0.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn model_b_without_dressing_equals_model_a() {
        for n in [2, 3] {
            let zero = PauliSum::zero(n).unwrap();
            let a = model_a_with(&zero).unwrap();
            let b = model_b_with(&zero).unwrap();
            for x in [0.0, 0.4, 1.9] {
                assert_eq!(a.evaluate(&[x]).unwrap(), b.evaluate(&[x]).unwrap());
            }
        }
    }

    #[test]
    fn ising_hamiltonian_terms() {
        let h = ising_hamiltonian(3).unwrap();
        assert_eq!(h.coefficient(&string("XXI")), 1.0);
        assert_eq!(h.coefficient(&string("XIX")), 1.0);
        assert_eq!(h.coefficient(&string("IZI")), 0.5);
        assert!((h.coefficient(&string("IIX")) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.len(), 9);
        assert_eq!(ising_hamiltonian(2).unwrap().coefficient(&string("XX")), 2.0);
        let a = model_a(3).unwrap();
        let s = a.slice(&[0.2], 0, &string("ZII")).unwrap();
        assert!((s.coefficient() - 0.7).abs() < 1e-15);
        assert_eq!(s.fixed_part().coefficient(&string("ZII")), 0.0);
    }

    #[test]
    fn custom_coefficient() {
        let f = FnCoefficient {
            value: |th: &[f64]| libm::sin(th[0]) * th[1],
            partial: |th: &[f64], p| if p == 0 { libm::cos(th[0]) * th[1] } else { libm::sin(th[0]) },
            deps: alloc::vec![0, 1],
        };
        let gate = Gate::new(PauliSum::zero(1).unwrap(), alloc::vec![(string("Y"), ParamExpr::custom(f))]).unwrap();
        let c = ParametricCircuit::new(
            1,
            2,
            alloc::vec![gate],
            StateVector::zeros(1).unwrap(),
            ObservableSpec::new(sum(1, &[("Z", 1.0)])).unwrap(),
        )
        .unwrap();
        let theta = [0.5, 1.2];
        let row = c.jacobian_row(&theta, 0).unwrap();
        assert_eq!(row.len(), 1);
        assert!((row[0].value - libm::cos(0.5) * 1.2).abs() < 1e-15);
    }

    #[test]
    fn from_matrix_gate_decomposes() {
        let m = sum(2, &[("XY", 0.3), ("ZZ", -1.0)]).to_matrix().unwrap();
        let g = Gate::from_matrix(&m, Vec::new()).unwrap();
        assert!((g.template().coefficient(&string("XY")) - 0.3).abs() < 1e-14);
        assert!(max_abs_diff(&g.template().to_matrix().unwrap(), &m) < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn slices_reassemble(seed in 0u64..10_000, n in 1usize..=2) {
            let (c, theta) = random_circuit(n, 3, seed);
            let want = c.evaluate(&theta).unwrap();
            for (t, g) in c.gates().iter().enumerate() {
                for (term, _) in g.params() {
                    let s = c.slice(&theta, t, term).unwrap();
                    prop_assert!((s.cost() - want).abs() < 1e-10);
                    let fin = s.final_state();
                    prop_assert!((c.observable().expectation(&fin).unwrap() - want).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn leibniz_consistency(seed in 0u64..10_000) {
            let (c, theta) = random_circuit(2, 3, seed);
            let eps = 1e-5;
            for p in 0..c.param_count() {
                let mut chain = 0.0;
                for e in c.jacobian_row(&theta, p).unwrap() {
                    let s = c.slice(&theta, e.gate, &e.term).unwrap();
                    let x = s.coefficient();
                    let d = (s.cost_at(x + eps).unwrap() - s.cost_at(x - eps).unwrap()) / (2.0 * eps);
                    chain += d * e.value;
                }
                let want = fd(&c, &theta, p, eps);
                prop_assert!((chain - want).abs() <= f64::max(1e-6, 1e-4 * want.abs()));
            }
        }

        #[test]
        fn jacobian_matches_fd(seed in 0u64..10_000) {
            let (c, theta) = random_circuit(2, 2, seed);
            let eps = 1e-6;
            for p in 0..c.param_count() {
                for e in c.jacobian_row(&theta, p).unwrap() {
                    let expr = c.gates()[e.gate].param_for(&e.term).unwrap();
                    let mut a = theta.clone();
                    let mut b = theta.clone();
                    a[p] += eps;
                    b[p] -= eps;
                    let num = (expr.value(&a) - expr.value(&b)) / (2.0 * eps);
                    prop_assert!((num - e.value).abs() < 1e-6);
                }
            }
        }
    }
}
