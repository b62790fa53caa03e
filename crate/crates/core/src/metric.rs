//! Metric tensor `F_{p,p′} = Tr[∂_p ρ ∂_{p′} ρ]` from shifted states, and natural-gradient steps.
//!
//! For a term `(t, ν)`, `∂ρ/∂x = Σ_α α ∫₀¹ ρ_{s,α} ds` where `ρ_{s,α}` is the final state with
//! gate `t` replaced by `U_α(x, s)`. Overlaps `Tr[ρ₁ρ₂]` are evaluated directly.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{CircuitSlice, JacobianEntry, ParametricCircuit};
use crate::error::{Error, Result};
use crate::estimate::{collect, mean_variance, ShotExecutor};
use crate::gradients::{EstimatorConfig, Pulse, ShiftKernel, Sign};
use crate::linalg::{CMatrix, CVector, Spectrum};
use crate::optimize::Direction;
use crate::pauli::PauliString;
use crate::quadrature::GaussLegendre;

/// Default regularizer added to the metric before solving.
pub const DEFAULT_REGULARIZER: f64 = 1e-3;

/// Default number of quadrature nodes per axis.
pub const DEFAULT_METRIC_NODES: usize = 32;

/// Real symmetric metric over the circuit parameters.
pub type MetricMatrix = DMatrix<f64>;

/// A gate-term pair `(t, ν)`.
pub type TermIndex = (usize, PauliString);

#[derive(Clone, Debug, PartialEq)]
pub struct MetricEstimate {
    pub indices: (TermIndex, TermIndex),
    pub mean: f64,
    pub variance: f64,
    pub shots: usize,
}

impl MetricEstimate {
    pub fn sem(&self) -> f64 {
        libm::sqrt(self.variance / self.shots as f64)
    }
}

/// Full metric or only its diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricMode {
    Full,
    Diagonal,
}

impl MetricMode {
    pub fn parse(name: &str) -> Option<MetricMode> {
        match name {
            "full" => Some(MetricMode::Full),
            "diagonal" => Some(MetricMode::Diagonal),
            _ => None,
        }
    }
}

/// Final states `U_{t+} U_±(x, s)|φ⟩` of one slice.
struct ShiftedStates {
    kernel: ShiftKernel,
    suffix: CMatrix,
}

impl ShiftedStates {
    fn new(slice: &CircuitSlice, pulse: Pulse) -> Result<Self> {
        Ok(ShiftedStates { kernel: ShiftKernel::new(slice, pulse)?, suffix: slice.suffix_unitary().clone() })
    }

    fn state(&self, s: f64, alpha: f64) -> CVector {
        let sign = if alpha > 0.0 { Sign::Plus } else { Sign::Minus };
        &self.suffix * self.kernel.shifted_state(s, sign)
    }

    /// `Σ_α α ∫ ρ_{s,α} ds` by quadrature.
    fn derivative(&self, quad: &GaussLegendre) -> CMatrix {
        let d = self.suffix.nrows();
        let mut out = CMatrix::zeros(d, d);
        for (s, w) in quad.pairs() {
            for alpha in [1.0, -1.0] {
                let v = self.state(s, alpha);
                out += (&v * v.adjoint()).scale(alpha * w);
            }
        }
        out
    }
}

fn overlap(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm_sqr()
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// `Σ_{α,α′} αα′ ∫∫ Tr[ρ_{i,s,α} ρ_{j,s′,α′}] ds ds′` on a tensor Gauss–Legendre grid.
pub fn metric_element_expected(
    circuit: &ParametricCircuit,
    theta: &[f64],
    i: &TermIndex,
    j: &TermIndex,
    quad_points: usize,
) -> Result<f64> {
    let quad = GaussLegendre::new(quad_points)?;
    let di = ShiftedStates::new(&circuit.slice(theta, i.0, &i.1)?, Pulse::Exact)?.derivative(&quad);
    if i == j {
        return Ok(trace_product(&di, &di));
    }
    let dj = ShiftedStates::new(&circuit.slice(theta, j.0, &j.1)?, Pulse::Exact)?.derivative(&quad);
    Ok(trace_product(&di, &dj))
}

/// Monte Carlo over `(s, s′, α, α′)`, symmetrized so that swapping `i` and `j` gives the same samples.
pub fn metric_element_sampled<E: ShotExecutor + ?Sized>(
    circuit: &ParametricCircuit,
    theta: &[f64],
    i: &TermIndex,
    j: &TermIndex,
    cfg: &EstimatorConfig,
    executor: &E,
) -> Result<MetricEstimate> {
    cfg.check()?;
    let si = ShiftedStates::new(&circuit.slice(theta, i.0, &i.1)?, cfg.pulse)?;
    let sj = ShiftedStates::new(&circuit.slice(theta, j.0, &j.1)?, cfg.pulse)?;
    let samples = collect(executor, cfg.shots, cfg.seed, |rng| {
        let (s, s2) = (rng.uniform(), rng.uniform());
        let (a, a2) = (rng.coin(), rng.coin());
        let forward = overlap(&si.state(s, a), &sj.state(s2, a2));
        let backward = overlap(&si.state(s2, a2), &sj.state(s, a));
        2.0 * a * a2 * (forward + backward)
    })?;
    let (mean, variance) = mean_variance(&samples)?;
    Ok(MetricEstimate { indices: (*i, *j), mean, variance, shots: samples.len() })
}

/// `2(F₂ − F₁²)` with `F₁ = ⟨φ|Ṽ|φ⟩`, `F₂ = ⟨φ|Ṽ²|φ⟩` and `Ṽ = ∫₀¹ e^{−iuG} V̂ e^{iuG} du`.
pub fn diagonal_via_f1f2(slice: &CircuitSlice, quad_points: usize) -> Result<f64> {
    let quad = GaussLegendre::new(quad_points)?;
    let spectrum: &Spectrum = slice.generator_spectrum();
    let v = slice.target().to_matrix()?;
    let d = v.nrows();
    let phi = slice.prefix_state().amplitudes();
    let mut f1 = 0.0;
    let mut vt_phi = CVector::zeros(d);
    for (u, w) in quad.pairs() {
        // V̂c(u)|φ⟩ = e^{−iuG} V̂ e^{iuG} |φ⟩
        let rotated = spectrum.apply_exp_i(-u, &(&v * spectrum.apply_exp_i(u, phi)));
        f1 += w * phi.dotc(&rotated).re;
        vt_phi += rotated * Complex64::new(w, 0.0);
    }
    let f2 = vt_phi.norm_squared();
    Ok(2.0 * (f2 - f1 * f1))
}

/// `F = Jᵀ F_terms J` over all parameters.
pub fn metric_tensor(circuit: &ParametricCircuit, theta: &[f64], mode: MetricMode, quad_points: usize) -> Result<MetricMatrix> {
    let quad = GaussLegendre::new(quad_points)?;
    let np = circuit.param_count();
    let rows: Vec<Vec<JacobianEntry>> =
        (0..np).map(|p| circuit.jacobian_row(theta, p)).collect::<Result<_>>()?;
    let mut derivs: BTreeMap<(usize, PauliString), CMatrix> = BTreeMap::new();
    for e in rows.iter().flatten() {
        let key = (e.gate, e.term);
        if e.value != 0.0 && !derivs.contains_key(&key) {
            let slice = circuit.slice(theta, e.gate, &e.term)?;
            derivs.insert(key, ShiftedStates::new(&slice, Pulse::Exact)?.derivative(&quad));
        }
    }
    // ∂_p ρ = Σ J ∂ρ/∂x
    let d = 1usize << circuit.qubits();
    let param_derivs: Vec<CMatrix> = rows
        .iter()
        .map(|row| {
            let mut m = CMatrix::zeros(d, d);
            for e in row.iter().filter(|e| e.value != 0.0) {
                m += derivs[&(e.gate, e.term)].scale(e.value);
            }
            m
        })
        .collect();
    let mut f = MetricMatrix::zeros(np, np);
    for p in 0..np {
        f[(p, p)] = trace_product(&param_derivs[p], &param_derivs[p]);
        if mode == MetricMode::Full {
            for q in 0..p {
                let v = trace_product(&param_derivs[p], &param_derivs[q]);
                f[(p, q)] = v;
                f[(q, p)] = v;
            }
        }
    }
    Ok(f)
}

/// `θ ± η (F + λ1)⁻¹ g`, with `+` for ascent.
pub fn natural_gradient_step(
    theta: &[f64],
    grad: &[f64],
    metric: &MetricMatrix,
    learning_rate: f64,
    regularizer: f64,
    direction: Direction,
) -> Result<Vec<f64>> {
    let n = theta.len();
    if grad.len() != n {
        return Err(Error::ParameterCount { expected: n, found: grad.len() });
    }
    if metric.nrows() != n || metric.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: metric.nrows() });
    }
    let reg = metric + MetricMatrix::identity(n, n) * regularizer;
    let g = nalgebra::DVector::from_column_slice(grad);
    let lu = reg.lu();
    let step = lu.solve(&g).ok_or(Error::SingularMetric)?;
    if step.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMetric);
    }
    let sign = direction.sign();
    Ok(theta.iter().zip(step.iter()).map(|(t, s)| t + sign * learning_rate * s).collect())
}
