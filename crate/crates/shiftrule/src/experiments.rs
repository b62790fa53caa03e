//! Sweeps over the cross-resonance gate and the many-body models, written as CSV tables.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::json;
use shiftrule_core::families::{cross_resonance_circuit, model_a, model_b};
use shiftrule_core::gradients::{estimate_gradient, finite_difference};
use shiftrule_core::rng::derive_seed;
use shiftrule_core::{Estimator, EstimatorConfig, GradientEstimate, ParametricCircuit, PauliSum};

use crate::error::{CliError, CliResult};
use crate::executor::ParallelShots;
use crate::table::{Cell, Table};

pub const DEFAULT_POINTS: usize = 41;
pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentName {
    Fig2a,
    Fig2b,
    Fig5,
    Fig6a,
    Fig6b,
    Fig7,
    Custom,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        ExperimentName::Fig2a,
        ExperimentName::Fig2b,
        ExperimentName::Fig5,
        ExperimentName::Fig6a,
        ExperimentName::Fig6b,
        ExperimentName::Fig7,
        ExperimentName::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::Fig2a => "fig2a",
            ExperimentName::Fig2b => "fig2b",
            ExperimentName::Fig5 => "fig5",
            ExperimentName::Fig6a => "fig6a",
            ExperimentName::Fig6b => "fig6b",
            ExperimentName::Fig7 => "fig7",
            ExperimentName::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn default_shots(self) -> usize {
        match self {
            ExperimentName::Fig5 => 10_000,
            _ => 1000,
        }
    }
}

/// A user circuit swept along one parameter.
#[derive(Clone, Debug)]
pub struct CustomSweep {
    pub circuit: ParametricCircuit,
    pub source: String,
    pub param: usize,
    pub base_theta: Vec<f64>,
    pub from: f64,
    pub to: f64,
    pub estimator: Estimator,
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub points: usize,
    pub shots: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Qubit counts for the many-body sweeps; defaults per experiment when empty.
    pub sizes: Vec<usize>,
    pub custom: Option<CustomSweep>,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, seed: u64) -> Self {
        ExperimentSpec {
            name,
            points: DEFAULT_POINTS,
            shots: name.default_shots(),
            seed,
            epsilon: DEFAULT_EPSILON,
            sizes: Vec::new(),
            custom: None,
        }
    }

    fn check(&self) -> CliResult<()> {
        if self.points == 0 {
            return Err(CliError::Usage("grid needs at least one point".into()));
        }
        if self.shots == 0 {
            return Err(CliError::Usage("shots must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(CliError::Usage(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    fn sizes_or(&self, default: &[usize]) -> Vec<usize> {
        if self.sizes.is_empty() {
            default.to_vec()
        } else {
            self.sizes.clone()
        }
    }

    fn header(&self, extra: serde_json::Value) -> serde_json::Value {
        let mut v = json!({
            "experiment": self.name.name(),
            "seed": self.seed,
            "shots": self.shots,
            "points": self.points,
            "grid": "uniform, endpoints included; resolution is a default choice",
        });
        if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
            obj.extend(more);
        }
        v
    }
}

/// `n` uniform points on `[lo, hi]`, endpoints included.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Seed for one table row: experiment seed, series tag, grid index.
fn row_seed(seed: u64, series: u64, index: usize) -> u64 {
    derive_seed(derive_seed(seed, series), index as u64)
}

fn estimate(
    circuit: &ParametricCircuit,
    theta: &[f64],
    p: usize,
    estimator: Estimator,
    cfg: EstimatorConfig,
) -> CliResult<GradientEstimate> {
    Ok(estimate_gradient(circuit, theta, p, estimator, &cfg, &ParallelShots)?)
}

fn labels(n: usize, terms: &[(&str, f64)]) -> PauliSum {
    PauliSum::parse(n, terms.iter().copied()).expect("static labels")
}

pub fn run_experiment(spec: &ExperimentSpec) -> CliResult<Table> {
    spec.check()?;
    let table = match spec.name {
        ExperimentName::Fig2a => fig2(spec, Fig2::A)?,
        ExperimentName::Fig2b => fig2(spec, Fig2::B)?,
        ExperimentName::Fig5 => fig5(spec)?,
        ExperimentName::Fig6a => fig6(spec, Estimator::Spsr)?,
        ExperimentName::Fig6b => fig6(spec, Estimator::Psr)?,
        ExperimentName::Fig7 => fig7(spec)?,
        ExperimentName::Custom => custom(spec)?,
    };
    table.check_finite()?;
    Ok(table)
}

#[derive(Clone, Copy, PartialEq)]
enum Fig2 {
    A,
    B,
}

/// `∂_t C` (A: `c = 0`, `Ĉ = YI`) or `∂_b C` (B: `c = √2`, `Ĉ = YY`) against central differences.
fn fig2(spec: &ExperimentSpec, which: Fig2) -> CliResult<Table> {
    let series = [0.5, 1.0, 2.0];
    let (obs, c, p, sweep, fixed_name, sweep_name, lo, hi) = match which {
        Fig2::A => ("YI", 0.0, 0usize, "t", "b", "t", 0.0, PI),
        Fig2::B => ("YY", 2f64.sqrt(), 1usize, "b", "t", "b", -2.0, 2.0),
    };
    let circuit = cross_resonance_circuit(labels(2, &[(obs, 1.0)]))?;
    let xs = grid(lo, hi, spec.points);
    let jobs: Vec<(usize, usize)> = (0..series.len()).flat_map(|k| (0..xs.len()).map(move |i| (k, i))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(k, i)| -> CliResult<Vec<Cell>> {
            let theta = match which {
                Fig2::A => [xs[i], series[k], c],
                Fig2::B => [series[k], xs[i], c],
            };
            let index = k * xs.len() + i;
            let fd = finite_difference(&circuit, &theta, p, FD_STEP)?;
            let exact = estimate(&circuit, &theta, p, Estimator::Spsr, EstimatorConfig::new(spec.shots, row_seed(spec.seed, 1, index)))?;
            let approx_cfg = EstimatorConfig::new(spec.shots, row_seed(spec.seed, 2, index)).approximate(spec.epsilon);
            let approx = estimate(&circuit, &theta, p, Estimator::Spsr, approx_cfg)?;
            Ok(vec![
                series[k].into(),
                xs[i].into(),
                fd.into(),
                exact.mean.into(),
                exact.sem().into(),
                approx.mean.into(),
                approx.sem().into(),
            ])
        })
        .collect::<CliResult<Vec<_>>>()?;
    let header = spec.header(json!({
        "observable": obs,
        "c": c,
        "derivative": sweep,
        "series": {fixed_name: series},
        "sweep": {sweep_name: [lo, hi]},
        "epsilon": spec.epsilon,
        "fd_step": FD_STEP,
    }));
    let mut table = Table::new(header, &[fixed_name, sweep_name, "fd_value", "spsr_mean", "spsr_sem", "approx_mean", "approx_sem"]);
    table.rows = rows;
    Ok(table)
}

pub const FIG5_ALGORITHMS: [&str; 3] = ["psr", "spsr", "approx"];

/// Empirical std of the `∂_t C` estimators on the `c = 0` cross-resonance gate with `Ĉ = YY`.
fn fig5(spec: &ExperimentSpec) -> CliResult<Table> {
    let series = [0.5, 1.0, 2.0];
    let circuit = cross_resonance_circuit(labels(2, &[("YY", 1.0)]))?;
    let ts = grid(0.0, PI, spec.points);
    let mut jobs = Vec::new();
    for k in 0..series.len() {
        for i in 0..ts.len() {
            for a in 0..FIG5_ALGORITHMS.len() {
                jobs.push((k, i, a));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(k, i, a)| -> CliResult<Vec<Cell>> {
            let theta = [ts[i], series[k], 0.0];
            let seed = row_seed(spec.seed, 10 + a as u64, k * ts.len() + i);
            let e = match FIG5_ALGORITHMS[a] {
                "psr" => estimate(&circuit, &theta, 0, Estimator::Psr, EstimatorConfig::new(spec.shots, seed))?,
                "spsr" => estimate(&circuit, &theta, 0, Estimator::Spsr, EstimatorConfig::new(spec.shots, seed))?,
                _ => estimate(
                    &circuit,
                    &theta,
                    0,
                    Estimator::Spsr,
                    EstimatorConfig::new(spec.shots, seed).approximate(spec.epsilon),
                )?,
            };
            let fd = finite_difference(&circuit, &theta, 0, FD_STEP)?;
            Ok(vec![
                series[k].into(),
                ts[i].into(),
                FIG5_ALGORITHMS[a].into(),
                e.mean.into(),
                e.std_dev().into(),
                fd.into(),
            ])
        })
        .collect::<CliResult<Vec<_>>>()?;
    let header = spec.header(json!({
        "observable": "YY",
        "c": 0.0,
        "derivative": "t",
        "series": {"b": series},
        "sweep": {"t": [0.0, PI]},
        "epsilon": spec.epsilon,
    }));
    let mut table = Table::new(header, &["b", "t", "algorithm", "mean", "std", "fd_value"]);
    table.rows = rows;
    Ok(table)
}

/// Std of SPSR on model A (or PSR on model B) along `x ∈ [0, π]`.
fn fig6(spec: &ExperimentSpec, estimator: Estimator) -> CliResult<Table> {
    let sizes = spec.sizes_or(&[2, 3, 4, 5, 6]);
    let xs = grid(0.0, PI, spec.points);
    let (label, tag) = match estimator {
        Estimator::Psr => ("B", 21),
        _ => ("A", 20),
    };
    let circuits = sizes
        .iter()
        .map(|&n| if label == "A" { model_a(n) } else { model_b(n) })
        .collect::<shiftrule_core::Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..sizes.len()).flat_map(|k| (0..xs.len()).map(move |i| (k, i))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(k, i)| -> CliResult<Vec<Cell>> {
            let theta = [xs[i]];
            let cfg = EstimatorConfig::new(spec.shots, row_seed(spec.seed, tag, k * xs.len() + i));
            let e = estimate(&circuits[k], &theta, 0, estimator, cfg)?;
            let fd = finite_difference(&circuits[k], &theta, 0, FD_STEP)?;
            Ok(vec![sizes[k].into(), xs[i].into(), e.mean.into(), e.std_dev().into(), fd.into()])
        })
        .collect::<CliResult<Vec<_>>>()?;
    let header = spec.header(json!({
        "model": label,
        "estimator": estimator.name(),
        "sizes": sizes,
        "sweep": {"x": [0.0, PI]},
    }));
    let mut table = Table::new(header, &["n", "x", "mean", "std", "fd_value"]);
    table.rows = rows;
    Ok(table)
}

/// SPSR mean and standard error against central differences on model A.
fn fig7(spec: &ExperimentSpec) -> CliResult<Table> {
    let sizes = spec.sizes_or(&[2, 3, 4]);
    let xs = grid(0.0, PI, spec.points);
    let circuits = sizes.iter().map(|&n| model_a(n)).collect::<shiftrule_core::Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..sizes.len()).flat_map(|k| (0..xs.len()).map(move |i| (k, i))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(k, i)| -> CliResult<Vec<Cell>> {
            let theta = [xs[i]];
            let cfg = EstimatorConfig::new(spec.shots, row_seed(spec.seed, 30, k * xs.len() + i));
            let e = estimate(&circuits[k], &theta, 0, Estimator::Spsr, cfg)?;
            let fd = finite_difference(&circuits[k], &theta, 0, FD_STEP)?;
            Ok(vec![sizes[k].into(), xs[i].into(), fd.into(), e.mean.into(), e.sem().into()])
        })
        .collect::<CliResult<Vec<_>>>()?;
    let header = spec.header(json!({
        "model": "A",
        "estimator": "spsr",
        "sizes": sizes,
        "sweep": {"x": [0.0, PI]},
        "fd_step": FD_STEP,
    }));
    let mut table = Table::new(header, &["n", "x", "fd_value", "spsr_mean", "spsr_sem"]);
    table.rows = rows;
    Ok(table)
}

/// One parameter of a user circuit swept over `[from, to]`.
fn custom(spec: &ExperimentSpec) -> CliResult<Table> {
    let sweep = spec
        .custom
        .as_ref()
        .ok_or_else(|| CliError::Usage("the custom experiment needs --circuit and --param".into()))?;
    let xs = grid(sweep.from, sweep.to, spec.points);
    let rows = (0..xs.len())
        .into_par_iter()
        .map(|i| -> CliResult<Vec<Cell>> {
            let mut theta = sweep.base_theta.clone();
            theta[sweep.param] = xs[i];
            let cfg = EstimatorConfig::new(spec.shots, row_seed(spec.seed, 40, i));
            let e = estimate(&sweep.circuit, &theta, sweep.param, sweep.estimator, cfg)?;
            let fd = finite_difference(&sweep.circuit, &theta, sweep.param, FD_STEP)?;
            Ok(vec![xs[i].into(), fd.into(), e.mean.into(), e.sem().into(), e.std_dev().into()])
        })
        .collect::<CliResult<Vec<_>>>()?;
    let header = spec.header(json!({
        "circuit": sweep.source,
        "param": sweep.param,
        "base_theta": sweep.base_theta,
        "estimator": sweep.estimator.name(),
        "sweep": {"x": [sweep.from, sweep.to]},
    }));
    let mut table = Table::new(header, &["x", "fd_value", "mean", "sem", "std"]);
    table.rows = rows;
    Ok(table)
}
