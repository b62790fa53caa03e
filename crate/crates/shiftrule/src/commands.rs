//! Command bodies, kept apart from argument parsing so they can be called from tests.

use serde::Serialize;
use serde_json::json;
use shiftrule_core::gradients::estimate_gradient;
use shiftrule_core::metric::{metric_tensor, MetricMode, DEFAULT_METRIC_NODES, DEFAULT_REGULARIZER};
use shiftrule_core::noise::tau_gradient_unsupported;
use shiftrule_core::optimize::{adam_run, sgd_run, Adam, GradientSource, NaturalGradient, OptimizerConfig};
use shiftrule_core::{EstimatorConfig, GradientEstimate};

use crate::error::{CliError, CliResult};
use crate::executor::ParallelShots;
use crate::schema::{load_circuit, LoadedCircuit, RunConfig, SourceName};
use crate::table::{Cell, Table};

/// Which quantity a noisy-gate gradient is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wrt {
    Theta,
    Tau,
}

#[derive(Clone, Debug)]
pub struct GradRequest {
    pub circuit: String,
    pub theta: Option<Vec<f64>>,
    pub param: usize,
    pub estimator: String,
    pub shots: usize,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub wrt: Wrt,
}

#[derive(Serialize)]
struct GradOutput<'a> {
    estimator: &'a str,
    param: usize,
    theta: &'a [f64],
    mean: f64,
    sample_variance: f64,
    sem: f64,
    shots: usize,
    seed: u64,
}

fn theta_for(loaded: &LoadedCircuit, theta: Option<Vec<f64>>) -> CliResult<Vec<f64>> {
    let n = loaded.param_count();
    let theta = match (theta, loaded) {
        (Some(t), _) => t,
        (None, LoadedCircuit::Noisy(c)) => c.thetas(),
        (None, LoadedCircuit::Unitary(_)) if n == 0 => Vec::new(),
        (None, LoadedCircuit::Unitary(_)) => {
            return Err(CliError::Usage(format!("--theta needs {n} comma-separated values")));
        }
    };
    if theta.len() != n {
        return Err(CliError::Usage(format!("--theta has {} values, the circuit has {n} parameters", theta.len())));
    }
    Ok(theta)
}

/// Gradient estimate as a JSON object.
pub fn grad(req: &GradRequest) -> CliResult<String> {
    let loaded = load_circuit(&req.circuit)?;
    let theta = theta_for(&loaded, req.theta.clone())?;
    if req.param >= loaded.param_count() {
        return Err(CliError::Usage(format!(
            "--param {} out of range for {} parameters",
            req.param,
            loaded.param_count()
        )));
    }
    let mut cfg = EstimatorConfig::new(req.shots, req.seed);
    if let Some(eps) = req.epsilon {
        cfg = cfg.approximate(eps);
    }
    let estimate: GradientEstimate = match &loaded {
        LoadedCircuit::Unitary(c) => {
            if req.wrt == Wrt::Tau {
                return Err(CliError::Usage("--wrt tau applies to noisy gates only".into()));
            }
            let estimator = shiftrule_core::Estimator::parse(&req.estimator)
                .ok_or_else(|| CliError::Usage(format!("unknown estimator \"{}\"", req.estimator)))?;
            estimate_gradient(c, &theta, req.param, estimator, &cfg, &ParallelShots)?
        }
        LoadedCircuit::Noisy(c) => {
            if req.wrt == Wrt::Tau {
                return Err(tau_gradient_unsupported(c.noisy_specs()[req.param]).into());
            }
            if req.estimator != "spsr" {
                return Err(CliError::Usage("noisy circuits support the spsr estimator only".into()));
            }
            c.theta_gradient(&theta, req.param, &cfg, &ParallelShots)?
        }
    };
    let out = GradOutput {
        estimator: &estimate.estimator,
        param: req.param,
        theta: &theta,
        mean: estimate.mean,
        sample_variance: estimate.sample_variance,
        sem: estimate.sem(),
        shots: estimate.shots,
        seed: estimate.seed,
    };
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

#[derive(Clone, Debug)]
pub struct OptimizeRequest {
    pub circuit: String,
    pub config: String,
    pub natural: Option<NaturalGradient>,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
}

/// Optimizer history as CSV: `iteration, theta_0…, C_estimate`.
pub fn optimize(req: &OptimizeRequest) -> CliResult<Table> {
    let loaded = load_circuit(&req.circuit)?;
    let circuit = loaded
        .unitary()
        .ok_or_else(|| CliError::Usage("optimize needs a circuit without noisy gates".into()))?;
    let mut run = RunConfig::parse(&req.config)?;
    if let Some(seed) = req.seed {
        run.seed = seed;
    }
    if let Some(shots) = req.shots {
        run.shots = Some(shots);
    }
    let theta0 = match &run.theta0 {
        Some(t) => t.clone(),
        None => vec![0.0; circuit.param_count()],
    };
    if theta0.len() != circuit.param_count() {
        return Err(CliError::Usage(format!(
            "theta0 has {} values, the circuit has {} parameters",
            theta0.len(),
            circuit.param_count()
        )));
    }
    let source = match run.source()? {
        SourceName::Exact => GradientSource::Exact,
        SourceName::Sampled(estimator) => {
            let mut config = EstimatorConfig::new(run.shots.unwrap_or(1000), run.seed);
            if let Some(eps) = run.epsilon {
                config = config.approximate(eps);
            }
            GradientSource::Sampled { estimator, config }
        }
    };
    let mut cfg = OptimizerConfig::new(run.iterations, run.direction()?, source);
    cfg.learning_rate = run.eta;
    cfg.natural = req.natural;
    let state = if run.method == "adam" {
        adam_run(circuit, &theta0, &cfg, Adam::default(), &ParallelShots)?
    } else {
        sgd_run(circuit, &theta0, &cfg, &ParallelShots)?
    };
    let mut columns = vec!["iteration".to_string()];
    columns.extend((0..theta0.len()).map(|p| format!("theta_{p}")));
    columns.push("C_estimate".into());
    let header = json!({
        "command": "optimize",
        "run": run,
        "natural_gradient": req.natural.map(|n| json!({
            "metric": match n.mode { MetricMode::Full => "full", MetricMode::Diagonal => "diagonal" },
            "regularizer": n.regularizer,
        })),
        "C_estimate": "exact expectation at the recorded parameters",
    });
    let mut table = Table { config: header, columns, rows: Vec::new() };
    for (k, h) in state.history.iter().enumerate() {
        let mut row: Vec<Cell> = vec![k.into()];
        row.extend(h.theta.iter().map(|&t| Cell::Num(t)));
        row.push(h.cost.into());
        table.rows.push(row);
    }
    Ok(table)
}

pub fn natural_options(enabled: bool, mode: &str, regularizer: Option<f64>) -> CliResult<Option<NaturalGradient>> {
    if !enabled {
        return Ok(None);
    }
    let mode = MetricMode::parse(mode)
        .ok_or_else(|| CliError::Usage(format!("unknown metric mode \"{mode}\" (expected full or diagonal)")))?;
    Ok(Some(NaturalGradient {
        mode,
        regularizer: regularizer.unwrap_or(DEFAULT_REGULARIZER),
        quad_points: DEFAULT_METRIC_NODES,
    }))
}

/// Metric tensor as JSON: `{"theta": [...], "mode": ..., "metric": [[...], ...]}`.
pub fn metric(circuit: &str, theta: Option<Vec<f64>>, mode: &str, quad_points: usize) -> CliResult<String> {
    let loaded = load_circuit(circuit)?;
    let c = loaded
        .unitary()
        .ok_or_else(|| CliError::Usage("metric needs a circuit without noisy gates".into()))?;
    let theta = theta_for(&loaded, theta)?;
    let parsed = MetricMode::parse(mode)
        .ok_or_else(|| CliError::Usage(format!("unknown metric mode \"{mode}\" (expected full or diagonal)")))?;
    let f = metric_tensor(c, &theta, parsed, quad_points)?;
    let rows: Vec<Vec<f64>> = (0..f.nrows()).map(|i| (0..f.ncols()).map(|j| f[(i, j)]).collect()).collect();
    let out = json!({"theta": theta, "mode": mode, "quad_points": quad_points, "metric": rows});
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}
