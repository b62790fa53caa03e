//! JSON formats: circuits (with optional noisy blocks or a pulse section) and optimizer runs.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;
use shiftrule_core::circuit::{FourierMode, FourierSeries, Polynomial};
use shiftrule_core::noise::{Block, NoisyCircuit, NoisyGateSpec};
use shiftrule_core::optimize::{build_control_circuit, PulseKind, PulseModel};
use shiftrule_core::{
    Complex64, DensityMatrix, Direction, Estimator, Gate, ObservableSpec, ParamExpr, ParametricCircuit, PauliString, PauliSum,
    StateVector,
};

/// A malformed input file, with the position or field path of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl SchemaError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into(), line: None, column: None }
    }

    fn from_json(err: serde_json::Error) -> Self {
        SchemaError { path: String::new(), message: err.to_string(), line: Some(err.line()), column: Some(err.column()) }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.path.is_empty()) {
            (Some(_), _) => write!(f, "schema error: {}", self.message),
            (None, false) => write!(f, "schema error at {}: {}", self.path, self.message),
            (None, true) => write!(f, "schema error: {}", self.message),
        }
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub qubits: usize,
    /// Number of parameters; inferred from the expressions when absent.
    #[serde(default)]
    pub params: Option<usize>,
    #[serde(default)]
    pub gates: Vec<GateEntry>,
    #[serde(default)]
    pub pulse: Option<PulseFile>,
    #[serde(default)]
    pub initial: InitialFile,
    pub observable: BTreeMap<String, f64>,
}

/// A unitary gate (`generator` plus optional `params`) or a `noisy` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateEntry {
    #[serde(default)]
    pub generator: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub params: Vec<ParamFile>,
    #[serde(default)]
    pub noisy: Option<NoisyFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub pauli: String,
    pub expr: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoisyFile {
    #[serde(default)]
    pub name: Option<String>,
    pub register_h: BTreeMap<String, f64>,
    pub coupling_h: BTreeMap<String, f64>,
    pub env_qubits: usize,
    pub tau: f64,
    pub theta: f64,
    /// Environment density matrix as `[[[re, im], ...], ...]`; `|0…0⟩` when absent.
    #[serde(default)]
    pub env_state: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub kind: String,
    pub steps: usize,
    pub horizon: f64,
    pub drift: BTreeMap<String, f64>,
    pub controls: Vec<BTreeMap<String, f64>>,
    #[serde(default)]
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(untagged)]
pub enum InitialFile {
    #[default]
    #[serde(skip)]
    Zeros,
    Named(String),
    Basis { basis: String },
    Amplitudes { amplitudes: Vec<[f64; 2]> },
}

/// A parsed circuit: either purely unitary or with noisy blocks.
#[derive(Clone, Debug)]
pub enum LoadedCircuit {
    Unitary(ParametricCircuit),
    Noisy(NoisyCircuit),
}

impl LoadedCircuit {
    pub fn param_count(&self) -> usize {
        match self {
            LoadedCircuit::Unitary(c) => c.param_count(),
            LoadedCircuit::Noisy(c) => c.noisy_specs().len(),
        }
    }

    pub fn unitary(&self) -> Option<&ParametricCircuit> {
        match self {
            LoadedCircuit::Unitary(c) => Some(c),
            LoadedCircuit::Noisy(_) => None,
        }
    }
}

pub fn pauli_sum(path: &str, qubits: usize, map: &BTreeMap<String, f64>) -> Result<PauliSum, SchemaError> {
    let mut sum = PauliSum::zero(qubits).map_err(|e| SchemaError::at(path, e.to_string()))?;
    for (key, &c) in map {
        let p = pauli_key(path, qubits, key)?;
        if !c.is_finite() {
            return Err(SchemaError::at(path, format!("coefficient of \"{key}\" is not finite")));
        }
        sum.add_term(p, c).map_err(|e| SchemaError::at(path, e.to_string()))?;
    }
    Ok(sum)
}

fn pauli_key(path: &str, qubits: usize, key: &str) -> Result<PauliString, SchemaError> {
    let p: PauliString =
        key.parse().map_err(|e| SchemaError::at(path, format!("invalid Pauli key \"{key}\": {e}")))?;
    if p.qubits() != qubits {
        return Err(SchemaError::at(
            path,
            format!("invalid Pauli key \"{key}\": length {} does not match {qubits} qubits", p.qubits()),
        ));
    }
    Ok(p)
}

/// Parses `name(a, b, ...)`: `linear(p[, scale[, offset]])`, `affine(offset, p, scale)`,
/// `product(p, q[, scale])`, `constant(v)`, `piecewise(p[, scale[, offset]])` and
/// `fourier(time, offset, weight, a, phi, omega, ...)` with repeating groups of four.
pub fn parse_expr(path: &str, text: &str) -> Result<ParamExpr, SchemaError> {
    let bad = |msg: &str| SchemaError::at(path, format!("{msg} in expression \"{text}\""));
    let text_trim = text.trim();
    let open = text_trim.find('(').ok_or_else(|| bad("missing '('"))?;
    if !text_trim.ends_with(')') {
        return Err(bad("missing ')'"));
    }
    let name = text_trim[..open].trim();
    let inner = &text_trim[open + 1..text_trim.len() - 1];
    let args: Vec<f64> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad(&format!("argument \"{}\" is not a number", a.trim()))))
            .collect::<Result<_, _>>()?
    };
    let index = |v: f64| -> Result<usize, SchemaError> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(bad(&format!("parameter index {v} is not a non-negative integer")))
        }
    };
    let arity = |lo: usize, hi: usize| -> Result<(), SchemaError> {
        if args.len() < lo || args.len() > hi {
            Err(bad(&format!("{name} takes {lo} to {hi} arguments, got {}", args.len())))
        } else {
            Ok(())
        }
    };
    match name {
        "linear" | "piecewise" => {
            arity(1, 3)?;
            let scale = args.get(1).copied().unwrap_or(1.0);
            let offset = args.get(2).copied().unwrap_or(0.0);
            Ok(ParamExpr::affine(offset, index(args[0])?, scale))
        }
        "affine" => {
            arity(3, 3)?;
            Ok(ParamExpr::affine(args[0], index(args[1])?, args[2]))
        }
        "product" => {
            arity(2, 3)?;
            let scale = args.get(2).copied().unwrap_or(1.0);
            Ok(ParamExpr::Polynomial(Polynomial {
                offset: 0.0,
                linear: Vec::new(),
                products: vec![(index(args[0])?, index(args[1])?, scale)],
            }))
        }
        "constant" => {
            arity(1, 1)?;
            Ok(ParamExpr::constant(args[0]))
        }
        "fourier" => {
            if args.len() < 6 || (args.len() - 2) % 4 != 0 {
                return Err(bad("fourier takes time, offset and groups of (weight, amplitude, phase, omega)"));
            }
            let modes = args[2..]
                .chunks(4)
                .map(|g| {
                    Ok(FourierMode { weight: g[0], amplitude: index(g[1])?, phase: index(g[2])?, omega: g[3] })
                })
                .collect::<Result<Vec<_>, SchemaError>>()?;
            Ok(ParamExpr::Fourier(FourierSeries { offset: args[1], time: args[0], modes }))
        }
        _ => Err(bad(&format!("unknown expression \"{name}\""))),
    }
}

fn initial_state(qubits: usize, initial: &InitialFile) -> Result<StateVector, SchemaError> {
    let path = "initial";
    let wrap = |e: shiftrule_core::Error| SchemaError::at(path, e.to_string());
    match initial {
        InitialFile::Zeros => StateVector::zeros(qubits).map_err(wrap),
        InitialFile::Named(name) if name == "zeros" => StateVector::zeros(qubits).map_err(wrap),
        InitialFile::Named(name) => Err(SchemaError::at(path, format!("unknown initial state \"{name}\""))),
        InitialFile::Basis { basis } => {
            if basis.len() != qubits || !basis.chars().all(|c| c == '0' || c == '1') {
                return Err(SchemaError::at(path, format!("basis \"{basis}\" must be {qubits} characters of 0/1")));
            }
            let index = usize::from_str_radix(basis, 2).map_err(|e| SchemaError::at(path, e.to_string()))?;
            StateVector::basis(qubits, index).map_err(wrap)
        }
        InitialFile::Amplitudes { amplitudes } => {
            StateVector::from_amplitudes(amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()).map_err(wrap)
        }
    }
}

fn env_state(path: &str, qubits: usize, rows: &[Vec<[f64; 2]>]) -> Result<DensityMatrix, SchemaError> {
    let d = 1usize << qubits;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(SchemaError::at(path, format!("env_state must be {d}x{d}")));
    }
    let m = shiftrule_core::CMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    DensityMatrix::from_matrix(m).map_err(|e| SchemaError::at(path, e.to_string()))
}

fn noisy_spec(path: &str, qubits: usize, index: usize, f: &NoisyFile) -> Result<NoisyGateSpec, SchemaError> {
    let wrap = |e: shiftrule_core::Error| SchemaError::at(path, e.to_string());
    let name = f.name.clone().unwrap_or_else(|| format!("noisy{index}"));
    let register = pauli_sum(&format!("{path}.register_h"), qubits, &f.register_h)?;
    let coupling = pauli_sum(&format!("{path}.coupling_h"), qubits + f.env_qubits, &f.coupling_h)?;
    let spec = NoisyGateSpec::new(name, register, coupling, f.env_qubits, f.tau, f.theta).map_err(wrap)?;
    match &f.env_state {
        Some(rows) => spec.with_env_state(env_state(&format!("{path}.env_state"), f.env_qubits, rows)?).map_err(wrap),
        None => Ok(spec),
    }
}

impl CircuitFile {
    pub fn parse(text: &str) -> Result<CircuitFile, SchemaError> {
        serde_json::from_str(text).map_err(SchemaError::from_json)
    }

    pub fn build(&self) -> Result<LoadedCircuit, SchemaError> {
        let n = self.qubits;
        let initial = initial_state(n, &self.initial)?;
        let observable = ObservableSpec::new(pauli_sum("observable", n, &self.observable)?)
            .map_err(|e| SchemaError::at("observable", e.to_string()))?;
        if let Some(pulse) = &self.pulse {
            if !self.gates.is_empty() {
                return Err(SchemaError::at("pulse", "a circuit has either \"gates\" or \"pulse\", not both"));
            }
            let model = pulse.model(n)?;
            return build_control_circuit(&model, initial, observable)
                .map(LoadedCircuit::Unitary)
                .map_err(|e| SchemaError::at("pulse", e.to_string()));
        }
        for (t, g) in self.gates.iter().enumerate() {
            match (&g.generator, &g.noisy) {
                (Some(_), Some(_)) => {
                    return Err(SchemaError::at(format!("gates[{t}]"), "a gate has either \"generator\" or \"noisy\", not both"))
                }
                (None, None) => return Err(SchemaError::at(format!("gates[{t}]"), "missing field \"generator\"")),
                (None, Some(_)) if !g.params.is_empty() => {
                    return Err(SchemaError::at(format!("gates[{t}].params"), "noisy gates take no params"))
                }
                _ => {}
            }
        }
        let empty = BTreeMap::new();
        let noisy = self.gates.iter().any(|g| g.noisy.is_some());
        if noisy {
            let mut blocks = Vec::new();
            let mut k = 0;
            for (t, g) in self.gates.iter().enumerate() {
                let path = format!("gates[{t}]");
                match &g.noisy {
                    Some(noisy) => {
                        blocks.push(Block::Noisy(noisy_spec(&format!("{path}.noisy"), n, k, noisy)?));
                        k += 1;
                    }
                    None => {
                        let generator = g.generator.as_ref().unwrap_or(&empty);
                        if !g.params.is_empty() {
                            return Err(SchemaError::at(
                                format!("{path}.params"),
                                "circuits with noisy gates take their parameters from the noisy gates' theta",
                            ));
                        }
                        blocks.push(Block::Unitary(pauli_sum(&format!("{path}.generator"), n, generator)?));
                    }
                }
            }
            return NoisyCircuit::new(initial, blocks, observable)
                .map(LoadedCircuit::Noisy)
                .map_err(|e| SchemaError::at("gates", e.to_string()));
        }
        let mut gates = Vec::new();
        let mut max_index = None::<usize>;
        for (t, g) in self.gates.iter().enumerate() {
            let generator = g.generator.as_ref().unwrap_or(&empty);
            let params = &g.params;
            let path = format!("gates[{t}]");
            let template = pauli_sum(&format!("{path}.generator"), n, generator)?;
            let mut list = Vec::new();
            for (k, p) in params.iter().enumerate() {
                let ppath = format!("{path}.params[{k}]");
                let string = pauli_key(&format!("{ppath}.pauli"), n, &p.pauli)?;
                let expr = parse_expr(&format!("{ppath}.expr"), &p.expr)?;
                if let Some(&m) = expr.dependencies().iter().max() {
                    max_index = Some(max_index.map_or(m, |x| x.max(m)));
                }
                list.push((string, expr));
            }
            gates.push(Gate::new(template, list).map_err(|e| SchemaError::at(&path, e.to_string()))?);
        }
        let inferred = max_index.map_or(0, |m| m + 1);
        let count = match self.params {
            Some(p) if p < inferred => {
                return Err(SchemaError::at("params", format!("{p} parameters declared but expressions use index {}", inferred - 1)))
            }
            Some(p) => p,
            None => inferred,
        };
        ParametricCircuit::new(n, count, gates, initial, observable)
            .map(LoadedCircuit::Unitary)
            .map_err(|e| SchemaError::at("gates", e.to_string()))
    }
}

impl PulseFile {
    pub fn model(&self, qubits: usize) -> Result<PulseModel, SchemaError> {
        let kind = match self.kind.as_str() {
            "piecewise" => PulseKind::Piecewise,
            "fourier" => PulseKind::Fourier { frequencies: self.frequencies.clone() },
            other => return Err(SchemaError::at("pulse.kind", format!("unknown pulse kind \"{other}\""))),
        };
        let controls = self
            .controls
            .iter()
            .enumerate()
            .map(|(j, c)| pauli_sum(&format!("pulse.controls[{j}]"), qubits, c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PulseModel {
            kind,
            steps: self.steps,
            horizon: self.horizon,
            drift: pauli_sum("pulse.drift", qubits, &self.drift)?,
            controls,
        })
    }
}

pub fn load_circuit(text: &str) -> Result<LoadedCircuit, SchemaError> {
    CircuitFile::parse(text)?.build()
}

fn default_eta() -> f64 {
    shiftrule_core::optimize::DEFAULT_LEARNING_RATE
}

fn default_method() -> String {
    "sgd".into()
}

/// Optimizer run settings.
#[derive(Debug, Clone, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub estimator: String,
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub iterations: usize,
    pub direction: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: String,
    /// Approximate-pulse strength; exact pulses when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
}

/// Gradient source named in a run config: `"exact"` or one of the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceName {
    Exact,
    Sampled(Estimator),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, SchemaError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(SchemaError::from_json)?;
        cfg.source()?;
        cfg.direction()?;
        if cfg.method != "sgd" && cfg.method != "adam" {
            return Err(SchemaError::at("method", format!("unknown method \"{}\" (expected sgd or adam)", cfg.method)));
        }
        if cfg.iterations == 0 {
            return Err(SchemaError::at("iterations", "must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn source(&self) -> Result<SourceName, SchemaError> {
        if self.estimator == "exact" {
            return Ok(SourceName::Exact);
        }
        Estimator::parse(&self.estimator).map(SourceName::Sampled).ok_or_else(|| {
            SchemaError::at(
                "estimator",
                format!("unknown estimator \"{}\" (expected exact, psr, spsr, doubly-stochastic or single-measurement)", self.estimator),
            )
        })
    }

    pub fn direction(&self) -> Result<Direction, SchemaError> {
        Direction::parse(&self.direction)
            .ok_or_else(|| SchemaError::at("direction", format!("unknown direction \"{}\" (expected min or max)", self.direction)))
    }
}
