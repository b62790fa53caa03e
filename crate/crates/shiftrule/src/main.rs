use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shiftrule::commands::{self, GradRequest, OptimizeRequest, Wrt};
use shiftrule::experiments::{CustomSweep, ExperimentName, ExperimentSpec, DEFAULT_EPSILON, DEFAULT_POINTS};
use shiftrule::schema::load_circuit;
use shiftrule::{run_experiment, thread_pool, CliError, CliResult};

#[derive(Parser)]
#[command(name = "shiftrule", version, about = "Stochastic parameter-shift gradients, experiments and optimization")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per estimate.
    #[arg(long, global = true)]
    shots: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads.
    #[arg(long, global = true, env = "SHIFTRULE_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one partial derivative.
    Grad {
        #[arg(long)]
        circuit: String,
        #[arg(long, default_value_t = 0)]
        param: usize,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long, default_value = "spsr")]
        estimator: String,
        /// Approximate shift pulses of this strength.
        #[arg(long)]
        epsilon: Option<f64>,
        /// `theta` or `tau` (noisy gates).
        #[arg(long, default_value = "theta")]
        wrt: String,
    },
    /// Run gradient descent or ascent from a run config.
    Optimize {
        #[arg(long)]
        circuit: String,
        #[arg(long)]
        config: String,
        #[arg(long)]
        natural_gradient: bool,
        #[arg(long, default_value = "full")]
        metric: String,
        #[arg(long)]
        metric_reg: Option<f64>,
    },
    /// Metric tensor at a parameter point.
    Metric {
        #[arg(long)]
        circuit: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long, default_value = "full")]
        mode: String,
        #[arg(long, default_value_t = 32)]
        quad: usize,
    },
    /// Run a named sweep and write CSV.
    Experiment {
        /// fig2a, fig2b, fig5, fig6a, fig6b, fig7 or custom.
        name: String,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Qubit counts for fig6a, fig6b and fig7.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Circuit file for the custom sweep.
        #[arg(long)]
        circuit: Option<String>,
        #[arg(long, default_value_t = 0)]
        param: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value = "spsr")]
        estimator: String,
    },
}

fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&str>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    let seed = g.seed.unwrap_or(0);
    let pool = thread_pool(g.threads)?;
    let text = pool.install(|| -> CliResult<String> {
        match cli.command {
            Command::Grad { circuit, param, theta, estimator, epsilon, wrt } => {
                let wrt = match wrt.as_str() {
                    "theta" => Wrt::Theta,
                    "tau" => Wrt::Tau,
                    other => return Err(CliError::Usage(format!("unknown --wrt \"{other}\" (expected theta or tau)"))),
                };
                commands::grad(&GradRequest {
                    circuit: read(&circuit)?,
                    theta,
                    param,
                    estimator,
                    shots: g.shots.unwrap_or(1000),
                    seed,
                    epsilon,
                    wrt,
                })
            }
            Command::Optimize { circuit, config, natural_gradient, metric, metric_reg } => {
                let natural = commands::natural_options(natural_gradient, &metric, metric_reg)?;
                let req = OptimizeRequest { circuit: read(&circuit)?, config: read(&config)?, natural, seed: g.seed, shots: g.shots };
                commands::optimize(&req)?.to_csv()
            }
            Command::Metric { circuit, theta, mode, quad } => commands::metric(&read(&circuit)?, theta, &mode, quad),
            Command::Experiment { name, points, epsilon, sizes, circuit, param, theta, from, to, estimator } => {
                let which = ExperimentName::parse(&name)
                    .ok_or_else(|| CliError::Usage(format!("unknown experiment \"{name}\"")))?;
                let mut spec = ExperimentSpec::new(which, seed);
                spec.points = points;
                spec.epsilon = epsilon;
                spec.sizes = sizes;
                if let Some(s) = g.shots {
                    spec.shots = s;
                }
                if which == ExperimentName::Custom {
                    let path = circuit.ok_or_else(|| CliError::Usage("custom needs --circuit".into()))?;
                    let loaded = load_circuit(&read(&path)?)?;
                    let c = loaded
                        .unitary()
                        .ok_or_else(|| CliError::Usage("custom sweeps need a circuit without noisy gates".into()))?
                        .clone();
                    let base_theta = theta.unwrap_or_else(|| vec![0.0; c.param_count()]);
                    if base_theta.len() != c.param_count() || param >= c.param_count() {
                        return Err(CliError::Usage("--theta/--param do not match the circuit".into()));
                    }
                    let estimator = shiftrule_core::Estimator::parse(&estimator)
                        .ok_or_else(|| CliError::Usage(format!("unknown estimator \"{estimator}\"")))?;
                    spec.custom = Some(CustomSweep { circuit: c, source: path, param, base_theta, from, to, estimator });
                }
                run_experiment(&spec)?.to_csv()
            }
        }
    })?;
    emit(g.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
