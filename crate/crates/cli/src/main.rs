//! `subsplit`: experiment harness and single-problem runner.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 inconsistent
//! affine input.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use subspace_splitting::experiments::{
    self, parse_lambda_grid, run_single, write_csv, write_json, Exp1Config, Exp2Config, Exp3Config,
    ExperimentRecord, InstanceSpec, SingleConfig,
};
use subspace_splitting::problem::ProblemSpec;
use subspace_splitting::{Algorithm, Error, StopRule};

#[derive(Parser, Debug)]
#[command(name = "subsplit", version, about = "Ryu and Malitsky-Tam splitting for subspace intersections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean rate bounds over random instances for each relaxation parameter.
    Exp1(Exp1Args),
    /// Median iterations to reach a tolerance, for the governing and shadow sequences.
    Exp2(Exp2Args),
    /// Median shadow distance per iteration.
    Exp3(Exp3Args),
    /// Solve one problem from a JSON file.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Ambient dimension d.
    #[arg(long = "dim", default_value_t = 6)]
    dim: usize,
    /// Subspace dimensions, comma separated.
    #[arg(long = "sub-dims", value_delimiter = ',', default_value = "5,5,5")]
    sub_dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to one algorithm (default: both).
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    /// Run instances on one thread.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct Grid {
    /// Single relaxation parameter (overrides the grid).
    #[arg(long)]
    lambda: Option<f64>,
    /// Relaxation grid as start:step:end.
    #[arg(long = "lambda-grid", default_value = "0.01:0.01:0.99")]
    lambda_grid: String,
}

impl Grid {
    fn values(&self) -> Result<Vec<f64>, Error> {
        match self.lambda {
            Some(l) => Ok(vec![l]),
            None => parse_lambda_grid(&self.lambda_grid),
        }
    }
}

#[derive(Args, Debug)]
struct Exp1Args {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: Grid,
    /// Number of random instances.
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Args, Debug)]
struct Exp2Args {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: Grid,
    /// Number of subspace instances.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of starting points.
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long = "max-iters", default_value_t = 10_000)]
    max_iters: usize,
}

#[derive(Args, Debug)]
struct Exp3Args {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.99)]
    lambda: f64,
    /// Number of subspace instances.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of starting points.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Number of iterations to record.
    #[arg(long = "max-iters", default_value_t = 150)]
    max_iters: usize,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Override the file's relaxation parameter.
    #[arg(long)]
    lambda: Option<f64>,
    /// Override the file's algorithm.
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long = "max-iters", default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long = "stop-rule", value_enum, default_value_t = StopArg::Limit)]
    stop_rule: StopArg,
    /// Include per-iteration distances.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Ryu,
    Mt,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Ryu => Algorithm::Ryu,
            AlgorithmArg::Mt => Algorithm::Mt,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StopArg {
    /// Distance to the known limit.
    Limit,
    /// Successive residual.
    Residual,
}

impl Common {
    fn instances(&self) -> InstanceSpec {
        InstanceSpec {
            d: self.dim,
            dims: self.sub_dims.clone(),
            seed: self.seed,
            algorithms: match self.algorithm {
                Some(a) => vec![a.into()],
                None => vec![Algorithm::Ryu, Algorithm::Mt],
            },
            parallel: !self.serial,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Inconsistent { .. } => 4,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Exp1(a) => {
            let cfg = Exp1Config {
                instances: a.common.instances(),
                n_instances: a.n,
                lambda_grid: a.grid.values()?,
            };
            emit(&experiments::exp1(&cfg)?, &a.common.output)
        }
        Command::Exp2(a) => {
            let cfg = Exp2Config {
                instances: a.common.instances(),
                n_sets: a.n,
                n_points: a.points,
                lambda_grid: a.grid.values()?,
                tol: positive_tol(a.tol)?,
                max_iters: a.max_iters,
            };
            emit(&experiments::exp2(&cfg)?, &a.common.output)
        }
        Command::Exp3(a) => {
            let cfg = Exp3Config {
                instances: a.common.instances(),
                n_sets: a.n,
                n_points: a.points,
                lambda: a.lambda,
                n_iters: a.max_iters,
            };
            emit(&experiments::exp3(&cfg)?, &a.common.output)
        }
        Command::Run(a) => {
            let mut spec = ProblemSpec::from_path(&a.problem)?;
            if let Some(alg) = a.algorithm {
                spec.algorithm = alg.into();
            }
            let cfg = SingleConfig {
                lambda: a.lambda,
                tol: positive_tol(a.tol)?,
                max_iters: a.max_iters,
                stop_rule: match a.stop_rule {
                    StopArg::Limit => StopRule::DistanceToKnownLimit,
                    StopArg::Residual => StopRule::SuccessiveResidual,
                },
                trace: a.trace,
            };
            let result = run_single(&spec, &cfg)?;
            eprintln!(
                "{}: {} iterations ({}), rate bounds [{:.6}, {:.6}], solution {:?}",
                result.algorithm,
                result.iterations,
                if result.converged { "converged" } else { "not converged" },
                result.rate_lower,
                result.rate_upper,
                result.solution
            );
            emit(&result.records, &a.output)
        }
    }
}

fn positive_tol(tol: f64) -> Result<f64, Error> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")))
    }
}

fn emit(records: &[ExperimentRecord], output: &Output) -> Result<(), Error> {
    let sink: Box<dyn Write> = match &output.out {
        Some(path) => Box::new(File::create(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match output.format {
        Format::Csv => write_csv(records, &mut sink)?,
        Format::Json => write_json(records, &mut sink)?,
    }
    sink.flush().map_err(|source| Error::Io {
        path: output
            .out
            .as_ref()
            .map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string()),
        source,
    })
}
