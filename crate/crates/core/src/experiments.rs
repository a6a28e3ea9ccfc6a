//! Reproducible experiment harness.
//!
//! Every instance draws its subspaces from `ChaCha8Rng::seed_from_u64(seed ^ i)`
//! and every starting point `x_j ∈ R^d` from the same seeding on stream 1.
//! A starting point is lifted to the diagonal governing vector `(x_j, …, x_j)`,
//! so the shadow limit is `(P_Z x_j, …, P_Z x_j)` for both algorithms.
//!
//! Instances may run in parallel. Per-task results are collected in index
//! order and reduced serially, and output rows are sorted, so the bytes written
//! do not depend on the thread count.

use std::cmp::Ordering;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{IterationConfig, Solver, StopRule};
use crate::error::{Error, Result};
use crate::linalg::{self, distance};
use crate::problem::ProblemSpec;
use crate::splitting::{Algorithm, MtProblem, RyuProblem, Splitting};
use crate::subspaces::{feasible_dims, min_feasible_dim, random_subspace, Subspace};

pub const CSV_HEADER: [&str; 7] = [
    "experiment",
    "algorithm",
    "lambda",
    "instance_seed",
    "metric_name",
    "iteration",
    "metric_value",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Exp1,
    Exp2,
    Exp3,
    Single,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Exp1 => "exp1",
            ExperimentKind::Exp2 => "exp2",
            ExperimentKind::Exp3 => "exp3",
            ExperimentKind::Single => "single",
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: ExperimentKind,
    pub algorithm: Algorithm,
    pub lambda: f64,
    pub instance_seed: u64,
    pub metric_name: String,
    pub iteration: Option<usize>,
    pub metric_value: f64,
}

impl ExperimentRecord {
    fn new(
        experiment: ExperimentKind,
        algorithm: Algorithm,
        lambda: f64,
        instance_seed: u64,
        metric_name: &str,
        iteration: Option<usize>,
        metric_value: f64,
    ) -> Self {
        Self {
            experiment,
            algorithm,
            lambda,
            instance_seed,
            metric_name: metric_name.to_string(),
            iteration,
            metric_value,
        }
    }

    /// Sort key: experiment, algorithm, lambda, instance seed, iteration, metric.
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.experiment
            .cmp(&other.experiment)
            .then(self.algorithm.as_str().cmp(other.algorithm.as_str()))
            .then(self.lambda.total_cmp(&other.lambda))
            .then(self.instance_seed.cmp(&other.instance_seed))
            .then(self.iteration.cmp(&other.iteration))
            .then(self.metric_name.cmp(&other.metric_name))
    }
}

pub fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(ExperimentRecord::cmp_key);
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.experiment.as_str().to_string(),
            r.algorithm.as_str().to_string(),
            format_float(r.lambda),
            r.instance_seed.to_string(),
            r.metric_name.clone(),
            r.iteration.map(|i| i.to_string()).unwrap_or_default(),
            format_float(r.metric_value),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("writing CSV: {e}")))?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[ExperimentRecord], mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("writing JSON: {e}"));
    serde_json::to_writer_pretty(&mut out, records).map_err(|e| Error::InvalidInput(format!("writing JSON: {e}")))?;
    writeln!(out).map_err(io)
}

pub fn to_csv_string(records: &[ExperimentRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

/// `{0.01 k : k = 1, …, 99}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Parses `start:step:end` (inclusive end) into a grid inside `(0, 1)`.
///
/// Points are computed as integer multiples over a power of ten matching the
/// decimals written, so `0.1:0.1:0.9` yields exactly `0.3` rather than
/// `0.30000000000000004`.
pub fn parse_lambda_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("lambda grid must be start:step:end, got {spec:?}"));
    let fields: Vec<&str> = spec.split(':').map(str::trim).collect();
    let [start, step, end] = fields[..] else {
        return Err(bad());
    };
    let parse = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let (s0, ds, s1) = (parse(start)?, parse(step)?, parse(end)?);
    if !(ds > 0.0) || !(s1 >= s0) {
        return Err(bad());
    }
    let decimals = [start, step]
        .iter()
        .map(|t| t.split_once('.').map_or(0, |(_, f)| f.len()))
        .max()
        .unwrap_or(0)
        .min(15) as i32;
    let scale = 10f64.powi(decimals);
    let (i0, di) = ((s0 * scale).round(), (ds * scale).round());
    let count = ((s1 - s0) / ds + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = if di > 0.0 {
        (0..count).map(|k| (i0 + k as f64 * di) / scale).collect()
    } else {
        (0..count).map(|k| s0 + k as f64 * ds).collect()
    };
    check_grid(&grid)?;
    Ok(grid)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    if let Some(l) = grid.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::InvalidInput(format!("relaxation parameter must lie in (0, 1), got {l}")));
    }
    Ok(())
}

/// Problem family shared by all experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub d: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub parallel: bool,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            d: 6,
            dims: vec![5, 5, 5],
            seed: 0,
            algorithms: vec![Algorithm::Ryu, Algorithm::Mt],
            parallel: true,
        }
    }
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if !feasible_dims(self.d, &self.dims) {
            return Err(Error::InvalidInput(format!(
                "subspace dimensions {:?} in R^{} are infeasible: each must lie in [{}, {}] (1 + ceil(2d/3))",
                self.dims,
                self.d,
                min_feasible_dim(self.d),
                self.d
            )));
        }
        if self.dims.len() < 3 {
            return Err(Error::InvalidInput(format!("need at least 3 subspaces, got {}", self.dims.len())));
        }
        if self.algorithms.contains(&Algorithm::Ryu) && self.dims.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "ryu takes exactly 3 subspaces, got {}",
                self.dims.len()
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidInput("no algorithm selected".into()));
        }
        Ok(())
    }

    /// Subspaces of instance `index`.
    pub fn subspaces(&self, index: u64) -> Result<Vec<Subspace>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ index);
        self.dims.iter().map(|&k| random_subspace(self.d, k, &mut rng)).collect()
    }

    /// Starting point `x_j ∈ R^d`.
    pub fn start_point(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ index);
        rng.set_stream(1);
        (0..self.d).map(|_| rng.sample(StandardNormal)).collect()
    }

    pub fn build(&self, algorithm: Algorithm, subspaces: Vec<Subspace>) -> Result<Box<dyn Splitting>> {
        Ok(match algorithm {
            Algorithm::Ryu => {
                let [u, v, w]: [Subspace; 3] = subspaces
                    .try_into()
                    .map_err(|_| Error::InvalidInput("ryu takes exactly 3 subspaces".into()))?;
                Box::new(RyuProblem::new(u, v, w)?)
            }
            Algorithm::Mt => Box::new(MtProblem::new(subspaces)?),
        })
    }

    fn map<T: Send, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        if self.parallel {
            (0..count as u64).into_par_iter().map(f).collect()
        } else {
            (0..count as u64).map(f).collect()
        }
    }
}

/// Diagonal lift `(x, …, x)` into the governing space.
pub fn diagonal_start(problem: &dyn Splitting, x: &[f64]) -> Vec<f64> {
    x.iter().copied().cycle().take(problem.governing_dim()).collect()
}

/// Lower median (the smaller middle element for even counts).
pub fn lower_median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Config {
    pub instances: InstanceSpec,
    pub n_instances: usize,
    pub lambda_grid: Vec<f64>,
}

impl Default for Exp1Config {
    fn default() -> Self {
        Self {
            instances: InstanceSpec::default(),
            n_instances: 1000,
            lambda_grid: default_lambda_grid(),
        }
    }
}

/// Mean spectral radius (`mean_lower`) and mean operator norm (`mean_upper`)
/// of `T_λ − P_{Fix T}` over random instances, for each algorithm and λ.
/// Lower medians of both are reported as well (`median_lower`, `median_upper`);
/// a few slowly converging instances pull the mean but not the median.
pub fn exp1(cfg: &Exp1Config) -> Result<Vec<ExperimentRecord>> {
    let spec = &cfg.instances;
    spec.validate()?;
    check_grid(&cfg.lambda_grid)?;
    let algs = &spec.algorithms;
    // bounds[i][a][l] = (lower, upper)
    let bounds = spec.map(cfg.n_instances, |i| {
        let subspaces = spec.subspaces(i)?;
        algs.iter()
            .map(|&alg| {
                let problem = spec.build(alg, subspaces.clone())?;
                let solver = Solver::new(problem.as_ref())?;
                cfg.lambda_grid
                    .iter()
                    .map(|&l| solver.rate_bounds(l).map(|b| (b.lower, b.upper)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let n = cfg.n_instances.max(1) as f64;
    let mut records = Vec::new();
    for (a, &alg) in algs.iter().enumerate() {
        for (l, &lambda) in cfg.lambda_grid.iter().enumerate() {
            let (mut lo, mut hi) = (0.0, 0.0);
            for inst in &bounds {
                lo += inst[a][l].0;
                hi += inst[a][l].1;
            }
            let rec = |name, v| ExperimentRecord::new(ExperimentKind::Exp1, alg, lambda, spec.seed, name, None, v);
            records.push(rec("mean_lower", lo / n));
            records.push(rec("mean_upper", hi / n));
            if !bounds.is_empty() {
                let mut lows: Vec<f64> = bounds.iter().map(|inst| inst[a][l].0).collect();
                let mut highs: Vec<f64> = bounds.iter().map(|inst| inst[a][l].1).collect();
                records.push(rec("median_lower", lower_median(&mut lows)));
                records.push(rec("median_upper", lower_median(&mut highs)));
            }
        }
    }
    sort_records(&mut records);
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp2Config {
    pub instances: InstanceSpec,
    pub n_sets: usize,
    pub n_points: usize,
    pub lambda_grid: Vec<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for Exp2Config {
    fn default() -> Self {
        Self {
            instances: InstanceSpec::default(),
            n_sets: 100,
            n_points: 100,
            lambda_grid: default_lambda_grid(),
            tol: 1e-6,
            max_iters: 10_000,
        }
    }
}

/// Median number of iterations until the governing sequence is within `tol`
/// of `P_{Fix T} z_0` and until the shadow is within `tol` of its consensus
/// limit. Runs that never get there count as `max_iters`.
pub fn exp2(cfg: &Exp2Config) -> Result<Vec<ExperimentRecord>> {
    let spec = &cfg.instances;
    spec.validate()?;
    check_grid(&cfg.lambda_grid)?;
    let points: Vec<Vec<f64>> = (0..cfg.n_points as u64).map(|j| spec.start_point(j)).collect();
    let algs = &spec.algorithms;
    // counts[i][a][l] = per-point (governing, shadow) hit iterations
    let counts = spec.map(cfg.n_sets, |i| {
        let subspaces = spec.subspaces(i)?;
        algs.iter()
            .map(|&alg| {
                let problem = spec.build(alg, subspaces.clone())?;
                let solver = Solver::new(problem.as_ref())?;
                cfg.lambda_grid
                    .iter()
                    .map(|&lambda| {
                        let config = IterationConfig {
                            lambda,
                            tol: cfg.tol,
                            max_iters: cfg.max_iters,
                            stop_rule: StopRule::DistanceToKnownLimit,
                            record_history: false,
                        };
                        points
                            .iter()
                            .map(|x| {
                                let t = solver.iterate(&config, &diagonal_start(problem.as_ref(), x))?;
                                Ok((
                                    t.governing_hit.unwrap_or(cfg.max_iters),
                                    t.shadow_hit.unwrap_or(cfg.max_iters),
                                ))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut records = Vec::new();
    for (a, &alg) in algs.iter().enumerate() {
        for (l, &lambda) in cfg.lambda_grid.iter().enumerate() {
            let runs: Vec<(usize, usize)> = counts.iter().flat_map(|inst| inst[a][l].iter().copied()).collect();
            let mut gov: Vec<f64> = runs.iter().map(|r| r.0 as f64).collect();
            let mut sha: Vec<f64> = runs.iter().map(|r| r.1 as f64).collect();
            let unconverged = runs.iter().filter(|r| r.0 >= cfg.max_iters).count();
            let rec = |name, v| ExperimentRecord::new(ExperimentKind::Exp2, alg, lambda, spec.seed, name, None, v);
            if !runs.is_empty() {
                records.push(rec("governing_median_iterations", lower_median(&mut gov)));
                records.push(rec("shadow_median_iterations", lower_median(&mut sha)));
            }
            records.push(rec("runs", runs.len() as f64));
            records.push(rec("governing_unconverged", unconverged as f64));
        }
    }
    sort_records(&mut records);
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3Config {
    pub instances: InstanceSpec,
    pub n_sets: usize,
    pub n_points: usize,
    pub lambda: f64,
    pub n_iters: usize,
}

impl Default for Exp3Config {
    fn default() -> Self {
        Self {
            instances: InstanceSpec::default(),
            n_sets: 100,
            n_points: 100,
            lambda: 0.99,
            n_iters: 150,
        }
    }
}

/// Median over all runs of `‖M z_i − (P_Z x, …, P_Z x)‖` for `i = 1..=n_iters`.
pub fn exp3(cfg: &Exp3Config) -> Result<Vec<ExperimentRecord>> {
    let spec = &cfg.instances;
    spec.validate()?;
    check_grid(&[cfg.lambda])?;
    let points: Vec<Vec<f64>> = (0..cfg.n_points as u64).map(|j| spec.start_point(j)).collect();
    let algs = &spec.algorithms;
    // traces[i][a] = per-point distance sequences
    let traces = spec.map(cfg.n_sets, |i| {
        let subspaces = spec.subspaces(i)?;
        algs.iter()
            .map(|&alg| {
                let problem = spec.build(alg, subspaces.clone())?;
                points
                    .iter()
                    .map(|x| shadow_trace(problem.as_ref(), cfg.lambda, x, cfg.n_iters))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut records = Vec::new();
    for (a, &alg) in algs.iter().enumerate() {
        for it in 0..cfg.n_iters {
            let mut at: Vec<f64> = traces.iter().flat_map(|inst| inst[a].iter().map(|t| t[it])).collect();
            if at.is_empty() {
                continue;
            }
            records.push(ExperimentRecord::new(
                ExperimentKind::Exp3,
                alg,
                cfg.lambda,
                spec.seed,
                "shadow_median_distance",
                Some(it + 1),
                lower_median(&mut at),
            ));
        }
    }
    sort_records(&mut records);
    Ok(records)
}

/// Shadow distances after each of `n_iters` relaxed steps from the diagonal lift of `x`.
pub fn shadow_trace(problem: &dyn Splitting, lambda: f64, x: &[f64], n_iters: usize) -> Result<Vec<f64>> {
    let mut z = diagonal_start(problem, x);
    let target = problem.shadow_limit(&z)?;
    let mut out = Vec::with_capacity(n_iters);
    for _ in 0..n_iters {
        z = problem.relaxed_step(&z, lambda)?;
        out.push(distance(&problem.forward(&z)?, &target));
    }
    Ok(out)
}

/// Options for a single run from a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleConfig {
    /// Overrides the file's relaxation parameter.
    pub lambda: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub stop_rule: StopRule,
    /// Emit per-iteration distances.
    pub trace: bool,
}

impl Default for SingleConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            tol: 1e-6,
            max_iters: 10_000,
            stop_rule: StopRule::DistanceToKnownLimit,
            trace: false,
        }
    }
}

/// Outcome of [`run_single`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub algorithm: Algorithm,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Mean of the final shadow blocks; approximates the projection onto the intersection.
    pub solution: Vec<f64>,
    /// Projection of the seed point onto the intersection.
    pub expected: Vec<f64>,
    pub rate_lower: f64,
    pub rate_upper: f64,
    pub records: Vec<ExperimentRecord>,
}

/// Iterates the problem in `spec` and reports the shadow point, iteration
/// count, rate bounds and optionally the distance trace.
pub fn run_single(spec: &ProblemSpec, cfg: &SingleConfig) -> Result<SingleRun> {
    let lambda = cfg.lambda.unwrap_or(spec.lambda);
    let problem = spec.build()?;
    let p = problem.as_ref();
    let solver = Solver::new(p)?;
    let start = spec.start_vector();
    let config = IterationConfig {
        lambda,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        stop_rule: cfg.stop_rule,
        record_history: cfg.trace,
    };
    let trace = solver.iterate(&config, &start)?;
    let bounds = solver.rate_bounds(lambda)?;
    let d = p.ambient_dim();
    let n = p.num_sets();
    let mut solution = vec![0.0; d];
    for block in trace.final_shadow.chunks(d) {
        solution.iter_mut().zip(block).for_each(|(s, v)| *s += v / n as f64);
    }
    let expected = p.intersection().project(&p.seed_point(&start)?)?;

    let alg = p.algorithm();
    let rec = |name: &str, it, v| ExperimentRecord::new(ExperimentKind::Single, alg, lambda, 0, name, it, v);
    let mut records = vec![
        rec("iterations", None, trace.iterations as f64),
        rec("converged", None, if trace.converged { 1.0 } else { 0.0 }),
        rec("rate_lower", None, bounds.lower),
        rec("rate_upper", None, bounds.upper),
        rec("solution_error", None, linalg::distance(&solution, &expected)),
    ];
    for (i, v) in solution.iter().enumerate() {
        records.push(rec(&format!("solution_{i}"), None, *v));
    }
    if cfg.trace {
        for (k, v) in trace.governing_distances.iter().enumerate() {
            records.push(rec("governing_distance", Some(k), *v));
        }
        for (k, v) in trace.shadow_distances.iter().enumerate() {
            records.push(rec("shadow_distance", Some(k), *v));
        }
    }
    sort_records(&mut records);
    Ok(SingleRun {
        algorithm: alg,
        lambda,
        iterations: trace.iterations,
        converged: trace.converged,
        solution,
        expected,
        rate_lower: bounds.lower,
        rate_upper: bounds.upper,
        records,
    })
}
