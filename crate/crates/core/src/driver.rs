//! Relaxed fixed-point iteration `z ← (1 − λ) z + λ T z` and rate bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, distance, norm, Matrix};
use crate::splitting::{FixDecomposition, Splitting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once the governing iterate is within `tol` of `P_{Fix T}(start)`
    /// and the shadow is within `tol` of its consensus limit.
    DistanceToKnownLimit,
    /// Stop once `‖z_{k+1} − z_k‖ ≤ tol`.
    SuccessiveResidual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub stop_rule: StopRule,
    /// Keep per-iteration distances in the trace.
    pub record_history: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            tol: 1e-6,
            max_iters: 10_000,
            stop_rule: StopRule::DistanceToKnownLimit,
            record_history: false,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidInput(format!(
            "relaxation parameter must lie in (0, 1), got {lambda}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationTrace {
    /// Number of relaxed steps taken.
    pub iterations: usize,
    pub converged: bool,
    /// First iteration at which the governing distance was `≤ tol`.
    pub governing_hit: Option<usize>,
    /// First iteration at which the shadow distance was `≤ tol`.
    pub shadow_hit: Option<usize>,
    /// `‖z_k − P_{Fix T} z_0‖` for `k = 0..=iterations` (only with `record_history`).
    pub governing_distances: Vec<f64>,
    /// `‖M z_k − (P_V p, …, P_V p)‖` in the stacked norm (only with `record_history`).
    pub shadow_distances: Vec<f64>,
    pub final_governing: Vec<f64>,
    pub final_shadow: Vec<f64>,
}

/// Spectral radius and operator norm of `T_λ − P_{Fix T}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBounds {
    pub lower: f64,
    pub upper: f64,
}

/// A problem together with its precomputed fixed-point projector.
pub struct Solver<'a, S: Splitting + ?Sized> {
    problem: &'a S,
    fix: FixDecomposition,
}

impl<'a, S: Splitting + ?Sized> Solver<'a, S> {
    pub fn new(problem: &'a S) -> Result<Self> {
        Ok(Self {
            problem,
            fix: problem.fix_projector()?,
        })
    }

    pub fn problem(&self) -> &S {
        self.problem
    }

    pub fn fix(&self) -> &FixDecomposition {
        &self.fix
    }

    /// `P_{Fix T}(start)`: the limit of the governing sequence.
    pub fn governing_limit(&self, start: &[f64]) -> Result<Vec<f64>> {
        self.fix.project(start)
    }

    pub fn iterate(&self, config: &IterationConfig, start: &[f64]) -> Result<IterationTrace> {
        config.validate()?;
        let p = self.problem;
        p.check_governing(start)?;
        let limit = self.fix.project(start)?;
        let shadow_target = p.shadow_limit(start)?;

        let mut trace = IterationTrace::default();
        let mut z = start.to_vec();
        let mut k = 0;
        loop {
            let shadow = p.forward(&z)?;
            let gd = distance(&z, &limit);
            let sd = distance(&shadow, &shadow_target);
            if config.record_history {
                trace.governing_distances.push(gd);
                trace.shadow_distances.push(sd);
            }
            if trace.governing_hit.is_none() && gd <= config.tol {
                trace.governing_hit = Some(k);
            }
            if trace.shadow_hit.is_none() && sd <= config.tol {
                trace.shadow_hit = Some(k);
            }
            let done = match config.stop_rule {
                StopRule::DistanceToKnownLimit => {
                    trace.converged = trace.governing_hit.is_some();
                    trace.governing_hit.is_some() && trace.shadow_hit.is_some()
                }
                StopRule::SuccessiveResidual => trace.converged,
            };
            if done || k >= config.max_iters {
                trace.final_shadow = shadow;
                break;
            }
            let next = p.relaxed_step(&z, config.lambda)?;
            if config.stop_rule == StopRule::SuccessiveResidual && distance(&next, &z) <= config.tol {
                trace.converged = true;
            }
            z = next;
            k += 1;
        }
        trace.iterations = k;
        trace.final_governing = z;
        Ok(trace)
    }

    /// Linear part of `T_λ − P_{Fix T}`.
    pub fn rate_matrix(&self, lambda: f64) -> Result<Matrix> {
        check_lambda(lambda)?;
        let t = self.problem.matrix()?.relaxed(lambda);
        Ok(&t.linear - &self.fix.fix_projector)
    }

    pub fn rate_bounds(&self, lambda: f64) -> Result<RateBounds> {
        let m = self.rate_matrix(lambda)?;
        Ok(RateBounds {
            lower: linalg::spectral_radius(&m)?,
            upper: linalg::operator_norm(&m)?,
        })
    }

    /// Per-step error ratios `‖z_{k+1} − z*‖ / ‖z_k − z*‖` of the governing sequence.
    ///
    /// The error is renormalized after every step and its component in `Fix T`
    /// removed, so the ratios stay meaningful far below machine precision of the
    /// raw iterates. Returns `steps` ratios.
    pub fn error_ratios(&self, lambda: f64, start: &[f64], steps: usize) -> Result<Vec<f64>> {
        check_lambda(lambda)?;
        let p = self.problem;
        p.check_governing(start)?;
        let limit = self.fix.project(start)?;
        let mut e: Vec<f64> = start.iter().zip(&limit).map(|(a, b)| a - b).collect();
        let mut ratios = Vec::with_capacity(steps);
        let mut scale = norm(&e);
        if scale == 0.0 {
            return Ok(vec![0.0; steps]);
        }
        e.iter_mut().for_each(|v| *v /= scale);
        for _ in 0..steps {
            let z: Vec<f64> = limit.iter().zip(&e).map(|(l, v)| l + v).collect();
            let next = p.relaxed_step(&z, lambda)?;
            let mut err: Vec<f64> = next.iter().zip(&limit).map(|(a, b)| a - b).collect();
            let drift = self.fix.fix_projector.mul_vec(&err);
            err.iter_mut().zip(&drift).for_each(|(v, d)| *v -= d);
            scale = norm(&err);
            ratios.push(scale);
            if scale == 0.0 {
                ratios.resize(steps, 0.0);
                break;
            }
            e = err.into_iter().map(|v| v / scale).collect();
        }
        Ok(ratios)
    }

    /// Geometric mean of the last `window` error ratios after `warmup` steps.
    pub fn observed_contraction(&self, lambda: f64, start: &[f64], warmup: usize, window: usize) -> Result<f64> {
        let ratios = self.error_ratios(lambda, start, warmup + window)?;
        let tail = &ratios[warmup..];
        if tail.iter().any(|&r| r == 0.0) {
            return Ok(0.0);
        }
        Ok((tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp())
    }
}

/// Runs the relaxed iteration from `start`.
pub fn iterate<S: Splitting + ?Sized>(problem: &S, config: &IterationConfig, start: &[f64]) -> Result<IterationTrace> {
    Solver::new(problem)?.iterate(config, start)
}

/// The forward-pass image `M z`.
pub fn shadow<S: Splitting + ?Sized>(problem: &S, z: &[f64]) -> Result<Vec<f64>> {
    problem.forward(z)
}

/// Bounds `ρ(T_λ − P_{Fix T}) ≤ rate ≤ ‖T_λ − P_{Fix T}‖` on the linear convergence rate.
pub fn rate_bounds<S: Splitting + ?Sized>(problem: &S, lambda: f64) -> Result<RateBounds> {
    Solver::new(problem)?.rate_bounds(lambda)
}
