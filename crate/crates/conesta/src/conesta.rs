//! Continuation driver: repeated FISTA runs with a decreasing smoothing
//! parameter.
//!
//! Each run `i` targets precision `eps_i = (1/2)^(i-1)` on the original
//! (unsmoothed) problem and uses the smoothing parameter `mu_opt(eps_i)` that
//! minimizes the worst-case iteration bound for that precision. The next run
//! warm-starts from the previous solution. The loop stops as soon as the
//! scheduled precision drops below `target_eps`.
//!
//! With a zero TV weight the smoothing machinery is bypassed entirely and a
//! single FISTA run solves the elastic-net (or pure lasso, or ridge) problem.

use crate::error::{ConestaError, Result};
use crate::fista::{self, FistaConfig};
use crate::grid::GradientOperator;
use crate::model::{smooth_part_lipschitz, Dataset};
use crate::penalties::{PenaltyWeights, SmoothingParam};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use crate::fista::{objective_exact, objective_smoothed};

/// Settings for the inner FISTA runs; the step size is derived per run from
/// the Lipschitz constants.
#[derive(Debug, Clone, Copy)]
pub struct InnerSolverConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-8,
        }
    }
}

/// Per-run record of the continuation schedule.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub eps: f64,
    /// Smoothing parameter of the run; `None` on the TV-free path.
    pub mu: Option<f64>,
    pub step_size: f64,
    pub inner_iterations: usize,
    pub final_objective_fmu: f64,
    pub final_objective_f: f64,
}

/// Constants entering the step sizes, kept for inspection.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitConstants {
    pub l0: f64,
    pub spectral_norm_a: f64,
    pub spectral_norm_x: f64,
}

/// Full fit outcome: coefficients plus the continuation trace.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub runs: Vec<RunRecord>,
    pub total_inner_iterations: usize,
    pub constants: FitConstants,
}

/// Smoothing parameter minimizing the worst-case iteration bound for reaching
/// precision `eps` on the unsmoothed problem:
/// `mu_opt = -tv ||A||^2 / L0 + sqrt((tv M ||A||^2)^2 + eps M L0 ||A||^2) / (M L0)`
/// with `M = p / 2`.
pub fn mu_opt(eps: f64, tv_weight: f64, spectral_norm_a: f64, l0: f64, p: usize) -> Result<f64> {
    if eps <= 0.0 {
        return Err(ConestaError::NonPositivePrecision(eps));
    }
    if tv_weight > 0.0 && spectral_norm_a == 0.0 {
        return Err(ConestaError::DegenerateOperator);
    }
    if l0 <= 0.0 || p == 0 {
        return Err(ConestaError::InvalidArgument(format!(
            "mu_opt needs L0 > 0 and p >= 1, got L0 = {l0}, p = {p}"
        )));
    }
    let m = p as f64 / 2.0;
    let a2 = spectral_norm_a.powi(2);
    let mu = -tv_weight * a2 / l0
        + ((tv_weight * m * a2).powi(2) + eps * m * l0 * a2).sqrt() / (m * l0);
    Ok(mu)
}

/// Initialization mode for the starting coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Zeros,
    RandomUnit,
}

impl std::str::FromStr for InitMode {
    type Err = ConestaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(Self::Zeros),
            "random_unit" => Ok(Self::RandomUnit),
            other => Err(ConestaError::InvalidArgument(format!(
                "unknown init mode {other:?}, expected \"zeros\" or \"random_unit\""
            ))),
        }
    }
}

/// Starting vector: all zeros, or a seeded random direction of unit norm.
pub fn init_beta(p: usize, mode: InitMode, seed: u64) -> Vec<f64> {
    match mode {
        InitMode::Zeros => vec![0.0; p],
        InitMode::RandomUnit => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                v[0] = 1.0;
            } else {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            v
        }
    }
}

/// Runs the continuation scheme and returns the fitted coefficients with the
/// full per-run trace.
pub fn conesta_fit(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    beta0: &[f64],
    target_eps: f64,
    inner: &InnerSolverConfig,
    seed: u64,
) -> Result<FitResult> {
    if target_eps <= 0.0 {
        return Err(ConestaError::NonPositivePrecision(target_eps));
    }
    let p = data.n_features();
    if beta0.len() != p || op.voxel_count() != p {
        return Err(ConestaError::ShapeMismatch {
            expected: p,
            got: if beta0.len() != p { beta0.len() } else { op.voxel_count() },
        });
    }

    let spectral_norm_x = data.spectral_norm_x(1e-6, 10_000, seed)?;
    let l0 = smooth_part_lipschitz(data.n_samples(), weights.l2, spectral_norm_x);
    let spectral_norm_a = op.spectral_norm();
    let constants = FitConstants {
        l0,
        spectral_norm_a,
        spectral_norm_x,
    };

    let mut runs = Vec::new();
    let mut beta = beta0.to_vec();

    if weights.tv == 0.0 {
        // mu never enters the elastic-net path; any placeholder works
        let mu = SmoothingParam::new(1.0)?;
        let step_size = fista::fista_step_size(l0, weights, spectral_norm_a, mu)?;
        let cfg = FistaConfig {
            step_size,
            max_iter: inner.max_iter,
            tol: inner.tol,
            record_trace: false,
        };
        let res = fista::fista_run(data, op, weights, mu, &beta, &cfg)
            .map_err(|e| ConestaError::SolverFailure {
                run: 1,
                source: Box::new(e),
            })?;
        let f = objective_exact(data, op, weights, &res.beta)?;
        runs.push(RunRecord {
            eps: target_eps,
            mu: None,
            step_size,
            inner_iterations: res.iterations,
            final_objective_fmu: f,
            final_objective_f: f,
        });
        beta = res.beta;
    } else {
        let mut i = 1usize;
        loop {
            let eps = 0.5_f64.powi(i as i32 - 1);
            if eps < target_eps {
                break;
            }
            let mu_val = mu_opt(eps, weights.tv, spectral_norm_a, l0, p)?;
            let mu = SmoothingParam::new(mu_val).map_err(|e| ConestaError::SolverFailure {
                run: i,
                source: Box::new(e),
            })?;
            let step_size = fista::fista_step_size(l0, weights, spectral_norm_a, mu)?;
            let cfg = FistaConfig {
                step_size,
                max_iter: inner.max_iter,
                tol: inner.tol,
                record_trace: false,
            };
            let res = fista::fista_run(data, op, weights, mu, &beta, &cfg).map_err(|e| {
                ConestaError::SolverFailure {
                    run: i,
                    source: Box::new(e),
                }
            })?;
            beta = res.beta;
            runs.push(RunRecord {
                eps,
                mu: Some(mu_val),
                step_size,
                inner_iterations: res.iterations,
                final_objective_fmu: objective_smoothed(data, op, weights, &beta, mu)?,
                final_objective_f: objective_exact(data, op, weights, &beta)?,
            });
            i += 1;
        }
    }

    let total_inner_iterations = runs.iter().map(|r| r.inner_iterations).sum();
    Ok(FitResult {
        beta,
        runs,
        total_inner_iterations,
        constants,
    })
}
