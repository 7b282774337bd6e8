//! Accelerated proximal gradient (FISTA) for a fixed smoothing parameter.
//!
//! Minimizes `f_mu(beta) = g(beta) + tv * TV_mu(beta) + l1 * ||beta||_1`
//! where `g` is the logistic loss plus ridge. The smooth part (including the
//! smoothed TV) is handled by gradient steps, the l1 part by its exact
//! proximal operator, so zeros in the result are exact.
//!
//! Momentum follows Beck and Teboulle: `tau_1 = 1`,
//! `tau_{k+1} = (1 + sqrt(1 + 4 tau_k^2)) / 2`, extrapolation factor
//! `(tau_k - 1) / tau_{k+1}`. The step size is constant, taken from the known
//! Lipschitz bound; there is no line search.

use crate::error::{ConestaError, Result};
use crate::grid::GradientOperator;
use crate::model::{logistic_loss_value_gradient_into, Dataset};
use crate::penalties::{
    self, prox_l1, PenaltyWeights, SmoothingParam,
};

/// Inner-solver settings. `step_size` must not exceed
/// `1 / (L0 + tv * ||A||^2 / mu)`.
#[derive(Debug, Clone, Copy)]
pub struct FistaConfig {
    pub step_size: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub record_trace: bool,
}

/// Outcome of one FISTA run.
#[derive(Debug, Clone)]
pub struct FistaResult {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub objective_trace: Option<Vec<f64>>,
    pub converged: bool,
}

/// Step size `t_mu = 1 / (L0 + tv * ||A||^2 / mu)`.
pub fn fista_step_size(
    l0: f64,
    weights: &PenaltyWeights,
    spectral_norm_a: f64,
    mu: SmoothingParam,
) -> Result<f64> {
    let denom = l0 + weights.tv * spectral_norm_a.powi(2) / mu.value();
    if denom <= 0.0 {
        return Err(ConestaError::ZeroCurvature);
    }
    Ok(1.0 / denom)
}

/// Gradient of the smooth part `g + tv * TV_mu` at `beta`, written into `out`.
///
/// The TV machinery is skipped entirely when `weights.tv == 0`, so the
/// elastic-net path is bitwise independent of `mu`.
pub(crate) fn smooth_gradient_into(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    mu: SmoothingParam,
    beta: &[f64],
    tv_scratch: &mut [f64],
    tv_grad: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    logistic_loss_value_gradient_into(data, beta, out)?;
    if weights.l2 > 0.0 {
        for (g, &b) in out.iter_mut().zip(beta) {
            *g += 2.0 * weights.l2 * b;
        }
    }
    if weights.tv > 0.0 {
        penalties::tv_smoothed_gradient_into(op, beta, mu, tv_scratch, tv_grad)?;
        for (g, &t) in out.iter_mut().zip(tv_grad.iter()) {
            *g += weights.tv * t;
        }
    }
    Ok(())
}

/// Smoothed objective `f_mu(beta)`.
pub fn objective_smoothed(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    beta: &[f64],
    mu: SmoothingParam,
) -> Result<f64> {
    let mut value = crate::model::logistic_loss_value(data, beta)?;
    if weights.l2 > 0.0 {
        value += weights.l2 * beta.iter().map(|b| b * b).sum::<f64>();
    }
    if weights.tv > 0.0 {
        value += weights.tv * penalties::tv_smoothed(op, beta, mu)?;
    }
    if weights.l1 > 0.0 {
        value += weights.l1 * beta.iter().map(|b| b.abs()).sum::<f64>();
    }
    Ok(value)
}

/// Exact objective `f(beta)` with the unsmoothed TV penalty.
pub fn objective_exact(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    beta: &[f64],
) -> Result<f64> {
    let mut value = crate::model::logistic_loss_value(data, beta)?;
    if weights.l2 > 0.0 {
        value += weights.l2 * beta.iter().map(|b| b * b).sum::<f64>();
    }
    if weights.tv > 0.0 {
        value += weights.tv * penalties::tv_exact(op, beta)?;
    }
    if weights.l1 > 0.0 {
        value += weights.l1 * beta.iter().map(|b| b.abs()).sum::<f64>();
    }
    Ok(value)
}

/// Runs FISTA from `beta0` at fixed `mu`.
///
/// Stops when the gradient-mapping surrogate
/// `||beta_k - beta_{k-1}|| / t <= tol` or after `max_iter` iterations.
pub fn fista_run(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    mu: SmoothingParam,
    beta0: &[f64],
    cfg: &FistaConfig,
) -> Result<FistaResult> {
    let p = data.n_features();
    if beta0.len() != p {
        return Err(ConestaError::ShapeMismatch {
            expected: p,
            got: beta0.len(),
        });
    }
    if cfg.step_size <= 0.0 || cfg.max_iter == 0 || cfg.tol <= 0.0 {
        return Err(ConestaError::InvalidArgument(
            "step size, max_iter and tol must be positive".into(),
        ));
    }
    let t = cfg.step_size;
    let threshold = t * weights.l1;

    let mut x = beta0.to_vec();
    let mut y = beta0.to_vec();
    let mut tau = 1.0_f64;
    let mut grad = vec![0.0; p];
    let mut tv_scratch = vec![0.0; op.range_len()];
    let mut tv_grad = vec![0.0; op.voxel_count()];
    let mut trace = cfg.record_trace.then(Vec::new);

    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=cfg.max_iter {
        smooth_gradient_into(data, op, weights, mu, &y, &mut tv_scratch, &mut tv_grad, &mut grad)?;
        let step: Vec<f64> = y.iter().zip(&grad).map(|(yi, gi)| yi - t * gi).collect();
        let x_new = prox_l1(&step, threshold);

        let fmu = objective_smoothed(data, op, weights, &x_new, mu)?;
        if !fmu.is_finite() {
            return Err(ConestaError::NonFiniteObjective { iteration: k });
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(fmu);
        }

        let diff: f64 = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();

        let tau_new = 0.5 * (1.0 + (1.0 + 4.0 * tau * tau).sqrt());
        let momentum = (tau - 1.0) / tau_new;
        y = x_new
            .iter()
            .zip(&x)
            .map(|(xn, xo)| xn + momentum * (xn - xo))
            .collect();
        x = x_new;
        tau = tau_new;
        iterations = k;

        if diff / t <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(FistaResult {
        beta: x,
        iterations,
        objective_trace: trace,
        converged,
    })
}
