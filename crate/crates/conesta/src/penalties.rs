//! Exact and smoothed penalty functions.
//!
//! Total variation is the sum over voxels of the Euclidean norm of the
//! discrete gradient, `TV(beta) = sum_i ||(A beta)_i||_2`. It is convex but
//! not smooth; its smooth surrogate `TV_mu` subtracts a strongly concave
//! `mu`-term in the dual and satisfies
//! `TV_mu(beta) <= TV(beta) <= TV_mu(beta) + mu * p / 2`.
//! The l1 penalty keeps its exact proximal operator (soft-thresholding), so
//! the solver produces exact zeros.

use crate::error::{ConestaError, Result};
use crate::grid::GradientOperator;
use serde::{Deserialize, Serialize};

/// Nonnegative strengths of the three penalties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub l2: f64,
    pub l1: f64,
    pub tv: f64,
}

impl PenaltyWeights {
    pub fn new(l2: f64, l1: f64, tv: f64) -> Result<Self> {
        for (name, w) in [("l2", l2), ("l1", l1), ("tv", tv)] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(ConestaError::InvalidArgument(format!(
                    "penalty weight {name} must be finite and nonnegative, got {w}"
                )));
            }
        }
        Ok(Self { l2, l1, tv })
    }
}

/// Strictly positive smoothing parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParam(f64);

impl SmoothingParam {
    pub fn new(mu: f64) -> Result<Self> {
        if mu > 0.0 && mu.is_finite() {
            Ok(Self(mu))
        } else {
            Err(ConestaError::InvalidArgument(format!(
                "smoothing parameter must be strictly positive, got {mu}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Exact total variation `sum_i ||(A beta)_i||_2`.
pub fn tv_exact(op: &GradientOperator, beta: &[f64]) -> Result<f64> {
    let grad = op.apply(beta)?;
    Ok(group_norms_sum(&grad))
}

fn group_norms_sum(stacked: &[f64]) -> f64 {
    stacked
        .chunks_exact(3)
        .map(|g| (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt())
        .sum()
}

/// Projects each consecutive 3-vector of `alpha` onto the unit l2 ball.
///
/// In place; the projection is `alpha_i / max(1, ||alpha_i||_2)` per group.
pub fn project_dual_in_place(alpha: &mut [f64]) {
    for g in alpha.chunks_exact_mut(3) {
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if norm > 1.0 {
            g[0] /= norm;
            g[1] /= norm;
            g[2] /= norm;
        }
    }
}

/// Projection onto the dual compact set, returning a new vector.
pub fn project_dual(alpha: &[f64]) -> Vec<f64> {
    let mut out = alpha.to_vec();
    project_dual_in_place(&mut out);
    out
}

/// Nesterov-smoothed total variation
/// `TV_mu(beta) = <alpha*, A beta> - (mu/2) ||alpha*||^2` with
/// `alpha* = proj_K(A beta / mu)`.
pub fn tv_smoothed(op: &GradientOperator, beta: &[f64], mu: SmoothingParam) -> Result<f64> {
    let grad = op.apply(beta)?;
    let mu = mu.value();
    let mut alpha: Vec<f64> = grad.iter().map(|&x| x / mu).collect();
    project_dual_in_place(&mut alpha);
    let inner: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * g).sum();
    let alpha_sq: f64 = alpha.iter().map(|a| a * a).sum();
    Ok(inner - 0.5 * mu * alpha_sq)
}

/// Gradient of the smoothed TV: `A^T proj_K(A beta / mu)`.
///
/// Lipschitz with constant `||A||_2^2 / mu`.
pub fn tv_smoothed_gradient(
    op: &GradientOperator,
    beta: &[f64],
    mu: SmoothingParam,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; op.voxel_count()];
    let mut scratch = vec![0.0; op.range_len()];
    tv_smoothed_gradient_into(op, beta, mu, &mut scratch, &mut out)?;
    Ok(out)
}

/// Buffer-reusing variant for the solver's inner loop. `scratch` must have
/// length `3p`, `out` length `p`.
pub fn tv_smoothed_gradient_into(
    op: &GradientOperator,
    beta: &[f64],
    mu: SmoothingParam,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    op.apply_into(beta, scratch)?;
    let mu = mu.value();
    scratch.iter_mut().for_each(|x| *x /= mu);
    project_dual_in_place(scratch);
    op.apply_transpose_into(scratch, out)
}

/// Componentwise soft-thresholding `sign(x) * max(|x| - threshold, 0)`.
///
/// Inputs with `|x_j| <= threshold` become exact zeros.
pub fn prox_l1(x: &[f64], threshold: f64) -> Vec<f64> {
    debug_assert!(threshold >= 0.0);
    x.iter()
        .map(|&v| {
            if v > threshold {
                v - threshold
            } else if v < -threshold {
                v + threshold
            } else {
                0.0
            }
        })
        .collect()
}

/// Ridge penalty `l2 * ||beta||^2` and its gradient `2 * l2 * beta`.
///
/// No 1/2 factor: the gradient contributes `2 * l2` to the Lipschitz
/// constant of the smooth part.
pub fn l2_value_gradient(beta: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let value = l2 * beta.iter().map(|b| b * b).sum::<f64>();
    let grad = beta.iter().map(|b| 2.0 * l2 * b).collect();
    (value, grad)
}
