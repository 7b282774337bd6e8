//! Independent reference implementations used by the integration suites.
//!
//! Everything here deliberately avoids the library's FISTA/CONESTA code
//! paths: plain proximal gradient loops and coordinate descent serve as
//! oracles for the accelerated solver.

#![allow(dead_code)]

use conesta::prelude::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
    let y = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
    Dataset::new(x, y).unwrap()
}

pub fn random_vec(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn smooth_grad(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    mu: SmoothingParam,
    beta: &[f64],
) -> Vec<f64> {
    let (_, mut g) = logistic_loss_value_gradient(data, beta).unwrap();
    g.iter_mut()
        .zip(beta)
        .for_each(|(gi, &b)| *gi += 2.0 * weights.l2 * b);
    if weights.tv > 0.0 {
        let tvg = tv_smoothed_gradient(op, beta, mu).unwrap();
        g.iter_mut()
            .zip(&tvg)
            .for_each(|(gi, &t)| *gi += weights.tv * t);
    }
    g
}

pub fn lipschitz_l0(data: &Dataset, l2: f64) -> f64 {
    let norm_x = data.spectral_norm_x(1e-8, 100_000, 42).unwrap();
    smooth_part_lipschitz(data.n_samples(), l2, norm_x)
}

/// Plain proximal gradient (ISTA) on `f_mu` at a fixed smoothing parameter.
pub fn ista_fixed_mu(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    mu_val: f64,
    beta0: &[f64],
    iterations: usize,
) -> Vec<f64> {
    let mu = SmoothingParam::new(mu_val).unwrap();
    let l0 = lipschitz_l0(data, weights.l2);
    let t = fista_step_size(l0, weights, op.spectral_norm(), mu).unwrap();
    let mut beta = beta0.to_vec();
    for _ in 0..iterations {
        let g = smooth_grad(data, op, weights, mu, &beta);
        let step: Vec<f64> = beta.iter().zip(&g).map(|(b, gi)| b - t * gi).collect();
        beta = prox_l1(&step, t * weights.l1);
    }
    beta
}

/// ISTA through a fixed schedule of (mu, iterations) stages, warm-started
/// stage to stage. The last stage dominates the fidelity of the reference.
pub fn ista_staged(
    data: &Dataset,
    op: &GradientOperator,
    weights: &PenaltyWeights,
    stages: &[(f64, usize)],
) -> Vec<f64> {
    let mut beta = vec![0.0; data.n_features()];
    for &(mu_val, iterations) in stages {
        beta = ista_fixed_mu(data, op, weights, mu_val, &beta, iterations);
    }
    beta
}

/// Coordinate-descent oracle for l1/l2-penalized logistic regression
/// (no TV). Each coordinate is minimized exactly by bisection on the
/// subgradient of the convex 1-D restriction.
pub fn cd_logistic_enet(data: &Dataset, l2: f64, l1: f64) -> Vec<f64> {
    let (n, p) = (data.n_samples(), data.n_features());
    let mut beta = vec![0.0; p];
    let mut margins = vec![0.0; n];
    let nf = n as f64;

    // derivative of the smooth part of the 1-D restriction at beta_j = t
    let smooth_deriv = |j: usize, t: f64, beta_j: f64, margins: &[f64]| -> f64 {
        let mut d = 2.0 * l2 * t;
        for i in 0..n {
            let m = margins[i] + data.x()[[i, j]] * (t - beta_j);
            let s = 1.0 / (1.0 + (-m).exp());
            d += data.x()[[i, j]] * (s - data.labels()[i] as f64) / nf;
        }
        d
    };

    for _sweep in 0..5_000 {
        let mut max_change = 0.0_f64;
        for j in 0..p {
            let old = beta[j];
            // the optimum satisfies smooth_deriv + l1 * sign(t) = 0, or
            // t = 0 when |smooth_deriv(0)| <= l1
            let d0 = smooth_deriv(j, 0.0, old, &margins);
            let new = if d0.abs() <= l1 {
                0.0
            } else {
                // descend from 0 in the direction opposing the subgradient
                let sign = if d0 > l1 { -1.0 } else { 1.0 };
                let target = |t: f64| smooth_deriv(j, t, old, &margins) + l1 * sign;
                let mut lo = 0.0;
                let mut hi = sign;
                while target(hi) * target(lo) > 0.0 && hi.abs() < 1e6 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if target(lo) * target(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            if new != old {
                for i in 0..n {
                    margins[i] += data.x()[[i, j]] * (new - old);
                }
                beta[j] = new;
            }
            max_change = max_change.max((new - old).abs());
        }
        if max_change < 1e-12 {
            break;
        }
    }
    beta
}

/// Least-squares slope of log10(gap) against log10(k); used for empirical
/// convergence rates.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, gap)| *k > 0.0 && *gap > 0.0)
        .map(|(k, gap)| (k.log10(), gap.log10()))
        .collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

pub fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
