//! Shared power-iteration routine for spectral-norm estimates.

use crate::error::{ConestaError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Estimates the largest singular value of a linear operator `B` from
/// `domain_len` to `range_len` by power iteration on `B^T B`.
///
/// `forward` writes `B v` into its output buffer, `transpose` writes `B^T w`.
/// Deterministic for a fixed seed; errors with the last estimate when the
/// relative change between consecutive estimates stays above `tol`.
pub(crate) fn power_iteration<F, T>(
    domain_len: usize,
    range_len: usize,
    mut forward: F,
    mut transpose: T,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]),
    T: FnMut(&[f64], &mut [f64]),
{
    if tol <= 0.0 {
        return Err(ConestaError::InvalidArgument(format!(
            "power-iteration tolerance must be positive, got {tol}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..domain_len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = l2_norm(&v);
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }

    let mut range = vec![0.0; range_len];
    let mut w = vec![0.0; domain_len];
    let mut last = 0.0_f64;
    for _ in 0..max_iter {
        // one step of power iteration on B^T B with a residual-based stop:
        // for unit v, rho = v^T (B^T B) v and ||B^T B v - rho v|| <= tol * rho
        // puts an eigenvalue of B^T B within tol * rho of rho
        forward(&v, &mut range);
        let sigma = l2_norm(&range);
        if sigma == 0.0 {
            // a random unit vector lands in the null space only when the
            // operator is zero
            return Ok(0.0);
        }
        transpose(&range, &mut w);
        let rho = sigma * sigma;
        let residual = v
            .iter()
            .zip(&w)
            .map(|(&vi, &wi)| (wi - rho * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        last = sigma;
        if residual <= 0.1 * tol * rho {
            return Ok(sigma);
        }
        let wnorm = l2_norm(&w);
        if wnorm == 0.0 {
            return Ok(sigma);
        }
        v.iter_mut().zip(&w).for_each(|(x, &wi)| *x = wi / wnorm);
    }
    Err(ConestaError::PowerIterationDiverged { max_iter, last })
}
