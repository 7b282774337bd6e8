//! Logistic regression loss: the data-fit part of the smooth term.
//!
//! The objective minimized is the negative mean log-likelihood
//! `g_data(beta) = (1/n) sum_i [ log(1 + exp(X_i beta)) - y_i X_i beta ]`
//! with gradient `(1/n) X^T (sigma(X beta) - y)`. Together with the ridge
//! term the smooth-part curvature is bounded by
//! `L0 = 2 * l2 + ||X||_2^2 / (4n)`.

use crate::error::{ConestaError, Result};
use crate::linalg::power_iteration;
use ndarray::{Array2, ArrayView1, Axis};

/// Design matrix and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<u8>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<u8>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(ConestaError::ShapeMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(ConestaError::InvalidArgument(
                "dataset must have at least one sample and one feature".into(),
            ));
        }
        if let Some(row) = y.iter().position(|&l| l > 1) {
            return Err(ConestaError::InvalidLabel {
                row,
                value: y[row] as f64,
            });
        }
        Ok(Self { x, y })
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    /// Scales each column by its inverse standard deviation (no centering,
    /// the model has no intercept). Columns with zero variance are left
    /// untouched. Returns the scale factors applied.
    pub fn standardize_columns(&mut self) -> Vec<f64> {
        let n = self.x.nrows() as f64;
        let mut scales = vec![1.0; self.x.ncols()];
        for (j, mut col) in self.x.axis_iter_mut(Axis(1)).enumerate() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                let sd = var.sqrt();
                col.iter_mut().for_each(|v| *v /= sd);
                scales[j] = 1.0 / sd;
            }
        }
        scales
    }

    /// Spectral norm of `X` by the shared power-iteration routine.
    pub fn spectral_norm_x(&self, tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
        let (n, p) = (self.x.nrows(), self.x.ncols());
        power_iteration(
            p,
            n,
            |v, out| {
                let v = ArrayView1::from(v);
                for (i, row) in self.x.rows().into_iter().enumerate() {
                    out[i] = row.dot(&v);
                }
            },
            |w, out| {
                out.fill(0.0);
                for (i, row) in self.x.rows().into_iter().enumerate() {
                    let wi = w[i];
                    for (o, &xij) in out.iter_mut().zip(row.iter()) {
                        *o += wi * xij;
                    }
                }
            },
            tol,
            max_iter,
            seed,
        )
    }
}

/// Numerically stable `log(1 + exp(m))`.
fn log1p_exp(m: f64) -> f64 {
    m.max(0.0) + (-m.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + exp(-m))`.
pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Per-sample probabilities `p_i = sigmoid(X_i beta)`.
pub fn predict_proba(x: &Array2<f64>, beta: &[f64]) -> Result<Vec<f64>> {
    if x.ncols() != beta.len() {
        return Err(ConestaError::ShapeMismatch {
            expected: x.ncols(),
            got: beta.len(),
        });
    }
    let beta = ArrayView1::from(beta);
    Ok(x.rows().into_iter().map(|row| sigmoid(row.dot(&beta))).collect())
}

/// Negative mean log-likelihood and its gradient.
pub fn logistic_loss_value_gradient(data: &Dataset, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; data.n_features()];
    let value = logistic_loss_value_gradient_into(data, beta, &mut grad)?;
    Ok((value, grad))
}

/// Buffer-reusing variant; `grad` must have length `p`.
pub fn logistic_loss_value_gradient_into(
    data: &Dataset,
    beta: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    if data.n_features() != beta.len() {
        return Err(ConestaError::ShapeMismatch {
            expected: data.n_features(),
            got: beta.len(),
        });
    }
    let beta_v = ArrayView1::from(beta);
    let n = data.n_samples() as f64;
    grad.fill(0.0);
    let mut value = 0.0;
    for (row, &label) in data.x.rows().into_iter().zip(data.y.iter()) {
        let margin = row.dot(&beta_v);
        let yi = label as f64;
        value += log1p_exp(margin) - yi * margin;
        let resid = (sigmoid(margin) - yi) / n;
        for (g, &xij) in grad.iter_mut().zip(row.iter()) {
            *g += resid * xij;
        }
    }
    Ok(value / n)
}

/// Loss value only (no gradient allocation).
pub fn logistic_loss_value(data: &Dataset, beta: &[f64]) -> Result<f64> {
    if data.n_features() != beta.len() {
        return Err(ConestaError::ShapeMismatch {
            expected: data.n_features(),
            got: beta.len(),
        });
    }
    let beta_v = ArrayView1::from(beta);
    let n = data.n_samples() as f64;
    let mut value = 0.0;
    for (row, &label) in data.x.rows().into_iter().zip(data.y.iter()) {
        let margin = row.dot(&beta_v);
        value += log1p_exp(margin) - label as f64 * margin;
    }
    Ok(value / n)
}

/// Lipschitz constant of the gradient of the smooth part (data fit + ridge):
/// `L0 = 2 * l2 + ||X||_2^2 / (4n)`.
pub fn smooth_part_lipschitz(n_samples: usize, l2: f64, spectral_norm_x: f64) -> f64 {
    2.0 * l2 + spectral_norm_x.powi(2) / (4.0 * n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.5..1.5));
        let y = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn rejects_bad_labels() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(
            Dataset::new(x, vec![0, 3]),
            Err(ConestaError::InvalidLabel { row: 1, .. })
        ));
    }

    #[test]
    fn zero_beta_gives_half_probabilities() {
        let data = random_dataset(6, 4, 1);
        let probs = predict_proba(data.x(), &[0.0; 4]).unwrap();
        assert!(probs.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn probability_monotone_in_margin() {
        let mut prev = 0.0;
        for k in -20..=20 {
            let p = sigmoid(k as f64 / 2.0);
            assert!(p > prev && p > 0.0 && p < 1.0);
            prev = p;
        }
        assert!(sigmoid(40.0) > 1.0 - 1e-12);
    }

    #[test]
    fn sigmoid_matches_naive_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let m: f64 = rng.gen_range(-30.0..30.0);
            let naive = 1.0 / (1.0 + (-m).exp());
            assert_relative_eq!(sigmoid(m), naive, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_beta_loss_is_log2() {
        let data = random_dataset(10, 3, 2);
        let (value, grad) = logistic_loss_value_gradient(&data, &[0.0; 3]).unwrap();
        assert_relative_eq!(value, 2.0_f64.ln(), epsilon = 1e-14);
        // gradient = (1/n) X^T (1/2 - y)
        let n = data.n_samples() as f64;
        for j in 0..3 {
            let expect: f64 = data
                .x()
                .rows()
                .into_iter()
                .zip(data.labels())
                .map(|(row, &y)| (0.5 - y as f64) * row[j])
                .sum::<f64>()
                / n;
            assert_relative_eq!(grad[j], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = random_dataset(12, 6, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let beta: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = logistic_loss_value_gradient(&data, &beta).unwrap();
        let h = 1e-6;
        for j in 0..6 {
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (logistic_loss_value(&data, &plus).unwrap()
                - logistic_loss_value(&data, &minus).unwrap())
                / (2.0 * h);
            let scale = grad[j].abs().max(1e-3);
            assert!((grad[j] - fd).abs() <= 1e-6 * scale.max(1.0), "{} vs {fd}", grad[j]);
        }
    }

    #[test]
    fn separated_data_saturates() {
        let x = array![[-10.0], [-12.0], [11.0], [9.0]];
        let data = Dataset::new(x, vec![0, 0, 1, 1]).unwrap();
        let loss = logistic_loss_value(&data, &[5.0]).unwrap();
        assert!(loss < 1e-8);
    }

    #[test]
    fn lipschitz_constant_cases() {
        assert_eq!(smooth_part_lipschitz(3, 0.0, 0.0), 0.0);
        // 1 sample, X = (2): L0 = 2 l2 + 4 / 4
        assert_eq!(smooth_part_lipschitz(1, 0.5, 2.0), 2.0);
    }

    #[test]
    fn lipschitz_bound_sampled() {
        let data = random_dataset(15, 5, 6);
        let l2 = 0.3;
        let norm_x = data.spectral_norm_x(1e-8, 10_000, 42).unwrap();
        let l0 = smooth_part_lipschitz(data.n_samples(), l2, norm_x);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let gu = smooth_grad(&data, &u, l2);
            let gv = smooth_grad(&data, &v, l2);
            let dg: f64 = gu.iter().zip(&gv).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let d: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(dg <= l0 * d * (1.0 + 1e-6), "{dg} > {l0} * {d}");
        }
    }

    fn smooth_grad(data: &Dataset, beta: &[f64], l2: f64) -> Vec<f64> {
        let (_, mut g) = logistic_loss_value_gradient(data, beta).unwrap();
        g.iter_mut().zip(beta).for_each(|(gi, &b)| *gi += 2.0 * l2 * b);
        g
    }

    #[test]
    fn convexity_sampled() {
        let data = random_dataset(10, 4, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let u: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
            let fm = logistic_loss_value(&data, &mid).unwrap();
            let fu = logistic_loss_value(&data, &u).unwrap();
            let fv = logistic_loss_value(&data, &v).unwrap();
            assert!(fm <= 0.5 * (fu + fv) + 1e-12);
        }
    }

    #[test]
    fn loss_invariant_under_row_permutation() {
        let data = random_dataset(8, 3, 10);
        let beta = [0.4, -0.2, 0.9];
        let perm = [3usize, 0, 7, 5, 1, 6, 2, 4];
        let xp = Array2::from_shape_fn((8, 3), |(i, j)| data.x()[[perm[i], j]]);
        let yp: Vec<u8> = perm.iter().map(|&i| data.labels()[i]).collect();
        let permuted = Dataset::new(xp, yp).unwrap();
        assert_relative_eq!(
            logistic_loss_value(&data, &beta).unwrap(),
            logistic_loss_value(&permuted, &beta).unwrap(),
            epsilon = 1e-12
        );
    }
}
