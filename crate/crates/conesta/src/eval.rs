//! Classification metrics, McNemar's paired test, weight-map slice export
//! and support-recovery statistics.

use crate::error::{ConestaError, Result};
use crate::grid::MaskedVolume;
use crate::synth::GroundTruth;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sensitivity is the recall of class 1, specificity the recall of class 0,
/// BCR their mean.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub bcr: f64,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Which branch of McNemar's test produced the p-value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum McNemarKind {
    Exact,
    Chi2Cc,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct McNemarResult {
    /// (method-A-only-correct, method-B-only-correct)
    pub discordant_counts: (usize, usize),
    pub p_value: f64,
    pub test_kind: McNemarKind,
}

/// Discordant-pair count below which the exact binomial test is used.
const EXACT_CUTOFF: usize = 25;

pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<EvalMetrics> {
    if y_true.len() != y_pred.len() {
        return Err(ConestaError::ShapeMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let mut counts = ConfusionCounts {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => counts.tp += 1,
            (0, 0) => counts.tn += 1,
            (0, 1) => counts.fp += 1,
            (1, 0) => counts.fn_ += 1,
            _ => {
                return Err(ConestaError::InvalidLabel {
                    row: 0,
                    value: t.max(p) as f64,
                })
            }
        }
    }
    let pos = counts.tp + counts.fn_;
    let neg = counts.tn + counts.fp;
    if pos == 0 || neg == 0 {
        return Err(ConestaError::DegenerateTestSet);
    }
    let sensitivity = counts.tp as f64 / pos as f64;
    let specificity = counts.tn as f64 / neg as f64;
    Ok(EvalMetrics {
        sensitivity,
        specificity,
        bcr: 0.5 * (sensitivity + specificity),
        counts,
    })
}

/// Two-sided McNemar test on the discordant predictions of two classifiers.
///
/// Exact binomial when fewer than 25 discordant pairs, chi-square with
/// continuity correction otherwise. Identical error patterns give p = 1.
pub fn mcnemar_test(y_true: &[u8], pred_a: &[u8], pred_b: &[u8]) -> Result<McNemarResult> {
    if pred_a.len() != y_true.len() || pred_b.len() != y_true.len() {
        return Err(ConestaError::ShapeMismatch {
            expected: y_true.len(),
            got: if pred_a.len() != y_true.len() {
                pred_a.len()
            } else {
                pred_b.len()
            },
        });
    }
    let mut a_only = 0usize;
    let mut b_only = 0usize;
    for ((&t, &a), &b) in y_true.iter().zip(pred_a).zip(pred_b) {
        match (a == t, b == t) {
            (true, false) => a_only += 1,
            (false, true) => b_only += 1,
            _ => {}
        }
    }
    let n = a_only + b_only;
    if n == 0 {
        return Ok(McNemarResult {
            discordant_counts: (0, 0),
            p_value: 1.0,
            test_kind: McNemarKind::Exact,
        });
    }
    let (p_value, test_kind) = if n < EXACT_CUTOFF {
        (exact_binomial_two_sided(a_only.min(b_only), n), McNemarKind::Exact)
    } else {
        let diff = a_only.abs_diff(b_only) as f64;
        let stat = (diff - 1.0).max(0.0).powi(2) / n as f64;
        let chi2 = ChiSquared::new(1.0).expect("one degree of freedom");
        (1.0 - chi2.cdf(stat), McNemarKind::Chi2Cc)
    };
    Ok(McNemarResult {
        discordant_counts: (a_only, b_only),
        p_value,
        test_kind,
    })
}

/// `min(1, 2 * P[Binomial(n, 1/2) <= k])`.
fn exact_binomial_two_sided(k: usize, n: usize) -> f64 {
    let mut tail = 0.0_f64;
    // C(n, j) / 2^n accumulated in log space is unnecessary for n < 25
    let mut coeff = 1.0_f64;
    let scale = 0.5_f64.powi(n as i32);
    for j in 0..=k {
        if j > 0 {
            coeff = coeff * (n - j + 1) as f64 / j as f64;
        }
        tail += coeff * scale;
    }
    (2.0 * tail).min(1.0)
}

/// Renders one CSV slice of the coefficient volume per requested index.
///
/// Rows and columns follow the two remaining axes in (x, y, z) order; cells
/// outside the mask are empty.
pub fn export_weight_slices(
    beta: &[f64],
    vol: &MaskedVolume,
    axis: char,
    indices: &[usize],
) -> Result<Vec<String>> {
    if beta.len() != vol.voxel_count() {
        return Err(ConestaError::ShapeMismatch {
            expected: vol.voxel_count(),
            got: beta.len(),
        });
    }
    let (nx, ny, nz) = vol.dims();
    let axis_len = match axis {
        'x' => nx,
        'y' => ny,
        'z' => nz,
        other => {
            return Err(ConestaError::InvalidArgument(format!(
                "axis must be x, y or z, got {other:?}"
            )))
        }
    };
    let mut slices = Vec::with_capacity(indices.len());
    for &index in indices {
        if index >= axis_len {
            return Err(ConestaError::SliceIndexOutOfRange { index, axis });
        }
        // rows iterate the later axis, columns the earlier one
        let (n_rows, n_cols) = match axis {
            'x' => (nz, ny),
            'y' => (nz, nx),
            _ => (ny, nx),
        };
        let mut csv = String::new();
        for r in 0..n_rows {
            let mut cells = Vec::with_capacity(n_cols);
            for c in 0..n_cols {
                let (x, y, z) = match axis {
                    'x' => (index, c, r),
                    'y' => (c, index, r),
                    _ => (c, r, index),
                };
                match vol.linear_index(x, y, z) {
                    Some(i) => cells.push(format!("{:?}", beta[i])),
                    None => cells.push(String::new()),
                }
            }
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        slices.push(csv);
    }
    Ok(slices)
}

/// Dice overlap between the estimated support `{j : |beta_j| > threshold}`
/// and the true support, plus the nonzero count.
pub fn support_stats(beta: &[f64], truth: &GroundTruth, threshold: f64) -> Result<(f64, usize)> {
    if beta.len() != truth.support.len() {
        return Err(ConestaError::ShapeMismatch {
            expected: truth.support.len(),
            got: beta.len(),
        });
    }
    if threshold < 0.0 {
        return Err(ConestaError::InvalidArgument(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    let estimated: Vec<bool> = beta.iter().map(|b| b.abs() > threshold).collect();
    let n_nonzero = estimated.iter().filter(|&&s| s).count();
    let n_true = truth.support.iter().filter(|&&s| s).count();
    let overlap = estimated
        .iter()
        .zip(&truth.support)
        .filter(|(&e, &t)| e && t)
        .count();
    let dice = if n_nonzero + n_true == 0 {
        1.0
    } else {
        2.0 * overlap as f64 / (n_nonzero + n_true) as f64
    };
    Ok((dice, n_nonzero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bcr_is_mean_of_recalls() {
        // arithmetic fixtures matching published sensitivity/specificity pairs
        assert_relative_eq!(0.5 * (0.855 + 0.855), 0.855, epsilon = 1e-12);
        assert_relative_eq!(0.5 * (0.684 + 0.484), 0.584, epsilon = 1e-12);

        let y_true = [1, 1, 1, 1, 0, 0, 0, 0];
        let y_pred = [1, 1, 1, 0, 0, 0, 1, 1];
        let m = compute_metrics(&y_true, &y_pred).unwrap();
        assert_relative_eq!(m.sensitivity, 0.75);
        assert_relative_eq!(m.specificity, 0.5);
        assert_relative_eq!(m.bcr, 0.625);
        assert_eq!(
            m.counts,
            ConfusionCounts {
                tp: 3,
                tn: 2,
                fp: 2,
                fn_: 1
            }
        );
    }

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 0, 1, 1];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.sensitivity, m.specificity, m.bcr), (1.0, 1.0, 1.0));
    }

    #[test]
    fn single_class_truth_is_degenerate() {
        assert!(matches!(
            compute_metrics(&[1, 1, 1], &[1, 0, 1]),
            Err(ConestaError::DegenerateTestSet)
        ));
    }

    #[test]
    fn bcr_invariant_under_permutation() {
        let y_true = [1, 0, 1, 0, 1, 0];
        let y_pred = [1, 1, 0, 0, 1, 0];
        let perm = [4usize, 2, 0, 5, 1, 3];
        let yt: Vec<u8> = perm.iter().map(|&i| y_true[i]).collect();
        let yp: Vec<u8> = perm.iter().map(|&i| y_pred[i]).collect();
        assert_eq!(
            compute_metrics(&y_true, &y_pred).unwrap().bcr,
            compute_metrics(&yt, &yp).unwrap().bcr
        );
    }

    #[test]
    fn mcnemar_identical_predictions() {
        let y = [0, 1, 1, 0];
        let pred = [0, 0, 1, 1];
        let r = mcnemar_test(&y, &pred, &pred).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.test_kind, McNemarKind::Exact);
        assert_eq!(r.discordant_counts, (0, 0));
    }

    #[test]
    fn mcnemar_exact_matches_binomial_sum_oracle() {
        // build predictions with (b, c) = (1, 9)
        let n = 10;
        let y_true = vec![1u8; n];
        let mut pred_a = vec![0u8; n];
        let mut pred_b = vec![1u8; n];
        pred_a[0] = 1;
        pred_b[0] = 0;
        let r = mcnemar_test(&y_true, &pred_a, &pred_b).unwrap();
        assert_eq!(r.discordant_counts, (1, 9));
        assert_eq!(r.test_kind, McNemarKind::Exact);
        // direct sum of Binomial(10, 1/2) tails
        let binom = |k: u32| -> f64 {
            let c = (0..k).fold(1.0, |acc, j| acc * (10 - j) as f64 / (j + 1) as f64);
            c * 0.5f64.powi(10)
        };
        let oracle = 2.0 * (binom(0) + binom(1));
        assert!((r.p_value - oracle).abs() < 1e-12);
    }

    #[test]
    fn mcnemar_symmetric_large_counts() {
        // (b, c) = (50, 50): perfect symmetry, chi-square branch, p near 1
        let n = 100;
        let y_true = vec![1u8; n];
        let mut pred_a = vec![0u8; n];
        let mut pred_b = vec![0u8; n];
        for i in 0..50 {
            pred_a[i] = 1;
        }
        for i in 50..100 {
            pred_b[i] = 1;
        }
        let r = mcnemar_test(&y_true, &pred_a, &pred_b).unwrap();
        assert_eq!(r.test_kind, McNemarKind::Chi2Cc);
        assert!(r.p_value > 0.9);
        // symmetry in the two methods
        let swapped = mcnemar_test(&y_true, &pred_b, &pred_a).unwrap();
        assert_eq!(r.p_value, swapped.p_value);
    }

    #[test]
    fn mcnemar_branches_agree_near_cutoff() {
        // compare the two branches on tables just below the crossover
        for b in 0..=24usize {
            let c = 24 - b;
            let exact = exact_binomial_two_sided(b.min(c), 24);
            let diff = b.abs_diff(c) as f64;
            let stat = (diff - 1.0).max(0.0).powi(2) / 24.0;
            let chi2 = ChiSquared::new(1.0).unwrap();
            let asym = 1.0 - chi2.cdf(stat);
            assert!(
                (exact - asym).abs() < 0.06,
                "b={b} c={c}: exact {exact} vs chi2 {asym}"
            );
        }
    }

    #[test]
    fn slices_round_trip_masked_beta() {
        let mask: Vec<bool> = (0..24).map(|g| g % 4 != 1).collect();
        let vol = MaskedVolume::new((4, 3, 2), mask).unwrap();
        let p = vol.voxel_count();
        let beta: Vec<f64> = (0..p).map(|i| i as f64 * 0.5 - 2.0).collect();
        let indices: Vec<usize> = (0..2).collect();
        let slices = export_weight_slices(&beta, &vol, 'z', &indices).unwrap();
        // reconstruct
        let mut rebuilt = vec![f64::NAN; p];
        for (z, slice) in slices.iter().enumerate() {
            for (y, line) in slice.lines().enumerate() {
                for (x, cell) in line.split(',').enumerate() {
                    if !cell.is_empty() {
                        let i = vol.linear_index(x, y, z).unwrap();
                        rebuilt[i] = cell.parse().unwrap();
                    }
                }
            }
        }
        assert_eq!(rebuilt, beta);
    }

    #[test]
    fn zero_beta_gives_zero_cells_only() {
        let vol = MaskedVolume::full((2, 2, 2)).unwrap();
        let slices = export_weight_slices(&[0.0; 8], &vol, 'x', &[0, 1]).unwrap();
        for slice in slices {
            for cell in slice.lines().flat_map(|l| l.split(',')) {
                assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn single_nonzero_voxel_lands_at_its_coordinates() {
        let vol = MaskedVolume::full((3, 3, 3)).unwrap();
        let mut beta = vec![0.0; 27];
        let target = vol.linear_index(1, 2, 0).unwrap();
        beta[target] = 7.5;
        let slices = export_weight_slices(&beta, &vol, 'z', &[0]).unwrap();
        let lines: Vec<&str> = slices[0].lines().collect();
        let cells: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(cells[1].parse::<f64>().unwrap(), 7.5);
        let nonzero = slices[0]
            .lines()
            .flat_map(|l| l.split(','))
            .filter(|c| c.parse::<f64>().unwrap() != 0.0)
            .count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn slice_index_out_of_range() {
        let vol = MaskedVolume::full((2, 2, 2)).unwrap();
        assert!(matches!(
            export_weight_slices(&[0.0; 8], &vol, 'y', &[2]),
            Err(ConestaError::SliceIndexOutOfRange { index: 2, axis: 'y' })
        ));
    }

    fn truth_from(support: &[bool]) -> GroundTruth {
        GroundTruth {
            support: support.to_vec(),
            beta_true: support.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect(),
        }
    }

    #[test]
    fn dice_identical_supports() {
        let truth = truth_from(&[true, false, true, true]);
        let beta = [0.5, 0.0, -0.3, 1.0];
        let (dice, n) = support_stats(&beta, &truth, 0.0).unwrap();
        assert_eq!(dice, 1.0);
        assert_eq!(n, 3);
    }

    #[test]
    fn dice_disjoint_supports() {
        let truth = truth_from(&[true, true, false, false]);
        let beta = [0.0, 0.0, 1.0, -1.0];
        let (dice, _) = support_stats(&beta, &truth, 0.0).unwrap();
        assert_eq!(dice, 0.0);
    }

    #[test]
    fn dice_half_subset() {
        // S = half of T, S subset of T: dice = 2 (|T|/2) / (3|T|/2) = 2/3
        let truth = truth_from(&[true, true, true, true]);
        let beta = [1.0, 1.0, 0.0, 0.0];
        let (dice, _) = support_stats(&beta, &truth, 0.5).unwrap();
        assert_relative_eq!(dice, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn dice_empty_supports_is_one() {
        let truth = truth_from(&[false, false]);
        let (dice, n) = support_stats(&[0.0, 0.0], &truth, 0.0).unwrap();
        assert_eq!((dice, n), (1.0, 0));
    }
}
