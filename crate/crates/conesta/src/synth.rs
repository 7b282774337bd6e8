//! Synthetic 3D classification data with planted predictive regions.
//!
//! Class-1 samples receive a constant effect inside spherical regions before
//! Gaussian noise and an optional box blur are applied, so the true support
//! is known and support recovery can be measured.

use crate::error::{ConestaError, Result};
use crate::grid::MaskedVolume;
use crate::model::Dataset;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// A spherical signal region: constant `effect` added to class-1 volumes
/// within `radius` of `center`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Region {
    pub center: (usize, usize, usize),
    pub radius: f64,
    pub effect: f64,
}

/// Generator settings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SyntheticSpec {
    pub dims: (usize, usize, usize),
    pub n_per_class: usize,
    pub regions: Vec<Region>,
    pub noise_sigma: f64,
    /// Box-blur radius in voxels; 0 disables smoothing.
    #[serde(default)]
    pub smoothness: usize,
    pub seed: u64,
}

/// True predictive pattern planted by the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub support: Vec<bool>,
    pub beta_true: Vec<f64>,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_per_class < 1 {
            return Err(ConestaError::InvalidArgument(
                "n_per_class must be at least 1".into(),
            ));
        }
        if !(self.noise_sigma > 0.0) {
            return Err(ConestaError::InvalidArgument(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            )));
        }
        let (nx, ny, nz) = self.dims;
        for (index, r) in self.regions.iter().enumerate() {
            let (cx, cy, cz) = r.center;
            if cx >= nx || cy >= ny || cz >= nz || r.radius < 0.0 {
                return Err(ConestaError::RegionOutsideGrid { index });
            }
        }
        Ok(())
    }
}

/// Generates a labeled dataset on the full grid, together with the volume and
/// the planted ground truth. Deterministic for a fixed seed. Rows hold class-0
/// samples first, then class-1.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, MaskedVolume, GroundTruth)> {
    spec.validate()?;
    let vol = MaskedVolume::full(spec.dims)?;
    let p = vol.voxel_count();

    let mut pattern = vec![0.0_f64; p];
    for region in &spec.regions {
        let (cx, cy, cz) = region.center;
        for i in 0..p {
            let (x, y, z) = vol.voxel_coords(i);
            let d2 = (x as f64 - cx as f64).powi(2)
                + (y as f64 - cy as f64).powi(2)
                + (z as f64 - cz as f64).powi(2);
            if d2 <= region.radius * region.radius {
                pattern[i] += region.effect;
            }
        }
    }
    let support: Vec<bool> = pattern.iter().map(|&v| v != 0.0).collect();

    let n = 2 * spec.n_per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
    let mut x = Array2::zeros((n, p));
    let mut y = Vec::with_capacity(n);
    let mut volume = vec![0.0_f64; p];
    for sample in 0..n {
        let label = (sample >= spec.n_per_class) as u8;
        for (j, v) in volume.iter_mut().enumerate() {
            *v = noise.sample(&mut rng);
            if label == 1 {
                *v += pattern[j];
            }
        }
        let smoothed = if spec.smoothness > 0 {
            box_blur(&vol, &volume, spec.smoothness)
        } else {
            volume.clone()
        };
        for (j, v) in smoothed.iter().enumerate() {
            x[[sample, j]] = *v;
        }
        y.push(label);
    }

    let truth = GroundTruth {
        support,
        beta_true: pattern,
    };
    Ok((Dataset::new(x, y)?, vol, truth))
}

/// 3D box blur over the full grid with the given radius.
fn box_blur(vol: &MaskedVolume, values: &[f64], radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let (nx, ny, nz) = vol.dims();
    let p = vol.voxel_count();
    let mut out = vec![0.0; p];
    for i in 0..p {
        let (x, y, z) = vol.voxel_coords(i);
        let mut sum = 0.0;
        let mut count = 0.0;
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    let (qx, qy, qz) = (x as isize + dx, y as isize + dy, z as isize + dz);
                    if qx < 0 || qy < 0 || qz < 0 {
                        continue;
                    }
                    let (qx, qy, qz) = (qx as usize, qy as usize, qz as usize);
                    if qx >= nx || qy >= ny || qz >= nz {
                        continue;
                    }
                    if let Some(j) = vol.linear_index(qx, qy, qz) {
                        sum += values[j];
                        count += 1.0;
                    }
                }
            }
        }
        out[i] = sum / count;
    }
    out
}

/// Stratified train/test split. Disjoint, union equals the input, exact per
/// class up to rounding, deterministic per seed.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ConestaError::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in data.labels().iter().enumerate() {
        by_class[label as usize].push(i);
    }
    for (class, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(ConestaError::ClassTooSmall { class: class as u8 });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for rows in by_class.iter_mut() {
        use rand::seq::SliceRandom;
        rows.shuffle(&mut rng);
        let n_train = ((train_fraction * rows.len() as f64).round() as usize)
            .clamp(1, rows.len() - 1);
        train_rows.extend_from_slice(&rows[..n_train]);
        test_rows.extend_from_slice(&rows[n_train..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();

    Ok((subset(data, &train_rows)?, subset(data, &test_rows)?))
}

fn subset(data: &Dataset, rows: &[usize]) -> Result<Dataset> {
    let p = data.n_features();
    let mut x = Array2::zeros((rows.len(), p));
    let mut y = Vec::with_capacity(rows.len());
    for (out_row, &row) in rows.iter().enumerate() {
        for j in 0..p {
            x[[out_row, j]] = data.x()[[row, j]];
        }
        y.push(data.labels()[row]);
    }
    Dataset::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec {
            dims: (5, 5, 5),
            n_per_class: 10,
            regions: vec![Region {
                center: (2, 2, 2),
                radius: 1.5,
                effect: 1.0,
            }],
            noise_sigma: 0.5,
            smoothness: 0,
            seed: 42,
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = small_spec();
        let (a, _, _) = generate(&spec).unwrap();
        let (b, _, _) = generate(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_are_balanced_and_support_matches_pattern() {
        let (data, _, truth) = generate(&small_spec()).unwrap();
        let ones = data.labels().iter().filter(|&&l| l == 1).count();
        assert_eq!(ones, 10);
        assert_eq!(data.n_samples(), 20);
        for (s, b) in truth.support.iter().zip(&truth.beta_true) {
            assert_eq!(*s, *b != 0.0);
        }
        assert!(truth.support.iter().any(|&s| s));
    }

    #[test]
    fn zero_effect_yields_no_signal() {
        let mut spec = small_spec();
        spec.regions[0].effect = 0.0;
        let (data, _, truth) = generate(&spec).unwrap();
        assert!(truth.support.iter().all(|&s| !s));
        // class means should be statistically indistinguishable; just check
        // the planted pattern is absent
        assert!(truth.beta_true.iter().all(|&b| b == 0.0));
        assert_eq!(data.n_samples(), 20);
    }

    #[test]
    fn region_outside_grid_is_rejected() {
        let mut spec = small_spec();
        spec.regions[0].center = (9, 2, 2);
        assert!(matches!(
            generate(&spec),
            Err(ConestaError::RegionOutsideGrid { index: 0 })
        ));
    }

    #[test]
    fn blur_preserves_constants() {
        let vol = MaskedVolume::full((4, 4, 4)).unwrap();
        let out = box_blur(&vol, &vec![2.5; 64], 1);
        for v in out {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn split_is_stratified_and_partitions() {
        let (data, _, _) = generate(&small_spec()).unwrap();
        let (train, test) = split(&data, 0.5, 7).unwrap();
        assert_eq!(train.n_samples(), 10);
        assert_eq!(test.n_samples(), 10);
        assert_eq!(train.labels().iter().filter(|&&l| l == 1).count(), 5);
        assert_eq!(test.labels().iter().filter(|&&l| l == 1).count(), 5);
        // union: every original row appears exactly once across the split
        let total_sum: f64 = data.x().sum();
        let split_sum: f64 = train.x().sum() + test.x().sum();
        assert!((total_sum - split_sum).abs() < 1e-9);
    }

    #[test]
    fn split_is_deterministic() {
        let (data, _, _) = generate(&small_spec()).unwrap();
        let (a_train, a_test) = split(&data, 0.7, 3).unwrap();
        let (b_train, b_test) = split(&data, 0.7, 3).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
    }

    #[test]
    fn split_rejects_tiny_classes() {
        let x = Array2::from_shape_vec((3, 1), vec![1.0, 2.0, 3.0]).unwrap();
        let data = Dataset::new(x, vec![0, 0, 1]).unwrap();
        assert!(matches!(
            split(&data, 0.5, 0),
            Err(ConestaError::ClassTooSmall { class: 1 })
        ));
    }
}
