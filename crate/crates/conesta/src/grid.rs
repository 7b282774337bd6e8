//! Masked 3D finite-difference operator underlying the total-variation penalty.
//!
//! A volume of shape `(nx, ny, nz)` with a boolean mask defines `p` in-mask
//! voxels, numbered in x-fastest order. The gradient operator stacks, for each
//! in-mask voxel, the three forward differences along x, y and z. Differences
//! whose forward neighbor falls outside the grid or outside the mask are zero
//! rows, so every coefficient of the operator is in {-1, +1}.

use crate::error::{ConestaError, Result};
use crate::linalg::power_iteration;

/// 3D grid dimensions plus a voxel mask, with a bijection between in-mask
/// grid coordinates and linear indices `0..p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVolume {
    dims: (usize, usize, usize),
    mask: Vec<bool>,
    grid_to_linear: Vec<Option<usize>>,
    linear_to_grid: Vec<usize>,
}

impl MaskedVolume {
    /// Builds a volume from dimensions and a mask in x-fastest linear order.
    pub fn new(dims: (usize, usize, usize), mask: Vec<bool>) -> Result<Self> {
        let (nx, ny, nz) = dims;
        let total = nx * ny * nz;
        if mask.len() != total {
            return Err(ConestaError::ShapeMismatch {
                expected: total,
                got: mask.len(),
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(ConestaError::EmptyMask);
        }
        let mut grid_to_linear = vec![None; total];
        let mut linear_to_grid = Vec::new();
        for (g, &inside) in mask.iter().enumerate() {
            if inside {
                grid_to_linear[g] = Some(linear_to_grid.len());
                linear_to_grid.push(g);
            }
        }
        Ok(Self {
            dims,
            mask,
            grid_to_linear,
            linear_to_grid,
        })
    }

    /// Volume with every voxel in the mask.
    pub fn full(dims: (usize, usize, usize)) -> Result<Self> {
        let (nx, ny, nz) = dims;
        Self::new(dims, vec![true; nx * ny * nz])
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    /// Number of in-mask voxels.
    pub fn voxel_count(&self) -> usize {
        self.linear_to_grid.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Flat x-fastest grid index of coordinate (x, y, z).
    pub fn grid_index(&self, x: usize, y: usize, z: usize) -> usize {
        let (nx, ny, _) = self.dims;
        x + nx * (y + ny * z)
    }

    /// Coordinate of a flat grid index.
    pub fn coords(&self, grid: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.dims;
        (grid % nx, (grid / nx) % ny, grid / (nx * ny))
    }

    /// Linear index (0..p) of an in-mask coordinate, `None` outside the mask.
    pub fn linear_index(&self, x: usize, y: usize, z: usize) -> Option<usize> {
        let (nx, ny, nz) = self.dims;
        if x >= nx || y >= ny || z >= nz {
            return None;
        }
        self.grid_to_linear[self.grid_index(x, y, z)]
    }

    /// Coordinate of the in-mask voxel with linear index `i`.
    pub fn voxel_coords(&self, i: usize) -> (usize, usize, usize) {
        self.coords(self.linear_to_grid[i])
    }
}

/// Sparse forward-difference operator `A`: one 3-row block per in-mask voxel.
///
/// Immutable after construction; [`apply`](Self::apply) and
/// [`apply_transpose`](Self::apply_transpose) are pure and safe to call
/// concurrently.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    p: usize,
    /// Per voxel, the linear index of the next in-mask neighbor along x, y, z.
    neighbors: Vec<[Option<usize>; 3]>,
    spectral_norm: f64,
}

/// Power-iteration defaults: the spectral norm enters step sizes, so the
/// estimate must be reproducible.
pub const SPECTRAL_NORM_TOL: f64 = 1e-6;
pub const SPECTRAL_NORM_MAX_ITER: usize = 10_000;
pub const SPECTRAL_NORM_SEED: u64 = 42;

impl GradientOperator {
    /// Builds the operator for a masked volume and estimates its spectral norm
    /// with the default power-iteration settings.
    pub fn build(vol: &MaskedVolume) -> Result<Self> {
        let p = vol.voxel_count();
        let mut neighbors = Vec::with_capacity(p);
        for i in 0..p {
            let (x, y, z) = vol.voxel_coords(i);
            neighbors.push([
                vol.linear_index(x + 1, y, z),
                vol.linear_index(x, y + 1, z),
                vol.linear_index(x, y, z + 1),
            ]);
        }
        let mut op = Self {
            p,
            neighbors,
            spectral_norm: 0.0,
        };
        op.spectral_norm = op.estimate_spectral_norm(
            SPECTRAL_NORM_TOL,
            SPECTRAL_NORM_MAX_ITER,
            SPECTRAL_NORM_SEED,
        )?;
        Ok(op)
    }

    /// Number of in-mask voxels, which is also the number of dual groups.
    pub fn voxel_count(&self) -> usize {
        self.p
    }

    /// Output length of [`apply`](Self::apply).
    pub fn range_len(&self) -> usize {
        3 * self.p
    }

    /// Cached spectral-norm estimate from construction time.
    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    /// `A beta`: stacked per-voxel forward differences, length `3p`.
    pub fn apply(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; 3 * self.p];
        self.apply_into(beta, &mut out)?;
        Ok(out)
    }

    /// `A beta` written into a caller-provided buffer of length `3p`.
    pub fn apply_into(&self, beta: &[f64], out: &mut [f64]) -> Result<()> {
        if beta.len() != self.p {
            return Err(ConestaError::ShapeMismatch {
                expected: self.p,
                got: beta.len(),
            });
        }
        debug_assert_eq!(out.len(), 3 * self.p);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for (axis, next) in nb.iter().enumerate() {
                out[3 * i + axis] = match next {
                    Some(j) => beta[*j] - beta[i],
                    None => 0.0,
                };
            }
        }
        Ok(())
    }

    /// `A^T alpha`, length `p`; the adjoint of [`apply`](Self::apply).
    pub fn apply_transpose(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.p];
        self.apply_transpose_into(alpha, &mut out)?;
        Ok(out)
    }

    /// `A^T alpha` written into a caller-provided buffer of length `p`.
    pub fn apply_transpose_into(&self, alpha: &[f64], out: &mut [f64]) -> Result<()> {
        if alpha.len() != 3 * self.p {
            return Err(ConestaError::ShapeMismatch {
                expected: 3 * self.p,
                got: alpha.len(),
            });
        }
        debug_assert_eq!(out.len(), self.p);
        out.fill(0.0);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for (axis, next) in nb.iter().enumerate() {
                if let Some(j) = next {
                    let a = alpha[3 * i + axis];
                    out[*j] += a;
                    out[i] -= a;
                }
            }
        }
        Ok(())
    }

    /// Spectral norm of `A` by power iteration on `A^T A`.
    ///
    /// Deterministic for a fixed seed. Errors with the last estimate when the
    /// relative change has not dropped below `tol` within `max_iter` steps.
    pub fn estimate_spectral_norm(&self, tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
        power_iteration(
            self.p,
            3 * self.p,
            |v, out| self.apply_into(v, out).expect("domain length fixed"),
            |w, out| self.apply_transpose_into(w, out).expect("range length fixed"),
            tol,
            max_iter,
            seed,
        )
    }
}

/// Builds the operator for a masked volume; alias kept close to the math.
pub fn build_operator(vol: &MaskedVolume) -> Result<GradientOperator> {
    GradientOperator::build(vol)
}
