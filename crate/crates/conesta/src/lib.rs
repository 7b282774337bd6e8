//! Structured-sparsity logistic regression for 3D images.
//!
//! Fits logistic regression penalized by any nonnegative combination of l1,
//! l2 and 3D total variation. TV is handled by Nesterov smoothing inside an
//! accelerated proximal gradient solver (FISTA), and a continuation scheme
//! drives the smoothing parameter toward zero with warm starts so the l1
//! penalty stays exact and the fit reaches a prescribed precision.
//!
//! ```
//! use conesta::prelude::*;
//!
//! let spec = SyntheticSpec {
//!     dims: (4, 4, 4),
//!     n_per_class: 10,
//!     regions: vec![Region { center: (2, 2, 2), radius: 1.5, effect: 1.0 }],
//!     noise_sigma: 0.5,
//!     smoothness: 0,
//!     seed: 7,
//! };
//! let (data, vol, _truth) = generate(&spec)?;
//! let op = GradientOperator::build(&vol)?;
//! let weights = PenaltyWeights::new(0.1, 0.1, 0.8)?;
//! let beta0 = init_beta(data.n_features(), InitMode::RandomUnit, 7);
//! let fit = conesta_fit(&data, &op, &weights, &beta0, 1e-3,
//!                       &InnerSolverConfig::default(), 42)?;
//! assert_eq!(fit.beta.len(), 64);
//! # Ok::<(), conesta::ConestaError>(())
//! ```
//!
//! The `book/` directory of the repository holds a longer guide; its code
//! snippets are compiled as doc-tests below so the guide cannot drift from
//! the library.

pub mod conesta;
pub mod error;
pub mod eval;
pub mod fista;
pub mod grid;
pub mod io;
mod linalg;
pub mod model;
pub mod penalties;
pub mod synth;

pub use error::{ConestaError, Result};

/// Everything needed for a typical fit-and-evaluate session.
pub mod prelude {
    pub use crate::conesta::{
        conesta_fit, init_beta, mu_opt, objective_exact, objective_smoothed, FitConstants,
        FitResult, InitMode, InnerSolverConfig, RunRecord,
    };
    pub use crate::error::{ConestaError, Result};
    pub use crate::eval::{
        compute_metrics, mcnemar_test, support_stats, EvalMetrics, McNemarResult,
    };
    pub use crate::fista::{fista_run, fista_step_size, FistaConfig, FistaResult};
    pub use crate::grid::{build_operator, GradientOperator, MaskedVolume};
    pub use crate::model::{
        logistic_loss_value_gradient, predict_proba, smooth_part_lipschitz, Dataset,
    };
    pub use crate::penalties::{
        l2_value_gradient, project_dual, prox_l1, tv_exact, tv_smoothed, tv_smoothed_gradient,
        PenaltyWeights, SmoothingParam,
    };
    pub use crate::synth::{generate, split, GroundTruth, Region, SyntheticSpec};
}

// Guide chapters with runnable snippets; compiled here so `cargo test`
// exercises the book.
#[doc = include_str!("../../../book/src/smoothing.md")]
mod _guide_smoothing {}

#[doc = include_str!("../../../book/src/continuation.md")]
mod _guide_continuation {}

#[doc = include_str!("../../../book/src/evaluation.md")]
mod _guide_evaluation {}
