//! Debiased, thresholded ridge regression for high-dimensional linear models,
//! with wild-bootstrap simultaneous confidence regions for `γ = Mβ`, hybrid
//! bootstrap prediction regions, cross-validation, and a simulation harness.
//!
//! ```
//! use nalgebra::DVector;
//! use ridgeboot::{improved_fit, DesignMatrix, Hyperparams, ModelFrame};
//!
//! let x = DesignMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
//! let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
//! let frame = ModelFrame::new(x, y, None).unwrap();
//! let fit = improved_fit(&frame, Hyperparams::new(1e-8, 0.5).unwrap()).unwrap();
//! assert!((fit.theta_hat[0] - 1.0).abs() < 1e-6);
//! ```

pub mod error;
pub mod estimator;
pub mod infer;
pub mod io;
pub mod model;
pub mod predict;
pub mod report;
pub mod rng;
pub mod select;
pub mod sim;

pub use error::{Error, Result};
pub use estimator::{
    combination_loadings, debias, expansion_check, improved_fit, k_diagnostics, normalizing_scales,
    ridge_estimate, threshold_select, ImprovedFit, KDiagnostics,
};
pub use infer::{
    confidence_region, h_oracle, hypothesis_test, region_from_draws, sample_quantile, test_with_draws,
    wild_draws, wild_replicate, BootstrapConfig, BootstrapDraws, ConfidenceRegion, Ecdf, TestResult,
};
pub use model::{
    complement_project, row_space_params, thin_svd, DesignMatrix, Hyperparams, ModelFrame, ThinSvd,
    DEFAULT_RANK_TOLERANCE,
};
pub use predict::{
    ecdf, hybrid_draws, hybrid_replicate, loo_residuals, predict_point, prediction_region,
    prediction_region_with, EmpiricalCdf, PredictionRegion, ResidualSource,
};
pub use rng::{derive_seed, Stream, StreamSpec};
pub use select::{cross_validate, default_grid, fold_assignment, CvEntry, CvGrid, CvReport};
