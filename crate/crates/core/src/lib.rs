//! Spatially weighted F-measure for foreground maps.
//!
//! The weighted F-measure scores a continuous foreground prediction against a
//! binary mask while accounting for *where* the mistakes sit: clustered missed
//! foreground hurts more than scattered misses, and false positives hurt more
//! the farther they fall from the true object. The direct definition couples
//! every pixel pair, which is quadratic in the pixel count.
//!
//! This crate provides:
//!
//! - [`fw_beta_exact`]: the brute-force reference evaluation, kept
//!   deliberately direct so it can serve as a correctness oracle;
//! - [`afw_forward`] / [`afw_backward`] / [`afw_loss`]: a fast convolutional
//!   approximation, linear in the pixel count at fixed kernel width, with an
//!   analytic gradient so it can drive gradient-based training;
//! - [`metrics`]: the usual evaluation suite (MAE, AUROC, best-threshold F,
//!   IoU) plus the weighted F at `beta = 1`;
//! - [`verify`]: finite-difference gradient checking, exact-vs-approximate
//!   deviation sweeps, wall-clock benchmarks, and a gradient-descent demo on
//!   a single mask.
//!
//! Row-level parallelism (rayon) is enabled through the default `parallel`
//! feature; disabling it yields a dependency-free sequential build with
//! bit-identical results.

pub mod approx;
pub mod conv;
pub mod distance;
pub mod error;
pub mod exact;
pub mod grid;
pub mod kernel;
pub mod metrics;
mod parallel;
pub mod params;
pub mod verify;

pub use approx::{afw_backward, afw_forward, afw_loss, approx_b, approx_ea, ForwardCache, GradMap};
pub use conv::convolve_same;
pub use distance::{min_squared_distance_field, DistanceField};
pub use error::{Error, Result};
pub use exact::{
    build_matrix_a, build_matrix_a_capped, build_vector_b, error_map, fw_beta_exact,
    fw_beta_exact_capped, weighted_counts, weighted_error, PixelWeightMatrixA,
    PixelWeightVectorB, WeightedCounts, DEFAULT_SIZE_CAP,
};
pub use grid::{Grid2D, GroundTruthMask, PredictionMap};
pub use kernel::{ExponentForm, GaussianKernel};
pub use metrics::{
    auroc, evaluate_image, fbeta_max, fbeta_max_fixed_levels, fw1_eval, iou_at_half, mae,
    metrics_report, ImageMetrics, MetricsAggregate, MetricsReport, DEFAULT_FBETA_SQ,
};
pub use params::{default_alpha, DeltaMode, ErrorNorm, WfmParams};
pub use verify::{
    bench, blob_mask, compare_exact_approx, disk_mask, finite_diff_grad, measure_approx_forward,
    optimize_map, random_prediction, BenchReport, DeviationInstance, DeviationReport, OptimStep,
    OptimTrace,
};
