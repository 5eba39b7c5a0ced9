//! # mriclass
//!
//! Binary image classification for brain-MRI tumor detection.
//!
//! The pipeline has five stages, each in its own module:
//!
//! - [`dataset`]: load raster images, convert to gray, resize (bilinear),
//!   flatten row-major, scale to `[0, 1]`, and persist the feature matrix
//!   as comma-separated text with the label in the last column.
//! - [`pca`]: snapshot PCA (eigendecomposition of the `n × n` Gram matrix)
//!   for data with far more pixels than images.
//! - [`classifiers`]: CART decision tree, random forest, discrete AdaBoost
//!   over stumps, and a kernel SVM trained with SMO.
//! - [`evaluation`]: seeded 80/20 splits, repeated runs, and the four
//!   reported metrics (accuracy, recall of each class, external-image hit
//!   rate).
//! - [`gridsearch`]: the 160-cell SVM hyperparameter grid.
//!
//! [`pipeline`] ties a fitted PCA model and classifier together so a single
//! image can be classified end to end and the pair saved to disk.
//!
//! Labels are `u8` values: `1` is tumor ("sick"), `0` is healthy. Every tie
//! anywhere in the crate resolves to `0`.

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gridsearch;
mod linalg;
pub mod pca;
pub mod pipeline;

pub use classifiers::{
    AdaBoostModel, AdaBoostParams, Algorithm, ClassifierModel, DecisionTreeModel, ForestParams,
    GammaMode, KernelKind, KernelSpec, RandomForestModel, SvmModel, SvmParams, TreeParams,
};
pub use dataset::{Dataset, GrayImage};
pub use error::{Error, Result};
pub use evaluation::{EvalReport, RunRecord, SplitSpec};
pub use gridsearch::{GridResult, GridSearch};
pub use pca::PcaModel;
pub use pipeline::PipelineModel;

pub use ndarray;

/// Image side length used by the canonical pipeline (300 × 300 pixels).
pub const DEFAULT_SIDE: u32 = 300;
/// Number of principal components retained by default.
pub const DEFAULT_COMPONENTS: usize = 60;
/// Number of repeated train/evaluate runs averaged by default.
pub const DEFAULT_RUNS: usize = 10;
/// Default base seed; run `r` uses `seed + r`.
pub const DEFAULT_SEED: u64 = 42;
