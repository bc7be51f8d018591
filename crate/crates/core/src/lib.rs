//! Popularity regression for social media posts: a random-forest base
//! model refined by stages that compensate its largest residuals.
//!
//! Typical use: load or generate a [`Dataset`], [`split`] it, digitize with
//! [`prepare`], train with [`train_refinement`] and score with
//! [`EvalReport`].

pub mod boost;
pub mod error;
pub mod eval;
pub mod forest;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod refine;
pub mod seed;

pub use boost::{fit_boost, BoostClassifier, BoostParams, Stump};
pub use error::{Error, Result};
pub use eval::{
    fit_linear, spearman_rho, EvalReport, LinearModel, SweepParam, SweepResult, TrainTest,
};
pub use forest::{fit_forest, Forest, ForestParams, RegressionTree, TreeParams};
pub use matrix::Matrix;
pub use pipeline::{
    generate_synthetic, load_dataset, load_model, prepare, save_dataset, save_model, split,
    title_length_profile, DataFormat, Dataset, ModelBundle, SplitMode, SplitSpec, SynthConfig,
};
pub use preprocess::{
    digitize, digitize_all, fit_encoding_maps, EncodingMaps, RawRecord, TextFeatureMode,
    FEATURE_NAMES, N_FEATURES,
};
pub use refine::{train_refinement, RefineConfig, RefinementModel, TraceEntry};
