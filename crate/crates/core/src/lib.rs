//! Cross-validated evaluation of latent feature representations.
//!
//! Given an N × T data matrix, a representation method (PCA, thresholded
//! wavelets, an autoencoder or a user codec) and a grid of latent
//! dimensions K, [`evaluate::run_clare`] estimates every observation's
//! held-out reconstruction loss at every K and picks the smallest K for
//! which a chosen fraction of observations is reconstructed within a
//! tolerance.

pub mod clre;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod learners;
pub mod loss;
pub mod report;
pub mod rng;
pub mod wavelet;

pub use data::{DataMatrix, Grid};
pub use error::{ClareError, Result};
pub use evaluate::{
    compression_ratio, make_folds, run_clare, Criterion, EvaluationReport, FoldPlan, KGrid,
    LossSurface, RunOptions,
};
pub use learners::{AeConfig, AeLearner, Codec, DwtLearner, Learner, PcaLearner, UserLearner};
