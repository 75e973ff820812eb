//! Latent feature representation methods.
//!
//! A [`Learner`] fits a [`Codec`] (an encode/decode pair) to training data
//! at a requested latent dimension K.

mod ae;
mod codec;
mod dwt;
mod pca;
mod user;

pub use ae::{AeConfig, AeLearner, AeModel, AeNetwork, LossFn, OutputActivation};
pub use codec::{Codec, Method, Model};
pub use dwt::{relative_energy_scree, DwtLearner, DwtModel};
pub use pca::{PcaLearner, PcaModel};
pub use user::{UserCodec, UserLearnFn, UserLearner};

use crate::data::{DataMatrix, Grid};
use crate::error::Result;

pub trait Learner: Send + Sync {
    fn method(&self) -> Method;

    /// Name used in configuration and reports, e.g. `pca` or `dwt.2d`.
    fn name(&self) -> String;

    /// Largest K this learner can fit with `n_train` training rows.
    fn max_latent_dim(&self, n_train: usize, grid: Grid) -> usize;

    /// Fit at a single K. `seed` is the task seed; deterministic learners
    /// ignore it.
    fn fit(&self, train: &DataMatrix, k: usize, seed: u64) -> Result<Codec>;

    /// Fit at every K in `ks` on the same training rows. Learners whose
    /// fits are nested override this to share work across K.
    fn fit_grid(&self, train: &DataMatrix, ks: &[usize], seed: u64) -> Result<Vec<Codec>> {
        ks.iter().map(|&k| self.fit(train, k, seed)).collect()
    }

    /// True when fits at different K on the same rows are nested, so the
    /// driver should hand the whole grid to [`Learner::fit_grid`] at once.
    fn nested(&self) -> bool {
        false
    }

    /// Settings echoed into run metadata.
    fn config(&self) -> Vec<(String, String)> {
        Vec::new()
    }
}

pub(crate) fn check_k(k: usize, max: usize, what: &str) -> Result<()> {
    if k == 0 || k > max {
        Err(crate::ClareError::InvalidArgument(format!(
            "{what}: latent dimension {k} must be in 1..={max}"
        )))
    } else {
        Ok(())
    }
}
