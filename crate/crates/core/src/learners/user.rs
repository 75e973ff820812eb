use std::sync::Arc;

use crate::data::{DataMatrix, Grid};
use crate::error::{ClareError, Result};

use super::codec::{Codec, Method, Model};
use super::Learner;

/// An encode/decode pair supplied by the caller.
pub trait UserCodec: Send + Sync {
    fn encode(&self, x: &[f64]) -> Vec<f64>;
    fn decode(&self, z: &[f64]) -> Vec<f64>;
}

pub type UserLearnFn = dyn Fn(&DataMatrix, usize) -> Result<Box<dyn UserCodec>> + Send + Sync;

/// Wraps a caller-supplied learning function so the evaluation driver can
/// treat it like the built-in methods. Output shapes are checked on every
/// call through [`Codec`]; the first fit is also probed with a training row.
#[derive(Clone)]
pub struct UserLearner {
    learn: Arc<UserLearnFn>,
    max_dim: Option<usize>,
    name: String,
}

impl UserLearner {
    pub fn new<F>(name: &str, learn: F) -> Self
    where
        F: Fn(&DataMatrix, usize) -> Result<Box<dyn UserCodec>> + Send + Sync + 'static,
    {
        UserLearner {
            learn: Arc::new(learn),
            max_dim: None,
            name: name.to_string(),
        }
    }

    /// Cap on K; without one the cap is T.
    pub fn with_max_dim(mut self, max_dim: usize) -> Self {
        self.max_dim = Some(max_dim);
        self
    }
}

impl Learner for UserLearner {
    fn method(&self) -> Method {
        Method::User
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn max_latent_dim(&self, _n_train: usize, grid: Grid) -> usize {
        self.max_dim.unwrap_or(grid.len()).min(grid.len())
    }

    fn fit(&self, train: &DataMatrix, k: usize, _seed: u64) -> Result<Codec> {
        let user = (self.learn)(train, k)?;
        let codec = Codec::new(k, train.grid(), Model::User(Arc::from(user)));
        codec.reconstruct(train.row(0)).map_err(|e| match e {
            ClareError::Shape {
                context,
                expected,
                actual,
            } => ClareError::Shape {
                context: format!("user codec {context}"),
                expected,
                actual,
            },
            other => other,
        })?;
        Ok(codec)
    }
}
