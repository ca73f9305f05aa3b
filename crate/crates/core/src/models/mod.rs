//! Small differentiable models and synthetic data for stochastic runs.

mod data;
mod mlp;

pub use data::{epoch_permutation, gen_two_moons, minibatch_stream, Dataset, MinibatchStream};
pub use mlp::{logistic_regression_loss_grad, Activation, Loss, MlpSpec};

use std::sync::Arc;

use crate::diagnostics::Problem;
use crate::error::Result;

/// Minibatch training of an [`MlpSpec`] on a shared dataset.
#[derive(Debug, Clone)]
pub struct MlpProblem {
    pub spec: MlpSpec,
    pub data: Arc<Dataset>,
    stream: MinibatchStream,
    init_seed: u64,
}

impl MlpProblem {
    pub fn new(spec: MlpSpec, data: Arc<Dataset>, batch_size: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let stream = MinibatchStream::new(data.len(), batch_size, seed)?;
        Ok(Self {
            spec,
            data,
            stream,
            init_seed: seed,
        })
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.stream.batches_per_epoch()
    }

    /// Mean loss and accuracy over the full dataset.
    pub fn evaluate(&self, params: &[f64]) -> Result<(f64, f64)> {
        let all: Vec<usize> = (0..self.data.len()).collect();
        let (loss, _) = self.spec.loss_grad(params, &self.data, &all)?;
        let acc = self.spec.accuracy(params, &self.data)?;
        Ok((loss, acc))
    }
}

impl Problem for MlpProblem {
    fn name(&self) -> String {
        format!("mlp/{}", self.data.name)
    }

    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn initial_point(&self) -> Vec<f64> {
        self.spec.init_params(self.init_seed)
    }

    fn loss_grad(&mut self, w: &[f64], grad: &mut [f64]) -> Result<f64> {
        let batch = self.stream.next_batch();
        let (loss, g) = self.spec.loss_grad(w, &self.data, &batch)?;
        grad.copy_from_slice(&g);
        Ok(loss)
    }
}
