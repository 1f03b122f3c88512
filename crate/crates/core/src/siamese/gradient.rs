use rand::Rng;

use super::{loss_and_grad, Dims, ModelParams, Regime};
use crate::corpus::{EncodedSentence, TrainingTriple};
use crate::error::Result;
use crate::nncore::{grad_check, ParamSet};
use crate::seed::{derive_seed, rng};

/// A randomized finite-difference check of the full model.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckSetup {
    pub dims: Dims,
    pub vocab: usize,
    pub max_len: usize,
    pub batch: usize,
    pub coords: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for GradCheckSetup {
    fn default() -> Self {
        GradCheckSetup {
            dims: Dims {
                emb: 4,
                hidden: 4,
                head: 4,
            },
            vocab: 8,
            max_len: 5,
            batch: 4,
            coords: 100,
            eps: 1e-6,
            seed: 0,
        }
    }
}

/// Largest relative error between the analytic gradient of a random batch
/// (dropout active) and central differences, over `coords` coordinates
/// drawn uniformly from all parameters.
pub fn random_gradient_check(s: &GradCheckSetup) -> Result<f64> {
    let mut r = rng(derive_seed(s.seed, 0));
    let mut params = ModelParams::<f64>::init(s.vocab, s.vocab, s.dims, derive_seed(s.seed, 1));
    params.perturb_biases(0.5, &mut r);
    let sentence = |r: &mut rand_chacha::ChaCha8Rng| {
        let len = r.gen_range(1..=s.max_len);
        EncodedSentence::new((0..len).map(|_| r.gen_range(2..s.vocab as u32)).collect())
    };
    let pairs: Vec<(EncodedSentence, EncodedSentence, u8)> = (0..s.batch)
        .map(|k| (sentence(&mut r), sentence(&mut r), (k % 2) as u8))
        .collect();
    let batch: Vec<TrainingTriple<'_>> = pairs
        .iter()
        .map(|(a, b, y)| TrainingTriple {
            src: a,
            tgt: b,
            label: *y,
        })
        .collect();
    let regime = Regime::train(0.2, 0.3, derive_seed(s.seed, 2));

    let mut grads = params.zeros_like();
    loss_and_grad(&params, &batch, &regime, &mut grads)?;
    let total = params.num_params();
    let coords: Vec<usize> = (0..s.coords).map(|_| r.gen_range(0..total)).collect();
    grad_check(&mut params, &grads, &coords, s.eps, |p| {
        Ok(super::forward_batch(p, &batch, &regime)?.mean_loss)
    })
}
