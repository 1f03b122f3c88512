use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;

use super::{loss_and_grad, ModelParams, Regime};
use crate::corpus::{sample_negatives, ParallelCorpus};
use crate::error::{Error, Result};
use crate::nncore::{clip_gradients, Adam, AdamState, ParamSet};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng};

/// Training settings.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    /// Negative pairs sampled per positive pair, each epoch.
    pub negatives: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    /// Dropout on embedding outputs.
    pub drop_in: f64,
    /// Dropout on encoder outputs.
    pub drop_out: f64,
    /// Decision threshold used when the model is applied.
    pub rho: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            negatives: 7,
            lr: 0.0002,
            batch: 128,
            epochs: 15,
            clip_norm: 5.0,
            drop_in: 0.2,
            drop_out: 0.3,
            rho: 0.99,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.batch == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho {} outside (0, 1)", self.rho));
        }
        if !(self.lr > 0.0) || !(self.clip_norm > 0.0) {
            return bad("lr and clip_norm must be positive".into());
        }
        for p in [self.drop_in, self.drop_out] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("dropout rate {p} outside [0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub triples: usize,
    pub mean_loss: f64,
    pub seconds: f64,
}

/// Named metrics recorded by a monitor after an epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    pub metrics: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub snapshots: Vec<Snapshot>,
}

impl TrainHistory {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    /// Tab-separated `epoch triples mean_loss` lines with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttriples\tmean_loss\n");
        for e in &self.epochs {
            out.push_str(&format!("{}\t{}\t{:.9}\n", e.epoch, e.triples, e.mean_loss));
        }
        out
    }
}

/// Trains with per-epoch negative resampling, minibatch Adam and global
/// gradient-norm clipping.
pub fn train<T: Scalar>(
    params: ModelParams<T>,
    corpus: &ParallelCorpus,
    h: &HyperParams,
) -> Result<(ModelParams<T>, TrainHistory)> {
    train_with_monitor(params, corpus, h, |_, _| None)
}

/// [`train`], calling `monitor` after every epoch; any metrics it returns are
/// stored as a [`Snapshot`].
pub fn train_with_monitor<T, F>(
    mut params: ModelParams<T>,
    corpus: &ParallelCorpus,
    h: &HyperParams,
    mut monitor: F,
) -> Result<(ModelParams<T>, TrainHistory)>
where
    T: Scalar,
    F: FnMut(usize, &ModelParams<T>) -> Option<Vec<(String, f64)>>,
{
    h.validate()?;
    if corpus.len() < 2 {
        return Err(Error::Sampling(corpus.len()));
    }
    let adam = Adam::with_lr(h.lr);
    let mut state = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let mut history = TrainHistory::default();

    for epoch in 0..h.epochs {
        let start = Instant::now();
        let epoch_seed = derive_seed(h.seed, epoch as u64);
        let mut triples = sample_negatives(corpus, h.negatives, derive_seed(epoch_seed, 0))?;
        triples.shuffle(&mut rng(derive_seed(epoch_seed, 1)));

        let mut total = 0.0f64;
        for (bi, batch) in triples.chunks(h.batch).enumerate() {
            grads.zero_all();
            let regime = Regime::train(h.drop_in, h.drop_out, derive_seed(epoch_seed, 2 + bi as u64));
            let out = loss_and_grad(&params, batch, &regime, &mut grads)?;
            total += out.mean_loss * batch.len() as f64;
            clip_gradients(&mut grads, h.clip_norm);
            adam.step(&mut params, &mut state, &grads)?;
        }
        let mean_loss = total / triples.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::NonFinite);
        }
        let seconds = start.elapsed().as_secs_f64();
        info!(
            "epoch {}/{}: {} triples, mean loss {mean_loss:.6}, {seconds:.1}s",
            epoch + 1,
            h.epochs,
            triples.len()
        );
        history.epochs.push(EpochStats {
            epoch,
            triples: triples.len(),
            mean_loss,
            seconds,
        });
        if let Some(metrics) = monitor(epoch, &params) {
            history.snapshots.push(Snapshot { epoch, metrics });
        }
    }
    Ok((params, history))
}
