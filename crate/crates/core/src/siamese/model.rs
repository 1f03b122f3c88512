use rand_chacha::ChaCha8Rng;

use super::{ModelParams, Side};
use crate::corpus::{EncodedSentence, TrainingTriple};
use crate::error::{Error, Result};
use crate::nncore::{
    add_outer, bce_loss, dropout_mask, gru_step_backward, gru_step_cached, matvec, sigmoid,
    GruParams, GruStep, Mode,
};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng};

/// Dropout setting for a forward pass.
///
/// In [`Mode::Train`] the masks are drawn from streams derived from `seed`:
/// the source sentence uses stream 0 and the target sentence stream 1, and
/// within a batch example `i` first derives its own seed from stream `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regime {
    pub mode: Mode,
    /// Rate on embedding outputs.
    pub drop_in: f64,
    /// Rate on encoder outputs.
    pub drop_out: f64,
    pub seed: u64,
}

impl Regime {
    pub fn eval() -> Self {
        Regime {
            mode: Mode::Eval,
            drop_in: 0.0,
            drop_out: 0.0,
            seed: 0,
        }
    }

    pub fn train(drop_in: f64, drop_out: f64, seed: u64) -> Self {
        Regime {
            mode: Mode::Train,
            drop_in,
            drop_out,
            seed,
        }
    }

    fn for_example(&self, index: usize) -> Regime {
        Regime {
            seed: derive_seed(self.seed, index as u64),
            ..*self
        }
    }

    fn side_rng(&self, side: Side) -> Option<ChaCha8Rng> {
        (self.mode == Mode::Train).then(|| rng(derive_seed(self.seed, side.stream())))
    }
}

struct EncoderTrace<T> {
    ids: Vec<u32>,
    /// Embedded tokens after input dropout, one row per position.
    inputs: Vec<Vec<T>>,
    in_masks: Option<Vec<Vec<T>>>,
    /// `fwd[t]` consumed token `t`.
    fwd: Vec<GruStep<T>>,
    /// `bwd[k]` consumed token `N - 1 - k`.
    bwd: Vec<GruStep<T>>,
    out_mask: Option<Vec<T>>,
    /// `[h_fwd(N) ; h_bwd(1)]` after output dropout.
    out: Vec<T>,
}

fn run_encoder<T: Scalar>(
    p: &ModelParams<T>,
    s: &EncodedSentence,
    side: Side,
    regime: &Regime,
) -> Result<EncoderTrace<T>> {
    let ids = s.tokens().to_vec();
    if ids.is_empty() {
        return Err(Error::EmptySentence);
    }
    let table = p.embedding(side);
    let d_h = p.gru_fwd.d_h();
    let mut masks = regime.side_rng(side);

    let mut inputs = Vec::with_capacity(ids.len());
    let mut in_masks = masks.as_ref().map(|_| Vec::with_capacity(ids.len()));
    for &id in &ids {
        if id as usize >= table.rows() {
            return Err(Error::IndexOutOfRange {
                index: id as usize,
                size: table.rows(),
            });
        }
        let mut x = table.row(id as usize).to_vec();
        if let (Some(r), Some(all)) = (masks.as_mut(), in_masks.as_mut()) {
            let m: Vec<T> = dropout_mask(x.len(), regime.drop_in, r);
            x.iter_mut().zip(&m).for_each(|(v, &k)| *v *= k);
            all.push(m);
        }
        inputs.push(x);
    }

    let zeros = vec![T::zero(); d_h];
    let mut fwd: Vec<GruStep<T>> = Vec::with_capacity(ids.len());
    for x in &inputs {
        let h_prev = fwd.last().map_or(&zeros, |s| &s.h);
        fwd.push(gru_step_cached(&p.gru_fwd, h_prev, x));
    }
    let mut bwd: Vec<GruStep<T>> = Vec::with_capacity(ids.len());
    for x in inputs.iter().rev() {
        let h_prev = bwd.last().map_or(&zeros, |s| &s.h);
        bwd.push(gru_step_cached(&p.gru_bwd, h_prev, x));
    }

    let mut out = Vec::with_capacity(2 * d_h);
    out.extend_from_slice(&fwd.last().expect("non-empty").h);
    out.extend_from_slice(&bwd.last().expect("non-empty").h);
    let out_mask = masks.as_mut().map(|r| dropout_mask::<T, _>(out.len(), regime.drop_out, r));
    if let Some(m) = &out_mask {
        out.iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
    }

    Ok(EncoderTrace {
        ids,
        inputs,
        in_masks,
        fwd,
        bwd,
        out_mask,
        out,
    })
}

fn backprop_direction<T: Scalar>(
    cell: &GruParams<T>,
    steps: &[GruStep<T>],
    inputs_in_step_order: &[&Vec<T>],
    d_final: &[T],
    grads: &mut GruParams<T>,
    dx: &mut [Vec<T>],
    positions: impl Iterator<Item = usize>,
) {
    let d_h = cell.d_h();
    let zeros = vec![T::zero(); d_h];
    let mut dh = d_final.to_vec();
    let mut dh_prev = vec![T::zero(); d_h];
    let positions: Vec<usize> = positions.collect();
    for k in (0..steps.len()).rev() {
        let h_prev = if k == 0 { &zeros } else { &steps[k - 1].h };
        gru_step_backward(
            cell,
            &steps[k],
            h_prev,
            inputs_in_step_order[k],
            &dh,
            grads,
            &mut dx[positions[k]],
            &mut dh_prev,
        );
        std::mem::swap(&mut dh, &mut dh_prev);
    }
}

fn encoder_backward<T: Scalar>(
    p: &ModelParams<T>,
    trace: &EncoderTrace<T>,
    side: Side,
    d_out: &[T],
    grads: &mut ModelParams<T>,
) {
    let d_h = p.gru_fwd.d_h();
    let n = trace.ids.len();
    let d_enc: Vec<T> = match &trace.out_mask {
        Some(m) => d_out.iter().zip(m).map(|(&g, &k)| g * k).collect(),
        None => d_out.to_vec(),
    };
    let mut dx = vec![vec![T::zero(); p.dims().emb]; n];

    let fwd_inputs: Vec<&Vec<T>> = trace.inputs.iter().collect();
    backprop_direction(
        &p.gru_fwd,
        &trace.fwd,
        &fwd_inputs,
        &d_enc[..d_h],
        &mut grads.gru_fwd,
        &mut dx,
        0..n,
    );
    let bwd_inputs: Vec<&Vec<T>> = trace.inputs.iter().rev().collect();
    backprop_direction(
        &p.gru_bwd,
        &trace.bwd,
        &bwd_inputs,
        &d_enc[d_h..],
        &mut grads.gru_bwd,
        &mut dx,
        (0..n).rev(),
    );

    let table = match side {
        Side::Source => &mut grads.emb_src,
        Side::Target => &mut grads.emb_tgt,
    };
    for (t, &id) in trace.ids.iter().enumerate() {
        let row = table.row_mut(id as usize);
        match &trace.in_masks {
            Some(masks) => {
                for ((g, &d), &k) in row.iter_mut().zip(&dx[t]).zip(&masks[t]) {
                    *g += d * k;
                }
            }
            None => row.iter_mut().zip(&dx[t]).for_each(|(g, &d)| *g += d),
        }
    }
}

/// Sentence representation: the forward GRU's last state concatenated with
/// the backward GRU's last state (the one that consumed the first token).
///
/// Only the first `s.length` ids are read, so right padding has no effect.
pub fn encode_sentence<T: Scalar>(
    p: &ModelParams<T>,
    s: &EncodedSentence,
    side: Side,
    regime: &Regime,
) -> Result<Vec<T>> {
    Ok(run_encoder(p, s, side, regime)?.out)
}

/// Element-wise product and absolute difference.
pub fn match_vectors<T: Scalar>(hs: &[T], ht: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    if hs.len() != ht.len() {
        return Err(Error::Shape(format!(
            "match_vectors: [{}] vs [{}]",
            hs.len(),
            ht.len()
        )));
    }
    let h1 = hs.iter().zip(ht).map(|(&a, &b)| a * b).collect();
    let h2 = hs.iter().zip(ht).map(|(&a, &b)| (a - b).abs()).collect();
    Ok((h1, h2))
}

struct HeadTrace<T> {
    h1: Vec<T>,
    h2: Vec<T>,
    hidden: Vec<T>,
    logit: f64,
    prob: T,
}

fn run_head<T: Scalar>(p: &ModelParams<T>, hs: &[T], ht: &[T]) -> Result<HeadTrace<T>> {
    let (h1, h2) = match_vectors(hs, ht)?;
    let head = p.b.len();
    let mut a1 = vec![T::zero(); head];
    let mut a2 = vec![T::zero(); head];
    matvec(&p.w1, &h1, &mut a1);
    matvec(&p.w2, &h2, &mut a2);
    let hidden: Vec<T> = (0..head)
        .map(|i| (a1[i] + a2[i] + p.b.data()[i]).tanh())
        .collect();
    let logit: f64 = p
        .w3
        .data()
        .iter()
        .zip(&hidden)
        .map(|(&w, &h)| w.as_f64() * h.as_f64())
        .sum::<f64>()
        + p.c.data()[0].as_f64();
    let prob = sigmoid(T::cast(logit));
    Ok(HeadTrace {
        h1,
        h2,
        hidden,
        logit,
        prob,
    })
}

/// Probability from two sentence encodings, computed in `f64`.
pub fn score_encoded<T: Scalar>(p: &ModelParams<T>, hs: &[T], ht: &[T]) -> Result<f64> {
    Ok(sigmoid(run_head(p, hs, ht)?.logit))
}

/// Probability that `tgt` translates `src`.
pub fn score_pair<T: Scalar>(
    p: &ModelParams<T>,
    src: &EncodedSentence,
    tgt: &EncodedSentence,
    regime: &Regime,
) -> Result<f64> {
    let hs = encode_sentence(p, src, Side::Source, regime)?;
    let ht = encode_sentence(p, tgt, Side::Target, regime)?;
    score_encoded(p, &hs, &ht)
}

/// `1` when `prob >= rho`.
pub fn predict(prob: f64, rho: f64) -> u8 {
    u8::from(prob >= rho)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutput {
    pub probs: Vec<f64>,
    pub mean_loss: f64,
}

/// Per-example probabilities and the mean cross-entropy of a batch.
pub fn forward_batch<T: Scalar>(
    p: &ModelParams<T>,
    batch: &[TrainingTriple<'_>],
    regime: &Regime,
) -> Result<BatchOutput> {
    batch_pass(p, batch, regime, None)
}

/// [`forward_batch`], also adding the gradient of the mean loss to `grads`.
///
/// The gradient is taken through the sigmoid as `p − y`; the probability
/// clamp only affects the reported loss.
pub fn loss_and_grad<T: Scalar>(
    p: &ModelParams<T>,
    batch: &[TrainingTriple<'_>],
    regime: &Regime,
    grads: &mut ModelParams<T>,
) -> Result<BatchOutput> {
    batch_pass(p, batch, regime, Some(grads))
}

fn batch_pass<T: Scalar>(
    p: &ModelParams<T>,
    batch: &[TrainingTriple<'_>],
    regime: &Regime,
    mut grads: Option<&mut ModelParams<T>>,
) -> Result<BatchOutput> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut probs = Vec::with_capacity(batch.len());
    let mut total = 0.0f64;
    for (i, ex) in batch.iter().enumerate() {
        let r = regime.for_example(i);
        let src = run_encoder(p, ex.src, Side::Source, &r)?;
        let tgt = run_encoder(p, ex.tgt, Side::Target, &r)?;
        let head = run_head(p, &src.out, &tgt.out)?;
        let prob = head.prob.as_f64();
        let loss = bce_loss(prob, ex.label);
        if !loss.is_finite() {
            return Err(Error::NonFinite);
        }
        total += loss;
        probs.push(prob);

        if let Some(g) = grads.as_deref_mut() {
            let d_logit = T::cast((prob - f64::from(ex.label)) * scale);
            head_backward(p, &head, &src.out, &tgt.out, d_logit, g, |g, ds, dt| {
                encoder_backward(p, &src, Side::Source, ds, g);
                encoder_backward(p, &tgt, Side::Target, dt, g);
            });
        }
    }
    Ok(BatchOutput {
        probs,
        mean_loss: total * scale,
    })
}

fn head_backward<T: Scalar>(
    p: &ModelParams<T>,
    head: &HeadTrace<T>,
    hs: &[T],
    ht: &[T],
    d_logit: T,
    grads: &mut ModelParams<T>,
    encoders: impl FnOnce(&mut ModelParams<T>, &[T], &[T]),
) {
    let one = T::one();
    let n_head = head.hidden.len();
    grads
        .w3
        .data_mut()
        .iter_mut()
        .zip(&head.hidden)
        .for_each(|(g, &h)| *g += d_logit * h);
    grads.c.data_mut()[0] += d_logit;

    let da: Vec<T> = (0..n_head)
        .map(|i| d_logit * p.w3.data()[i] * (one - head.hidden[i] * head.hidden[i]))
        .collect();
    add_outer(&mut grads.w1, &da, &head.h1);
    add_outer(&mut grads.w2, &da, &head.h2);
    grads.b.data_mut().iter_mut().zip(&da).for_each(|(g, &d)| *g += d);

    let width = hs.len();
    let mut dh1 = vec![T::zero(); width];
    let mut dh2 = vec![T::zero(); width];
    crate::nncore::matvec_t_acc(&p.w1, &da, &mut dh1);
    crate::nncore::matvec_t_acc(&p.w2, &da, &mut dh2);

    let mut ds = vec![T::zero(); width];
    let mut dt = vec![T::zero(); width];
    for k in 0..width {
        let diff = hs[k] - ht[k];
        let sign = if diff > T::zero() {
            one
        } else if diff < T::zero() {
            -one
        } else {
            T::zero()
        };
        ds[k] = dh1[k] * ht[k] + dh2[k] * sign;
        dt[k] = dh1[k] * hs[k] - dh2[k] * sign;
    }
    encoders(grads, &ds, &dt);
}
