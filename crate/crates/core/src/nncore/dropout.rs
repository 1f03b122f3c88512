use rand::Rng;

use crate::scalar::Scalar;
use crate::seed::rng;

/// Whether stochastic layers are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout multipliers: `0` with probability `p`, else `1/(1-p)`.
pub fn dropout_mask<T: Scalar, R: Rng>(len: usize, p: f64, rng: &mut R) -> Vec<T> {
    debug_assert!((0.0..1.0).contains(&p));
    if p == 0.0 {
        return vec![T::one(); len];
    }
    let keep = T::cast(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
        .collect()
}

/// Inverted dropout of `x`. Identity in [`Mode::Eval`].
pub fn dropout<T: Scalar>(x: &[T], p: f64, mode: Mode, seed: u64) -> Vec<T> {
    if mode == Mode::Eval || p == 0.0 {
        return x.to_vec();
    }
    let mask: Vec<T> = dropout_mask(x.len(), p, &mut rng(seed));
    x.iter().zip(mask).map(|(&a, m)| a * m).collect()
}
