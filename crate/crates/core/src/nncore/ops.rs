use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability clamp used by [`bce_loss`].
pub const PROB_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `out = W · x`, with the dot products accumulated in `f64`.
pub fn matvec<T: Scalar>(w: &Tensor<T>, x: &[T], out: &mut [T]) {
    debug_assert_eq!(w.cols(), x.len());
    debug_assert_eq!(w.rows(), out.len());
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for (&a, &b) in w.row(i).iter().zip(x) {
            acc += a.as_f64() * b.as_f64();
        }
        *o = T::cast(acc);
    }
}

/// `out += Wᵀ · y`.
pub fn matvec_t_acc<T: Scalar>(w: &Tensor<T>, y: &[T], out: &mut [T]) {
    debug_assert_eq!(w.rows(), y.len());
    debug_assert_eq!(w.cols(), out.len());
    let mut acc: Vec<f64> = out.iter().map(|x| x.as_f64()).collect();
    for (i, &yi) in y.iter().enumerate() {
        let yi = yi.as_f64();
        if yi == 0.0 {
            continue;
        }
        for (a, &wij) in acc.iter_mut().zip(w.row(i)) {
            *a += wij.as_f64() * yi;
        }
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o = T::cast(a);
    }
}

/// `g += a · bᵀ`.
pub fn add_outer<T: Scalar>(g: &mut Tensor<T>, a: &[T], b: &[T]) {
    debug_assert_eq!(g.rows(), a.len());
    debug_assert_eq!(g.cols(), b.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai == T::zero() {
            continue;
        }
        for (gij, &bj) in g.row_mut(i).iter_mut().zip(b) {
            *gij += ai * bj;
        }
    }
}

/// Fully connected layer `activation(W · x + b)`.
pub fn dense<T: Scalar>(w: &Tensor<T>, b: &[T], x: &[T], activation: Activation) -> Result<Vec<T>> {
    if w.shape().len() != 2 || w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::Shape(format!(
            "dense: W {:?}, b [{}], x [{}]",
            w.shape(),
            b.len(),
            x.len()
        )));
    }
    let mut out = vec![T::zero(); b.len()];
    matvec(w, x, &mut out);
    for (o, &bi) in out.iter_mut().zip(b) {
        *o = activation.apply(*o + bi);
    }
    Ok(out)
}

/// Rows `ids` of the embedding matrix, one per position.
pub fn embed_lookup<T: Scalar>(table: &Tensor<T>, ids: &[u32]) -> Result<Tensor<T>> {
    let dim = table.cols();
    let mut data = Vec::with_capacity(ids.len() * dim);
    for &id in ids {
        let id = id as usize;
        if id >= table.rows() {
            return Err(Error::IndexOutOfRange {
                index: id,
                size: table.rows(),
            });
        }
        data.extend_from_slice(table.row(id));
    }
    Tensor::from_vec(&[ids.len(), dim], data)
}

/// Binary cross-entropy of probability `p` against label `y`, with `p`
/// clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}
