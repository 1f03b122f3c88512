use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A fixed, ordered collection of named tensors.
///
/// Models implement this once; gradients use the same type as the model so
/// that shapes line up by construction.
pub trait ParamSet<T: Scalar> {
    fn named(&self) -> Vec<(String, &Tensor<T>)>;

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor<T>)>;

    fn tensors(&self) -> Vec<&Tensor<T>> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.named_mut().into_iter().map(|(_, t)| t).collect()
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Coordinate `k` of the concatenation of all tensors.
    fn flat_get(&self, mut k: usize) -> T {
        for t in self.tensors() {
            if k < t.len() {
                return t.data()[k];
            }
            k -= t.len();
        }
        panic!("flat index out of range");
    }

    fn flat_set(&mut self, mut k: usize, value: T) {
        for t in self.tensors_mut() {
            if k < t.len() {
                t.data_mut()[k] = value;
                return;
            }
            k -= t.len();
        }
        panic!("flat index out of range");
    }

    fn zero_all(&mut self) {
        self.tensors_mut().into_iter().for_each(Tensor::fill_zero);
    }
}

impl<T: Scalar> ParamSet<T> for Vec<Tensor<T>> {
    fn named(&self) -> Vec<(String, &Tensor<T>)> {
        self.iter().enumerate().map(|(i, t)| (format!("p{i}"), t)).collect()
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.iter_mut()
            .enumerate()
            .map(|(i, t)| (format!("p{i}"), t))
            .collect()
    }
}

/// L2 norm over every entry of every tensor.
pub fn global_norm<T: Scalar, P: ParamSet<T> + ?Sized>(g: &P) -> f64 {
    g.tensors().iter().map(|t| t.sum_sq()).sum::<f64>().sqrt()
}

/// Rescales all gradients by `max_norm / norm` when their global norm
/// exceeds `max_norm`. Returns the norm before clipping.
pub fn clip_gradients<T: Scalar, P: ParamSet<T> + ?Sized>(g: &mut P, max_norm: f64) -> f64 {
    let norm = global_norm(g);
    if norm > max_norm {
        let k = T::cast(max_norm / norm);
        g.tensors_mut().into_iter().for_each(|t| t.scale(k));
    }
    norm
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 0.0002,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, one tensor per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<P: ParamSet<T> + ?Sized>(params: &P) -> Self {
        let m: Vec<Tensor<T>> = params.tensors().iter().map(|t| t.zeros_like()).collect();
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Adam {
            lr,
            ..Adam::default()
        }
    }

    /// One bias-corrected Adam update of `params` against `grads`.
    pub fn step<T: Scalar, P: ParamSet<T> + ?Sized>(
        &self,
        params: &mut P,
        state: &mut AdamState<T>,
        grads: &P,
    ) -> Result<()> {
        let grads = grads.tensors();
        let params = params.tensors_mut();
        if grads.len() != params.len() || state.m.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam: {} params, {} gradients, {} moments",
                params.len(),
                grads.len(),
                state.m.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(&grads).zip(&state.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::Shape(format!(
                    "adam: param {:?} vs gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        state.t += 1;
        let t = state.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(state.m.iter_mut())
            .zip(state.v.iter_mut())
        {
            for (((pi, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                let g = gi.as_f64();
                let m_new = self.beta1 * mi.as_f64() + (1.0 - self.beta1) * g;
                let v_new = self.beta2 * vi.as_f64() + (1.0 - self.beta2) * g * g;
                *mi = T::cast(m_new);
                *vi = T::cast(v_new);
                let update = self.lr * (m_new / c1) / ((v_new / c2).sqrt() + self.eps);
                *pi = T::cast(pi.as_f64() - update);
            }
        }
        Ok(())
    }
}
