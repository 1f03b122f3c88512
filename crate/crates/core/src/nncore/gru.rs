use rand::Rng;

use super::ops::{add_outer, matvec, matvec_t_acc, sigmoid};
use super::{init_uniform, ParamSet, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Weights of one GRU cell.
///
/// Input matrices are `d_h × d_in`, recurrent matrices `d_h × d_h`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<T> {
    pub wz: Tensor<T>,
    pub wr: Tensor<T>,
    pub wh: Tensor<T>,
    pub uz: Tensor<T>,
    pub ur: Tensor<T>,
    pub uh: Tensor<T>,
    pub bz: Tensor<T>,
    pub br: Tensor<T>,
    pub bh: Tensor<T>,
}

/// Intermediate values of one forward step, kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct GruStep<T> {
    pub z: Vec<T>,
    pub r: Vec<T>,
    pub cand: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> GruParams<T> {
    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        let w = || Tensor::zeros(&[d_h, d_in]);
        let u = || Tensor::zeros(&[d_h, d_h]);
        let b = || Tensor::zeros(&[d_h]);
        GruParams {
            wz: w(),
            wr: w(),
            wh: w(),
            uz: u(),
            ur: u(),
            uh: u(),
            bz: b(),
            br: b(),
            bh: b(),
        }
    }

    /// Unit-scaling uniform weights, zero biases.
    pub fn init<R: Rng>(d_in: usize, d_h: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(d_in, d_h);
        for w in [&mut p.wz, &mut p.wr, &mut p.wh, &mut p.uz, &mut p.ur, &mut p.uh] {
            init_uniform(w, rng);
        }
        p
    }

    pub fn d_in(&self) -> usize {
        self.wz.cols()
    }

    pub fn d_h(&self) -> usize {
        self.wz.rows()
    }
}

impl<T: Scalar> ParamSet<T> for GruParams<T> {
    fn named(&self) -> Vec<(String, &Tensor<T>)> {
        vec![
            ("wz".into(), &self.wz),
            ("wr".into(), &self.wr),
            ("wh".into(), &self.wh),
            ("uz".into(), &self.uz),
            ("ur".into(), &self.ur),
            ("uh".into(), &self.uh),
            ("bz".into(), &self.bz),
            ("br".into(), &self.br),
            ("bh".into(), &self.bh),
        ]
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        vec![
            ("wz".into(), &mut self.wz),
            ("wr".into(), &mut self.wr),
            ("wh".into(), &mut self.wh),
            ("uz".into(), &mut self.uz),
            ("ur".into(), &mut self.ur),
            ("uh".into(), &mut self.uh),
            ("bz".into(), &mut self.bz),
            ("br".into(), &mut self.br),
            ("bh".into(), &mut self.bh),
        ]
    }
}

/// One GRU transition:
///
/// ```text
/// z = σ(Wz·x + Uz·h + bz)
/// r = σ(Wr·x + Ur·h + br)
/// ĥ = tanh(Wh·x + Uh·(r ⊙ h) + bh)
/// h' = (1 − z) ⊙ h + z ⊙ ĥ
/// ```
pub fn gru_step<T: Scalar>(p: &GruParams<T>, h_prev: &[T], x: &[T]) -> Result<Vec<T>> {
    if h_prev.len() != p.d_h() || x.len() != p.d_in() {
        return Err(Error::Shape(format!(
            "gru_step: cell is {}→{}, got h [{}] and x [{}]",
            p.d_in(),
            p.d_h(),
            h_prev.len(),
            x.len()
        )));
    }
    Ok(gru_step_cached(p, h_prev, x).h)
}

/// [`gru_step`] without shape checks, returning the gate activations.
pub fn gru_step_cached<T: Scalar>(p: &GruParams<T>, h_prev: &[T], x: &[T]) -> GruStep<T> {
    let d = p.d_h();
    let mut z = vec![T::zero(); d];
    let mut r = vec![T::zero(); d];
    let mut cand = vec![T::zero(); d];
    let mut tmp = vec![T::zero(); d];

    matvec(&p.wz, x, &mut z);
    matvec(&p.uz, h_prev, &mut tmp);
    for i in 0..d {
        z[i] = sigmoid(z[i] + tmp[i] + p.bz.data()[i]);
    }
    matvec(&p.wr, x, &mut r);
    matvec(&p.ur, h_prev, &mut tmp);
    for i in 0..d {
        r[i] = sigmoid(r[i] + tmp[i] + p.br.data()[i]);
    }
    let rh: Vec<T> = r.iter().zip(h_prev).map(|(&a, &b)| a * b).collect();
    matvec(&p.wh, x, &mut cand);
    matvec(&p.uh, &rh, &mut tmp);
    for i in 0..d {
        cand[i] = (cand[i] + tmp[i] + p.bh.data()[i]).tanh();
    }
    let h = (0..d)
        .map(|i| (T::one() - z[i]) * h_prev[i] + z[i] * cand[i])
        .collect();
    GruStep { z, r, cand, h }
}

/// Backward pass through one step.
///
/// Parameter gradients and `dx` are accumulated; `dh_prev` is overwritten.
#[allow(clippy::too_many_arguments)]
pub fn gru_step_backward<T: Scalar>(
    p: &GruParams<T>,
    step: &GruStep<T>,
    h_prev: &[T],
    x: &[T],
    dh: &[T],
    grads: &mut GruParams<T>,
    dx: &mut [T],
    dh_prev: &mut [T],
) {
    let d = p.d_h();
    let one = T::one();
    let GruStep { z, r, cand, .. } = step;

    let mut daz = vec![T::zero(); d];
    let mut dah = vec![T::zero(); d];
    for i in 0..d {
        let dz = dh[i] * (cand[i] - h_prev[i]);
        daz[i] = dz * z[i] * (one - z[i]);
        dah[i] = dh[i] * z[i] * (one - cand[i] * cand[i]);
        dh_prev[i] = dh[i] * (one - z[i]);
    }

    let rh: Vec<T> = r.iter().zip(h_prev).map(|(&a, &b)| a * b).collect();
    add_outer(&mut grads.wh, &dah, x);
    add_outer(&mut grads.uh, &dah, &rh);
    grads.bh.data_mut().iter_mut().zip(&dah).for_each(|(g, &v)| *g += v);
    matvec_t_acc(&p.wh, &dah, dx);
    let mut drh = vec![T::zero(); d];
    matvec_t_acc(&p.uh, &dah, &mut drh);

    let mut dar = vec![T::zero(); d];
    for i in 0..d {
        dar[i] = drh[i] * h_prev[i] * r[i] * (one - r[i]);
        dh_prev[i] += drh[i] * r[i];
    }

    add_outer(&mut grads.wz, &daz, x);
    add_outer(&mut grads.uz, &daz, h_prev);
    grads.bz.data_mut().iter_mut().zip(&daz).for_each(|(g, &v)| *g += v);
    matvec_t_acc(&p.wz, &daz, dx);
    matvec_t_acc(&p.uz, &daz, dh_prev);

    add_outer(&mut grads.wr, &dar, x);
    add_outer(&mut grads.ur, &dar, h_prev);
    grads.br.data_mut().iter_mut().zip(&dar).for_each(|(g, &v)| *g += v);
    matvec_t_acc(&p.wr, &dar, dx);
    matvec_t_acc(&p.ur, &dar, dh_prev);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_params_halve_state() {
        let p = GruParams::<f64>::zeros(3, 2);
        let h = gru_step(&p, &[0.4, -0.8], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(h, [0.2, -0.4]);
    }

    #[test]
    fn zero_is_fixed_point() {
        let p = GruParams::<f32>::zeros(3, 2);
        assert_eq!(gru_step(&p, &[0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch() {
        let p = GruParams::<f32>::zeros(3, 2);
        assert!(gru_step(&p, &[0.0; 3], &[0.0; 3]).is_err());
        assert!(gru_step(&p, &[0.0; 2], &[0.0; 2]).is_err());
    }

    fn random_params(d_in: usize, d_h: usize, seed: u64) -> GruParams<f64> {
        let mut r = rng(seed);
        let mut p = GruParams::init(d_in, d_h, &mut r);
        for b in [&mut p.bz, &mut p.br, &mut p.bh] {
            b.data_mut().iter_mut().for_each(|v| *v = r.gen_range(-0.5..0.5));
        }
        p
    }

    /// Full jacobian of a scalar projection of h' against central differences.
    #[test]
    fn backward_matches_finite_differences() {
        let (d_in, d_h) = (3, 4);
        let p = random_params(d_in, d_h, 5);
        let mut r = rng(9);
        let h_prev: Vec<f64> = (0..d_h).map(|_| r.gen_range(-0.9..0.9)).collect();
        let x: Vec<f64> = (0..d_in).map(|_| r.gen_range(-1.0..1.0)).collect();
        let proj: Vec<f64> = (0..d_h).map(|_| r.gen_range(-1.0..1.0)).collect();
        let loss = |p: &GruParams<f64>, h: &[f64], x: &[f64]| -> f64 {
            let out = gru_step(p, h, x).unwrap();
            out.iter().zip(&proj).map(|(a, b)| a * b).sum()
        };

        let step = gru_step_cached(&p, &h_prev, &x);
        let mut grads = GruParams::zeros(d_in, d_h);
        let mut dx = vec![0.0; d_in];
        let mut dh_prev = vec![0.0; d_h];
        gru_step_backward(&p, &step, &h_prev, &x, &proj, &mut grads, &mut dx, &mut dh_prev);

        let eps = 1e-6;
        let check = |analytic: f64, numeric: f64| {
            let err = (analytic - numeric).abs() / numeric.abs().max(1e-6);
            assert!(err < 1e-4, "analytic {analytic} numeric {numeric}");
        };
        let mut q = p.clone();
        for k in 0..q.num_params() {
            let orig = q.flat_get(k);
            q.flat_set(k, orig + eps);
            let up = loss(&q, &h_prev, &x);
            q.flat_set(k, orig - eps);
            let down = loss(&q, &h_prev, &x);
            q.flat_set(k, orig);
            check(grads.flat_get(k), (up - down) / (2.0 * eps));
        }
        for i in 0..d_in {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            check(dx[i], (loss(&p, &h_prev, &xp) - loss(&p, &h_prev, &xm)) / (2.0 * eps));
        }
        for i in 0..d_h {
            let mut hp = h_prev.clone();
            hp[i] += eps;
            let mut hm = h_prev.clone();
            hm[i] -= eps;
            check(dh_prev[i], (loss(&p, &hp, &x) - loss(&p, &hm, &x)) / (2.0 * eps));
        }
    }

    proptest! {
        #[test]
        fn output_stays_in_open_interval(
            seed in any::<u64>(),
            h in proptest::collection::vec(-1.0f64..=1.0, 4),
            x in proptest::collection::vec(-50.0f64..50.0, 3),
        ) {
            let p = random_params(3, 4, seed);
            let out = gru_step(&p, &h, &x).unwrap();
            for v in out {
                prop_assert!(v.abs() <= 1.0);
                prop_assert!(v.is_finite());
            }
        }
    }
}
