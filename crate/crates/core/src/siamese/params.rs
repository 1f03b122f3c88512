use rand::Rng;

use crate::nncore::init::fill_uniform;
use crate::nncore::{init_uniform, unit_scaling_bound, GruParams, ParamSet, Tensor};
use crate::scalar::Scalar;
use crate::seed::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub(crate) fn stream(self) -> u64 {
        match self {
            Side::Source => 0,
            Side::Target => 1,
        }
    }
}

/// Layer widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    /// Word embedding size.
    pub emb: usize,
    /// Recurrent state size per direction.
    pub hidden: usize,
    /// Hidden units of the scoring head.
    pub head: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            emb: 512,
            hidden: 512,
            head: 256,
        }
    }
}

/// All learnable tensors. The two GRU cells are shared by both languages.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub emb_src: Tensor<T>,
    pub emb_tgt: Tensor<T>,
    pub gru_fwd: GruParams<T>,
    pub gru_bwd: GruParams<T>,
    /// `head × 2·hidden`, applied to the element-wise product.
    pub w1: Tensor<T>,
    /// `head × 2·hidden`, applied to the absolute difference.
    pub w2: Tensor<T>,
    pub b: Tensor<T>,
    /// `1 × head`.
    pub w3: Tensor<T>,
    /// `[1]`.
    pub c: Tensor<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(src_vocab: usize, tgt_vocab: usize, dims: Dims) -> Self {
        let Dims { emb, hidden, head } = dims;
        ModelParams {
            emb_src: Tensor::zeros(&[src_vocab, emb]),
            emb_tgt: Tensor::zeros(&[tgt_vocab, emb]),
            gru_fwd: GruParams::zeros(emb, hidden),
            gru_bwd: GruParams::zeros(emb, hidden),
            w1: Tensor::zeros(&[head, 2 * hidden]),
            w2: Tensor::zeros(&[head, 2 * hidden]),
            b: Tensor::zeros(&[head]),
            w3: Tensor::zeros(&[1, head]),
            c: Tensor::zeros(&[1]),
        }
    }

    /// Uniform unit-scaling weights, zero biases.
    ///
    /// An embedding table is treated as a `|V| → emb` map, so its fan-in is
    /// the vocabulary size.
    pub fn init(src_vocab: usize, tgt_vocab: usize, dims: Dims, seed: u64) -> Self {
        let mut r = rng(seed);
        let mut p = Self::zeros(src_vocab, tgt_vocab, dims);
        fill_uniform(&mut p.emb_src, unit_scaling_bound(src_vocab), &mut r);
        fill_uniform(&mut p.emb_tgt, unit_scaling_bound(tgt_vocab), &mut r);
        p.gru_fwd = GruParams::init(dims.emb, dims.hidden, &mut r);
        p.gru_bwd = GruParams::init(dims.emb, dims.hidden, &mut r);
        init_uniform(&mut p.w1, &mut r);
        init_uniform(&mut p.w2, &mut r);
        init_uniform(&mut p.w3, &mut r);
        p
    }

    /// Same shapes, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.emb_src.rows(), self.emb_tgt.rows(), self.dims())
    }

    pub fn dims(&self) -> Dims {
        Dims {
            emb: self.emb_src.cols(),
            hidden: self.gru_fwd.d_h(),
            head: self.b.len(),
        }
    }

    pub fn src_vocab(&self) -> usize {
        self.emb_src.rows()
    }

    pub fn tgt_vocab(&self) -> usize {
        self.emb_tgt.rows()
    }

    pub fn embedding(&self, side: Side) -> &Tensor<T> {
        match side {
            Side::Source => &self.emb_src,
            Side::Target => &self.emb_tgt,
        }
    }

    /// Element-type conversion, e.g. to evaluate an `f32` model in `f64`.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let mut out = ModelParams::<U>::zeros(self.src_vocab(), self.tgt_vocab(), self.dims());
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.map(|x| U::cast(x.as_f64()));
        }
        out
    }

    /// Randomizes the (normally zero) biases; used by gradient tests.
    pub fn perturb_biases<R: Rng>(&mut self, scale: f64, r: &mut R) {
        let biases = [
            &mut self.gru_fwd.bz,
            &mut self.gru_fwd.br,
            &mut self.gru_fwd.bh,
            &mut self.gru_bwd.bz,
            &mut self.gru_bwd.br,
            &mut self.gru_bwd.bh,
            &mut self.b,
            &mut self.c,
        ];
        for t in biases {
            fill_uniform(t, scale, r);
        }
    }
}

fn gru_named<'a, T: Scalar>(prefix: &str, g: &'a GruParams<T>) -> Vec<(String, &'a Tensor<T>)> {
    g.named()
        .into_iter()
        .map(|(n, t)| (format!("{prefix}.{n}"), t))
        .collect()
}

fn gru_named_mut<'a, T: Scalar>(
    prefix: &str,
    g: &'a mut GruParams<T>,
) -> Vec<(String, &'a mut Tensor<T>)> {
    g.named_mut()
        .into_iter()
        .map(|(n, t)| (format!("{prefix}.{n}"), t))
        .collect()
}

impl<T: Scalar> ParamSet<T> for ModelParams<T> {
    fn named(&self) -> Vec<(String, &Tensor<T>)> {
        let mut v = vec![
            ("emb_src".to_string(), &self.emb_src),
            ("emb_tgt".to_string(), &self.emb_tgt),
        ];
        v.extend(gru_named("gru_fwd", &self.gru_fwd));
        v.extend(gru_named("gru_bwd", &self.gru_bwd));
        v.extend([
            ("w1".to_string(), &self.w1),
            ("w2".to_string(), &self.w2),
            ("b".to_string(), &self.b),
            ("w3".to_string(), &self.w3),
            ("c".to_string(), &self.c),
        ]);
        v
    }

    fn named_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut v = vec![
            ("emb_src".to_string(), &mut self.emb_src),
            ("emb_tgt".to_string(), &mut self.emb_tgt),
        ];
        v.extend(gru_named_mut("gru_fwd", &mut self.gru_fwd));
        v.extend(gru_named_mut("gru_bwd", &mut self.gru_bwd));
        v.extend([
            ("w1".to_string(), &mut self.w1),
            ("w2".to_string(), &mut self.w2),
            ("b".to_string(), &mut self.b),
            ("w3".to_string(), &mut self.w3),
            ("c".to_string(), &mut self.c),
        ]);
        v
    }
}
