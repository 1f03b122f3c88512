use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{encode_sentence, score_encoded, ModelParams, Regime, Side};
use crate::corpus::DocumentPair;
use crate::error::Result;
use crate::extraction::PairScorer;
use crate::scalar::Scalar;

/// Scores document candidates with a trained model in evaluation mode.
///
/// Each sentence is encoded once and the head runs per candidate.
#[derive(Clone, Debug)]
pub struct SiameseScorer<T> {
    pub params: ModelParams<T>,
}

impl<T: Scalar> SiameseScorer<T> {
    pub fn new(params: ModelParams<T>) -> Self {
        SiameseScorer { params }
    }

    fn encode_all(
        &self,
        doc: &DocumentPair,
        wanted: impl Iterator<Item = usize>,
        side: Side,
    ) -> Result<BTreeMap<usize, Vec<T>>> {
        let sentences = match side {
            Side::Source => &doc.src_sentences,
            Side::Target => &doc.tgt_sentences,
        };
        let mut idx: Vec<usize> = wanted.collect();
        idx.sort_unstable();
        idx.dedup();
        let regime = Regime::eval();
        idx.into_par_iter()
            .map(|k| Ok((k, encode_sentence(&self.params, &sentences[k], side, &regime)?)))
            .collect()
    }
}

impl<T: Scalar> PairScorer for SiameseScorer<T> {
    fn score_document(&self, doc: &DocumentPair, candidates: &[(usize, usize)]) -> Result<Vec<f64>> {
        let src = self.encode_all(doc, candidates.iter().map(|c| c.0), Side::Source)?;
        let tgt = self.encode_all(doc, candidates.iter().map(|c| c.1), Side::Target)?;
        candidates
            .par_iter()
            .map(|(i, j)| score_encoded(&self.params, &src[i], &tgt[j]))
            .collect()
    }
}
