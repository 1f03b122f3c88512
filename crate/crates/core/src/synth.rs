//! A synthetic pair language for end-to-end experiments.
//!
//! Source sentences are drawn word by word from a Zipfian distribution over
//! `s0 … s{V-1}`; the target sentence replaces every word through a fixed
//! random lexicon. Part of the lexicon is many-to-one, so several source
//! words share a translation, and some words expand into three target
//! tokens, which pushes the length ratio of some pairs past 2.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{encode, EncodedSentence, ParallelCorpus, Vocabulary};
use crate::error::Result;
use crate::seed::{derive_seed, rng};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Zipf exponent of the word distribution.
    pub zipf: f64,
    /// Fraction of source words whose translation is shared with another
    /// source word.
    pub collapse: f64,
    /// Approximate share of running source words that expand into three
    /// target tokens.
    pub expansion: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            vocab: 200,
            min_len: 4,
            max_len: 12,
            zipf: 1.0,
            collapse: 0.2,
            expansion: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PairLanguage {
    spec: SynthSpec,
    lexicon: Vec<Vec<String>>,
    words: WeightedIndex<f64>,
}

impl PairLanguage {
    pub fn new(spec: SynthSpec) -> Self {
        assert!(spec.vocab >= 2 && spec.min_len >= 1 && spec.min_len <= spec.max_len);
        let mut r = rng(derive_seed(spec.seed, 0));
        let weights: Vec<f64> = (1..=spec.vocab).map(|k| (k as f64).powf(-spec.zipf)).collect();
        let total: f64 = weights.iter().sum();

        let mut image: Vec<usize> = (0..spec.vocab).collect();
        image.shuffle(&mut r);
        let collapsed = (spec.collapse * spec.vocab as f64).round() as usize;
        let mut order: Vec<usize> = (0..spec.vocab).collect();
        order.shuffle(&mut r);
        for &w in order.iter().take(collapsed) {
            let other = r.gen_range(0..spec.vocab);
            image[w] = image[other];
        }

        order.shuffle(&mut r);
        let mut expanded = vec![false; spec.vocab];
        let mut mass = 0.0;
        for &w in &order {
            if mass + weights[w] / total > spec.expansion {
                continue;
            }
            mass += weights[w] / total;
            expanded[w] = true;
        }
        let lexicon = (0..spec.vocab)
            .map(|w| {
                let base = image[w];
                if expanded[w] {
                    (0..3).map(|k| format!("t{base}x{k}")).collect()
                } else {
                    vec![format!("t{base}")]
                }
            })
            .collect();
        let words = WeightedIndex::new(&weights).expect("positive weights");
        PairLanguage {
            spec,
            lexicon,
            words,
        }
    }

    pub fn spec(&self) -> &SynthSpec {
        &self.spec
    }

    /// Target tokens of source word `w`.
    pub fn translate_word(&self, w: usize) -> &[String] {
        &self.lexicon[w]
    }

    fn sentence(&self, r: &mut ChaCha8Rng) -> Vec<usize> {
        let len = r.gen_range(self.spec.min_len..=self.spec.max_len);
        (0..len).map(|_| self.words.sample(r)).collect()
    }

    /// `n` source/target token-list pairs drawn from stream `stream`.
    pub fn sample(&self, n: usize, stream: u64) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
        let mut r = rng(derive_seed(self.spec.seed, 1 + stream));
        (0..n)
            .map(|_| {
                let s = self.sentence(&mut r);
                let src = s.iter().map(|w| format!("s{w}")).collect();
                let tgt = s.iter().flat_map(|&w| self.translate_word(w).iter().cloned()).collect();
                (src, tgt)
            })
            .unzip()
    }
}

/// Training and test corpora of a pair language, plus unrelated target
/// sentences for noise injection. Vocabularies come from the training side.
#[derive(Clone, Debug)]
pub struct SynthData {
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub train: ParallelCorpus,
    pub test: ParallelCorpus,
    pub pool: Vec<EncodedSentence>,
    pub train_text: (Vec<Vec<String>>, Vec<Vec<String>>),
}

fn encode_all(sentences: &[Vec<String>], v: &Vocabulary) -> Result<Vec<EncodedSentence>> {
    sentences.iter().map(|s| encode(s, v)).collect()
}

pub fn generate(spec: SynthSpec, n_train: usize, n_test: usize, n_pool: usize) -> Result<SynthData> {
    let lang = PairLanguage::new(spec);
    let (train_src, train_tgt) = lang.sample(n_train, 0);
    let (test_src, test_tgt) = lang.sample(n_test, 1);
    let (_, pool_tgt) = lang.sample(n_pool, 2);
    let src_vocab = Vocabulary::build(&train_src, None);
    let tgt_vocab = Vocabulary::build(&train_tgt, None);
    let train = ParallelCorpus::new(encode_all(&train_src, &src_vocab)?, encode_all(&train_tgt, &tgt_vocab)?)?;
    let test = ParallelCorpus::new(encode_all(&test_src, &src_vocab)?, encode_all(&test_tgt, &tgt_vocab)?)?;
    let pool = encode_all(&pool_tgt, &tgt_vocab)?;
    Ok(SynthData {
        src_vocab,
        tgt_vocab,
        train,
        test,
        pool,
        train_text: (train_src, train_tgt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_word_aligned() {
        let lang = PairLanguage::new(SynthSpec::default());
        let (a, b) = lang.sample(50, 0);
        assert_eq!(lang.sample(50, 0), (a.clone(), b.clone()));
        for (s, t) in a.iter().zip(&b) {
            assert!(t.len() >= s.len() && t.len() <= 3 * s.len());
            assert!((4..=12).contains(&s.len()));
        }
    }

    #[test]
    fn lexicon_is_partly_many_to_one() {
        let lang = PairLanguage::new(SynthSpec::default());
        let mut targets: Vec<String> = (0..200).map(|w| lang.translate_word(w)[0].clone()).collect();
        targets.sort_unstable();
        targets.dedup();
        assert!(targets.len() < 200 && targets.len() > 150);
        let expanded = (0..200).filter(|&w| lang.translate_word(w).len() == 3).count();
        assert!(expanded > 0 && expanded < 200);
    }

    #[test]
    fn generate_shapes() {
        let d = generate(SynthSpec::default(), 100, 20, 30).unwrap();
        assert_eq!((d.train.len(), d.test.len(), d.pool.len()), (100, 20, 30));
    }
}
