use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;

use super::{DocumentPair, EncodedSentence, ParallelCorpus, TrainingTriple};
use crate::error::{Error, Result};
use crate::seed::rng;

/// Pairs every sentence with its translation (label 1) and with `m`
/// mismatched targets (label 0).
///
/// Output order is pair by pair: the positive for source `k` followed by its
/// `m` negatives. Each negative target index is drawn uniformly from the
/// other `n - 1` pairs, independently, so draws may repeat.
pub fn sample_negatives(
    corpus: &ParallelCorpus,
    m: usize,
    seed: u64,
) -> Result<Vec<TrainingTriple<'_>>> {
    let n = corpus.len();
    if m > 0 && n < 2 {
        return Err(Error::Sampling(n));
    }
    let mut rng = rng(seed);
    let mut triples = Vec::with_capacity(n * (1 + m));
    for k in 0..n {
        let src = &corpus.src[k];
        triples.push(TrainingTriple {
            src,
            tgt: &corpus.tgt[k],
            label: 1,
        });
        for _ in 0..m {
            let r = rng.gen_range(0..n - 1);
            let j = if r >= k { r + 1 } else { r };
            triples.push(TrainingTriple {
                src,
                tgt: &corpus.tgt[j],
                label: 0,
            });
        }
    }
    Ok(triples)
}

/// A test corpus in which some targets were replaced by unrelated sentences.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyTestSet {
    pub src: Vec<EncodedSentence>,
    pub tgt: Vec<EncodedSentence>,
    /// `(k, k)` for every position whose target was kept.
    pub gold: BTreeSet<(usize, usize)>,
    /// Replaced target positions, ascending.
    pub replaced: Vec<usize>,
}

impl NoisyTestSet {
    pub fn as_document(&self, doc_id: &str) -> DocumentPair {
        DocumentPair::from_encoded(doc_id, self.src.clone(), self.tgt.clone())
    }
}

/// Number of targets replaced at `ratio`: `round(ratio * n)`, halves up.
pub fn noise_count(ratio: f64, n: usize) -> usize {
    (ratio * n as f64 + 0.5).floor() as usize
}

/// Replaces `round(ratio * n)` target sentences of `test` with distinct
/// sentences drawn from `pool`. The source side is left untouched.
pub fn inject_noise(
    test: &ParallelCorpus,
    ratio: f64,
    pool: &[EncodedSentence],
    seed: u64,
) -> Result<NoisyTestSet> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!(
            "noise ratio {ratio} outside [0, 1]"
        )));
    }
    let n = test.len();
    let count = noise_count(ratio, n);
    if pool.len() < count {
        return Err(Error::InsufficientPool {
            needed: count,
            available: pool.len(),
        });
    }
    let mut rng = rng(seed);
    let mut positions = index::sample(&mut rng, n, count).into_vec();
    positions.sort_unstable();
    let picks = index::sample(&mut rng, pool.len(), count).into_vec();

    let mut tgt = test.tgt.clone();
    for (&pos, &pick) in positions.iter().zip(&picks) {
        tgt[pos] = pool[pick].clone();
    }
    let replaced: BTreeSet<usize> = positions.iter().copied().collect();
    let gold = (0..n)
        .filter(|k| !replaced.contains(k))
        .map(|k| (k, k))
        .collect();
    Ok(NoisyTestSet {
        src: test.src.clone(),
        tgt,
        gold,
        replaced: positions,
    })
}

/// Every `(src, tgt)` index pair of a document, row-major.
pub fn cartesian_candidates(doc: &DocumentPair) -> Vec<(usize, usize)> {
    let cols = doc.tgt_sentences.len();
    (0..doc.src_sentences.len())
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(n: usize) -> ParallelCorpus {
        let src = (0..n).map(|k| EncodedSentence::new(vec![2 + k as u32])).collect();
        let tgt = (0..n)
            .map(|k| EncodedSentence::new(vec![2 + k as u32, 3]))
            .collect();
        ParallelCorpus::new(src, tgt).unwrap()
    }

    #[test]
    fn two_pairs_one_negative() {
        let c = corpus(2);
        let t = sample_negatives(&c, 1, 0).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.iter().filter(|x| x.label == 1).count(), 2);
        // with n = 2 the only other target is forced
        assert_eq!(t[1].tgt, &c.tgt[1]);
        assert_eq!(t[3].tgt, &c.tgt[0]);
    }

    #[test]
    fn zero_negatives_is_identity() {
        let c = corpus(5);
        let t = sample_negatives(&c, 0, 3).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.iter().enumerate().all(|(k, x)| x.label == 1 && x.tgt == &c.tgt[k]));
    }

    #[test]
    fn single_pair_cannot_sample() {
        assert!(matches!(sample_negatives(&corpus(1), 1, 0), Err(Error::Sampling(1))));
        assert_eq!(sample_negatives(&corpus(1), 0, 0).unwrap().len(), 1);
    }

    #[test]
    fn seeds_control_negatives() {
        let c = corpus(1000);
        let a = sample_negatives(&c, 3, 11).unwrap();
        let b = sample_negatives(&c, 3, 11).unwrap();
        let d = sample_negatives(&c, 3, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    proptest! {
        #[test]
        fn sampling_contract(n in 2usize..60, m in 0usize..9, seed in any::<u64>()) {
            let c = corpus(n);
            let t = sample_negatives(&c, m, seed).unwrap();
            prop_assert_eq!(t.len(), n * (1 + m));
            prop_assert_eq!(t.iter().filter(|x| x.label == 1).count(), n);
            for (i, x) in t.iter().enumerate() {
                let k = i / (1 + m);
                prop_assert_eq!(x.src, &c.src[k]);
                if x.label == 0 {
                    prop_assert!(x.tgt != &c.tgt[k]);
                } else {
                    prop_assert_eq!(x.tgt, &c.tgt[k]);
                }
            }
        }

        #[test]
        fn noise_contract(n in 1usize..200, ratio in 0.0f64..=1.0, seed in any::<u64>()) {
            let c = corpus(n);
            let pool: Vec<_> = (0..n).map(|k| EncodedSentence::new(vec![9000 + k as u32])).collect();
            let noisy = inject_noise(&c, ratio, &pool, seed).unwrap();
            prop_assert_eq!(&noisy.src, &c.src);
            prop_assert_eq!(noisy.gold.len() + noisy.replaced.len(), n);
            prop_assert_eq!(noisy.replaced.len(), noise_count(ratio, n));
            for &k in &noisy.replaced {
                prop_assert!(noisy.tgt[k].ids[0] >= 9000);
            }
            let distinct: BTreeSet<_> = noisy.replaced.iter().map(|&k| noisy.tgt[k].ids.clone()).collect();
            prop_assert_eq!(distinct.len(), noisy.replaced.len());
        }
    }

    #[test]
    fn ninety_percent_noise() {
        let c = corpus(1000);
        let pool: Vec<_> = (0..1000).map(|k| EncodedSentence::new(vec![5000 + k])).collect();
        let noisy = inject_noise(&c, 0.9, &pool, 1).unwrap();
        assert_eq!(noisy.replaced.len(), 900);
        assert_eq!(noisy.gold.len(), 100);
        let again = inject_noise(&c, 0.9, &pool, 1).unwrap();
        assert_eq!(noisy, again);
    }

    #[test]
    fn sixty_percent_gold_fraction() {
        let c = corpus(1000);
        let pool: Vec<_> = (0..1000).map(|k| EncodedSentence::new(vec![5000 + k])).collect();
        let noisy = inject_noise(&c, 0.6, &pool, 1).unwrap();
        assert_eq!(noisy.gold.len(), 400);
        let fraction = noisy.gold.len() as f64 / (1000.0 * 1000.0);
        assert!((fraction - 0.0004).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_keeps_targets() {
        let c = corpus(10);
        let noisy = inject_noise(&c, 0.0, &[], 1).unwrap();
        assert_eq!(noisy.tgt, c.tgt);
        assert_eq!(noisy.gold.len(), 10);
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(noise_count(0.5, 3), 2);
        assert_eq!(noise_count(0.25, 2), 1);
        assert_eq!(noise_count(0.6, 1000), 600);
    }

    #[test]
    fn small_pool_rejected() {
        let c = corpus(10);
        let pool = vec![EncodedSentence::new(vec![99]); 4];
        assert!(matches!(
            inject_noise(&c, 0.5, &pool, 0),
            Err(Error::InsufficientPool { needed: 5, available: 4 })
        ));
    }

    #[test]
    fn cartesian_shapes() {
        let s = |n: usize| (0..n).map(|k| EncodedSentence::new(vec![k as u32 + 2])).collect::<Vec<_>>();
        let d = DocumentPair::from_encoded("d", s(3), s(2));
        assert_eq!(
            cartesian_candidates(&d),
            [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
        );
        let d = DocumentPair::from_encoded("d", s(1), s(1));
        assert_eq!(cartesian_candidates(&d), [(0, 0)]);
        let d = DocumentPair::from_encoded("d", s(1000), s(1000));
        let c = cartesian_candidates(&d);
        assert_eq!(c.len(), 1_000_000);
        let unique: BTreeSet<_> = c.iter().collect();
        assert_eq!(unique.len(), c.len());
    }
}
