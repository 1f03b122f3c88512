use std::collections::{BTreeSet, HashSet};

use rand::Rng;

use bitext_core::corpus::{inject_noise, sample_negatives, EncodedSentence, ParallelCorpus};
use bitext_core::eval::{
    bleu, default_thresholds, f1_score, noise_sweep, pr_curve, precision_recall_f1, CurveMode,
    OracleScorer, SweepSpec,
};
use bitext_core::extraction::ScoredPair;
use bitext_core::seed::rng;
use bitext_core::synth::{generate, SynthSpec};

fn numbered(n: usize, offset: u32) -> Vec<EncodedSentence> {
    (0..n as u32).map(|k| EncodedSentence::new(vec![offset + k, 2])).collect()
}

fn counting_oracle(predicted: &[u32], gold: &[u32]) -> (f64, f64, f64) {
    let mut hits = 0usize;
    for p in predicted {
        for g in gold {
            if p == g {
                hits += 1;
            }
        }
    }
    let p = if predicted.is_empty() { 0.0 } else { hits as f64 / predicted.len() as f64 };
    let r = hits as f64 / gold.len() as f64;
    let f = if hits == 0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

#[test]
fn prf_matches_counting() {
    let mut r = rng(99);
    for _ in 0..1000 {
        let universe = r.gen_range(1..60u32);
        let draw = |r: &mut rand_chacha::ChaCha8Rng, min: usize| {
            let mut v: Vec<u32> = (0..universe).filter(|_| r.gen_bool(0.4)).collect();
            if v.len() < min {
                v.push(0);
            }
            v
        };
        let predicted = draw(&mut r, 0);
        let gold = draw(&mut r, 1);
        let ps: BTreeSet<u32> = predicted.iter().copied().collect();
        let gs: BTreeSet<u32> = gold.iter().copied().collect();
        let got = precision_recall_f1(&ps, &gs).unwrap();
        assert_eq!(got, counting_oracle(&predicted, &gold));
    }
}

#[test]
fn reported_f1_is_reproduced() {
    assert!((f1_score(0.830, 0.696) - 0.757).abs() < 5e-4);
    assert!(precision_recall_f1(&BTreeSet::from([1]), &BTreeSet::<u32>::new()).is_err());
}

#[test]
fn noise_leaves_the_expected_gold() {
    let test = ParallelCorpus::new(numbered(1000, 10), numbered(1000, 10)).unwrap();
    let pool = numbered(700, 5000);
    let noisy = inject_noise(&test, 0.6, &pool, 7).unwrap();
    assert_eq!(noisy.gold.len(), 400);
    assert_eq!(noisy.replaced.len(), 600);
    assert_eq!(noisy.gold.len() as f64 / 1e6, 0.0004);
    let distinct: HashSet<_> = noisy.tgt.iter().collect();
    assert_eq!(distinct.len(), 1000);
    for &k in &noisy.replaced {
        assert!(!noisy.gold.contains(&(k, k)));
        assert_ne!(noisy.tgt[k], test.tgt[k]);
    }
    assert_eq!(noisy.src, test.src);
    assert!(inject_noise(&test, 0.8, &pool, 7).is_err());
}

#[test]
fn negative_sampling_counts() {
    let c = ParallelCorpus::new(numbered(1000, 10), numbered(1000, 10)).unwrap();
    let triples = sample_negatives(&c, 7, 1).unwrap();
    assert_eq!(triples.len(), 8000);
    assert_eq!(triples.iter().filter(|t| t.label == 1).count(), 1000);
    for t in &triples {
        assert_eq!(t.label == 1, t.src.ids[0] == t.tgt.ids[0]);
    }
}

#[test]
fn oracle_is_perfect_at_every_noise_level() {
    let data = generate(SynthSpec::default(), 10, 100, 100).unwrap();
    let spec = SweepSpec {
        ratios: vec![0.0, 0.5, 0.9],
        thresholds: default_thresholds(),
        seed: 2,
        mode: CurveMode::PostGreedy,
    };
    let reports = noise_sweep(&OracleScorer::new(&data.test), None, &data.test, &data.pool, &spec).unwrap();
    assert_eq!(reports.len(), 3);
    for r in reports {
        assert_eq!((r.best.precision, r.best.recall, r.best.f1), (1.0, 1.0, 1.0));
    }
}

#[test]
fn pre_greedy_curves_count_every_thresholded_pair() {
    let scored: Vec<ScoredPair> = [(0, 0, 0.9), (0, 1, 0.8), (1, 1, 0.7), (2, 2, 0.2)]
        .iter()
        .map(|&(s, t, score)| ScoredPair {
            doc_id: "d".into(),
            src_idx: s,
            tgt_idx: t,
            score,
        })
        .collect();
    let gold = BTreeSet::from([(0, 0), (1, 1), (2, 2)]);
    let pre = pr_curve(&scored, &gold, &[0.5], CurveMode::PreGreedy).unwrap();
    let post = pr_curve(&scored, &gold, &[0.5], CurveMode::PostGreedy).unwrap();
    assert_eq!(pre.points[0].extracted, 3);
    assert_eq!(post.points[0].extracted, 2);
    assert_eq!(post.points[0].precision, 1.0);
    assert!((pre.points[0].precision - 2.0 / 3.0).abs() < 1e-15);
    assert!(pr_curve(&scored, &gold, &[0.6, 0.5], CurveMode::PreGreedy).is_err());
}

#[test]
fn bleu_reference_cases() {
    let corpus = vec![vec!["a", "b", "c", "d", "e"], vec!["f", "g", "h", "i"]];
    assert_eq!(bleu(&corpus, &corpus, 4).unwrap(), 1.0);
    let other = vec![vec!["p", "q", "r", "s", "t"], vec!["u", "v", "w", "x"]];
    assert_eq!(bleu(&corpus, &other, 4).unwrap(), 0.0);
    // clipped unigram precision 1/3, bigram 0/2
    assert_eq!(bleu(&[vec!["the", "the", "the"]], &[vec!["the", "cat"]], 2).unwrap(), 0.0);
    let p1 = bleu(&[vec!["the", "the", "the"]], &[vec!["the", "cat"]], 1).unwrap();
    assert_eq!(p1, 1.0 / 3.0);
}
