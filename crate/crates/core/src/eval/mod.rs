//! Extraction metrics and evaluation protocols.

mod bleu;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::baseline::CandidateFilter;
use crate::corpus::{inject_noise, DocumentPair, EncodedSentence, ParallelCorpus};
use crate::error::{Error, Result};
use crate::extraction::{greedy_one_to_one, score_candidates, ExtractionConfig, PairScorer, ScoredPair, ScorerKind};
use crate::seed::derive_seed;

pub use bleu::{bleu, modified_precision_counts};

/// Metrics of the pairs extracted at one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PRPoint {
    pub rho: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub extracted: usize,
}

/// Whether a curve measures the thresholded pairs before or after greedy
/// one-to-one selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CurveMode {
    #[default]
    PostGreedy,
    PreGreedy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub noise_ratio: f64,
    pub gold: usize,
    /// Ascending in `rho`.
    pub points: Vec<PRPoint>,
    pub best: PRPoint,
}

/// Harmonic mean, 0 when `p + r = 0`.
pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Precision, recall and F1 of `predicted` against `gold`.
pub fn precision_recall_f1<K: Ord>(predicted: &BTreeSet<K>, gold: &BTreeSet<K>) -> Result<(f64, f64, f64)> {
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    let hits = predicted.intersection(gold).count() as f64;
    let p = if predicted.is_empty() {
        0.0
    } else {
        hits / predicted.len() as f64
    };
    let r = hits / gold.len() as f64;
    Ok((p, r, f1_score(p, r)))
}

/// Point with the highest F1; ties go to the larger threshold.
pub fn optimal_f1_threshold(points: &[PRPoint]) -> Result<PRPoint> {
    points
        .iter()
        .copied()
        .reduce(|best, p| {
            if p.f1 > best.f1 || (p.f1 == best.f1 && p.rho > best.rho) {
                p
            } else {
                best
            }
        })
        .ok_or_else(|| Error::InvalidArgument("no thresholds to choose from".into()))
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("empty threshold list".into()));
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidArgument("thresholds must lie in [0, 1]".into()));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("thresholds must be ascending".into()));
    }
    Ok(())
}

/// Metrics at each threshold. Gold pairs are `(src_idx, tgt_idx)` and the
/// document id is ignored.
pub fn pr_curve(
    scored: &[ScoredPair],
    gold: &BTreeSet<(usize, usize)>,
    thresholds: &[f64],
    mode: CurveMode,
) -> Result<EvalReport> {
    check_thresholds(thresholds)?;
    let mut points = Vec::with_capacity(thresholds.len());
    for &rho in thresholds {
        let kept: Vec<ScoredPair> = scored.iter().filter(|p| p.score >= rho).cloned().collect();
        let kept = match mode {
            CurveMode::PostGreedy => greedy_one_to_one(&kept),
            CurveMode::PreGreedy => kept,
        };
        let predicted: BTreeSet<(usize, usize)> = kept.iter().map(|p| (p.src_idx, p.tgt_idx)).collect();
        let (precision, recall, f1) = precision_recall_f1(&predicted, gold)?;
        points.push(PRPoint {
            rho,
            precision,
            recall,
            f1,
            extracted: kept.len(),
        });
    }
    let best = optimal_f1_threshold(&points)?;
    Ok(EvalReport {
        noise_ratio: 0.0,
        gold: gold.len(),
        points,
        best,
    })
}

/// Thresholds 0.01, 0.02, …, 0.99, then `1 − 5·10⁻ᵏ` and `1 − 10⁻ᵏ` for
/// `k = 3 … 6` (0.995, 0.999, …, 0.999995, 0.999999).
pub fn default_thresholds() -> Vec<f64> {
    let mut t: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    for k in 3..=6 {
        let step = 10f64.powi(-k);
        t.push(1.0 - 5.0 * step);
        t.push(1.0 - step);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub ratios: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub seed: u64,
    pub mode: CurveMode,
}

/// One report per noise ratio. For ratio `k` (by position) the noise is
/// drawn with seed `derive_seed(seed, k)` and the whole Cartesian product of
/// the noisy test set is scored, optionally after candidate filtering.
pub fn noise_sweep(
    scorer: &dyn PairScorer,
    filter: Option<&CandidateFilter>,
    test: &ParallelCorpus,
    pool: &[EncodedSentence],
    spec: &SweepSpec,
) -> Result<Vec<EvalReport>> {
    check_thresholds(&spec.thresholds)?;
    if spec.ratios.iter().any(|r| !(0.0..1.0).contains(r)) {
        return Err(Error::InvalidArgument("noise ratios must lie in [0, 1)".into()));
    }
    let cfg = ExtractionConfig {
        rho: 0.0,
        min_tokens: 1,
        scorer: ScorerKind::Birnn,
        apply_candidate_filters: filter.is_some(),
    };
    spec.ratios
        .iter()
        .enumerate()
        .map(|(k, &ratio)| {
            let noisy = inject_noise(test, ratio, pool, derive_seed(spec.seed, k as u64))?;
            let doc = noisy.as_document("test");
            let scored = score_candidates(scorer, filter, std::slice::from_ref(&doc), &cfg)?;
            let mut report = pr_curve(&scored, &noisy.gold, &spec.thresholds, spec.mode)?;
            report.noise_ratio = ratio;
            Ok(report)
        })
        .collect()
}

/// Scores 0.99 for pairs whose sentences form a pair of a reference corpus
/// and 0.01 otherwise, comparing sentence contents.
#[derive(Clone, Debug, Default)]
pub struct OracleScorer {
    pairs: HashMap<Vec<u32>, HashSet<Vec<u32>>>,
}

impl OracleScorer {
    pub const HIGH: f64 = 0.99;
    pub const LOW: f64 = 0.01;

    pub fn new(reference: &ParallelCorpus) -> Self {
        let mut pairs: HashMap<Vec<u32>, HashSet<Vec<u32>>> = HashMap::new();
        for (s, t) in reference.pairs() {
            pairs.entry(s.tokens().to_vec()).or_default().insert(t.tokens().to_vec());
        }
        OracleScorer { pairs }
    }
}

impl PairScorer for OracleScorer {
    fn score_document(&self, doc: &DocumentPair, candidates: &[(usize, usize)]) -> Result<Vec<f64>> {
        Ok(candidates
            .iter()
            .map(|&(i, j)| {
                let hit = self
                    .pairs
                    .get(doc.src_sentences[i].tokens())
                    .is_some_and(|ts| ts.contains(doc.tgt_sentences[j].tokens()));
                if hit {
                    Self::HIGH
                } else {
                    Self::LOW
                }
            })
            .collect())
    }
}

impl EvalReport {
    /// One `rho precision recall f1 extracted` line per point, after a
    /// comment line with the noise ratio and gold count.
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# noise_ratio={} gold={}\nrho\tprecision\trecall\tf1\textracted\n",
            self.noise_ratio, self.gold
        );
        for p in &self.points {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
                p.rho, p.precision, p.recall, p.f1, p.extracted
            ));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.best;
        write!(
            f,
            "noise {:>4.0}%  gold {:>6}  best rho {:<7}  P {:.2}  R {:.2}  F1 {:.2}  extracted {}",
            self.noise_ratio * 100.0,
            self.gold,
            b.rho,
            b.precision * 100.0,
            b.recall * 100.0,
            b.f1 * 100.0,
            b.extracted
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(rho: f64, f1: f64) -> PRPoint {
        PRPoint {
            rho,
            precision: f1,
            recall: f1,
            f1,
            extracted: 0,
        }
    }

    #[test]
    fn counting_example() {
        let predicted: BTreeSet<_> = [(0, 0), (1, 1)].into();
        let gold: BTreeSet<_> = [(0, 0), (2, 2)].into();
        assert_eq!(precision_recall_f1(&predicted, &gold).unwrap(), (0.5, 0.5, 0.5));
        assert_eq!(precision_recall_f1(&gold, &gold).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(precision_recall_f1(&BTreeSet::new(), &gold).unwrap(), (0.0, 0.0, 0.0));
        assert!(matches!(
            precision_recall_f1(&gold, &BTreeSet::new()),
            Err(Error::EmptyGold)
        ));
    }

    #[test]
    fn table_spot_check() {
        assert!((f1_score(0.830, 0.696) - 0.757).abs() < 5e-4);
    }

    #[test]
    fn optimal_tie_break() {
        assert_eq!(optimal_f1_threshold(&[point(0.5, 0.2)]).unwrap().rho, 0.5);
        let pts = [point(0.5, 0.3), point(0.9, 0.7), point(0.99, 0.7)];
        assert_eq!(optimal_f1_threshold(&pts).unwrap().rho, 0.99);
        let zero = [point(0.5, 0.0), point(0.9, 0.0)];
        assert_eq!(optimal_f1_threshold(&zero).unwrap().rho, 0.9);
        assert!(optimal_f1_threshold(&[]).is_err());
    }

    fn sp(i: usize, j: usize, score: f64) -> ScoredPair {
        ScoredPair {
            doc_id: "test".into(),
            src_idx: i,
            tgt_idx: j,
            score,
        }
    }

    #[test]
    fn curve_above_all_scores() {
        let scored = [sp(0, 0, 0.7), sp(0, 1, 0.7)];
        let gold: BTreeSet<_> = [(0, 0)].into();
        let r = pr_curve(&scored, &gold, &[0.5, 0.9], CurveMode::PostGreedy).unwrap();
        assert_eq!(r.points[1].extracted, 0);
        assert_eq!(r.points[1].recall, 0.0);
        assert_eq!(r.points[0].extracted, 1);
    }

    #[test]
    fn curve_rejects_bad_thresholds() {
        let gold: BTreeSet<_> = [(0, 0)].into();
        assert!(pr_curve(&[], &gold, &[0.9, 0.5], CurveMode::PreGreedy).is_err());
        assert!(pr_curve(&[], &gold, &[], CurveMode::PreGreedy).is_err());
    }

    #[test]
    fn default_threshold_grid() {
        let t = default_thresholds();
        assert_eq!(t.len(), 107);
        assert_eq!(t[99..], [0.995, 0.999, 0.9995, 0.9999, 0.99995, 0.99999, 0.999995, 0.999999]);
        assert!(check_thresholds(&t).is_ok());
    }

    #[test]
    fn report_tsv() {
        let gold: BTreeSet<_> = [(0, 0)].into();
        let r = pr_curve(&[sp(0, 0, 0.9)], &gold, &[0.5], CurveMode::PostGreedy).unwrap();
        assert_eq!(
            r.to_tsv(),
            "# noise_ratio=0 gold=1\nrho\tprecision\trecall\tf1\textracted\n0.5\t1.000000\t1.000000\t1.000000\t1\n"
        );
    }
}
