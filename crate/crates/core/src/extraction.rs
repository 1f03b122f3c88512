//! Parallel sentence extraction from comparable document pairs.
//!
//! Every source sentence of a document pair is paired with every target
//! sentence, the candidates are scored, and the pairs above the decision
//! threshold are reduced to a one-to-one set per document before a final
//! minimum-length filter.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::baseline::CandidateFilter;
use crate::corpus::{cartesian_candidates, DocumentPair};
use crate::error::{Error, Result};
use crate::nncore::checkpoint::write_atomic;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoredPair {
    pub doc_id: String,
    pub src_idx: usize,
    pub tgt_idx: usize,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerKind {
    Birnn,
    Baseline,
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Birnn => "birnn",
            ScorerKind::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "birnn" => Ok(ScorerKind::Birnn),
            "baseline" => Ok(ScorerKind::Baseline),
            other => Err(Error::Parse(format!(
                "unknown scorer '{other}' (expected birnn or baseline)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionConfig {
    pub rho: f64,
    pub min_tokens: usize,
    pub scorer: ScorerKind,
    pub apply_candidate_filters: bool,
}

/// Default threshold of the neural scorer.
pub const BIRNN_RHO: f64 = 0.99;
/// Default threshold of the feature-based scorer: its optimal-F1 value on the
/// test set with 90% noise.
pub const BASELINE_RHO: f64 = 0.97;

impl ExtractionConfig {
    /// Defaults for `scorer`: candidate filters only for the baseline.
    pub fn for_scorer(scorer: ScorerKind) -> Self {
        let (rho, apply_candidate_filters) = match scorer {
            ScorerKind::Birnn => (BIRNN_RHO, false),
            ScorerKind::Baseline => (BASELINE_RHO, true),
        };
        ExtractionConfig {
            rho,
            min_tokens: 3,
            scorer,
            apply_candidate_filters,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!(
                "rho {} outside [0, 1]",
                self.rho
            )));
        }
        if self.min_tokens == 0 {
            return Err(Error::InvalidArgument("min_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

/// Something that assigns a translation probability to sentence pairs of a
/// document.
pub trait PairScorer: Sync {
    /// Probabilities for `candidates`, in the same order.
    fn score_document(&self, doc: &DocumentPair, candidates: &[(usize, usize)]) -> Result<Vec<f64>>;
}

fn document_candidates(doc: &DocumentPair, filter: Option<&CandidateFilter>) -> Vec<(usize, usize)> {
    let mut c = cartesian_candidates(doc);
    if let Some(f) = filter {
        c.retain(|&(i, j)| {
            f.accepts(doc.src_sentences[i].tokens(), doc.tgt_sentences[j].tokens())
        });
    }
    c
}

/// Scores the Cartesian candidates of every document and keeps those with
/// `score >= cfg.rho`. With `cfg.apply_candidate_filters` the candidates
/// failing `filter` are dropped before scoring.
pub fn score_candidates(
    scorer: &dyn PairScorer,
    filter: Option<&CandidateFilter>,
    docs: &[DocumentPair],
    cfg: &ExtractionConfig,
) -> Result<Vec<ScoredPair>> {
    cfg.validate()?;
    let filter = if cfg.apply_candidate_filters {
        Some(filter.ok_or_else(|| {
            Error::InvalidArgument("candidate filters requested without dictionaries".into())
        })?)
    } else {
        None
    };
    let per_doc: Vec<Vec<ScoredPair>> = docs
        .par_iter()
        .map(|doc| {
            let candidates = document_candidates(doc, filter);
            let scores = scorer.score_document(doc, &candidates)?;
            if scores.len() != candidates.len() {
                return Err(Error::Shape(format!(
                    "scorer returned {} scores for {} candidates",
                    scores.len(),
                    candidates.len()
                )));
            }
            Ok(candidates
                .into_iter()
                .zip(scores)
                .filter(|&(_, s)| s >= cfg.rho)
                .map(|((i, j), score)| ScoredPair {
                    doc_id: doc.doc_id.clone(),
                    src_idx: i,
                    tgt_idx: j,
                    score,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_doc.into_iter().flatten().collect())
}

/// Pairs with `score >= rho`, order preserved.
pub fn threshold(pairs: &[ScoredPair], rho: f64) -> Vec<ScoredPair> {
    pairs.iter().filter(|p| p.score >= rho).cloned().collect()
}

/// Keeps the best-scoring pairs such that no sentence of a document is used
/// twice.
///
/// Pairs are visited by descending score, ties by ascending
/// `(doc_id, src_idx, tgt_idx)`; the result is in visiting order.
pub fn greedy_one_to_one(pairs: &[ScoredPair]) -> Vec<ScoredPair> {
    let mut order: Vec<&ScoredPair> = pairs.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then_with(|| (a.src_idx, a.tgt_idx).cmp(&(b.src_idx, b.tgt_idx)))
    });
    let mut used_src: BTreeSet<(&str, usize)> = BTreeSet::new();
    let mut used_tgt: BTreeSet<(&str, usize)> = BTreeSet::new();
    let mut kept = Vec::new();
    for p in order {
        let s = (p.doc_id.as_str(), p.src_idx);
        let t = (p.doc_id.as_str(), p.tgt_idx);
        if !used_src.contains(&s) && !used_tgt.contains(&t) {
            used_src.insert(s);
            used_tgt.insert(t);
            kept.push(p.clone());
        }
    }
    kept
}

/// Pairs whose sentences both have at least `min_tokens` tokens.
///
/// Pairs naming an unknown document or an out-of-range sentence are dropped.
pub fn min_length_filter(pairs: &[ScoredPair], docs: &[DocumentPair], min_tokens: usize) -> Vec<ScoredPair> {
    pairs
        .iter()
        .filter(|p| {
            docs.iter().find(|d| d.doc_id == p.doc_id).is_some_and(|d| {
                let len = |v: &[crate::corpus::EncodedSentence], k: usize| v.get(k).map_or(0, |s| s.length);
                len(&d.src_sentences, p.src_idx) >= min_tokens
                    && len(&d.tgt_sentences, p.tgt_idx) >= min_tokens
            })
        })
        .cloned()
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LengthStats {
    pub tokens: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl LengthStats {
    pub fn from_lengths(lengths: &[usize]) -> Self {
        if lengths.is_empty() {
            return LengthStats::default();
        }
        let tokens: usize = lengths.iter().sum();
        let n = lengths.len() as f64;
        let mean = tokens as f64 / n;
        let var = lengths.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / n;
        LengthStats {
            tokens,
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExtractionReport {
    pub documents: usize,
    pub candidates: usize,
    pub above_threshold: usize,
    pub after_greedy: usize,
    pub sentences: usize,
    pub src: LengthStats,
    pub tgt: LengthStats,
}

impl fmt::Display for ExtractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents        {}", self.documents)?;
        writeln!(f, "candidates       {}", self.candidates)?;
        writeln!(f, "above threshold  {}", self.above_threshold)?;
        writeln!(f, "after greedy     {}", self.after_greedy)?;
        writeln!(f, "extracted pairs  {}", self.sentences)?;
        for (name, s) in [("source", &self.src), ("target", &self.tgt)] {
            writeln!(
                f,
                "{name} tokens    {} (mean length {:.2} ± {:.2})",
                s.tokens, s.mean, s.std
            )?;
        }
        Ok(())
    }
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Score, threshold, greedy one-to-one and minimum length, in that order.
///
/// The kept pairs are written to `output` as
/// `score<TAB>doc_id<TAB>source<TAB>target` lines.
pub fn run_pipeline(
    scorer: &dyn PairScorer,
    filter: Option<&CandidateFilter>,
    docs: &[DocumentPair],
    cfg: &ExtractionConfig,
    output: &Path,
) -> Result<(Vec<ScoredPair>, ExtractionReport)> {
    cfg.validate()?;
    let candidates: usize = docs
        .iter()
        .map(|d| {
            let f = if cfg.apply_candidate_filters { filter } else { None };
            document_candidates(d, f).len()
        })
        .sum();
    let scored = score_candidates(scorer, filter, docs, cfg)?;
    let greedy = greedy_one_to_one(&scored);
    let kept = min_length_filter(&greedy, docs, cfg.min_tokens);

    let mut out = String::new();
    let mut src_lens = Vec::with_capacity(kept.len());
    let mut tgt_lens = Vec::with_capacity(kept.len());
    for p in &kept {
        let doc = docs
            .iter()
            .find(|d| d.doc_id == p.doc_id)
            .expect("kept pairs come from known documents");
        src_lens.push(doc.src_sentences[p.src_idx].length);
        tgt_lens.push(doc.tgt_sentences[p.tgt_idx].length);
        let text = |v: &[String], k: usize| v.get(k).map_or(String::new(), |s| tsv_field(s));
        out.push_str(&format!(
            "{:.6}\t{}\t{}\t{}\n",
            p.score,
            tsv_field(&p.doc_id),
            text(&doc.src_text, p.src_idx),
            text(&doc.tgt_text, p.tgt_idx)
        ));
    }
    write_atomic(output, out.as_bytes())?;
    let report = ExtractionReport {
        documents: docs.len(),
        candidates,
        above_threshold: scored.len(),
        after_greedy: greedy.len(),
        sentences: kept.len(),
        src: LengthStats::from_lengths(&src_lens),
        tgt: LengthStats::from_lengths(&tgt_lens),
    };
    Ok((kept, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EncodedSentence;

    fn sp(src: usize, tgt: usize, score: f64) -> ScoredPair {
        ScoredPair {
            doc_id: "d".into(),
            src_idx: src,
            tgt_idx: tgt,
            score,
        }
    }

    fn idx(p: &[ScoredPair]) -> Vec<(usize, usize)> {
        p.iter().map(|p| (p.src_idx, p.tgt_idx)).collect()
    }

    #[test]
    fn greedy_trace() {
        let kept = greedy_one_to_one(&[sp(1, 1, 0.9), sp(1, 2, 0.8), sp(2, 2, 0.7)]);
        assert_eq!(idx(&kept), vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn greedy_shared_source() {
        let kept = greedy_one_to_one(&[sp(0, 0, 0.3), sp(0, 1, 0.8), sp(0, 2, 0.5)]);
        assert_eq!(idx(&kept), vec![(0, 1)]);
    }

    #[test]
    fn greedy_disjoint_sorted() {
        let kept = greedy_one_to_one(&[sp(0, 0, 0.3), sp(1, 1, 0.8), sp(2, 2, 0.5)]);
        assert_eq!(idx(&kept), vec![(1, 1), (2, 2), (0, 0)]);
    }

    #[test]
    fn greedy_tie_break() {
        let kept = greedy_one_to_one(&[sp(1, 0, 0.5), sp(0, 0, 0.5)]);
        assert_eq!(idx(&kept), vec![(0, 0)]);
    }

    #[test]
    fn greedy_scoped_per_document() {
        let mut other = sp(0, 0, 0.4);
        other.doc_id = "e".into();
        let kept = greedy_one_to_one(&[sp(0, 0, 0.9), other]);
        assert_eq!(kept.len(), 2);
    }

    fn doc(src_lens: &[usize], tgt_lens: &[usize]) -> DocumentPair {
        let s = |l: &[usize]| l.iter().map(|&n| EncodedSentence::new(vec![2; n])).collect();
        DocumentPair::from_encoded("d", s(src_lens), s(tgt_lens))
    }

    #[test]
    fn min_length_boundary() {
        let d = doc(&[2, 3], &[3, 5]);
        let pairs = [sp(0, 0, 0.9), sp(1, 0, 0.9), sp(1, 1, 0.9)];
        assert_eq!(idx(&min_length_filter(&pairs, &[d.clone()], 3)), vec![(1, 0), (1, 1)]);
        assert!(min_length_filter(&[], &[d], 3).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(ExtractionConfig::for_scorer(ScorerKind::Birnn).validate().is_ok());
        assert!(ExtractionConfig::for_scorer(ScorerKind::Birnn).with_rho(1.5).validate().is_err());
        let mut c = ExtractionConfig::for_scorer(ScorerKind::Baseline);
        assert!(c.apply_candidate_filters);
        c.min_tokens = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn length_stats() {
        let s = LengthStats::from_lengths(&[2, 4]);
        assert_eq!((s.tokens, s.mean, s.std), (6, 3.0, 1.0));
        assert_eq!(LengthStats::from_lengths(&[]), LengthStats::default());
    }

    #[test]
    fn scorer_kind_parse() {
        assert_eq!("birnn".parse::<ScorerKind>().unwrap(), ScorerKind::Birnn);
        assert!("svm".parse::<ScorerKind>().is_err());
    }
}
