use std::path::Path;

use log::info;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dictionary::{BilingualDictionaries, CandidateFilter, DICT_THRESHOLD};
use super::features::{extract_features, FeatureVector};
use super::ibm::{train_ibm1, train_ibm2, viterbi_align, ATable, TTable};
use super::maxent::{score_maxent, train_maxent, MaxEntConfig, MaxEntModel};
use crate::corpus::{DocumentPair, ParallelCorpus};
use crate::error::{Error, Result};
use crate::extraction::PairScorer;
use crate::nncore::checkpoint::write_atomic;
use crate::seed::{derive_seed, rng};

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub ibm1_iters: usize,
    pub ibm2_iters: usize,
    /// Upper bound on the pairs held out from alignment training to fit the
    /// classifier; at most a tenth of the corpus is held out.
    pub classifier_pairs: usize,
    /// Attempts at drawing a filter-passing negative before accepting any
    /// mismatched pair.
    pub negative_attempts: usize,
    pub maxent: MaxEntConfig,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            ibm1_iters: 5,
            ibm2_iters: 5,
            classifier_pairs: 10_000,
            negative_attempts: 50,
            maxent: MaxEntConfig::default(),
            seed: 0,
        }
    }
}

/// Alignment tables for one direction.
#[derive(Clone, Debug, Default)]
pub struct DirectionalTables {
    pub t: TTable,
    pub a: ATable,
}

/// Trained feature-based scorer: alignment tables in both directions, the
/// inferred dictionaries and the classifier.
#[derive(Clone, Debug)]
pub struct BaselineModel {
    /// Tables of `t(target | source)`.
    pub fwd: DirectionalTables,
    /// Tables of `t(source | target)`.
    pub rev: DirectionalTables,
    pub filter: CandidateFilter,
    pub classifier: MaxEntModel,
}

impl BaselineModel {
    pub fn features(&self, src: &[u32], tgt: &[u32]) -> FeatureVector {
        let links_fwd = viterbi_align(&self.fwd.t, &self.fwd.a, src, tgt);
        let links_rev = viterbi_align(&self.rev.t, &self.rev.a, tgt, src);
        extract_features(src, tgt, &links_fwd, &links_rev, &self.filter.dicts)
    }

    pub fn score(&self, src: &[u32], tgt: &[u32]) -> Result<f64> {
        score_maxent(&self.classifier, &self.features(src, tgt))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let stored = StoredBaseline::from_model(self);
        let json = serde_json::to_vec(&stored).map_err(|e| Error::Checkpoint(e.to_string()))?;
        write_atomic(path, &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let stored: StoredBaseline =
            serde_json::from_slice(bytes).map_err(|e| Error::Checkpoint(e.to_string()))?;
        stored.into_model()
    }
}

impl PairScorer for BaselineModel {
    fn score_document(&self, doc: &DocumentPair, candidates: &[(usize, usize)]) -> Result<Vec<f64>> {
        candidates
            .par_iter()
            .map(|&(i, j)| {
                self.score(doc.src_sentences[i].tokens(), doc.tgt_sentences[j].tokens())
            })
            .collect()
    }
}

/// Magic value identifying a stored baseline model.
pub const BASELINE_FORMAT: &str = "bitext-baseline";
const BASELINE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredTables {
    t: Vec<(u32, u32, f64)>,
    a: Vec<(usize, usize, usize, Vec<f64>)>,
}

impl StoredTables {
    fn from_tables(d: &DirectionalTables) -> Self {
        StoredTables {
            t: d.t
                .rows()
                .flat_map(|(s, row)| row.iter().map(move |(&u, &p)| (s, u, p)))
                .collect(),
            a: d.a
                .slices()
                .map(|((j, l, m), probs)| (j, l, m, probs.to_vec()))
                .collect(),
        }
    }

    fn into_tables(self) -> Result<DirectionalTables> {
        let mut t = TTable::default();
        for (s, u, p) in self.t {
            t.insert(s, u, p);
        }
        let mut a = ATable::uniform();
        for (j, l, m, probs) in self.a {
            if probs.len() != l + 1 {
                return Err(Error::Checkpoint(format!(
                    "alignment slice ({j}, {l}, {m}) has {} entries",
                    probs.len()
                )));
            }
            a.insert_slice(j, l, m, probs);
        }
        Ok(DirectionalTables { t, a })
    }
}

#[derive(Serialize, Deserialize)]
struct StoredBaseline {
    format: String,
    version: u32,
    fwd: StoredTables,
    rev: StoredTables,
    dict_fwd: Vec<(u32, u32)>,
    dict_rev: Vec<(u32, u32)>,
    classifier: MaxEntModel,
}

impl StoredBaseline {
    fn from_model(m: &BaselineModel) -> Self {
        StoredBaseline {
            format: BASELINE_FORMAT.into(),
            version: BASELINE_VERSION,
            fwd: StoredTables::from_tables(&m.fwd),
            rev: StoredTables::from_tables(&m.rev),
            dict_fwd: m.filter.dicts.fwd.entries().collect(),
            dict_rev: m.filter.dicts.rev.entries().collect(),
            classifier: m.classifier.clone(),
        }
    }

    fn into_model(self) -> Result<BaselineModel> {
        if self.format != BASELINE_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format '{}'", self.format)));
        }
        if self.version != BASELINE_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported baseline version {}",
                self.version
            )));
        }
        let mut dicts = BilingualDictionaries::default();
        for (s, u) in self.dict_fwd {
            dicts.fwd.insert(s, u);
        }
        for (s, u) in self.dict_rev {
            dicts.rev.insert(s, u);
        }
        if !self.classifier.is_finite() {
            return Err(Error::Checkpoint("non-finite classifier weights".into()));
        }
        Ok(BaselineModel {
            fwd: self.fwd.into_tables()?,
            rev: self.rev.into_tables()?,
            filter: CandidateFilter::new(dicts),
            classifier: self.classifier,
        })
    }
}

/// Alignment tables for both directions, Model 1 then Model 2.
pub fn train_tables(
    corpus: &ParallelCorpus,
    ibm1_iters: usize,
    ibm2_iters: usize,
) -> (DirectionalTables, DirectionalTables) {
    let direction = |c: &ParallelCorpus| {
        let m1 = train_ibm1(c, ibm1_iters);
        let m2 = train_ibm2(c, ibm2_iters, &m1.table);
        DirectionalTables {
            t: m2.table,
            a: m2.alignment,
        }
    };
    let reversed = corpus.reversed();
    rayon::join(|| direction(corpus), || direction(&reversed))
}

/// Trains the complete baseline on a parallel corpus.
///
/// The last `min(classifier_pairs, n / 10)` pairs are held out. The alignment
/// tables are trained on the rest, and the classifier on the held-out
/// positives plus the same number of mismatched pairs, each preferring a
/// pair that passes the candidate filters.
pub fn train_baseline(corpus: &ParallelCorpus, cfg: &BaselineConfig) -> Result<BaselineModel> {
    let n = corpus.len();
    let held = cfg.classifier_pairs.min(n / 10);
    if held < 2 {
        return Err(Error::Sampling(n));
    }
    let align = corpus.slice(0..n - held);
    let cls = corpus.slice(n - held..n);
    info!(
        "baseline: aligning {} pairs, classifier on {} positives",
        align.len(),
        cls.len()
    );
    let (fwd, rev) = train_tables(&align, cfg.ibm1_iters, cfg.ibm2_iters);
    let dicts = BilingualDictionaries::infer(&fwd.t, &rev.t, DICT_THRESHOLD);
    info!(
        "baseline: dictionaries with {} / {} entries",
        dicts.fwd.len(),
        dicts.rev.len()
    );
    let mut model = BaselineModel {
        fwd,
        rev,
        filter: CandidateFilter::new(dicts),
        classifier: MaxEntModel::zeros(super::features::NUM_FEATURES),
    };

    let mut r = rng(derive_seed(cfg.seed, 0));
    let mut pairs = Vec::with_capacity(2 * held);
    for k in 0..held {
        pairs.push((k, k, 1u8));
        let mut pick = None;
        for _ in 0..cfg.negative_attempts.max(1) {
            let j = (k + r.gen_range(1..held)) % held;
            pick.get_or_insert(j);
            if model.filter.accepts(cls.src[k].tokens(), cls.tgt[j].tokens()) {
                pick = Some(j);
                break;
            }
        }
        pairs.push((k, pick.expect("at least one attempt"), 0));
    }
    let rows: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j, _)| model.features(cls.src[i].tokens(), cls.tgt[j].tokens()).0.to_vec())
        .collect();
    let labels: Vec<u8> = pairs.iter().map(|p| p.2).collect();
    model.classifier = train_maxent(&rows, &labels, &cfg.maxent)?;
    Ok(model)
}
