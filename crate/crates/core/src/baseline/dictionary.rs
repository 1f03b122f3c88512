use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::ibm::{TTable, NULL_SOURCE};

/// Translation probability a dictionary entry must exceed.
pub const DICT_THRESHOLD: f64 = 0.1;

/// One-directional word dictionary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    entries: BTreeMap<u32, BTreeSet<u32>>,
}

impl Dictionary {
    pub fn insert(&mut self, from: u32, to: u32) {
        self.entries.entry(from).or_default().insert(to);
    }

    pub fn contains(&self, from: u32, to: u32) -> bool {
        self.entries.get(&from).is_some_and(|s| s.contains(&to))
    }

    pub fn translations(&self, from: u32) -> Option<&BTreeSet<u32>> {
        self.entries.get(&from)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.entries
            .iter()
            .flat_map(|(&f, to)| to.iter().map(move |&t| (f, t)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Keeps every `(s, u)` with `t(u | s) > threshold`. The NULL row is skipped.
pub fn infer_dictionary(t: &TTable, threshold: f64) -> Dictionary {
    let mut dict = Dictionary::default();
    for (src, row) in t.rows() {
        if src == NULL_SOURCE {
            continue;
        }
        for (&tgt, &p) in row {
            if p > threshold {
                dict.insert(src, tgt);
            }
        }
    }
    dict
}

/// Source→target dictionary from the forward table and target→source
/// dictionary from the reverse table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BilingualDictionaries {
    pub fwd: Dictionary,
    pub rev: Dictionary,
}

impl BilingualDictionaries {
    pub fn infer(t_fwd: &TTable, t_rev: &TTable, threshold: f64) -> Self {
        BilingualDictionaries {
            fwd: infer_dictionary(t_fwd, threshold),
            rev: infer_dictionary(t_rev, threshold),
        }
    }
}

/// Number of tokens (occurrences) in `words` with a dictionary translation
/// among `other`.
pub fn translated_count(words: &[u32], other: &[u32], dict: &Dictionary) -> usize {
    let other: HashSet<u32> = other.iter().copied().collect();
    words
        .iter()
        .filter(|&&w| {
            dict.translations(w)
                .is_some_and(|ts| ts.iter().any(|t| other.contains(t)))
        })
        .count()
}

/// True iff the longer sentence is at most twice as long as the shorter.
pub fn length_ratio_filter(src_len: usize, tgt_len: usize) -> bool {
    let (lo, hi) = (src_len.min(tgt_len), src_len.max(tgt_len));
    lo > 0 && hi <= 2 * lo
}

/// True iff at least half of the source tokens have a translation in the
/// target sentence and at least half of the target tokens have one in the
/// source sentence. Tokens are counted per occurrence.
pub fn word_overlap_filter(src: &[u32], tgt: &[u32], dicts: &BilingualDictionaries) -> bool {
    if src.is_empty() || tgt.is_empty() {
        return false;
    }
    2 * translated_count(src, tgt, &dicts.fwd) >= src.len()
        && 2 * translated_count(tgt, src, &dicts.rev) >= tgt.len()
}

/// Length-ratio and word-overlap filtering of candidate pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateFilter {
    pub dicts: BilingualDictionaries,
}

impl CandidateFilter {
    pub fn new(dicts: BilingualDictionaries) -> Self {
        CandidateFilter { dicts }
    }

    pub fn accepts(&self, src: &[u32], tgt: &[u32]) -> bool {
        length_ratio_filter(src.len(), tgt.len()) && word_overlap_filter(src, tgt, &self.dicts)
    }
}
