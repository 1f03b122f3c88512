//! IBM Model 1 and Model 2 word alignment trained by EM.
//!
//! Tables are keyed by vocabulary ids. Every source sentence is extended
//! with an implicit NULL word that can generate target words.

use std::collections::BTreeMap;

use crate::corpus::{ParallelCorpus, MAX_SENTENCE_LEN};

/// Source key of the NULL word in a [`TTable`].
pub const NULL_SOURCE: u32 = u32::MAX;

/// Entries smaller than this are dropped after each EM iteration.
pub const PRUNE_FLOOR: f64 = 1e-6;

/// Score given to a NULL link when nothing better is available.
pub const NULL_FLOOR: f64 = 1e-10;

/// Lexical translation probabilities `t(target | source)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TTable {
    rows: BTreeMap<u32, BTreeMap<u32, f64>>,
}

impl TTable {
    pub fn get(&self, src: u32, tgt: u32) -> f64 {
        self.rows
            .get(&src)
            .and_then(|r| r.get(&tgt))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, src: u32) -> Option<&BTreeMap<u32, f64>> {
        self.rows.get(&src)
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &BTreeMap<u32, f64>)> {
        self.rows.iter().map(|(&s, r)| (s, r))
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn insert(&mut self, src: u32, tgt: u32, prob: f64) {
        self.rows.entry(src).or_default().insert(tgt, prob);
    }

    /// Builds a table from expected counts: rows are normalized, entries
    /// under [`PRUNE_FLOOR`] removed and the survivors renormalized.
    fn from_counts(counts: BTreeMap<u32, BTreeMap<u32, f64>>) -> Self {
        let mut rows = BTreeMap::new();
        for (src, row) in counts {
            let total: f64 = row.values().sum();
            if total <= 0.0 {
                continue;
            }
            let mut kept: BTreeMap<u32, f64> = row
                .into_iter()
                .map(|(t, c)| (t, c / total))
                .filter(|&(_, p)| p >= PRUNE_FLOOR)
                .collect();
            let kept_total: f64 = kept.values().sum();
            kept.values_mut().for_each(|p| *p /= kept_total);
            rows.insert(src, kept);
        }
        TTable { rows }
    }
}

/// Alignment probabilities `a(i | j, l, m)`: source position `i` (or NULL)
/// for target position `j`, source length `l`, target length `m`.
///
/// Length combinations never observed in training are uniform over the
/// `l + 1` choices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ATable {
    /// `(j, l, m)` → `l + 1` probabilities; slot 0 is NULL, slot `i + 1`
    /// source position `i`.
    slices: BTreeMap<(u16, u16, u16), Vec<f64>>,
}

impl ATable {
    pub fn uniform() -> Self {
        ATable::default()
    }

    /// `a(i | j, l, m)` with `None` for NULL.
    pub fn get(&self, i: Option<usize>, j: usize, l: usize, m: usize) -> f64 {
        let slot = i.map_or(0, |i| i + 1);
        match self.slice(j, l, m) {
            Some(s) => s[slot],
            None => 1.0 / (l + 1) as f64,
        }
    }

    pub fn slice(&self, j: usize, l: usize, m: usize) -> Option<&[f64]> {
        if l > MAX_SENTENCE_LEN || m > MAX_SENTENCE_LEN {
            return None;
        }
        self.slices
            .get(&(j as u16, l as u16, m as u16))
            .map(Vec::as_slice)
    }

    pub fn slices(&self) -> impl Iterator<Item = ((usize, usize, usize), &[f64])> {
        self.slices
            .iter()
            .map(|(&(j, l, m), v)| ((j as usize, l as usize, m as usize), v.as_slice()))
    }

    pub fn insert_slice(&mut self, j: usize, l: usize, m: usize, probs: Vec<f64>) {
        debug_assert_eq!(probs.len(), l + 1);
        self.slices.insert((j as u16, l as u16, m as u16), probs);
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

/// A trained Model 1 with its log-likelihood trace.
#[derive(Clone, Debug)]
pub struct Ibm1 {
    pub table: TTable,
    /// Corpus log-likelihood before the first iteration and after each one.
    pub log_likelihood: Vec<f64>,
}

/// A trained Model 2 with its log-likelihood trace.
#[derive(Clone, Debug)]
pub struct Ibm2 {
    pub table: TTable,
    pub alignment: ATable,
    /// Corpus log-likelihood before the first iteration and after each one.
    pub log_likelihood: Vec<f64>,
}

fn with_null(src: &[u32]) -> Vec<u32> {
    std::iter::once(NULL_SOURCE).chain(src.iter().copied()).collect()
}

fn trainable(corpus: &ParallelCorpus) -> impl Iterator<Item = (&[u32], &[u32])> {
    corpus
        .pairs()
        .map(|(s, t)| (s.tokens(), t.tokens()))
        .filter(|(s, t)| {
            !s.is_empty() && !t.is_empty() && s.len() <= MAX_SENTENCE_LEN && t.len() <= MAX_SENTENCE_LEN
        })
}

enum Lexicon<'a> {
    Uniform(f64),
    Table(&'a TTable),
}

impl Lexicon<'_> {
    fn get(&self, src: u32, tgt: u32) -> f64 {
        match self {
            Lexicon::Uniform(p) => *p,
            Lexicon::Table(t) => t.get(src, tgt),
        }
    }
}

/// One EM pass of Model 1 (when `alignment` is `None`) or Model 2.
///
/// Returns the log-likelihood of the current parameters and, when
/// `collect` is set, the expected counts.
fn em_pass(
    corpus: &ParallelCorpus,
    lex: &Lexicon<'_>,
    alignment: Option<&ATable>,
    collect: bool,
) -> (
    f64,
    BTreeMap<u32, BTreeMap<u32, f64>>,
    BTreeMap<(u16, u16, u16), Vec<f64>>,
) {
    let mut ll = 0.0;
    let mut t_counts: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
    let mut a_counts: BTreeMap<(u16, u16, u16), Vec<f64>> = BTreeMap::new();
    let mut weights = Vec::new();
    for (src, tgt) in trainable(corpus) {
        let srcs = with_null(src);
        let (l, m) = (src.len(), tgt.len());
        for (j, &u) in tgt.iter().enumerate() {
            weights.clear();
            for (slot, &s) in srcs.iter().enumerate() {
                let a = match alignment {
                    Some(a) => a.get(slot.checked_sub(1), j, l, m),
                    None => 1.0 / (l + 1) as f64,
                };
                weights.push(lex.get(s, u) * a);
            }
            let denom: f64 = weights.iter().sum();
            if denom <= 0.0 {
                ll += NULL_FLOOR.ln();
                continue;
            }
            ll += denom.ln();
            if !collect {
                continue;
            }
            for (&s, &w) in srcs.iter().zip(&weights) {
                if w > 0.0 {
                    *t_counts.entry(s).or_default().entry(u).or_default() += w / denom;
                }
            }
            if alignment.is_some() {
                let slice = a_counts
                    .entry((j as u16, l as u16, m as u16))
                    .or_insert_with(|| vec![0.0; l + 1]);
                for (c, &w) in slice.iter_mut().zip(&weights) {
                    *c += w / denom;
                }
            }
        }
    }
    (ll, t_counts, a_counts)
}

fn distinct_targets(corpus: &ParallelCorpus) -> usize {
    let mut seen: Vec<u32> = trainable(corpus).flat_map(|(_, t)| t.iter().copied()).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len().max(1)
}

/// EM for Model 1 from a uniform lexical table.
pub fn train_ibm1(corpus: &ParallelCorpus, iters: usize) -> Ibm1 {
    let uniform = 1.0 / distinct_targets(corpus) as f64;
    let mut table: Option<TTable> = None;
    let mut log_likelihood = Vec::with_capacity(iters + 1);
    for _ in 0..iters {
        let lex = match &table {
            Some(t) => Lexicon::Table(t),
            None => Lexicon::Uniform(uniform),
        };
        let (ll, counts, _) = em_pass(corpus, &lex, None, true);
        log_likelihood.push(ll);
        table = Some(TTable::from_counts(counts));
    }
    let lex = match &table {
        Some(t) => Lexicon::Table(t),
        None => Lexicon::Uniform(uniform),
    };
    log_likelihood.push(em_pass(corpus, &lex, None, false).0);
    let table = table.unwrap_or_else(|| {
        // zero iterations: materialize the uniform table over co-occurrences
        let mut t = TTable::default();
        for (src, tgt) in trainable(corpus) {
            for s in with_null(src) {
                for &u in tgt {
                    t.insert(s, u, uniform);
                }
            }
        }
        t
    });
    Ibm1 {
        table,
        log_likelihood,
    }
}

/// Joint EM over lexical and alignment tables, starting from `init` and a
/// uniform alignment table.
pub fn train_ibm2(corpus: &ParallelCorpus, iters: usize, init: &TTable) -> Ibm2 {
    let mut table = init.clone();
    let mut alignment = ATable::uniform();
    let mut log_likelihood = Vec::with_capacity(iters + 1);
    for _ in 0..iters {
        let (ll, t_counts, a_counts) = em_pass(corpus, &Lexicon::Table(&table), Some(&alignment), true);
        log_likelihood.push(ll);
        table = TTable::from_counts(t_counts);
        let mut next = ATable::uniform();
        for ((j, l, m), counts) in a_counts {
            let total: f64 = counts.iter().sum();
            if total > 0.0 {
                next.insert_slice(
                    j as usize,
                    l as usize,
                    m as usize,
                    counts.iter().map(|c| c / total).collect(),
                );
            }
        }
        alignment = next;
    }
    log_likelihood.push(em_pass(corpus, &Lexicon::Table(&table), Some(&alignment), false).0);
    Ibm2 {
        table,
        alignment,
        log_likelihood,
    }
}

/// Best source position for every target position.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentLinks {
    /// `links[j]` is the source position aligned to target position `j`,
    /// `None` for NULL.
    pub links: Vec<Option<usize>>,
    /// Sum over target positions of the log of the winning link score.
    pub log_prob: f64,
}

impl AlignmentLinks {
    /// `(source, target)` pairs, NULL links included.
    pub fn pairs(&self) -> impl Iterator<Item = (Option<usize>, usize)> + '_ {
        self.links.iter().enumerate().map(|(j, &i)| (i, j))
    }
}

/// Viterbi alignment under Model 2: each target word links to the source
/// position maximizing `t(tgt_j | src_i) · a(i | j, l, m)`.
///
/// NULL is scored first (as position −1) with a floor of [`NULL_FLOOR`], and
/// a later position only wins when strictly better, so ties go to the
/// smaller index. Target words unknown to the table align to NULL.
pub fn viterbi_align(t: &TTable, a: &ATable, src: &[u32], tgt: &[u32]) -> AlignmentLinks {
    let (l, m) = (src.len(), tgt.len());
    let mut links = Vec::with_capacity(m);
    let mut log_prob = 0.0;
    for (j, &u) in tgt.iter().enumerate() {
        let mut best = (t.get(NULL_SOURCE, u) * a.get(None, j, l, m)).max(NULL_FLOOR);
        let mut arg = None;
        for (i, &s) in src.iter().enumerate() {
            let score = t.get(s, u) * a.get(Some(i), j, l, m);
            if score > best {
                best = score;
                arg = Some(i);
            }
        }
        links.push(arg);
        log_prob += best.ln();
    }
    AlignmentLinks { links, log_prob }
}
