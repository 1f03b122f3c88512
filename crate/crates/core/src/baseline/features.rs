//! The 31 pair features of the maximum-entropy classifier.
//!
//! Canonical order:
//!
//! | index | feature |
//! |-------|---------|
//! | 0 | source length N |
//! | 1 | target length M |
//! | 2 | \|N − M\| |
//! | 3 | max(N, M) / min(N, M) |
//! | 4 | fraction of source tokens with a dictionary translation in the target |
//! | 5 | fraction of target tokens with a dictionary translation in the source |
//! | 6–17 | block for the source→target alignment |
//! | 18–29 | block for the target→source alignment |
//! | 30 | forward plus reverse alignment log probability |
//!
//! An alignment links every word on its generated side to one word on its
//! conditioning side or to NULL. Block layout:
//!
//! | offset | feature |
//! |--------|---------|
//! | 0 | generated words linked to a real word |
//! | 1 | the same as a fraction of the generated words |
//! | 2 | generated words linked to NULL |
//! | 3 | the same as a fraction |
//! | 4, 5, 6 | three largest fertilities of conditioning words, 0 when absent |
//! | 7 | fraction of conditioning words with fertility 1 |
//! | 8 | fraction with fertility 2 |
//! | 9 | fraction with fertility 3 or more |
//! | 10 | longest run of consecutive linked generated words |
//! | 11 | longest run of consecutive NULL-linked generated words |

use super::dictionary::{translated_count, BilingualDictionaries};
use super::ibm::AlignmentLinks;

pub const NUM_FEATURES: usize = 31;
const BLOCK: usize = 12;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "src_len",
    "tgt_len",
    "len_diff",
    "len_ratio",
    "src_translated_frac",
    "tgt_translated_frac",
    "fwd_linked",
    "fwd_linked_frac",
    "fwd_unlinked",
    "fwd_unlinked_frac",
    "fwd_fertility_1st",
    "fwd_fertility_2nd",
    "fwd_fertility_3rd",
    "fwd_fertility1_frac",
    "fwd_fertility2_frac",
    "fwd_fertility3plus_frac",
    "fwd_longest_linked_run",
    "fwd_longest_unlinked_run",
    "rev_linked",
    "rev_linked_frac",
    "rev_unlinked",
    "rev_unlinked_frac",
    "rev_fertility_1st",
    "rev_fertility_2nd",
    "rev_fertility_3rd",
    "rev_fertility1_frac",
    "rev_fertility2_frac",
    "rev_fertility3plus_frac",
    "rev_longest_linked_run",
    "rev_longest_unlinked_run",
    "alignment_log_prob",
];

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.0[i])
    }
}

fn longest_run(links: &[Option<usize>], linked: bool) -> usize {
    let mut best = 0;
    let mut run = 0;
    for l in links {
        if l.is_some() == linked {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// The 12 block features of one alignment; `cond_len` is the length of the
/// conditioning sentence.
pub fn alignment_block(links: &AlignmentLinks, cond_len: usize) -> [f64; BLOCK] {
    let generated = links.links.len();
    let linked = links.links.iter().filter(|l| l.is_some()).count();
    let unlinked = generated - linked;
    let frac = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };

    let mut fertility = vec![0usize; cond_len];
    for i in links.links.iter().flatten() {
        fertility[*i] += 1;
    }
    let mut sorted = fertility.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let top = |k: usize| sorted.get(k).copied().unwrap_or(0) as f64;
    let with = |pred: &dyn Fn(usize) -> bool| fertility.iter().filter(|&&f| pred(f)).count();

    [
        linked as f64,
        frac(linked, generated),
        unlinked as f64,
        frac(unlinked, generated),
        top(0),
        top(1),
        top(2),
        frac(with(&|f| f == 1), cond_len),
        frac(with(&|f| f == 2), cond_len),
        frac(with(&|f| f >= 3), cond_len),
        longest_run(&links.links, true) as f64,
        longest_run(&links.links, false) as f64,
    ]
}

/// Features of a sentence pair.
///
/// `links_fwd` aligns target words to source positions, `links_rev` source
/// words to target positions.
pub fn extract_features(
    src: &[u32],
    tgt: &[u32],
    links_fwd: &AlignmentLinks,
    links_rev: &AlignmentLinks,
    dicts: &BilingualDictionaries,
) -> FeatureVector {
    let (n, m) = (src.len(), tgt.len());
    let mut v = [0.0; NUM_FEATURES];
    v[0] = n as f64;
    v[1] = m as f64;
    v[2] = n.abs_diff(m) as f64;
    v[3] = if n.min(m) == 0 {
        0.0
    } else {
        n.max(m) as f64 / n.min(m) as f64
    };
    let frac = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
    v[4] = frac(translated_count(src, tgt, &dicts.fwd), n);
    v[5] = frac(translated_count(tgt, src, &dicts.rev), m);
    v[6..6 + BLOCK].copy_from_slice(&alignment_block(links_fwd, n));
    v[6 + BLOCK..6 + 2 * BLOCK].copy_from_slice(&alignment_block(links_rev, m));
    v[30] = links_fwd.log_prob + links_rev.log_prob;
    FeatureVector(v)
}
