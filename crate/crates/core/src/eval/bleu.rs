use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and candidate n-gram total, summed over the corpus.
pub fn modified_precision_counts<T: Eq + Hash>(
    candidates: &[Vec<T>],
    references: &[Vec<T>],
    n: usize,
) -> (usize, usize) {
    let mut matched = 0;
    let mut total = 0;
    for (c, r) in candidates.iter().zip(references) {
        let rc = ngram_counts(r, n);
        for (g, k) in ngram_counts(c, n) {
            matched += k.min(rc.get(g).copied().unwrap_or(0));
            total += k;
        }
    }
    (matched, total)
}

/// Corpus-level BLEU with one reference per candidate and no smoothing.
///
/// The geometric mean of the modified n-gram precisions for `1..=max_n`
/// times the brevity penalty `exp(1 − r/c)` (1 when `c > r`). Zero when any
/// precision is zero.
pub fn bleu<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>], max_n: usize) -> Result<f64> {
    if candidates.len() != references.len() {
        return Err(Error::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() || max_n == 0 {
        return Err(Error::InvalidArgument("BLEU needs a non-empty corpus and max_n >= 1".into()));
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (matched, total) = modified_precision_counts(candidates, references, n);
        if matched == 0 {
            return Ok(0.0);
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    let c: usize = candidates.iter().map(Vec::len).sum();
    let r: usize = references.iter().map(Vec::len).sum();
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * (log_sum / max_n as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn identical_is_one() {
        let c = vec![toks("a b c d e"), toks("f g h i")];
        assert_eq!(bleu(&c, &c, 4).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(bleu(&[toks("a b c d")], &[toks("w x y z")], 4).unwrap(), 0.0);
    }

    #[test]
    fn clipped_unigrams() {
        // "the" occurs 3 times in the candidate but once in the reference
        let (c, r) = (vec![toks("the the the")], vec![toks("the cat")]);
        assert_eq!(modified_precision_counts(&c, &r, 1), (1, 3));
        assert_eq!(modified_precision_counts(&c, &r, 2), (0, 2));
        assert_eq!(bleu(&c, &r, 4).unwrap(), 0.0);
    }

    #[test]
    fn brevity_penalty() {
        // all precisions 1, c = 4, r = 8 → exp(1 − 2)
        let b = bleu(&[toks("a b c d")], &[toks("a b c d e f g h")], 4).unwrap();
        assert!((b - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            bleu(&[toks("a")], &[], 4),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
