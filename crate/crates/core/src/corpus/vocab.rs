use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Bijection between tokens and dense indices.
///
/// Index 0 is padding and index 1 the unknown token; corpus tokens start
/// at 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index_of: HashMap<String, u32>,
}

impl Vocabulary {
    /// Ranks tokens by descending frequency, ties broken lexicographically,
    /// keeping at most `max_size` corpus tokens.
    pub fn build<S: AsRef<str>>(sentences: &[Vec<S>], max_size: Option<usize>) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in sentences.iter().flatten() {
            let tok = tok.as_ref();
            if tok == PAD_TOKEN || tok == UNK_TOKEN {
                continue;
            }
            *counts.entry(tok).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if let Some(max) = max_size {
            ranked.truncate(max);
        }
        Self::from_corpus_tokens(ranked.into_iter().map(|(t, _)| t.to_string()))
    }

    fn from_corpus_tokens(corpus_tokens: impl IntoIterator<Item = String>) -> Self {
        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        tokens.extend(corpus_tokens);
        let index_of = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, index_of }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `token`, or [`UNK`] when absent.
    pub fn id(&self, token: &str) -> u32 {
        self.index_of.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index_of.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Writes corpus tokens one per line; line `k` holds index `k + 2`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for tok in &self.tokens[2..] {
            writeln!(out, "{tok}").expect("write to Vec");
        }
        crate::nncore::checkpoint::write_atomic(path, &out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut seen = std::collections::HashSet::new();
        let mut corpus_tokens = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() || line == PAD_TOKEN || line == UNK_TOKEN {
                return Err(Error::Parse(format!(
                    "{}:{}: invalid vocabulary entry {line:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            if !seen.insert(line) {
                return Err(Error::Parse(format!(
                    "{}:{}: duplicate token {line:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            corpus_tokens.push(line.to_string());
        }
        Ok(Self::from_corpus_tokens(corpus_tokens))
    }
}
