use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{encode, tokenize, DocumentPair, EncodedSentence, ParallelCorpus, Vocabulary, MAX_SENTENCE_LEN};
use crate::error::{Error, Result};

/// Counts from reading a line-aligned corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub kept: usize,
    pub dropped_empty: usize,
    pub dropped_too_long: usize,
}

/// A tokenized line-aligned corpus whose pairs all satisfy the length limit.
#[derive(Clone, Debug, Default)]
pub struct RawParallel {
    pub src: Vec<Vec<String>>,
    pub tgt: Vec<Vec<String>>,
    pub report: LoadReport,
}

impl RawParallel {
    /// Tokenizes aligned lines, dropping pairs where either side is empty or
    /// longer than [`MAX_SENTENCE_LEN`].
    pub fn from_lines<S: AsRef<str>>(src_lines: &[S], tgt_lines: &[S]) -> Result<Self> {
        if src_lines.len() != tgt_lines.len() {
            return Err(Error::Alignment {
                src_lines: src_lines.len(),
                tgt_lines: tgt_lines.len(),
            });
        }
        let mut raw = RawParallel::default();
        raw.report.lines = src_lines.len();
        for (lineno, (s, t)) in src_lines.iter().zip(tgt_lines).enumerate() {
            let s = tokenize(s.as_ref());
            let t = tokenize(t.as_ref());
            if s.is_empty() || t.is_empty() {
                raw.report.dropped_empty += 1;
                continue;
            }
            if s.len() > MAX_SENTENCE_LEN || t.len() > MAX_SENTENCE_LEN {
                warn!(
                    "line {}: dropping pair of {}/{} tokens (limit {MAX_SENTENCE_LEN})",
                    lineno + 1,
                    s.len(),
                    t.len()
                );
                raw.report.dropped_too_long += 1;
                continue;
            }
            raw.src.push(s);
            raw.tgt.push(t);
        }
        raw.report.kept = raw.src.len();
        Ok(raw)
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn encode(&self, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<ParallelCorpus> {
        let src = encode_all(&self.src, src_vocab)?;
        let tgt = encode_all(&self.tgt, tgt_vocab)?;
        ParallelCorpus::new(src, tgt)
    }
}

fn encode_all(sentences: &[Vec<String>], vocab: &Vocabulary) -> Result<Vec<EncodedSentence>> {
    sentences.iter().map(|s| encode(s, vocab)).collect()
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Reads and tokenizes two line-aligned files.
pub fn read_parallel(src_path: &Path, tgt_path: &Path) -> Result<RawParallel> {
    let src = read_lines(src_path)?;
    let tgt = read_lines(tgt_path)?;
    RawParallel::from_lines(&src, &tgt)
}

/// Reads two line-aligned files and encodes them with the given vocabularies.
pub fn load_parallel(
    src_path: &Path,
    tgt_path: &Path,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
) -> Result<(ParallelCorpus, LoadReport)> {
    let raw = read_parallel(src_path, tgt_path)?;
    let corpus = raw.encode(src_vocab, tgt_vocab)?;
    Ok((corpus, raw.report))
}

/// One line of a document-pair JSON-lines file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDocumentPair {
    pub doc_id: String,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
}

pub fn read_documents(path: &Path) -> Result<Vec<RawDocumentPair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocumentPair = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Encodes raw documents. Sentences that fail to encode (empty, too long) are
/// skipped; documents left without sentences on either side are dropped.
pub fn encode_documents(
    raw: &[RawDocumentPair],
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
) -> Vec<DocumentPair> {
    let side = |sentences: &[String], vocab: &Vocabulary| {
        let mut encoded = Vec::new();
        let mut text = Vec::new();
        for s in sentences {
            if let Ok(e) = encode(&tokenize(s), vocab) {
                encoded.push(e);
                text.push(s.clone());
            }
        }
        (encoded, text)
    };
    raw.iter()
        .filter_map(|doc| {
            let (src_sentences, src_text) = side(&doc.src, src_vocab);
            let (tgt_sentences, tgt_text) = side(&doc.tgt, tgt_vocab);
            if src_sentences.is_empty() || tgt_sentences.is_empty() {
                warn!("document {}: no usable sentences on one side, skipped", doc.doc_id);
                return None;
            }
            Some(DocumentPair {
                doc_id: doc.doc_id.clone(),
                src_sentences,
                tgt_sentences,
                src_text,
                tgt_text,
            })
        })
        .collect()
}

pub fn load_documents(
    path: &Path,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
) -> Result<Vec<DocumentPair>> {
    Ok(encode_documents(&read_documents(path)?, src_vocab, tgt_vocab))
}
