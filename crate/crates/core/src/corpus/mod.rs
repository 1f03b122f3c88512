//! Text ingestion: tokenization, vocabularies, encoded corpora, negative
//! sampling, noise injection and candidate generation.

mod io;
mod sampling;
mod tokenize;
mod vocab;

pub use io::{
    encode_documents, load_documents, load_parallel, read_documents, read_lines, read_parallel,
    LoadReport, RawDocumentPair, RawParallel,
};
pub use sampling::{cartesian_candidates, inject_noise, noise_count, sample_negatives, NoisyTestSet};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

use crate::error::{Error, Result};

/// Longest sentence, in tokens, accepted by [`encode`].
pub const MAX_SENTENCE_LEN: usize = 80;

/// A sentence as vocabulary indices.
///
/// `ids` may carry right padding; only the first `length` entries are part
/// of the sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedSentence {
    pub ids: Vec<u32>,
    pub length: usize,
}

impl EncodedSentence {
    pub fn new(ids: Vec<u32>) -> Self {
        let length = ids.len();
        EncodedSentence { ids, length }
    }

    /// The unpadded token ids.
    pub fn tokens(&self) -> &[u32] {
        &self.ids[..self.length]
    }

    /// Copy right-padded with [`PAD`] to `width` ids.
    pub fn padded(&self, width: usize) -> Self {
        let mut ids = self.tokens().to_vec();
        if width > ids.len() {
            ids.resize(width, PAD);
        }
        EncodedSentence {
            ids,
            length: self.length,
        }
    }
}

/// Line-aligned sentence pairs; pair `k` is `(src[k], tgt[k])`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParallelCorpus {
    pub src: Vec<EncodedSentence>,
    pub tgt: Vec<EncodedSentence>,
}

impl ParallelCorpus {
    pub fn new(src: Vec<EncodedSentence>, tgt: Vec<EncodedSentence>) -> Result<Self> {
        if src.len() != tgt.len() {
            return Err(Error::Alignment {
                src_lines: src.len(),
                tgt_lines: tgt.len(),
            });
        }
        Ok(ParallelCorpus { src, tgt })
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&EncodedSentence, &EncodedSentence)> {
        self.src.iter().zip(&self.tgt)
    }

    /// Pairs `range` as a new corpus.
    pub fn slice(&self, range: std::ops::Range<usize>) -> ParallelCorpus {
        ParallelCorpus {
            src: self.src[range.clone()].to_vec(),
            tgt: self.tgt[range].to_vec(),
        }
    }

    /// The same pairs with the languages exchanged.
    pub fn reversed(&self) -> ParallelCorpus {
        ParallelCorpus {
            src: self.tgt.clone(),
            tgt: self.src.clone(),
        }
    }
}

/// One classification example: a sentence pair and whether it is a
/// translation pair (`label == 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingTriple<'a> {
    pub src: &'a EncodedSentence,
    pub tgt: &'a EncodedSentence,
    pub label: u8,
}

/// Sentences of two linked documents in different languages.
///
/// The `*_text` vectors hold the original sentence strings, index-aligned
/// with the encoded sentences.
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentPair {
    pub doc_id: String,
    pub src_sentences: Vec<EncodedSentence>,
    pub tgt_sentences: Vec<EncodedSentence>,
    pub src_text: Vec<String>,
    pub tgt_text: Vec<String>,
}

impl DocumentPair {
    /// Document without retained text; sentence strings are left empty.
    pub fn from_encoded(
        doc_id: impl Into<String>,
        src_sentences: Vec<EncodedSentence>,
        tgt_sentences: Vec<EncodedSentence>,
    ) -> Self {
        let src_text = vec![String::new(); src_sentences.len()];
        let tgt_text = vec![String::new(); tgt_sentences.len()];
        DocumentPair {
            doc_id: doc_id.into(),
            src_sentences,
            tgt_sentences,
            src_text,
            tgt_text,
        }
    }
}

/// Maps tokens to ids, sending unknown tokens to [`UNK`].
///
/// Fails on empty input and on sentences longer than [`MAX_SENTENCE_LEN`].
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Result<EncodedSentence> {
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    if tokens.len() > MAX_SENTENCE_LEN {
        return Err(Error::SentenceTooLong {
            len: tokens.len(),
            max: MAX_SENTENCE_LEN,
        });
    }
    let ids = tokens.iter().map(|t| vocab.id(t.as_ref())).collect();
    Ok(EncodedSentence::new(ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build(&[vec!["a".to_string()]], None)
    }

    #[test]
    fn encode_known_token() {
        let s = encode(&["a"], &vocab()).unwrap();
        assert_eq!(s.ids, vec![2]);
        assert_eq!(s.length, 1);
    }

    #[test]
    fn encode_oov_maps_to_unknown() {
        assert_eq!(encode(&["zzz"], &vocab()).unwrap().ids, vec![UNK]);
    }

    #[test]
    fn encode_rejects_81_tokens() {
        let toks = vec!["a"; 81];
        assert!(matches!(
            encode(&toks, &vocab()),
            Err(Error::SentenceTooLong { len: 81, max: 80 })
        ));
        assert_eq!(encode(&toks[..80], &vocab()).unwrap().length, 80);
    }

    #[test]
    fn encode_rejects_empty() {
        let toks: [&str; 0] = [];
        assert!(matches!(encode(&toks, &vocab()), Err(Error::EmptySentence)));
    }

    #[test]
    fn encode_after_tokenize_is_deterministic() {
        let v = Vocabulary::build(&[tokenize("the house is red .")], None);
        let a = encode(&tokenize("The house, the red house."), &v).unwrap();
        let b = encode(&tokenize("The house, the red house."), &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn padding_keeps_length() {
        let s = EncodedSentence::new(vec![4, 5]);
        let p = s.padded(6);
        assert_eq!(p.ids, vec![4, 5, 0, 0, 0, 0]);
        assert_eq!(p.tokens(), s.tokens());
    }
}
