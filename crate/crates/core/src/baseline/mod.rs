//! Feature-based extraction scorer.
//!
//! Word alignments come from IBM Model 1 and Model 2 trained by EM in both
//! directions. The lexical tables yield bilingual dictionaries that drive
//! the candidate filters, and a maximum-entropy classifier scores pairs from
//! length, dictionary and alignment features.

mod dictionary;
mod features;
mod ibm;
pub mod io;
mod maxent;
mod model;

pub use dictionary::{
    infer_dictionary, length_ratio_filter, translated_count, word_overlap_filter,
    BilingualDictionaries, CandidateFilter, Dictionary, DICT_THRESHOLD,
};
pub use features::{alignment_block, extract_features, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
pub use ibm::{
    train_ibm1, train_ibm2, viterbi_align, ATable, AlignmentLinks, Ibm1, Ibm2, TTable, NULL_FLOOR,
    NULL_SOURCE, PRUNE_FLOOR,
};
pub use maxent::{score_maxent, train_maxent, MaxEntConfig, MaxEntModel};
pub use model::{
    train_baseline, train_tables, BaselineConfig, BaselineModel, DirectionalTables, BASELINE_FORMAT,
};
