//! Grapheme-to-grapheme respelling models for graphemic speech
//! recognition lexicons.
//!
//! The toolkit learns a joint-unit transducer that rewrites spellings
//! into phonetically consistent alternatives (e.g. `Kaity` -> `Katie`),
//! either from homophone clusters mined out of a phonetic lexicon or
//! from externally supplied respelling pairs. A position-tagged
//! character n-gram model scores spellings for homophone root selection,
//! and the pipeline renders per-name pronunciation variants as
//! word-boundary-tagged acoustic-model units for decoding lexicons.
//!
//! Data-parallel sections (EM expectation, batch alignment and variant
//! generation, count collection) run on rayon behind the default
//! `parallel` feature; `jobs = 1` or building without the feature takes
//! the sequential path, with bit-identical results.

pub mod align;
pub mod charlm;
pub mod config;
pub mod data;
pub mod decode;
pub mod grapheme;
pub mod homophone;
pub mod model;
pub mod ngram;
pub mod oracle;
mod par;
pub mod pipeline;
pub mod synth;
mod util;

pub use align::{AlignConfig, AlignError, AlignmentModel, EmReport, JointUnit, align_em,
    viterbi_align, viterbi_align_batch};
pub use charlm::{CharLm, CharLmError, WordScore};
pub use config::{ConfigError, MixMode, PipelineConfig};
pub use decode::{DecodeError, DecodeHypothesis, decode_topn};
pub use grapheme::{
    AmUnit, AmUnitSeq, GraphemeAlphabet, GraphemeError, Normalizer, PositionTag, TaggedGrapheme,
    Transliterator, WrittenForm, am_units_for, decompose, default_pronunciations, render_tagged,
    to_am_units,
};
pub use homophone::{
    ClusterCandidate, HomophoneCluster, HomophoneError, LexiconEntry, PhoneInventory, PhoneSeq,
    assign_roots, build_clusters, emit_pairs, read_lexicon, select_root,
};
pub use model::{G2gModel, ModelError};
pub use ngram::{NgramError, NgramModel};
pub use par::run_with_jobs;
pub use pipeline::{
    DecodingLexicon, HomTrainOutput, LexiconStats, LexiconVariantEntry, NamesFile, PipelineError,
    TrainArtifacts, VariantBudget, VariantSet, build_decoding_lexicon, generate_variants,
    read_names_file, read_pairs_file, read_words_file, train_g2g_from_pair_list,
    train_g2g_from_pairs, train_g2g_hom, write_lexicon,
};
