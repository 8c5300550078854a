//! Position-tagged character-level backoff LM.
//!
//! Words are decomposed into tagged graphemes (`i_B n t ... g_E`) and
//! modeled with the shared Witten-Bell n-gram engine, default order 10.
//! Normalized word scores (total log-probability divided by the number of
//! predicted events, end-of-word included) rank spellings by how closely
//! they follow the conventions seen in training; homophone root selection
//! is built on this.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::grapheme::{WrittenForm, decompose};
use crate::ngram::{NgramError, NgramModel};
use crate::util::{atomic_write, read_to_string_ctx};

pub const CHARLM_MAGIC: &str = "#g2g-charlm v1";

#[derive(Debug, Error)]
pub enum CharLmError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid n-gram order {0}, must be >= 1")]
    InvalidOrder(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format version mismatch: expected {expected:?}, found {found:?}")]
    FormatVersionMismatch { expected: String, found: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl From<NgramError> for CharLmError {
    fn from(e: NgramError) -> Self {
        match e {
            NgramError::EmptyCorpus => CharLmError::EmptyCorpus,
            NgramError::InvalidOrder(n) => CharLmError::InvalidOrder(n),
            NgramError::Parse { line, msg } => CharLmError::Parse { line, msg },
        }
    }
}

/// Score of one word under the LM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordScore {
    /// Natural-log probability of the tagged sequence plus the end event.
    pub total_logprob: f64,
    /// Number of predicted events (characters plus end-of-word).
    pub token_count: usize,
    /// `total_logprob / token_count`.
    pub normalized: f64,
}

impl fmt::Display for WordScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "total {:.6} over {} events, normalized {:.6}",
            self.total_logprob, self.token_count, self.normalized
        )
    }
}

#[derive(Debug, Clone)]
pub struct CharLm {
    model: NgramModel,
}

impl CharLm {
    pub const DEFAULT_ORDER: usize = 10;

    pub fn train(words: &[WrittenForm], order: usize, jobs: usize) -> Result<Self, CharLmError> {
        let sequences: Vec<Vec<String>> = words
            .iter()
            .map(|w| decompose(w).iter().map(|g| g.token()).collect())
            .collect();
        Ok(Self {
            model: NgramModel::train(&sequences, order, jobs)?,
        })
    }

    pub fn score(&self, w: &WrittenForm) -> WordScore {
        let tokens: Vec<String> = decompose(w).iter().map(|g| g.token()).collect();
        let (total_logprob, token_count) = self.model.score_sequence(&tokens);
        WordScore {
            total_logprob,
            token_count,
            normalized: total_logprob / token_count as f64,
        }
    }

    pub fn order(&self) -> usize {
        self.model.order()
    }

    pub fn vocab_len(&self) -> usize {
        self.model.vocab_len()
    }

    /// The underlying n-gram table, exposed for diagnostics and tests.
    pub fn ngram(&self) -> &NgramModel {
        &self.model
    }

    pub fn save(&self, path: &Path) -> Result<(), CharLmError> {
        let mut out = String::new();
        out.push_str(CHARLM_MAGIC);
        out.push('\n');
        out.push_str(&format!("order\t{}\n", self.model.order()));
        self.model.write_sections(&mut out);
        atomic_write(path, &out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CharLmError> {
        let text = read_to_string_ctx(path)?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, magic) = lines.next().ok_or(CharLmError::FormatVersionMismatch {
            expected: CHARLM_MAGIC.to_string(),
            found: "<empty file>".to_string(),
        })?;
        if magic.trim_end() != CHARLM_MAGIC {
            return Err(CharLmError::FormatVersionMismatch {
                expected: CHARLM_MAGIC.to_string(),
                found: magic.to_string(),
            });
        }
        let (ln, header) = lines.next().ok_or(CharLmError::Parse {
            line: 2,
            msg: "missing order header".into(),
        })?;
        let order: usize = header
            .strip_prefix("order\t")
            .and_then(|v| v.parse().ok())
            .ok_or(CharLmError::Parse {
                line: ln,
                msg: "expected order\\t<k>".into(),
            })?;
        let model = NgramModel::read_sections(&mut lines)?;
        if model.order() != order {
            return Err(CharLmError::Parse {
                line: ln,
                msg: format!(
                    "header order {} does not match {} n-gram sections",
                    order,
                    model.order()
                ),
            });
        }
        Ok(Self { model })
    }
}
