//! Homophone clustering over a phonetic lexicon and root selection by
//! normalized character-LM score.
//!
//! Entries sharing an identical phone sequence form a cluster candidate;
//! candidates with at least two distinct written forms become clusters.
//! The root is the member with the highest normalized score (ties: higher
//! raw total, then lexicographically smallest form). Every member maps to
//! the root, including the root itself, giving one training pair per
//! member.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::charlm::CharLm;
use crate::grapheme::{GraphemeError, Normalizer, WrittenForm};
use crate::par;
use crate::util::{atomic_write, read_to_string_ctx};

const DEFAULT_PHONES: &str = include_str!("../data/phones.txt");

#[derive(Debug, Error)]
pub enum HomophoneError {
    #[error("invalid phone {symbol:?} at line {line}")]
    InvalidPhone { symbol: String, line: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Grapheme {
        line: usize,
        source: GraphemeError,
    },
    #[error("cluster needs at least two distinct members")]
    TooFewMembers,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The set of phone symbols a lexicon may use, one symbol per line
/// (`#` starts a comment).
#[derive(Debug, Clone)]
pub struct PhoneInventory {
    symbols: BTreeSet<String>,
}

impl PhoneInventory {
    pub fn from_text(text: &str) -> Self {
        let symbols = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        Self { symbols }
    }

    pub fn from_file(path: &Path) -> Result<Self, HomophoneError> {
        Ok(Self::from_text(&read_to_string_ctx(path)?))
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.symbols.contains(symbol)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl Default for PhoneInventory {
    fn default() -> Self {
        Self::from_text(DEFAULT_PHONES)
    }
}

/// A space-rendered phone sequence used as a cluster key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhoneSeq(Vec<String>);

impl PhoneSeq {
    pub fn parse(
        text: &str,
        inventory: &PhoneInventory,
        line: usize,
    ) -> Result<Self, HomophoneError> {
        let phones: Vec<String> = text.split_whitespace().map(String::from).collect();
        if phones.is_empty() {
            return Err(HomophoneError::Parse {
                line,
                msg: "empty phone sequence".into(),
            });
        }
        for p in &phones {
            if !inventory.contains(p) {
                return Err(HomophoneError::InvalidPhone {
                    symbol: p.clone(),
                    line,
                });
            }
        }
        Ok(Self(phones))
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for PhoneSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub written: WrittenForm,
    pub phones: PhoneSeq,
}

/// Reads a phonetic lexicon: one `written<TAB>phone phone ...` entry per
/// line, `#` comments and blank lines skipped.
pub fn read_lexicon(
    path: &Path,
    inventory: &PhoneInventory,
    normalizer: &Normalizer,
) -> Result<Vec<LexiconEntry>, HomophoneError> {
    parse_lexicon(&read_to_string_ctx(path)?, inventory, normalizer)
}

pub fn parse_lexicon(
    text: &str,
    inventory: &PhoneInventory,
    normalizer: &Normalizer,
) -> Result<Vec<LexiconEntry>, HomophoneError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (written, phones) = trimmed.split_once('\t').ok_or(HomophoneError::Parse {
            line,
            msg: "expected written<TAB>phones".into(),
        })?;
        let written = normalizer
            .normalize(written)
            .map_err(|source| HomophoneError::Grapheme { line, source })?;
        let phones = PhoneSeq::parse(phones, inventory, line)?;
        entries.push(LexiconEntry { written, phones });
    }
    Ok(entries)
}

/// A phone sequence with at least two distinct written forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterCandidate {
    pub key: PhoneSeq,
    pub members: BTreeSet<WrittenForm>,
}

/// A candidate with its selected root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomophoneCluster {
    pub key: PhoneSeq,
    pub members: BTreeSet<WrittenForm>,
    pub root: WrittenForm,
}

/// Groups entries by exact phone sequence. Duplicate (written, phones)
/// pairs collapse; a word with several pronunciations may appear in
/// several clusters. Output is sorted by key.
pub fn build_clusters(entries: &[LexiconEntry]) -> Vec<ClusterCandidate> {
    let mut groups: BTreeMap<&PhoneSeq, BTreeSet<&WrittenForm>> = BTreeMap::new();
    for e in entries {
        groups.entry(&e.phones).or_default().insert(&e.written);
    }
    groups
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(key, members)| ClusterCandidate {
            key: key.clone(),
            members: members.into_iter().cloned().collect(),
        })
        .collect()
}

/// The member with the highest normalized LM score. Ties break toward
/// the higher raw total, then the lexicographically smallest form;
/// iteration over the sorted member set makes the result independent of
/// input order.
pub fn select_root<'a>(
    members: &'a BTreeSet<WrittenForm>,
    lm: &CharLm,
) -> Result<&'a WrittenForm, HomophoneError> {
    if members.len() < 2 {
        return Err(HomophoneError::TooFewMembers);
    }
    let mut best: Option<(&WrittenForm, f64, f64)> = None;
    for m in members {
        let s = lm.score(m);
        let better = match best {
            None => true,
            Some((_, norm, total)) => {
                s.normalized > norm || (s.normalized == norm && s.total_logprob > total)
            }
        };
        if better {
            best = Some((m, s.normalized, s.total_logprob));
        }
    }
    Ok(best.expect("members is non-empty").0)
}

/// Scores every candidate's members and attaches roots; parallel over
/// clusters.
pub fn assign_roots(
    candidates: Vec<ClusterCandidate>,
    lm: &CharLm,
    jobs: usize,
) -> Result<Vec<HomophoneCluster>, HomophoneError> {
    let results = par::map_ordered(&candidates, jobs, |cand| {
        select_root(&cand.members, lm).map(|root| HomophoneCluster {
            key: cand.key.clone(),
            members: cand.members.clone(),
            root: root.clone(),
        })
    });
    results.into_iter().collect()
}

/// One (member, root) pair per member per cluster, identity pair
/// included; globally deduplicated and sorted.
pub fn emit_pairs(clusters: &[HomophoneCluster]) -> Vec<(WrittenForm, WrittenForm)> {
    let mut pairs: Vec<(WrittenForm, WrittenForm)> = clusters
        .iter()
        .flat_map(|c| {
            c.members
                .iter()
                .map(|m| (m.clone(), c.root.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    pairs.sort();
    pairs.dedup();
    pairs
}

/// Writes `key-phones<TAB>root<TAB>member1,member2,...` per cluster.
pub fn write_clusters(path: &Path, clusters: &[HomophoneCluster]) -> Result<(), HomophoneError> {
    let mut out = String::new();
    for c in clusters {
        let members: Vec<&str> = c.members.iter().map(WrittenForm::as_str).collect();
        out.push_str(&format!("{}\t{}\t{}\n", c.key, c.root, members.join(",")));
    }
    atomic_write(path, &out)?;
    Ok(())
}

/// Writes `source<TAB>target` per pair.
pub fn write_pairs(path: &Path, pairs: &[(WrittenForm, WrittenForm)]) -> Result<(), HomophoneError> {
    let mut out = String::new();
    for (s, t) in pairs {
        out.push_str(&format!("{s}\t{t}\n"));
    }
    atomic_write(path, &out)?;
    Ok(())
}
