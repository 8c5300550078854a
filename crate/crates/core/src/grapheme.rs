//! Text normalization, grapheme decomposition, position tagging, and the
//! mapping from tagged graphemes to acoustic-model output units.
//!
//! A word enters the toolkit as a [`WrittenForm`]: trimmed, transliterated
//! to the configured alphabet, casing preserved. `decompose` splits it into
//! per-character [`TaggedGrapheme`]s carrying `B`/`E`/`S` position tags
//! (word-initial, word-final, singleton), which render as `i_B n ... g_E`.
//! `to_am_units` collapses the three boundary tags onto the shared `_WB`
//! acoustic-model unit, e.g. `i_WB n ... g_WB`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

const DEFAULT_ALPHABET: &str = include_str!("../data/alphabet.txt");
const DEFAULT_TRANSLIT: &str = include_str!("../data/translit.tsv");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphemeError {
    #[error("empty input")]
    EmptyInput,
    #[error("unsupported character {ch:?} at position {pos}")]
    UnsupportedCharacter { ch: char, pos: usize },
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("invalid transliteration table: {0}")]
    InvalidTransliteration(String),
    #[error("io error: {0}")]
    Io(String),
}

/// The set of symbols a [`WrittenForm`] may contain.
///
/// Loaded from a UTF-8 file with one symbol per line (`#` starts a
/// comment). Whitespace, `_`, and `|` are reserved and rejected.
#[derive(Debug, Clone)]
pub struct GraphemeAlphabet {
    symbols: BTreeSet<char>,
}

impl GraphemeAlphabet {
    pub fn from_text(text: &str) -> Result<Self, GraphemeError> {
        let mut symbols = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut chars = line.chars();
            let ch = chars.next().expect("non-empty line");
            if chars.next().is_some() {
                return Err(GraphemeError::InvalidAlphabet(format!(
                    "line {}: expected a single symbol, got {:?}",
                    idx + 1,
                    line
                )));
            }
            if ch.is_whitespace() || ch == '_' || ch == '|' {
                return Err(GraphemeError::InvalidAlphabet(format!(
                    "line {}: symbol {:?} is reserved",
                    idx + 1,
                    ch
                )));
            }
            symbols.insert(ch);
        }
        if symbols.is_empty() {
            return Err(GraphemeError::InvalidAlphabet("no symbols".into()));
        }
        Ok(Self { symbols })
    }

    pub fn from_file(path: &Path) -> Result<Self, GraphemeError> {
        let text = fs::read_to_string(path)
            .map_err(|e| GraphemeError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn contains(&self, ch: char) -> bool {
        self.symbols.contains(&ch)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl Default for GraphemeAlphabet {
    fn default() -> Self {
        Self::from_text(DEFAULT_ALPHABET).expect("bundled alphabet is valid")
    }
}

/// Character-to-ASCII expansion table, `source<TAB>replacement` per line.
#[derive(Debug, Clone)]
pub struct Transliterator {
    table: BTreeMap<char, String>,
}

impl Transliterator {
    pub fn from_text(text: &str) -> Result<Self, GraphemeError> {
        let mut table = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, repl) = line.split_once('\t').ok_or_else(|| {
                GraphemeError::InvalidTransliteration(format!(
                    "line {}: expected source<TAB>replacement",
                    idx + 1
                ))
            })?;
            let mut chars = src.chars();
            let ch = chars.next().ok_or_else(|| {
                GraphemeError::InvalidTransliteration(format!("line {}: empty source", idx + 1))
            })?;
            if chars.next().is_some() {
                return Err(GraphemeError::InvalidTransliteration(format!(
                    "line {}: source must be a single character",
                    idx + 1
                )));
            }
            if repl.is_empty() {
                return Err(GraphemeError::InvalidTransliteration(format!(
                    "line {}: empty replacement",
                    idx + 1
                )));
            }
            table.insert(ch, repl.to_string());
        }
        Ok(Self { table })
    }

    pub fn from_file(path: &Path) -> Result<Self, GraphemeError> {
        let text = fs::read_to_string(path)
            .map_err(|e| GraphemeError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn get(&self, ch: char) -> Option<&str> {
        self.table.get(&ch).map(String::as_str)
    }
}

impl Default for Transliterator {
    fn default() -> Self {
        Self::from_text(DEFAULT_TRANSLIT).expect("bundled table is valid")
    }
}

/// Alphabet plus transliteration table; the entry point for turning raw
/// text into [`WrittenForm`]s.
#[derive(Debug, Clone)]
pub struct Normalizer {
    alphabet: GraphemeAlphabet,
    translit: Transliterator,
}

impl Normalizer {
    /// Every transliteration replacement must spell out in the alphabet,
    /// otherwise normalization could emit invalid forms.
    pub fn new(
        alphabet: GraphemeAlphabet,
        translit: Transliterator,
    ) -> Result<Self, GraphemeError> {
        for (src, repl) in &translit.table {
            for ch in repl.chars() {
                if !alphabet.contains(ch) {
                    return Err(GraphemeError::InvalidTransliteration(format!(
                        "replacement for {:?} contains {:?} which is not in the alphabet",
                        src, ch
                    )));
                }
            }
        }
        Ok(Self { alphabet, translit })
    }

    pub fn alphabet(&self) -> &GraphemeAlphabet {
        &self.alphabet
    }

    /// Trims, transliterates, and validates `raw`. Casing is preserved;
    /// characters that are neither in the alphabet nor in the table are
    /// errors, never dropped.
    pub fn normalize(&self, raw: &str) -> Result<WrittenForm, GraphemeError> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(GraphemeError::EmptyInput);
        }
        let mut out = String::with_capacity(trimmed.len());
        for (pos, ch) in trimmed.chars().enumerate() {
            if self.alphabet.contains(ch) {
                out.push(ch);
            } else if let Some(repl) = self.translit.get(ch) {
                out.push_str(repl);
            } else {
                return Err(GraphemeError::UnsupportedCharacter { ch, pos });
            }
        }
        Ok(WrittenForm(out))
    }
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::new(GraphemeAlphabet::default(), Transliterator::default())
            .expect("bundled data is consistent")
    }
}

/// A normalized surface word: non-empty, no whitespace, every character
/// in the grapheme alphabet it was validated against.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WrittenForm(String);

impl WrittenForm {
    pub fn new(text: impl Into<String>, alphabet: &GraphemeAlphabet) -> Result<Self, GraphemeError> {
        let text = text.into();
        if text.is_empty() {
            return Err(GraphemeError::EmptyInput);
        }
        for (pos, ch) in text.chars().enumerate() {
            if !alphabet.contains(ch) {
                return Err(GraphemeError::UnsupportedCharacter { ch, pos });
            }
        }
        Ok(Self(text))
    }

    /// Constructor for strings whose characters are already known to be
    /// alphabet-valid (e.g. concatenations of existing forms).
    pub(crate) fn from_trusted(text: String) -> Self {
        debug_assert!(!text.is_empty());
        Self(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }

    /// Lowercased copy, or `None` when a lowercased character falls
    /// outside the alphabet.
    pub fn lowercased(&self, alphabet: &GraphemeAlphabet) -> Option<WrittenForm> {
        let lowered: String = self.0.chars().flat_map(char::to_lowercase).collect();
        WrittenForm::new(lowered, alphabet).ok()
    }
}

impl fmt::Display for WrittenForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Position of a grapheme within its word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PositionTag {
    Begin,
    Interior,
    End,
    Singleton,
}

impl PositionTag {
    pub fn suffix(self) -> Option<&'static str> {
        match self {
            PositionTag::Begin => Some("B"),
            PositionTag::End => Some("E"),
            PositionTag::Singleton => Some("S"),
            PositionTag::Interior => None,
        }
    }

    pub fn is_boundary(self) -> bool {
        !matches!(self, PositionTag::Interior)
    }
}

/// A grapheme with its position tag; renders as `i_B`, `g_E`, `a_S`, or
/// bare `n` for interior positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaggedGrapheme {
    pub symbol: char,
    pub tag: PositionTag,
}

impl TaggedGrapheme {
    pub fn token(&self) -> String {
        match self.tag.suffix() {
            Some(s) => format!("{}_{s}", self.symbol),
            None => self.symbol.to_string(),
        }
    }
}

impl fmt::Display for TaggedGrapheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// Splits a written form into tagged graphemes: `S` for a singleton,
/// otherwise exactly one `B` and one `E` around interior characters.
pub fn decompose(w: &WrittenForm) -> Vec<TaggedGrapheme> {
    let chars: Vec<char> = w.as_str().chars().collect();
    let last = chars.len() - 1;
    chars
        .iter()
        .enumerate()
        .map(|(i, &symbol)| {
            let tag = if chars.len() == 1 {
                PositionTag::Singleton
            } else if i == 0 {
                PositionTag::Begin
            } else if i == last {
                PositionTag::End
            } else {
                PositionTag::Interior
            };
            TaggedGrapheme { symbol, tag }
        })
        .collect()
}

pub fn render_tagged(seq: &[TaggedGrapheme]) -> String {
    seq.iter()
        .map(TaggedGrapheme::token)
        .collect::<Vec<_>>()
        .join(" ")
}

/// An acoustic-model output unit; `boundary` renders as the `_WB` suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AmUnit {
    pub symbol: char,
    pub boundary: bool,
}

impl fmt::Display for AmUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.boundary {
            write!(f, "{}_WB", self.symbol)
        } else {
            write!(f, "{}", self.symbol)
        }
    }
}

/// A space-rendered sequence of acoustic-model units, e.g. `K_WB a t i e_WB`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AmUnitSeq(pub Vec<AmUnit>);

impl fmt::Display for AmUnitSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, u) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{u}")?;
        }
        Ok(())
    }
}

/// Maps tagged graphemes to AM units: `B`/`E`/`S` become boundary units,
/// interior graphemes stay plain.
pub fn to_am_units(seq: &[TaggedGrapheme]) -> AmUnitSeq {
    AmUnitSeq(
        seq.iter()
            .map(|g| AmUnit {
                symbol: g.symbol,
                boundary: g.tag.is_boundary(),
            })
            .collect(),
    )
}

/// Decompose-and-map in one step.
pub fn am_units_for(w: &WrittenForm) -> AmUnitSeq {
    to_am_units(&decompose(w))
}

/// The default graphemic pronunciations of a name: the decomposed
/// original, then the decomposed lowercased form unless it is identical
/// (or cannot be spelled in the alphabet).
pub fn default_pronunciations(w: &WrittenForm, alphabet: &GraphemeAlphabet) -> Vec<AmUnitSeq> {
    let mut out = vec![am_units_for(w)];
    if let Some(lowered) = w.lowercased(alphabet).filter(|l| l != w) {
        out.push(am_units_for(&lowered));
    }
    out
}
