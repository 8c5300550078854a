//! Bundled data files, embedded for tests and defaults. The same files
//! live under `data/` for command-line use.

/// English word corpus (common words plus given names).
pub const WORDLIST: &str = include_str!("../data/wordlist.txt");

/// 100 given names for lexicon-building runs.
pub const NAMES100: &str = include_str!("../data/names100.txt");

/// Rule-generated synthetic homophone lexicon (200 clusters, 600 words);
/// see [`crate::synth`].
pub const SYNTHETIC_LEXICON: &str = include_str!("../data/synthetic_homophones.tsv");

/// Default grapheme alphabet file.
pub const ALPHABET: &str = include_str!("../data/alphabet.txt");

/// Default transliteration table.
pub const TRANSLIT: &str = include_str!("../data/translit.tsv");

/// Default X-SAMPA phone inventory.
pub const PHONES: &str = include_str!("../data/phones.txt");
