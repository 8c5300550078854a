//! Pipeline configuration and the `key = value` config file format.

use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::align::AlignConfig;
use crate::util::read_to_string_ctx;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// How generated variants are combined with the default graphemic
/// pronunciations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixMode {
    /// Defaults first, transducer output fills the remaining budget.
    Mixed,
    /// Transducer output only (defaults are the fallback when it yields
    /// nothing).
    G2gOnly,
    /// Defaults only.
    DefaultsOnly,
}

impl MixMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MixMode::Mixed => "mixed",
            MixMode::G2gOnly => "g2g-only",
            MixMode::DefaultsOnly => "defaults-only",
        }
    }
}

impl FromStr for MixMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixed" => Ok(MixMode::Mixed),
            "g2g-only" => Ok(MixMode::G2gOnly),
            "defaults-only" => Ok(MixMode::DefaultsOnly),
            other => Err(format!(
                "unknown mode {other:?}, expected mixed | g2g-only | defaults-only"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub charlm_order: usize,
    pub graphone_order: usize,
    pub align: AlignConfig,
    /// Consecutive insertion units allowed during decoding.
    pub eps_chain_cap: usize,
    pub beam: usize,
    pub n_max: usize,
    pub mode: MixMode,
    pub emit_scores: bool,
    /// 1 = sequential, 0 = all cores, otherwise a thread count.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            charlm_order: crate::charlm::CharLm::DEFAULT_ORDER,
            graphone_order: crate::model::DEFAULT_GRAPHONE_ORDER,
            align: AlignConfig::default(),
            eps_chain_cap: crate::model::DEFAULT_EPS_CHAIN_CAP,
            beam: 500,
            n_max: 5,
            mode: MixMode::Mixed,
            emit_scores: false,
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    /// Applies one `key = value` setting. Unknown keys and malformed
    /// values are errors.
    pub fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |msg: String| ConfigError::Parse { line, msg };
        macro_rules! parse {
            ($ty:ty) => {
                value
                    .parse::<$ty>()
                    .map_err(|_| bad(format!("bad value {value:?} for {key}")))?
            };
        }
        match key {
            "charlm_order" => self.charlm_order = parse!(usize),
            "graphone_order" => self.graphone_order = parse!(usize),
            "cap_source" => self.align.max_source_seg = parse!(usize),
            "cap_target" => self.align.max_target_seg = parse!(usize),
            "em_max_iters" => self.align.max_iters = parse!(usize),
            "em_min_gain" => self.align.min_gain = parse!(f64),
            "prune_threshold" => self.align.prune_threshold = parse!(f64),
            "unit_count_prior" => self.align.unit_count_prior = parse!(f64),
            "eps_penalty" => self.align.eps_penalty = parse!(f64),
            "eps_chain_cap" => self.eps_chain_cap = parse!(usize),
            "beam" => self.beam = parse!(usize),
            "n_max" => self.n_max = parse!(usize),
            "mode" => self.mode = value.parse().map_err(&bad)?,
            "emit_scores" => self.emit_scores = parse!(bool),
            "jobs" => self.jobs = parse!(usize),
            other => return Err(bad(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Loads settings from a `key = value` file over the defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.merge_file(path)?;
        Ok(cfg)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = read_to_string_ctx(path)?;
        self.merge_text(&text)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Parse {
                line,
                msg: "expected key = value".into(),
            })?;
            self.apply(key.trim(), value.trim(), line)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut cfg = PipelineConfig::default();
        cfg.merge_text(
            "# comment\n\
             charlm_order = 4\n\
             cap_source=1\n\
             mode = g2g-only\n\
             em_min_gain = 1e-8\n",
        )
        .unwrap();
        assert_eq!(cfg.charlm_order, 4);
        assert_eq!(cfg.align.max_source_seg, 1);
        assert_eq!(cfg.mode, MixMode::G2gOnly);
        assert_eq!(cfg.align.min_gain, 1e-8);
    }

    #[test]
    fn unknown_key_is_loud() {
        let mut cfg = PipelineConfig::default();
        let err = cfg.merge_text("no_such_knob = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn bad_value_is_loud() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.merge_text("beam = fast\n").is_err());
        assert!(cfg.merge_text("mode = turbo\n").is_err());
    }
}
