//! The joint-sequence transducer: alignment-model unit inventory plus a
//! backoff n-gram over unit sequences, with a versioned text format.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::align::{AlignmentModel, JointUnit};
use crate::ngram::{BEGIN_TOKEN, END_TOKEN, LN_10, NgramError, NgramModel, UNK_TOKEN};
use crate::util::{atomic_write, read_to_string_ctx};

pub const MODEL_MAGIC: &str = "#g2g-model v1";

pub const DEFAULT_GRAPHONE_ORDER: usize = 6;
pub const DEFAULT_EPS_CHAIN_CAP: usize = 2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format version mismatch: expected {expected:?}, found {found:?}")]
    FormatVersionMismatch { expected: String, found: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl From<NgramError> for ModelError {
    fn from(e: NgramError) -> Self {
        match e {
            NgramError::Parse { line, msg } => ModelError::Parse { line, msg },
            other => ModelError::Parse {
                line: 0,
                msg: other.to_string(),
            },
        }
    }
}

/// A trained grapheme-to-grapheme model. Decoding walks the unit n-gram;
/// the unit index below maps input slices to candidate units from the LM
/// vocabulary.
#[derive(Debug, Clone)]
pub struct G2gModel {
    alignment: AlignmentModel,
    lm: NgramModel,
    eps_chain_cap: usize,
    /// source segment -> (LM token id, target segment), sorted by id.
    units_by_source: HashMap<String, Vec<(u32, String)>>,
    /// insertion units (empty source side).
    eps_units: Vec<(u32, String)>,
    source_alphabet: BTreeSet<char>,
    max_source_seg: usize,
}

impl G2gModel {
    pub fn new(alignment: AlignmentModel, lm: NgramModel, eps_chain_cap: usize) -> Self {
        let mut units_by_source: HashMap<String, Vec<(u32, String)>> = HashMap::new();
        let mut eps_units = Vec::new();
        let mut source_alphabet = BTreeSet::new();
        let mut max_source_seg = 1;
        for id in lm.predicted_ids() {
            let token = lm.token(id);
            if token == BEGIN_TOKEN || token == END_TOKEN || token == UNK_TOKEN {
                continue;
            }
            let Some(unit) = JointUnit::from_token(token) else {
                continue;
            };
            if unit.source.is_empty() {
                eps_units.push((id, unit.target));
            } else {
                source_alphabet.extend(unit.source.chars());
                max_source_seg = max_source_seg.max(unit.source.chars().count());
                units_by_source
                    .entry(unit.source)
                    .or_default()
                    .push((id, unit.target));
            }
        }
        for v in units_by_source.values_mut() {
            v.sort();
        }
        eps_units.sort();
        Self {
            alignment,
            lm,
            eps_chain_cap,
            units_by_source,
            eps_units,
            source_alphabet,
            max_source_seg,
        }
    }

    pub fn alignment(&self) -> &AlignmentModel {
        &self.alignment
    }

    pub fn lm(&self) -> &NgramModel {
        &self.lm
    }

    pub fn lm_order(&self) -> usize {
        self.lm.order()
    }

    pub fn eps_chain_cap(&self) -> usize {
        self.eps_chain_cap
    }

    /// Characters coverable by at least one decodable unit.
    pub fn source_alphabet(&self) -> &BTreeSet<char> {
        &self.source_alphabet
    }

    pub(crate) fn units_for_source(&self, seg: &str) -> Option<&[(u32, String)]> {
        self.units_by_source.get(seg).map(Vec::as_slice)
    }

    pub(crate) fn insertion_units(&self) -> &[(u32, String)] {
        &self.eps_units
    }

    pub(crate) fn max_source_seg_len(&self) -> usize {
        self.max_source_seg
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut out = String::new();
        out.push_str(MODEL_MAGIC);
        out.push('\n');
        let _ = writeln!(
            out,
            "caps\t{} {}",
            self.alignment.max_source_seg(),
            self.alignment.max_target_seg()
        );
        let _ = writeln!(out, "lm-order\t{}", self.lm.order());
        let _ = writeln!(out, "eps-chain-cap\t{}", self.eps_chain_cap);
        let _ = writeln!(out, "unit-count-prior\t{}", self.alignment.unit_count_prior());
        let _ = writeln!(out, "eps-penalty\t{}", self.alignment.eps_penalty());
        out.push_str("\\units\\\n");
        for (unit, p) in self.alignment.iter() {
            let _ = writeln!(out, "{}\t{}", unit.token(), p.ln() / LN_10);
        }
        out.push_str("\\lm\\\n");
        self.lm.write_sections(&mut out);
        atomic_write(path, &out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = read_to_string_ctx(path)?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, magic) = lines.next().ok_or(ModelError::FormatVersionMismatch {
            expected: MODEL_MAGIC.to_string(),
            found: "<empty file>".to_string(),
        })?;
        if magic.trim_end() != MODEL_MAGIC {
            return Err(ModelError::FormatVersionMismatch {
                expected: MODEL_MAGIC.to_string(),
                found: magic.to_string(),
            });
        }

        let parse_err = |line: usize, msg: &str| ModelError::Parse {
            line,
            msg: msg.to_string(),
        };

        let mut caps: Option<(usize, usize)> = None;
        let mut lm_order: Option<usize> = None;
        let mut eps_chain_cap: Option<usize> = None;
        let mut unit_count_prior: Option<f64> = None;
        let mut eps_penalty: Option<f64> = None;
        loop {
            let (ln, line) = lines
                .next()
                .ok_or(parse_err(0, "missing \\units\\ section"))?;
            let line = line.trim_end();
            if line == "\\units\\" {
                break;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or(parse_err(ln, "expected key<TAB>value header line"))?;
            match key {
                "caps" => {
                    let (s, t) = value
                        .split_once(' ')
                        .ok_or(parse_err(ln, "caps expects two integers"))?;
                    caps = Some((
                        s.parse().map_err(|_| parse_err(ln, "bad source cap"))?,
                        t.parse().map_err(|_| parse_err(ln, "bad target cap"))?,
                    ));
                }
                "lm-order" => {
                    lm_order = Some(value.parse().map_err(|_| parse_err(ln, "bad lm-order"))?)
                }
                "eps-chain-cap" => {
                    eps_chain_cap =
                        Some(value.parse().map_err(|_| parse_err(ln, "bad eps-chain-cap"))?)
                }
                "unit-count-prior" => {
                    unit_count_prior =
                        Some(value.parse().map_err(|_| parse_err(ln, "bad unit-count-prior"))?)
                }
                "eps-penalty" => {
                    eps_penalty =
                        Some(value.parse().map_err(|_| parse_err(ln, "bad eps-penalty"))?)
                }
                other => return Err(parse_err(ln, &format!("unknown header key {other:?}"))),
            }
        }
        let (cap_s, cap_t) = caps.ok_or(parse_err(0, "missing caps header"))?;
        let lm_order = lm_order.ok_or(parse_err(0, "missing lm-order header"))?;
        let eps_chain_cap = eps_chain_cap.ok_or(parse_err(0, "missing eps-chain-cap header"))?;
        let unit_count_prior =
            unit_count_prior.ok_or(parse_err(0, "missing unit-count-prior header"))?;
        let eps_penalty = eps_penalty.ok_or(parse_err(0, "missing eps-penalty header"))?;

        let mut entries: Vec<(JointUnit, f64)> = Vec::new();
        let mut saw_lm = false;
        for (ln, line) in lines.by_ref() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if line == "\\lm\\" {
                saw_lm = true;
                break;
            }
            let (token, lp) = line
                .split_once('\t')
                .ok_or(parse_err(ln, "expected unit<TAB>logprob"))?;
            let unit = JointUnit::from_token(token)
                .ok_or(parse_err(ln, "malformed joint unit token"))?;
            let lp10: f64 = lp.parse().map_err(|_| parse_err(ln, "bad unit logprob"))?;
            if !lp10.is_finite() {
                return Err(parse_err(ln, "non-finite unit logprob"));
            }
            entries.push((unit, (lp10 * LN_10).exp()));
        }
        if !saw_lm {
            return Err(parse_err(0, "missing \\lm\\ section (truncated file)"));
        }
        let alignment =
            AlignmentModel::from_entries(entries, cap_s, cap_t, unit_count_prior, eps_penalty);
        let lm = NgramModel::read_sections(&mut lines)?;
        if lm.order() != lm_order {
            return Err(parse_err(
                0,
                &format!(
                    "lm-order header {} does not match {} n-gram sections",
                    lm_order,
                    lm.order()
                ),
            ));
        }
        Ok(Self::new(alignment, lm, eps_chain_cap))
    }
}
