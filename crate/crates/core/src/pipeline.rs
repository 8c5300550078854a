//! End-to-end orchestration: training-pair construction (homophone path
//! or external pairs), transducer training, and decoding-lexicon
//! generation under a per-name variant budget.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::align::{AlignError, EmReport, JointUnit, align_em, viterbi_align_batch};
use crate::charlm::{CharLm, CharLmError};
use crate::config::{MixMode, PipelineConfig};
use crate::decode::decode_topn;
use crate::grapheme::{AmUnitSeq, Normalizer, WrittenForm, am_units_for, default_pronunciations};
use crate::homophone::{
    HomophoneError, PhoneInventory, assign_roots, build_clusters, emit_pairs, read_lexicon,
    write_clusters, write_pairs,
};
use crate::model::{G2gModel, ModelError};
use crate::ngram::{NgramError, NgramModel};
use crate::par;
use crate::util::{atomic_write, read_to_string_ctx};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    CharLm(#[from] CharLmError),
    #[error(transparent)]
    Homophone(#[from] HomophoneError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl From<NgramError> for PipelineError {
    fn from(e: NgramError) -> Self {
        match e {
            NgramError::EmptyCorpus => PipelineError::EmptyInput("n-gram corpus".into()),
            NgramError::InvalidOrder(n) => {
                PipelineError::InvalidConfig(format!("n-gram order {n} must be >= 1"))
            }
            NgramError::Parse { line, msg } => PipelineError::Parse { line, msg },
        }
    }
}

/// Maximum number of pronunciation variants per name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariantBudget(usize);

impl VariantBudget {
    pub fn new(n_max: usize) -> Result<Self, PipelineError> {
        if n_max < 1 {
            return Err(PipelineError::InvalidConfig(
                "variant budget must be >= 1".into(),
            ));
        }
        Ok(Self(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }
}

/// Reads a one-word-per-line corpus file; every line must normalize.
pub fn read_words_file(
    path: &Path,
    normalizer: &Normalizer,
) -> Result<Vec<WrittenForm>, PipelineError> {
    let text = read_to_string_ctx(path)?;
    let mut words = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        for token in trimmed.split_whitespace() {
            let w = normalizer.normalize(token).map_err(|e| PipelineError::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
            words.push(w);
        }
    }
    if words.is_empty() {
        return Err(PipelineError::EmptyInput(path.display().to_string()));
    }
    Ok(words)
}

/// Reads a `source<TAB>target` pair file.
pub fn read_pairs_file(
    path: &Path,
    normalizer: &Normalizer,
) -> Result<Vec<(WrittenForm, WrittenForm)>, PipelineError> {
    let text = read_to_string_ctx(path)?;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (s, t) = trimmed.split_once('\t').ok_or(PipelineError::Parse {
            line,
            msg: "expected source<TAB>target".into(),
        })?;
        let s = normalizer.normalize(s).map_err(|e| PipelineError::Parse {
            line,
            msg: e.to_string(),
        })?;
        let t = normalizer.normalize(t).map_err(|e| PipelineError::Parse {
            line,
            msg: e.to_string(),
        })?;
        pairs.push((s, t));
    }
    Ok(pairs)
}

/// Names file: one name per line. Lines that fail normalization are
/// skipped and reported, not fatal.
pub struct NamesFile {
    pub names: Vec<WrittenForm>,
    pub skipped: Vec<(usize, String)>,
}

pub fn read_names_file(path: &Path, normalizer: &Normalizer) -> Result<NamesFile, PipelineError> {
    let text = read_to_string_ctx(path)?;
    let mut names = Vec::new();
    let mut skipped = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match normalizer.normalize(trimmed) {
            Ok(w) => names.push(w),
            Err(e) => skipped.push((idx + 1, e.to_string())),
        }
    }
    Ok(NamesFile { names, skipped })
}

/// Trains the transducer from an in-memory pair list: EM alignment,
/// Viterbi segmentation of every pair, then the unit n-gram.
pub fn train_g2g_from_pair_list(
    pairs: &[(WrittenForm, WrittenForm)],
    cfg: &PipelineConfig,
) -> Result<(G2gModel, EmReport), PipelineError> {
    let (alignment, report) = align_em(pairs, &cfg.align, cfg.jobs)?;
    let aligned = viterbi_align_batch(pairs, &alignment, cfg.jobs)?;
    let sequences: Vec<Vec<String>> = aligned
        .iter()
        .map(|seq| seq.iter().map(JointUnit::token).collect())
        .collect();
    let lm = NgramModel::train(&sequences, cfg.graphone_order, cfg.jobs)?;
    Ok((G2gModel::new(alignment, lm, cfg.eps_chain_cap), report))
}

/// Trains from a `source<TAB>target` pair file.
pub fn train_g2g_from_pairs(
    path: &Path,
    cfg: &PipelineConfig,
    normalizer: &Normalizer,
) -> Result<(G2gModel, EmReport), PipelineError> {
    let pairs = read_pairs_file(path, normalizer)?;
    if pairs.is_empty() {
        return Err(PipelineError::EmptyInput(path.display().to_string()));
    }
    train_g2g_from_pair_list(&pairs, cfg)
}

/// Optional artifact outputs of the homophone training path.
#[derive(Debug, Default, Clone)]
pub struct TrainArtifacts {
    pub clusters_path: Option<PathBuf>,
    pub pairs_path: Option<PathBuf>,
}

pub struct HomTrainOutput {
    pub model: G2gModel,
    pub report: EmReport,
    pub cluster_count: usize,
    pub pair_count: usize,
}

/// The homophone path: cluster the lexicon, pick roots with the
/// character LM, emit (member, root) pairs, then train the transducer.
pub fn train_g2g_hom(
    lexicon_path: &Path,
    charlm: &CharLm,
    cfg: &PipelineConfig,
    normalizer: &Normalizer,
    inventory: &PhoneInventory,
    artifacts: &TrainArtifacts,
) -> Result<HomTrainOutput, PipelineError> {
    let entries = read_lexicon(lexicon_path, inventory, normalizer)?;
    if entries.is_empty() {
        return Err(PipelineError::EmptyInput(lexicon_path.display().to_string()));
    }
    let clusters = assign_roots(build_clusters(&entries), charlm, cfg.jobs)?;
    let pairs = emit_pairs(&clusters);
    if let Some(path) = &artifacts.clusters_path {
        write_clusters(path, &clusters)?;
    }
    if let Some(path) = &artifacts.pairs_path {
        write_pairs(path, &pairs)?;
    }
    if pairs.is_empty() {
        return Err(PipelineError::EmptyInput(format!(
            "{}: no homophone clusters",
            lexicon_path.display()
        )));
    }
    let (model, report) = train_g2g_from_pair_list(&pairs, cfg)?;
    Ok(HomTrainOutput {
        model,
        report,
        cluster_count: clusters.len(),
        pair_count: pairs.len(),
    })
}

/// Variants for one name, with per-variant scores (`None` for defaults)
/// and a flag set when the transducer produced nothing usable.
#[derive(Debug, Clone)]
pub struct VariantSet {
    pub variants: Vec<AmUnitSeq>,
    pub scores: Vec<Option<f64>>,
    pub used_fallback: bool,
}

/// Builds the variant list for one name. Defaults always come first in
/// mixed mode and are never displaced; transducer outputs fill the
/// remaining budget in score order, skipping duplicates. Decoding runs
/// on the case-preserved form and retries lowercased when it fails; if
/// both fail the defaults are used and the fallback flag is set.
pub fn generate_variants(
    model: &G2gModel,
    name: &WrittenForm,
    budget: VariantBudget,
    mode: MixMode,
    beam: usize,
    normalizer: &Normalizer,
) -> VariantSet {
    let n_max = budget.n_max();
    let defaults = default_pronunciations(name, normalizer.alphabet());

    let mut variants: Vec<AmUnitSeq> = Vec::new();
    let mut scores: Vec<Option<f64>> = Vec::new();
    let push = |v: AmUnitSeq, s: Option<f64>, variants: &mut Vec<AmUnitSeq>, scores: &mut Vec<Option<f64>>| {
        if variants.len() < n_max && !variants.contains(&v) {
            variants.push(v);
            scores.push(s);
        }
    };

    if mode == MixMode::DefaultsOnly {
        for d in defaults {
            push(d, None, &mut variants, &mut scores);
        }
        return VariantSet {
            variants,
            scores,
            used_fallback: false,
        };
    }

    let decode_budget = n_max.max(1);
    let beam = beam.max(decode_budget);
    let mut decodes = decode_topn(model, name, decode_budget, beam).ok();
    if decodes.is_none()
        && let Some(lowered) = name.lowercased(normalizer.alphabet())
        && lowered != *name
    {
        decodes = decode_topn(model, &lowered, decode_budget, beam).ok();
    }

    match mode {
        MixMode::Mixed => {
            for d in defaults {
                push(d, None, &mut variants, &mut scores);
            }
            let used_fallback = decodes.is_none();
            if let Some(hyps) = decodes {
                for h in hyps {
                    push(
                        am_units_for(&h.output),
                        Some(h.logprob),
                        &mut variants,
                        &mut scores,
                    );
                }
            }
            VariantSet {
                variants,
                scores,
                used_fallback,
            }
        }
        MixMode::G2gOnly => match decodes {
            Some(hyps) if !hyps.is_empty() => {
                for h in hyps {
                    push(
                        am_units_for(&h.output),
                        Some(h.logprob),
                        &mut variants,
                        &mut scores,
                    );
                }
                VariantSet {
                    variants,
                    scores,
                    used_fallback: false,
                }
            }
            _ => {
                for d in defaults {
                    push(d, None, &mut variants, &mut scores);
                }
                VariantSet {
                    variants,
                    scores,
                    used_fallback: true,
                }
            }
        },
        MixMode::DefaultsOnly => unreachable!("handled above"),
    }
}

#[derive(Debug, Clone)]
pub struct LexiconVariantEntry {
    pub name: WrittenForm,
    pub variants: Vec<AmUnitSeq>,
    pub scores: Vec<Option<f64>>,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexiconStats {
    pub names: usize,
    pub total_variants: usize,
    pub fallbacks: usize,
}

#[derive(Debug)]
pub struct DecodingLexicon {
    pub entries: Vec<LexiconVariantEntry>,
    pub stats: LexiconStats,
}

/// One entry per unique name (first occurrence wins), variants generated
/// in parallel over an immutable model.
pub fn build_decoding_lexicon(
    names: &[WrittenForm],
    model: &G2gModel,
    budget: VariantBudget,
    mode: MixMode,
    beam: usize,
    normalizer: &Normalizer,
    jobs: usize,
) -> Result<DecodingLexicon, PipelineError> {
    if names.is_empty() {
        return Err(PipelineError::EmptyInput("names list".into()));
    }
    let mut unique: Vec<WrittenForm> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if seen.insert(n.clone()) {
            unique.push(n.clone());
        }
    }

    let sets = par::map_ordered(&unique, jobs, |name| {
        generate_variants(model, name, budget, mode, beam, normalizer)
    });

    let mut entries = Vec::with_capacity(unique.len());
    let mut total_variants = 0;
    let mut fallbacks = 0;
    for (name, set) in unique.into_iter().zip(sets) {
        total_variants += set.variants.len();
        fallbacks += usize::from(set.used_fallback);
        entries.push(LexiconVariantEntry {
            name,
            variants: set.variants,
            scores: set.scores,
            used_fallback: set.used_fallback,
        });
    }
    let stats = LexiconStats {
        names: entries.len(),
        total_variants,
        fallbacks,
    };
    Ok(DecodingLexicon { entries, stats })
}

/// Writes `name<TAB>variant-index<TAB>am-unit-sequence` per variant,
/// plus a trailing `<TAB>score` column when `emit_scores` is set (`-`
/// for default variants).
pub fn write_lexicon(
    path: &Path,
    lexicon: &DecodingLexicon,
    emit_scores: bool,
) -> Result<(), PipelineError> {
    let mut out = String::new();
    for entry in &lexicon.entries {
        for (i, (v, s)) in entry.variants.iter().zip(&entry.scores).enumerate() {
            if emit_scores {
                let score = match s {
                    Some(lp) => format!("{lp:.6}"),
                    None => "-".to_string(),
                };
                out.push_str(&format!("{}\t{}\t{}\t{}\n", entry.name, i + 1, v, score));
            } else {
                out.push_str(&format!("{}\t{}\t{}\n", entry.name, i + 1, v));
            }
        }
    }
    atomic_write(path, &out)?;
    Ok(())
}
