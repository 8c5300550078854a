//! Many-to-many joint-unit alignment trained with EM over the full
//! segmentation lattice of each (source, target) pair.
//!
//! A [`JointUnit`] pairs a source segment with a target segment, each up
//! to a configured cap (default 2:2); deletions (`x|`) and insertions
//! (`|y`) are allowed, `|` (both empty) is not. Every segmentation of a
//! pair into such units is a path through its lattice. Path weights are
//! the product of unit probabilities, a per-unit segmentation prior
//! ([`AlignConfig::unit_count_prior`], which favors finer segmentations
//! over whole-chunk explanations), and a penalty on epsilon units
//! ([`AlignConfig::eps_penalty`], which keeps deletions and insertions
//! out of paths that do not need them). EM starts uniform over every
//! unit observed in any lattice and re-estimates unit probabilities from
//! expected path counts; the objective it climbs is the corpus
//! log-likelihood under these weighted lattices.
//!
//! The E-step is data-parallel over pairs with an ordered reduction, so
//! results are bit-identical across job counts.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::grapheme::WrittenForm;
use crate::par;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("no valid alignment for pair ({0:?}, {1:?})")]
    NoValidAlignment(String, String),
    #[error("invalid alignment config: {0}")]
    InvalidConfig(String),
}

/// A paired (source segment, target segment) token. Either side may be
/// empty, never both. Renders as `source|target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointUnit {
    pub source: String,
    pub target: String,
}

impl JointUnit {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        let u = Self {
            source: source.into(),
            target: target.into(),
        };
        debug_assert!(!u.source.is_empty() || !u.target.is_empty());
        u
    }

    /// True when one side is empty (a deletion or insertion).
    pub fn is_epsilon(&self) -> bool {
        self.source.is_empty() || self.target.is_empty()
    }

    pub fn token(&self) -> String {
        format!("{}|{}", self.source, self.target)
    }

    /// Parses the `source|target` rendering.
    pub fn from_token(token: &str) -> Option<Self> {
        let (s, t) = token.split_once('|')?;
        if s.is_empty() && t.is_empty() {
            return None;
        }
        Some(Self::new(s, t))
    }
}

impl fmt::Display for JointUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.source, self.target)
    }
}

#[derive(Debug, Clone)]
pub struct AlignConfig {
    /// Maximum source segment length per unit.
    pub max_source_seg: usize,
    /// Maximum target segment length per unit.
    pub max_target_seg: usize,
    pub max_iters: usize,
    /// EM stops once the log-likelihood gain drops below this.
    pub min_gain: f64,
    /// Units with expected count below this are dropped between
    /// iterations (single-character units are kept so every pair stays
    /// alignable). 0 disables pruning.
    pub prune_threshold: f64,
    /// Multiplicative per-unit weight in path scores (> 1 favors more,
    /// smaller units).
    pub unit_count_prior: f64,
    /// Multiplicative weight on deletion/insertion units.
    pub eps_penalty: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            max_source_seg: 2,
            max_target_seg: 2,
            max_iters: 50,
            min_gain: 1e-6,
            prune_threshold: 1e-4,
            unit_count_prior: 8.0,
            eps_penalty: 0.1,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        if self.max_source_seg < 1 || self.max_target_seg < 1 {
            return Err(AlignError::InvalidConfig(
                "segment caps must be >= 1".into(),
            ));
        }
        if self.max_iters < 1 {
            return Err(AlignError::InvalidConfig("max_iters must be >= 1".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.unit_count_prior) || !positive(self.eps_penalty) {
            return Err(AlignError::InvalidConfig(
                "unit_count_prior and eps_penalty must be > 0".into(),
            ));
        }
        if self.min_gain < 0.0 || self.prune_threshold < 0.0 {
            return Err(AlignError::InvalidConfig(
                "min_gain and prune_threshold must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Unit inventory with probabilities, plus the lattice weighting knobs
/// they were trained under.
#[derive(Debug, Clone)]
pub struct AlignmentModel {
    units: Vec<JointUnit>,
    probs: Vec<f64>,
    index: HashMap<JointUnit, u32>,
    max_source_seg: usize,
    max_target_seg: usize,
    unit_count_prior: f64,
    eps_penalty: f64,
}

impl AlignmentModel {
    /// Builds a model from `(unit, probability)` entries; entries with
    /// non-positive probability are dropped and units are kept sorted.
    pub fn from_entries(
        entries: Vec<(JointUnit, f64)>,
        max_source_seg: usize,
        max_target_seg: usize,
        unit_count_prior: f64,
        eps_penalty: f64,
    ) -> Self {
        let mut entries: Vec<(JointUnit, f64)> =
            entries.into_iter().filter(|(_, p)| *p > 0.0).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let units: Vec<JointUnit> = entries.iter().map(|(u, _)| u.clone()).collect();
        let probs: Vec<f64> = entries.iter().map(|(_, p)| *p).collect();
        let index = units
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i as u32))
            .collect();
        Self {
            units,
            probs,
            index,
            max_source_seg,
            max_target_seg,
            unit_count_prior,
            eps_penalty,
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JointUnit, f64)> {
        self.units.iter().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, unit: &JointUnit) -> Option<f64> {
        self.index.get(unit).map(|&i| self.probs[i as usize])
    }

    pub fn max_source_seg(&self) -> usize {
        self.max_source_seg
    }

    pub fn max_target_seg(&self) -> usize {
        self.max_target_seg
    }

    pub fn unit_count_prior(&self) -> f64 {
        self.unit_count_prior
    }

    pub fn eps_penalty(&self) -> f64 {
        self.eps_penalty
    }

    pub fn total_prob(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Lattice weight of one unit: probability times the segmentation
    /// prior, times the epsilon penalty when one side is empty.
    fn lattice_weight(&self, id: u32) -> f64 {
        let u = &self.units[id as usize];
        let mut w = self.probs[id as usize] * self.unit_count_prior;
        if u.is_epsilon() {
            w *= self.eps_penalty;
        }
        w
    }
}

/// Per-iteration EM trace.
#[derive(Debug, Clone)]
pub struct EmReport {
    /// Corpus log-likelihood under the parameters entering each iteration.
    pub loglik_per_iter: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Edge {
    from: u32,
    to: u32,
    unit: u32,
}

/// Segmentation lattice of one pair. Nodes are (i, j) consumption states
/// in row-major order; edges are emitted grouped by source node in
/// ascending order, which is a topological order.
struct Lattice {
    node_count: usize,
    edges: Vec<Edge>,
}

struct UnitTable {
    units: Vec<JointUnit>,
    index: HashMap<JointUnit, u32>,
}

impl UnitTable {
    fn new() -> Self {
        Self {
            units: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, unit: JointUnit) -> u32 {
        if let Some(&id) = self.index.get(&unit) {
            return id;
        }
        let id = self.units.len() as u32;
        self.index.insert(unit.clone(), id);
        self.units.push(unit);
        id
    }
}

fn build_lattice(
    source: &[char],
    target: &[char],
    max_s: usize,
    max_t: usize,
    mut intern: impl FnMut(JointUnit) -> Option<u32>,
) -> Option<Lattice> {
    let rows = source.len() + 1;
    let cols = target.len() + 1;
    let node = |i: usize, j: usize| (i * cols + j) as u32;
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            for a in 0..=max_s.min(source.len() - i) {
                for b in 0..=max_t.min(target.len() - j) {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let unit = JointUnit::new(
                        source[i..i + a].iter().collect::<String>(),
                        target[j..j + b].iter().collect::<String>(),
                    );
                    if let Some(id) = intern(unit) {
                        edges.push(Edge {
                            from: node(i, j),
                            to: node(i + a, j + b),
                            unit: id,
                        });
                    }
                }
            }
        }
    }
    if edges.is_empty() {
        return None;
    }
    Some(Lattice {
        node_count: rows * cols,
        edges,
    })
}

/// Forward-backward over one lattice; returns the pair log-likelihood and
/// expected unit counts. `weights[u]` is the full lattice weight of unit
/// `u` (probability, prior, and epsilon penalty folded in).
fn expectation(lattice: &Lattice, weights: &[f64]) -> Option<(f64, HashMap<u32, f64>)> {
    let n = lattice.node_count;
    let mut alpha = vec![0.0f64; n];
    alpha[0] = 1.0;
    for e in &lattice.edges {
        alpha[e.to as usize] += alpha[e.from as usize] * weights[e.unit as usize];
    }
    let z = alpha[n - 1];
    if z <= 0.0 || !z.is_finite() {
        return None;
    }
    let mut beta = vec![0.0f64; n];
    beta[n - 1] = 1.0;
    for e in lattice.edges.iter().rev() {
        beta[e.from as usize] += weights[e.unit as usize] * beta[e.to as usize];
    }
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for e in &lattice.edges {
        let gamma =
            alpha[e.from as usize] * weights[e.unit as usize] * beta[e.to as usize] / z;
        if gamma > 0.0 {
            *counts.entry(e.unit).or_insert(0.0) += gamma;
        }
    }
    Some((z.ln(), counts))
}

/// Trains unit probabilities by EM over the pair corpus. Returns the
/// model and the per-iteration log-likelihood trace.
pub fn align_em(
    pairs: &[(WrittenForm, WrittenForm)],
    cfg: &AlignConfig,
    jobs: usize,
) -> Result<(AlignmentModel, EmReport), AlignError> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(AlignError::EmptyCorpus);
    }

    let mut table = UnitTable::new();
    let mut lattices = Vec::with_capacity(pairs.len());
    for (s, t) in pairs {
        let source: Vec<char> = s.as_str().chars().collect();
        let target: Vec<char> = t.as_str().chars().collect();
        let lattice = build_lattice(
            &source,
            &target,
            cfg.max_source_seg,
            cfg.max_target_seg,
            |u| Some(table.intern(u)),
        )
        .ok_or_else(|| AlignError::NoValidAlignment(s.to_string(), t.to_string()))?;
        lattices.push(lattice);
    }

    let unit_count = table.units.len();
    let mut probs = vec![1.0 / unit_count as f64; unit_count];
    let mut alive = vec![true; unit_count];
    let is_small: Vec<bool> = table
        .units
        .iter()
        .map(|u| u.source.chars().count() <= 1 && u.target.chars().count() <= 1)
        .collect();

    let mut loglik_per_iter = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let weights: Vec<f64> = (0..unit_count)
            .map(|i| {
                if !alive[i] || probs[i] <= 0.0 {
                    return 0.0;
                }
                let mut w = probs[i] * cfg.unit_count_prior;
                if table.units[i].is_epsilon() {
                    w *= cfg.eps_penalty;
                }
                w
            })
            .collect();

        let results = par::map_ordered(&lattices, jobs, |lat| expectation(lat, &weights));
        let mut total_ll = 0.0;
        let mut counts = vec![0.0f64; unit_count];
        for (idx, res) in results.into_iter().enumerate() {
            let (ll, pair_counts) = res.ok_or_else(|| {
                AlignError::NoValidAlignment(pairs[idx].0.to_string(), pairs[idx].1.to_string())
            })?;
            total_ll += ll;
            for (unit, c) in pair_counts {
                counts[unit as usize] += c;
            }
        }
        loglik_per_iter.push(total_ll);

        if cfg.prune_threshold > 0.0 {
            for i in 0..unit_count {
                if alive[i] && counts[i] < cfg.prune_threshold && !is_small[i] {
                    alive[i] = false;
                }
            }
        }
        let total: f64 = counts
            .iter()
            .zip(&alive)
            .filter(|&(_, &a)| a)
            .map(|(c, _)| c)
            .sum();
        if total <= 0.0 || total.is_nan() {
            return Err(AlignError::NoValidAlignment(
                pairs[0].0.to_string(),
                pairs[0].1.to_string(),
            ));
        }
        for i in 0..unit_count {
            probs[i] = if alive[i] { counts[i] / total } else { 0.0 };
        }

        let n = loglik_per_iter.len();
        if n >= 2 && loglik_per_iter[n - 1] - loglik_per_iter[n - 2] < cfg.min_gain {
            converged = true;
            break;
        }
    }

    let iterations = loglik_per_iter.len();
    let entries: Vec<(JointUnit, f64)> = table
        .units
        .into_iter()
        .zip(probs)
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let model = AlignmentModel::from_entries(
        entries,
        cfg.max_source_seg,
        cfg.max_target_seg,
        cfg.unit_count_prior,
        cfg.eps_penalty,
    );
    Ok((
        model,
        EmReport {
            loglik_per_iter,
            iterations,
            converged,
        },
    ))
}

/// Maximum-weight segmentation of one pair under the model's lattice
/// weighting. Ties prefer fewer units, then the lexicographically
/// smallest unit sequence.
pub fn viterbi_align(
    source: &WrittenForm,
    target: &WrittenForm,
    model: &AlignmentModel,
) -> Result<Vec<JointUnit>, AlignError> {
    let s_chars: Vec<char> = source.as_str().chars().collect();
    let t_chars: Vec<char> = target.as_str().chars().collect();
    let no_alignment = || AlignError::NoValidAlignment(source.to_string(), target.to_string());
    let lattice = build_lattice(
        &s_chars,
        &t_chars,
        model.max_source_seg(),
        model.max_target_seg(),
        |u| model.index.get(&u).copied(),
    )
    .ok_or_else(no_alignment)?;

    // Best (score, unit count, unit-id path) per node; path comparison is
    // well-defined because ties share the same count, hence length.
    let mut best: Vec<Option<(f64, usize, Vec<u32>)>> = vec![None; lattice.node_count];
    best[0] = Some((0.0, 0, Vec::new()));
    for e in &lattice.edges {
        let Some((score, count, path)) = best[e.from as usize].clone() else {
            continue;
        };
        let w = model.lattice_weight(e.unit);
        if w <= 0.0 {
            continue;
        }
        let cand_score = score + w.ln();
        let cand_count = count + 1;
        let replace = match &best[e.to as usize] {
            None => true,
            Some((s, c, p)) => {
                cand_score > *s
                    || (cand_score == *s
                        && (cand_count < *c
                            || (cand_count == *c && {
                                let mut cand_path = path.clone();
                                cand_path.push(e.unit);
                                cand_path < *p
                            })))
            }
        };
        if replace {
            let mut new_path = path;
            new_path.push(e.unit);
            best[e.to as usize] = Some((cand_score, cand_count, new_path));
        }
    }
    let (_, _, path) = best[lattice.node_count - 1].clone().ok_or_else(no_alignment)?;
    Ok(path
        .into_iter()
        .map(|id| model.units[id as usize].clone())
        .collect())
}

/// Viterbi alignment of every pair, parallel over pairs.
pub fn viterbi_align_batch(
    pairs: &[(WrittenForm, WrittenForm)],
    model: &AlignmentModel,
    jobs: usize,
) -> Result<Vec<Vec<JointUnit>>, AlignError> {
    par::map_ordered(pairs, jobs, |(s, t)| viterbi_align(s, t, model))
        .into_iter()
        .collect()
}
