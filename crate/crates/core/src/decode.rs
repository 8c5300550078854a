//! Top-N decoding of an input spelling through the joint-unit n-gram.
//!
//! Hypotheses consume the input with unit source segments (insertions
//! allowed, with consecutive insertion runs capped) and are scored by the
//! unit LM alone. The search is a per-position frontier DP with state
//! recombination on (history, insertion run, output); with an unbounded
//! beam it is exhaustive, so ranked outputs match brute-force enumeration
//! exactly. Distinct output strings are ranked by best path score, ties
//! by output string.

use std::collections::HashMap;

use thiserror::Error;

use crate::grapheme::WrittenForm;
use crate::model::G2gModel;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("grapheme {0:?} is not in the model source alphabet")]
    OovGrapheme(char),
    #[error("no complete hypothesis within the beam")]
    NoHypothesis,
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
}

/// One ranked decode output.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeHypothesis {
    pub output: WrittenForm,
    /// Natural-log probability of the best unit path for this output.
    pub logprob: f64,
    /// 1-based, contiguous.
    pub rank: usize,
}

#[derive(PartialEq, Eq, Hash, Clone, PartialOrd, Ord)]
struct State {
    hist: Vec<u32>,
    eps_run: u8,
    output: String,
}

fn push_hist(hist: &[u32], id: u32, order: usize) -> Vec<u32> {
    let keep = order.saturating_sub(1);
    let mut h: Vec<u32> = Vec::with_capacity(keep);
    let start = (hist.len() + 1).saturating_sub(keep);
    h.extend_from_slice(&hist[start.min(hist.len())..]);
    h.push(id);
    if h.len() > keep {
        let drop = h.len() - keep;
        h.drain(..drop);
    }
    h
}

fn merge(frontier: &mut HashMap<State, f64>, state: State, score: f64) {
    frontier
        .entry(state)
        .and_modify(|s| {
            if score > *s {
                *s = score;
            }
        })
        .or_insert(score);
}

/// Decodes up to `n` distinct respellings of `input`, best first.
/// `beam` caps the number of states kept per consumed input position;
/// `usize::MAX` makes the search exhaustive.
pub fn decode_topn(
    model: &G2gModel,
    input: &WrittenForm,
    n: usize,
    beam: usize,
) -> Result<Vec<DecodeHypothesis>, DecodeError> {
    if n < 1 {
        return Err(DecodeError::InvalidArgs("n must be >= 1".into()));
    }
    if beam < n {
        return Err(DecodeError::InvalidArgs(format!(
            "beam {beam} must be >= n {n}"
        )));
    }
    let chars: Vec<char> = input.as_str().chars().collect();
    for &ch in &chars {
        if !model.source_alphabet().contains(&ch) {
            return Err(DecodeError::OovGrapheme(ch));
        }
    }

    let order = model.lm_order();
    let eps_cap = model.eps_chain_cap() as u8;
    let max_seg = model.max_source_seg_len();
    let len = chars.len();

    let mut frontiers: Vec<HashMap<State, f64>> = vec![HashMap::new(); len + 1];
    frontiers[0].insert(
        State {
            hist: vec![model.lm().begin_id()],
            eps_run: 0,
            output: String::new(),
        },
        0.0,
    );

    let mut finals: HashMap<String, f64> = HashMap::new();
    for pos in 0..=len {
        let mut frontier = std::mem::take(&mut frontiers[pos]);

        // Bounded closure over insertion units.
        let mut layer: Vec<(State, f64)> = frontier
            .iter()
            .map(|(s, &sc)| (s.clone(), sc))
            .collect();
        layer.sort_by(|a, b| a.0.cmp(&b.0));
        for _ in 0..eps_cap {
            let mut next_layer: Vec<(State, f64)> = Vec::new();
            for (state, score) in &layer {
                if state.eps_run >= eps_cap {
                    continue;
                }
                for (id, target) in model.insertion_units() {
                    let lp = model.lm().logprob_ids(&state.hist, *id);
                    let new = State {
                        hist: push_hist(&state.hist, *id, order),
                        eps_run: state.eps_run + 1,
                        output: format!("{}{}", state.output, target),
                    };
                    let new_score = score + lp;
                    let improved = frontier.get(&new).is_none_or(|&s| new_score > s);
                    if improved {
                        merge(&mut frontier, new.clone(), new_score);
                        next_layer.push((new, new_score));
                    }
                }
            }
            if next_layer.is_empty() {
                break;
            }
            next_layer.sort_by(|a, b| a.0.cmp(&b.0));
            layer = next_layer;
        }

        // Histogram pruning to the beam, deterministic order.
        let mut states: Vec<(State, f64)> = frontier.into_iter().collect();
        if states.len() > beam {
            states.sort_by(|(sa, a), (sb, b)| {
                b.partial_cmp(a).expect("scores are finite").then(sa.cmp(sb))
            });
            states.truncate(beam);
        }

        if pos == len {
            for (state, score) in &states {
                if state.output.is_empty() {
                    continue;
                }
                let end = score + model.lm().logprob_ids(&state.hist, model.lm().end_id());
                finals
                    .entry(state.output.clone())
                    .and_modify(|s| {
                        if end > *s {
                            *s = end;
                        }
                    })
                    .or_insert(end);
            }
            break;
        }

        for (state, score) in &states {
            for seg_len in 1..=max_seg.min(len - pos) {
                let seg: String = chars[pos..pos + seg_len].iter().collect();
                let Some(units) = model.units_for_source(&seg) else {
                    continue;
                };
                for (id, target) in units {
                    let lp = model.lm().logprob_ids(&state.hist, *id);
                    let new = State {
                        hist: push_hist(&state.hist, *id, order),
                        eps_run: 0,
                        output: format!("{}{}", state.output, target),
                    };
                    merge(&mut frontiers[pos + seg_len], new, score + lp);
                }
            }
        }
    }

    if finals.is_empty() {
        return Err(DecodeError::NoHypothesis);
    }
    let mut ranked: Vec<(String, f64)> = finals.into_iter().collect();
    ranked.sort_by(|(oa, a), (ob, b)| b.partial_cmp(a).expect("scores are finite").then(oa.cmp(ob)));
    Ok(ranked
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, (output, logprob))| DecodeHypothesis {
            output: WrittenForm::from_trusted(output),
            logprob,
            rank: i + 1,
        })
        .collect())
}
