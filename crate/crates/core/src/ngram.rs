//! Backoff n-gram model with Witten-Bell smoothing over string tokens.
//! Shared by the character-level LM and the joint-unit LM.
//!
//! Probabilities are interpolated Witten-Bell estimates stored in backoff
//! form. For a context `h` with total count `N(h)` and `T(h)` distinct
//! continuations,
//!
//! ```text
//! P(w | h) = (c(h w) + T(h) * P(w | h')) / (N(h) + T(h))
//! ```
//!
//! where `h'` drops the leftmost token, bottoming out in unigrams
//! interpolated with a uniform distribution over the predicted
//! vocabulary (observed tokens, the end marker, and `<unk>`). The
//! backoff weight of a seen context is exactly `T(h) / (N(h) + T(h))`,
//! which makes the stored table reproduce the interpolated model for
//! seen and unseen continuations alike, so probabilities over the
//! vocabulary sum to one at every context.
//!
//! Tokens are interned with ids assigned in sorted string order, so the
//! model (and its serialized form) is invariant to corpus ordering.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::par;

pub const BEGIN_TOKEN: &str = "<s>";
pub const END_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

pub(crate) const LN_10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid n-gram order {0}, must be >= 1")]
    InvalidOrder(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

type Key = Box<[u32]>;

#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    symbols: Vec<String>,
    index: HashMap<String, u32>,
    begin_id: u32,
    end_id: u32,
    unk_id: u32,
    /// probs[n-1]: natural-log probability of seen n-grams, key = [context.., token].
    probs: Vec<HashMap<Key, f64>>,
    /// backoffs[m-1]: natural-log backoff weight for contexts of length m.
    backoffs: Vec<HashMap<Key, f64>>,
}

impl NgramModel {
    /// Trains on token sequences (markers are added internally). Counting
    /// is data-parallel over fixed-size chunks; `jobs == 1` forces the
    /// sequential path.
    pub fn train(sequences: &[Vec<String>], order: usize, jobs: usize) -> Result<Self, NgramError> {
        if order < 1 {
            return Err(NgramError::InvalidOrder(order));
        }
        if sequences.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }

        let mut set: BTreeSet<&str> = BTreeSet::new();
        set.insert(BEGIN_TOKEN);
        set.insert(END_TOKEN);
        set.insert(UNK_TOKEN);
        for seq in sequences {
            for tok in seq {
                debug_assert!(
                    tok != BEGIN_TOKEN && tok != END_TOKEN && tok != UNK_TOKEN,
                    "reserved token in corpus"
                );
                set.insert(tok);
            }
        }
        let symbols: Vec<String> = set.into_iter().map(String::from).collect();
        let index: HashMap<String, u32> = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let begin_id = index[BEGIN_TOKEN];
        let end_id = index[END_TOKEN];
        let unk_id = index[UNK_TOKEN];

        let padded: Vec<Vec<u32>> = sequences
            .iter()
            .map(|seq| {
                let mut ids = Vec::with_capacity(seq.len() + 2);
                ids.push(begin_id);
                ids.extend(seq.iter().map(|t| index[t]));
                ids.push(end_id);
                ids
            })
            .collect();

        // Window counts for every n-gram ending at a predicted position.
        let chunks: Vec<&[Vec<u32>]> = padded.chunks(256).collect();
        let partials = par::map_ordered(&chunks, jobs, |chunk| count_windows(chunk, order));
        let mut counts: Vec<HashMap<Key, u64>> = vec![HashMap::new(); order];
        for part in partials {
            for (n, table) in part.into_iter().enumerate() {
                for (key, c) in table {
                    *counts[n].entry(key).or_insert(0) += c;
                }
            }
        }

        // Per-context totals and continuation-type counts.
        let mut ctx_stats: Vec<HashMap<Key, (u64, u64)>> = vec![HashMap::new(); order];
        for (n_minus_1, table) in counts.iter().enumerate() {
            for (key, c) in table {
                let ctx: Key = key[..n_minus_1].into();
                let entry = ctx_stats[n_minus_1].entry(ctx).or_insert((0, 0));
                entry.0 += c;
                entry.1 += 1;
            }
        }

        let mut backoffs: Vec<HashMap<Key, f64>> = vec![HashMap::new(); order.saturating_sub(1)];
        for len in 1..order {
            for (ctx, &(n, t)) in &ctx_stats[len] {
                let bo = (t as f64 / (n as f64 + t as f64)).ln();
                backoffs[len - 1].insert(ctx.clone(), bo);
            }
        }

        let mut model = Self {
            order,
            symbols,
            index,
            begin_id,
            end_id,
            unk_id,
            probs: vec![HashMap::new(); order],
            backoffs,
        };

        let &(n0, t0) = ctx_stats[0]
            .get(&Box::from([]) as &Key)
            .ok_or(NgramError::EmptyCorpus)?;
        // Predicted vocabulary: observed unigram types plus <unk>.
        let base = 1.0 / (counts[0].len() + 1) as f64;
        for (key, &c) in &counts[0] {
            let p = (c as f64 + t0 as f64 * base) / (n0 as f64 + t0 as f64);
            model.probs[0].insert(key.clone(), p.ln());
        }
        let p_unk = (t0 as f64 * base) / (n0 as f64 + t0 as f64);
        model.probs[0].insert(Box::from([unk_id]), p_unk.ln());

        for n in 2..=order {
            let mut entries: Vec<(Key, f64)> = Vec::with_capacity(counts[n - 1].len());
            for (key, &c) in &counts[n - 1] {
                let ctx = &key[..n - 1];
                let tok = key[n - 1];
                let &(nn, tt) = &ctx_stats[n - 1][ctx];
                let lower = model.logprob_ids(&ctx[1..], tok).exp();
                let p = (c as f64 + tt as f64 * lower) / (nn as f64 + tt as f64);
                entries.push((key.clone(), p.ln()));
            }
            model.probs[n - 1].extend(entries);
        }

        Ok(model)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of distinct predictable tokens (observed + `<unk>`).
    pub fn vocab_len(&self) -> usize {
        self.probs[0].len()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.symbols[id as usize]
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.token_id(token).unwrap_or(self.unk_id)
    }

    pub fn begin_id(&self) -> u32 {
        self.begin_id
    }

    pub fn end_id(&self) -> u32 {
        self.end_id
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    /// Ids that carry a unigram probability, sorted.
    pub fn predicted_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.probs[0].keys().map(|k| k[0]).collect();
        ids.sort_unstable();
        ids
    }

    /// Every context stored by the model (the empty context plus every
    /// context with a backoff weight).
    pub fn stored_contexts(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        for table in &self.backoffs {
            let mut keys: Vec<Vec<u32>> = table.keys().map(|k| k.to_vec()).collect();
            keys.sort_unstable();
            out.extend(keys);
        }
        out
    }

    /// Natural-log probability of `token` after `context`, resolved
    /// through backoff. The context is truncated to the model order.
    pub fn logprob_ids(&self, context: &[u32], token: u32) -> f64 {
        let max_ctx = self.order - 1;
        let mut ctx = if context.len() > max_ctx {
            &context[context.len() - max_ctx..]
        } else {
            context
        };
        let mut acc = 0.0;
        let mut key: Vec<u32> = Vec::with_capacity(ctx.len() + 1);
        loop {
            key.clear();
            key.extend_from_slice(ctx);
            key.push(token);
            if let Some(&lp) = self.probs[ctx.len()].get(key.as_slice()) {
                return acc + lp;
            }
            if ctx.is_empty() {
                // Only context-only tokens (the begin marker) land here.
                return f64::NEG_INFINITY;
            }
            if let Some(&bo) = self.backoffs[ctx.len() - 1].get(ctx) {
                acc += bo;
            }
            ctx = &ctx[1..];
        }
    }

    pub fn logprob_tokens(&self, context: &[&str], token: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|t| self.id_or_unk(t)).collect();
        self.logprob_ids(&ctx, self.id_or_unk(token))
    }

    /// Total natural-log probability of a token sequence including the
    /// end event, and the number of predicted events.
    pub fn score_sequence(&self, tokens: &[String]) -> (f64, usize) {
        let ids: Vec<u32> = tokens.iter().map(|t| self.id_or_unk(t)).collect();
        let mut hist: Vec<u32> = Vec::with_capacity(ids.len() + 1);
        hist.push(self.begin_id);
        let mut total = 0.0;
        for &id in &ids {
            total += self.logprob_ids(&hist, id);
            hist.push(id);
        }
        total += self.logprob_ids(&hist, self.end_id);
        (total, ids.len() + 1)
    }

    /// Entry count per order (probability entries only).
    pub fn ngram_counts(&self) -> Vec<usize> {
        self.probs.iter().map(HashMap::len).collect()
    }

    /// Serializes the model as ARPA-style sections, log base 10:
    /// a `\data\` block, then per-order sections of
    /// `logprob<TAB>tokens<TAB>backoff` lines (`-` when the entry is a
    /// context without its own probability; the backoff field is omitted
    /// when absent), closed by `\end\`.
    pub fn write_sections(&self, out: &mut String) {
        let mut lines_per_order: Vec<Vec<String>> = Vec::with_capacity(self.order);
        for n in 1..=self.order {
            let mut keys: BTreeSet<Vec<u32>> =
                self.probs[n - 1].keys().map(|k| k.to_vec()).collect();
            if n < self.order {
                for k in self.backoffs[n - 1].keys() {
                    keys.insert(k.to_vec());
                }
            }
            let mut lines = Vec::with_capacity(keys.len());
            for key in keys {
                let mut line = String::new();
                match self.probs[n - 1].get(key.as_slice()) {
                    Some(&lp) => {
                        let _ = write!(line, "{}", lp / LN_10);
                    }
                    None => line.push('-'),
                }
                line.push('\t');
                for (i, id) in key.iter().enumerate() {
                    if i > 0 {
                        line.push(' ');
                    }
                    line.push_str(self.token(*id));
                }
                if n < self.order
                    && let Some(&bo) = self.backoffs[n - 1].get(key.as_slice())
                {
                    let _ = write!(line, "\t{}", bo / LN_10);
                }
                lines.push(line);
            }
            lines_per_order.push(lines);
        }

        out.push_str("\\data\\\n");
        for (i, lines) in lines_per_order.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", i + 1, lines.len());
        }
        for (i, lines) in lines_per_order.iter().enumerate() {
            let _ = writeln!(out, "\\{}-grams:", i + 1);
            for line in lines {
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push_str("\\end\\\n");
    }

    /// Parses the sections produced by [`write_sections`]. `lines` yields
    /// `(line_number, text)` starting at the `\data\` marker.
    ///
    /// [`write_sections`]: NgramModel::write_sections
    pub fn read_sections<'a, I>(lines: &mut I) -> Result<Self, NgramError>
    where
        I: Iterator<Item = (usize, &'a str)>,
    {
        let parse_err = |line: usize, msg: &str| NgramError::Parse {
            line,
            msg: msg.to_string(),
        };

        let (ln, first) = lines.next().ok_or(parse_err(0, "missing \\data\\ section"))?;
        if first.trim() != "\\data\\" {
            return Err(parse_err(ln, "expected \\data\\"));
        }
        let mut declared: Vec<usize> = Vec::new();
        let mut section_lines: Vec<Vec<(usize, &str)>> = Vec::new();
        let mut pending: Option<(usize, &str)> = None;
        for (ln, raw) in lines.by_ref() {
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("ngram ") {
                let (n, c) = rest
                    .split_once('=')
                    .ok_or(parse_err(ln, "malformed ngram count"))?;
                let n: usize = n.parse().map_err(|_| parse_err(ln, "bad ngram order"))?;
                let c: usize = c.parse().map_err(|_| parse_err(ln, "bad ngram count"))?;
                if n != declared.len() + 1 {
                    return Err(parse_err(ln, "ngram counts out of order"));
                }
                declared.push(c);
            } else {
                pending = Some((ln, line));
                break;
            }
        }
        if declared.is_empty() {
            return Err(parse_err(0, "no ngram counts declared"));
        }
        let order = declared.len();

        let mut saw_end = false;
        let mut current: Option<usize> = None;
        let stream = pending.into_iter().chain(lines.by_ref().map(|(ln, raw)| (ln, raw.trim_end())));
        for (ln, line) in stream {
            if line.is_empty() {
                continue;
            }
            if line == "\\end\\" {
                saw_end = true;
                break;
            }
            if let Some(rest) = line.strip_prefix('\\') {
                if let Some(n) = rest.strip_suffix("-grams:") {
                    let n: usize = n.parse().map_err(|_| parse_err(ln, "bad section header"))?;
                    if n < 1 || n > order || n != section_lines.len() + 1 {
                        return Err(parse_err(ln, "unexpected section header"));
                    }
                    section_lines.push(Vec::new());
                    current = Some(n);
                    continue;
                }
                return Err(parse_err(ln, "unexpected escape line"));
            }
            let n = current.ok_or(parse_err(ln, "entry before any section header"))?;
            section_lines[n - 1].push((ln, line));
        }
        if !saw_end {
            return Err(parse_err(0, "missing \\end\\ marker (truncated file)"));
        }
        if section_lines.len() != order {
            return Err(parse_err(0, "missing n-gram sections"));
        }
        for (i, lines) in section_lines.iter().enumerate() {
            if lines.len() != declared[i] {
                return Err(parse_err(
                    0,
                    &format!(
                        "section {} has {} entries, header declares {}",
                        i + 1,
                        lines.len(),
                        declared[i]
                    ),
                ));
            }
        }

        // Vocabulary from the 1-gram section, plus markers.
        let mut set: BTreeSet<String> = BTreeSet::new();
        set.insert(BEGIN_TOKEN.to_string());
        set.insert(END_TOKEN.to_string());
        set.insert(UNK_TOKEN.to_string());
        for (ln, line) in &section_lines[0] {
            let mut fields = line.split('\t');
            let _ = fields.next();
            let tok = fields.next().ok_or(parse_err(*ln, "missing token field"))?;
            if tok.contains(' ') || tok.is_empty() {
                return Err(parse_err(*ln, "malformed 1-gram token"));
            }
            set.insert(tok.to_string());
        }
        let symbols: Vec<String> = set.into_iter().collect();
        let index: HashMap<String, u32> = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();

        let mut model = Self {
            order,
            begin_id: index[BEGIN_TOKEN],
            end_id: index[END_TOKEN],
            unk_id: index[UNK_TOKEN],
            symbols,
            index,
            probs: vec![HashMap::new(); order],
            backoffs: vec![HashMap::new(); order.saturating_sub(1)],
        };

        for (n, lines) in section_lines.iter().enumerate() {
            let n = n + 1;
            for (ln, line) in lines {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() < 2 || fields.len() > 3 {
                    return Err(parse_err(*ln, "expected 2 or 3 tab-separated fields"));
                }
                let toks: Vec<&str> = fields[1].split(' ').collect();
                if toks.len() != n {
                    return Err(parse_err(*ln, "token count does not match section"));
                }
                let mut key = Vec::with_capacity(n);
                for t in &toks {
                    let id = model
                        .index
                        .get(*t)
                        .ok_or(parse_err(*ln, "token not in vocabulary"))?;
                    key.push(*id);
                }
                let key: Key = key.into();
                if fields[0] != "-" {
                    let lp10: f64 = fields[0]
                        .parse()
                        .map_err(|_| parse_err(*ln, "bad log-probability"))?;
                    if !lp10.is_finite() {
                        return Err(parse_err(*ln, "non-finite log-probability"));
                    }
                    model.probs[n - 1].insert(key.clone(), lp10 * LN_10);
                }
                if fields.len() == 3 {
                    if n >= order {
                        return Err(parse_err(*ln, "backoff on highest order"));
                    }
                    let bo10: f64 = fields[2]
                        .parse()
                        .map_err(|_| parse_err(*ln, "bad backoff weight"))?;
                    if !bo10.is_finite() {
                        return Err(parse_err(*ln, "non-finite backoff weight"));
                    }
                    model.backoffs[n - 1].insert(key, bo10 * LN_10);
                }
            }
        }
        if model.probs[0].is_empty() {
            return Err(parse_err(0, "model has no unigrams"));
        }
        Ok(model)
    }
}

fn count_windows(padded: &[Vec<u32>], order: usize) -> Vec<HashMap<Key, u64>> {
    let mut counts: Vec<HashMap<Key, u64>> = vec![HashMap::new(); order];
    for seq in padded {
        // Position 0 is the begin marker and is never predicted.
        for end in 1..seq.len() {
            for n in 1..=order.min(end + 1) {
                let window: Key = seq[end + 1 - n..=end].into();
                *counts[n - 1].entry(window).or_insert(0) += 1;
            }
        }
    }
    counts
}
