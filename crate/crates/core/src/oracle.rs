//! Brute-force reference implementations used by the test suites.
//!
//! These deliberately share no code with the production paths they
//! check: counting is by direct window scans, probabilities follow the
//! recursive smoothing definition, EM enumerates whole segmentation
//! paths, and decoding enumerates every unit sequence. They are only
//! practical at toy scale.

pub mod wb {
    //! Recursive Witten-Bell reference over string-token corpora.

    use std::collections::BTreeSet;

    use crate::ngram::{BEGIN_TOKEN, END_TOKEN, UNK_TOKEN};

    fn padded(corpus: &[Vec<String>]) -> Vec<Vec<String>> {
        corpus
            .iter()
            .map(|seq| {
                let mut s = Vec::with_capacity(seq.len() + 2);
                s.push(BEGIN_TOKEN.to_string());
                s.extend(seq.iter().cloned());
                s.push(END_TOKEN.to_string());
                s
            })
            .collect()
    }

    /// Count of `gram` over windows ending at predicted positions.
    fn count(corpus: &[Vec<String>], gram: &[&str]) -> u64 {
        let mut c = 0;
        for seq in corpus {
            for end in 1..seq.len() {
                if end + 1 < gram.len() {
                    continue;
                }
                let start = end + 1 - gram.len();
                if seq[start..=end].iter().map(String::as_str).eq(gram.iter().copied()) {
                    c += 1;
                }
            }
        }
        c
    }

    fn continuations<'a>(corpus: &'a [Vec<String>], ctx: &[&str]) -> Vec<&'a str> {
        let mut out = Vec::new();
        for seq in corpus {
            for end in 1..seq.len() {
                if end < ctx.len() {
                    continue;
                }
                let start = end - ctx.len();
                if seq[start..end].iter().map(String::as_str).eq(ctx.iter().copied()) {
                    out.push(seq[end].as_str());
                }
            }
        }
        out
    }

    fn predicted_vocab(corpus: &[Vec<String>]) -> BTreeSet<String> {
        let mut v: BTreeSet<String> = corpus
            .iter()
            .flat_map(|seq| seq[1..].iter().cloned())
            .collect();
        v.insert(UNK_TOKEN.to_string());
        v
    }

    fn prob_padded(corpus: &[Vec<String>], order: usize, ctx: &[&str], token: &str) -> f64 {
        let ctx = if ctx.len() > order - 1 {
            &ctx[ctx.len() - (order - 1)..]
        } else {
            ctx
        };
        let vocab = predicted_vocab(corpus);
        let token = if vocab.contains(token) { token } else { UNK_TOKEN };
        prob_inner(corpus, ctx, token, &vocab)
    }

    fn prob_inner(
        corpus: &[Vec<String>],
        ctx: &[&str],
        token: &str,
        vocab: &BTreeSet<String>,
    ) -> f64 {
        if ctx.is_empty() {
            let events: u64 = vocab
                .iter()
                .map(|w| count(corpus, &[w.as_str()]))
                .sum();
            let types = vocab
                .iter()
                .filter(|w| count(corpus, &[w.as_str()]) > 0)
                .count() as u64;
            let c = count(corpus, &[token]);
            let base = 1.0 / vocab.len() as f64;
            return (c as f64 + types as f64 * base) / (events as f64 + types as f64);
        }
        let conts = continuations(corpus, ctx);
        if conts.is_empty() {
            return prob_inner(corpus, &ctx[1..], token, vocab);
        }
        let n = conts.len() as f64;
        let t = conts.iter().collect::<BTreeSet<_>>().len() as f64;
        let mut gram: Vec<&str> = ctx.to_vec();
        gram.push(token);
        let c = count(corpus, &gram) as f64;
        let lower = prob_inner(corpus, &ctx[1..], token, vocab);
        (c + t * lower) / (n + t)
    }

    /// Probability of `token` after `ctx` (both without markers unless
    /// deliberately included) for a model of the given order.
    pub fn prob(corpus: &[Vec<String>], order: usize, ctx: &[&str], token: &str) -> f64 {
        prob_padded(&padded(corpus), order, ctx, token)
    }

    /// Total natural-log score of a token sequence including the end
    /// event, mirroring `score_sequence`.
    pub fn sequence_logprob(corpus: &[Vec<String>], order: usize, tokens: &[String]) -> (f64, usize) {
        let corpus = padded(corpus);
        let mut hist: Vec<&str> = vec![BEGIN_TOKEN];
        let mut total = 0.0;
        for t in tokens {
            total += prob_padded(&corpus, order, &hist, t).ln();
            hist.push(t);
        }
        total += prob_padded(&corpus, order, &hist, END_TOKEN).ln();
        (total, tokens.len() + 1)
    }
}

pub mod em {
    //! Path-enumeration EM reference for the multigram aligner.

    use std::collections::BTreeMap;

    pub type Unit = (String, String);

    /// Every segmentation of (source, target) into units within the caps,
    /// insertions and deletions included.
    pub fn enumerate_paths(
        source: &[char],
        target: &[char],
        max_s: usize,
        max_t: usize,
    ) -> Vec<Vec<Unit>> {
        #[allow(clippy::too_many_arguments)]
        fn go(
            source: &[char],
            target: &[char],
            i: usize,
            j: usize,
            max_s: usize,
            max_t: usize,
            prefix: &mut Vec<Unit>,
            out: &mut Vec<Vec<Unit>>,
        ) {
            if i == source.len() && j == target.len() {
                out.push(prefix.clone());
                return;
            }
            for a in 0..=max_s.min(source.len() - i) {
                for b in 0..=max_t.min(target.len() - j) {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    prefix.push((
                        source[i..i + a].iter().collect(),
                        target[j..j + b].iter().collect(),
                    ));
                    go(source, target, i + a, j + b, max_s, max_t, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(source, target, 0, 0, max_s, max_t, &mut Vec::new(), &mut out);
        out
    }

    fn path_weight(path: &[Unit], probs: &BTreeMap<Unit, f64>, prior: f64, eps_penalty: f64) -> f64 {
        path.iter()
            .map(|u| {
                let mut w = probs.get(u).copied().unwrap_or(0.0) * prior;
                if u.0.is_empty() || u.1.is_empty() {
                    w *= eps_penalty;
                }
                w
            })
            .product()
    }

    /// Runs EM by explicit path enumeration, with the same inter-iteration
    /// pruning rule as the production aligner (units below the expected
    /// count threshold are dropped unless both segments are single
    /// characters). Returns the final unit probabilities and the
    /// log-likelihood entering each iteration.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        pairs: &[(&str, &str)],
        max_s: usize,
        max_t: usize,
        prior: f64,
        eps_penalty: f64,
        iters: usize,
        min_gain: f64,
        prune_threshold: f64,
    ) -> (BTreeMap<Unit, f64>, Vec<f64>) {
        let lattices: Vec<Vec<Vec<Unit>>> = pairs
            .iter()
            .map(|(s, t)| {
                let sc: Vec<char> = s.chars().collect();
                let tc: Vec<char> = t.chars().collect();
                enumerate_paths(&sc, &tc, max_s, max_t)
            })
            .collect();
        let mut probs: BTreeMap<Unit, f64> = BTreeMap::new();
        for paths in &lattices {
            for path in paths {
                for u in path {
                    probs.insert(u.clone(), 0.0);
                }
            }
        }
        let k = probs.len() as f64;
        for p in probs.values_mut() {
            *p = 1.0 / k;
        }

        let mut lls = Vec::new();
        for _ in 0..iters {
            let mut ll = 0.0;
            let mut counts: BTreeMap<Unit, f64> = BTreeMap::new();
            for paths in &lattices {
                let z: f64 = paths
                    .iter()
                    .map(|p| path_weight(p, &probs, prior, eps_penalty))
                    .sum();
                ll += z.ln();
                for path in paths {
                    let w = path_weight(path, &probs, prior, eps_penalty);
                    if w <= 0.0 {
                        continue;
                    }
                    for u in path {
                        *counts.entry(u.clone()).or_insert(0.0) += w / z;
                    }
                }
            }
            lls.push(ll);
            if prune_threshold > 0.0 {
                let doomed: Vec<Unit> = probs
                    .keys()
                    .filter(|u| {
                        let small = u.0.chars().count() <= 1 && u.1.chars().count() <= 1;
                        !small && counts.get(*u).copied().unwrap_or(0.0) < prune_threshold
                    })
                    .cloned()
                    .collect();
                for u in doomed {
                    probs.remove(&u);
                    counts.remove(&u);
                }
            }
            let total: f64 = counts.values().sum();
            for (u, p) in probs.iter_mut() {
                *p = counts.get(u).copied().unwrap_or(0.0) / total;
            }
            let n = lls.len();
            if n >= 2 && lls[n - 1] - lls[n - 2] < min_gain {
                break;
            }
        }
        (probs, lls)
    }
}

pub mod decode {
    //! Exhaustive decode reference: enumerate every unit sequence that
    //! consumes the input, score with the model's LM, rank by best path
    //! score per distinct output.

    use crate::model::G2gModel;
    use crate::ngram::{BEGIN_TOKEN, END_TOKEN, UNK_TOKEN};

    /// Returns `(output, logprob)` ranked exactly as `decode_topn` ranks:
    /// score descending, then output string ascending.
    pub fn topn(model: &G2gModel, input: &str, n: usize) -> Vec<(String, f64)> {
        let chars: Vec<char> = input.chars().collect();
        let lm = model.lm();
        let mut units: Vec<(u32, String, String)> = Vec::new();
        for id in lm.predicted_ids() {
            let token = lm.token(id);
            if token == BEGIN_TOKEN || token == END_TOKEN || token == UNK_TOKEN {
                continue;
            }
            if let Some((s, t)) = token.split_once('|') {
                units.push((id, s.to_string(), t.to_string()));
            }
        }

        struct Walk<'a> {
            chars: &'a [char],
            units: &'a [(u32, String, String)],
            model: &'a G2gModel,
            finals: Vec<(String, f64)>,
        }
        impl Walk<'_> {
            fn go(&mut self, pos: usize, eps_run: usize, hist: Vec<u32>, out: String, score: f64) {
                let lm = self.model.lm();
                if pos == self.chars.len() {
                    let end = score + lm.logprob_ids(&hist, lm.end_id());
                    if !out.is_empty() {
                        self.finals.push((out.clone(), end));
                    }
                }
                for (id, src, tgt) in self.units {
                    if src.is_empty() {
                        if eps_run >= self.model.eps_chain_cap() {
                            continue;
                        }
                    } else {
                        let srcs: Vec<char> = src.chars().collect();
                        if pos + srcs.len() > self.chars.len()
                            || self.chars[pos..pos + srcs.len()] != srcs[..]
                        {
                            continue;
                        }
                    }
                    let lp = lm.logprob_ids(&hist, *id);
                    let mut h = hist.clone();
                    h.push(*id);
                    let next_pos = pos + src.chars().count();
                    let next_eps = if src.is_empty() { eps_run + 1 } else { 0 };
                    self.go(next_pos, next_eps, h, format!("{out}{tgt}"), score + lp);
                }
            }
        }

        let mut walk = Walk {
            chars: &chars,
            units: &units,
            model,
            finals: Vec::new(),
        };
        walk.go(0, 0, vec![lm.begin_id()], String::new(), 0.0);

        let mut best: std::collections::BTreeMap<String, f64> = std::collections::BTreeMap::new();
        for (out, score) in walk.finals {
            best.entry(out)
                .and_modify(|s| {
                    if score > *s {
                        *s = score;
                    }
                })
                .or_insert(score);
        }
        let mut ranked: Vec<(String, f64)> = best.into_iter().collect();
        ranked.sort_by(|(oa, a), (ob, b)| b.partial_cmp(a).unwrap().then(oa.cmp(ob)));
        ranked.truncate(n);
        ranked
    }
}
