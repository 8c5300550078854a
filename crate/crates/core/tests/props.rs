//! Property tests for the contract-level invariants.

use proptest::prelude::*;
use std::collections::BTreeSet;

use g2g_core::align::{AlignConfig, align_em, viterbi_align};
use g2g_core::charlm::CharLm;
use g2g_core::config::{MixMode, PipelineConfig};
use g2g_core::grapheme::{Normalizer, WrittenForm, decompose, default_pronunciations};
use g2g_core::homophone::{LexiconEntry, PhoneInventory, PhoneSeq, assign_roots, build_clusters, emit_pairs};
use g2g_core::pipeline::{VariantBudget, generate_variants, train_g2g_from_pair_list};

fn norm() -> Normalizer {
    Normalizer::default()
}

fn lift(words: &[String]) -> Vec<WrittenForm> {
    let n = norm();
    words.iter().map(|w| n.normalize(w).unwrap()).collect()
}

proptest! {
    #[test]
    fn normalize_is_idempotent(raw in "[A-Za-z0-9'ÀÉÖüñçß-]{1,12}") {
        let n = norm();
        if let Ok(once) = n.normalize(&raw) {
            let twice = n.normalize(once.as_str()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn decompose_round_trips_and_tags_are_sane(raw in "[A-Za-z0-9'-]{1,16}") {
        let n = norm();
        let w = n.normalize(&raw).unwrap();
        let tagged = decompose(&w);
        let joined: String = tagged.iter().map(|g| g.symbol).collect();
        prop_assert_eq!(joined, w.as_str());
        let boundaries = tagged.iter().filter(|g| g.tag.is_boundary()).count();
        prop_assert_eq!(boundaries, if w.char_len() == 1 { 1 } else { 2 });
    }

    #[test]
    fn default_variants_are_bounded_and_distinct(raw in "[A-Za-z]{1,10}") {
        let n = norm();
        let w = n.normalize(&raw).unwrap();
        let prons = default_pronunciations(&w, n.alphabet());
        prop_assert!(!prons.is_empty() && prons.len() <= 2);
        let distinct: BTreeSet<String> = prons.iter().map(|p| p.to_string()).collect();
        prop_assert_eq!(distinct.len(), prons.len());
        if w.as_str().chars().all(|c| c.is_lowercase() || !c.is_alphabetic()) {
            prop_assert_eq!(prons.len(), 1);
        }
    }

    #[test]
    fn charlm_sums_to_one_at_every_context(
        words in prop::collection::vec("[a-d]{1,5}", 1..20),
        order in 1usize..4,
    ) {
        let lm = CharLm::train(&lift(&words), order, 1).unwrap();
        let m = lm.ngram();
        for ctx in m.stored_contexts() {
            let sum: f64 = m
                .predicted_ids()
                .iter()
                .map(|&id| m.logprob_ids(&ctx, id).exp())
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-6, "context {:?} sums to {}", ctx, sum);
        }
    }

    #[test]
    fn charlm_is_invariant_to_corpus_order(
        words in prop::collection::vec("[a-c]{1,4}", 2..12).prop_shuffle(),
        order in 1usize..4,
    ) {
        let mut sorted = words.clone();
        sorted.sort();
        let a = CharLm::train(&lift(&words), order, 1).unwrap();
        let b = CharLm::train(&lift(&sorted), order, 1).unwrap();
        let probe = norm().normalize("abcab").unwrap();
        prop_assert_eq!(
            a.score(&probe).total_logprob.to_bits(),
            b.score(&probe).total_logprob.to_bits()
        );
    }

    // Duplicating a corpus word never lowers that word's own score on an
    // order-1 model (with no new tagged types, the smoothed estimate is
    // the maximizer of the augmented pseudo-count likelihood).
    #[test]
    fn order1_score_is_monotone_in_own_count(
        words in prop::collection::vec("[a-c]{1,4}", 1..10),
        pick in any::<prop::sample::Index>(),
    ) {
        let base = lift(&words);
        let x = base[pick.index(base.len())].clone();
        let before = CharLm::train(&base, 1, 1).unwrap().score(&x).total_logprob;
        let mut aug = base.clone();
        aug.push(x.clone());
        let after = CharLm::train(&aug, 1, 1).unwrap().score(&x).total_logprob;
        prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
    }

    #[test]
    fn clustering_is_permutation_invariant(
        entries in prop::collection::vec(("[a-c]{1,3}", prop::collection::vec("[ptks]", 1..3)), 2..14),
        shuffle in any::<prop::sample::Index>(),
    ) {
        let n = norm();
        let inv = PhoneInventory::default();
        let lex: Vec<LexiconEntry> = entries
            .iter()
            .map(|(w, ph)| LexiconEntry {
                written: n.normalize(w).unwrap(),
                phones: PhoneSeq::parse(&ph.join(" "), &inv, 0).unwrap(),
            })
            .collect();
        let mut shuffled = lex.clone();
        let rot = shuffle.index(shuffled.len().max(1));
        shuffled.rotate_left(rot);
        let words: Vec<WrittenForm> = lex.iter().map(|e| e.written.clone()).collect();
        let lm = CharLm::train(&words, 2, 1).unwrap();

        let a = assign_roots(build_clusters(&lex), &lm, 1).unwrap();
        let b = assign_roots(build_clusters(&shuffled), &lm, 1).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.key, &y.key);
            prop_assert_eq!(&x.members, &y.members);
            prop_assert_eq!(&x.root, &y.root);
        }
        prop_assert_eq!(emit_pairs(&a), emit_pairs(&b));
    }

    #[test]
    fn root_agrees_with_exhaustive_scoring(
        entries in prop::collection::vec(("[ab]{1,3}", "[pt]"), 2..10),
    ) {
        let n = norm();
        let inv = PhoneInventory::default();
        let lex: Vec<LexiconEntry> = entries
            .iter()
            .map(|(w, ph)| LexiconEntry {
                written: n.normalize(w).unwrap(),
                phones: PhoneSeq::parse(ph, &inv, 0).unwrap(),
            })
            .collect();
        let words: Vec<WrittenForm> = lex.iter().map(|e| e.written.clone()).collect();
        let lm = CharLm::train(&words, 2, 1).unwrap();
        for cluster in assign_roots(build_clusters(&lex), &lm, 1).unwrap() {
            let best = cluster
                .members
                .iter()
                .map(|m| (m, lm.score(m)))
                .max_by(|(ma, sa), (mb, sb)| {
                    sa.normalized
                        .partial_cmp(&sb.normalized)
                        .unwrap()
                        .then(sa.total_logprob.partial_cmp(&sb.total_logprob).unwrap())
                        .then(mb.cmp(ma))
                })
                .unwrap()
                .0;
            prop_assert_eq!(&cluster.root, best);
        }
    }

    #[test]
    fn em_loglik_never_decreases(
        pairs in prop::collection::vec(("[ab]{1,3}", "[ab]{1,3}"), 1..8),
    ) {
        let n = norm();
        let wpairs: Vec<(WrittenForm, WrittenForm)> = pairs
            .iter()
            .map(|(s, t)| (n.normalize(s).unwrap(), n.normalize(t).unwrap()))
            .collect();
        let (model, report) = align_em(&wpairs, &AlignConfig::default(), 1).unwrap();
        for win in report.loglik_per_iter.windows(2) {
            prop_assert!(win[1] >= win[0] - 1e-9, "{} -> {}", win[0], win[1]);
        }
        for (s, t) in &wpairs {
            let path = viterbi_align(s, t, &model).unwrap();
            let src: String = path.iter().map(|u| u.source.as_str()).collect();
            let tgt: String = path.iter().map(|u| u.target.as_str()).collect();
            prop_assert_eq!(src, s.as_str());
            prop_assert_eq!(tgt, t.as_str());
        }
    }
}

// Budget sweep properties need a trained model; build it once.
fn sweep_model() -> &'static g2g_core::model::G2gModel {
    use std::sync::OnceLock;
    static MODEL: OnceLock<g2g_core::model::G2gModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let n = norm();
        let pairs: Vec<(WrittenForm, WrittenForm)> = [
            ("Kaity", "Katie"),
            ("Sera", "Sarah"),
            ("Ly", "Lee"),
            ("Coce", "Koche"),
            ("Liesl", "Leisel"),
        ]
        .iter()
        .map(|(s, t)| (n.normalize(s).unwrap(), n.normalize(t).unwrap()))
        .collect();
        train_g2g_from_pair_list(&pairs, &PipelineConfig::default())
            .unwrap()
            .0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn variant_budget_is_monotone_and_deduped(
        name in "[A-Z][a-z]{1,6}",
        mode in prop::sample::select(vec![MixMode::Mixed, MixMode::G2gOnly, MixMode::DefaultsOnly]),
    ) {
        let n = norm();
        let model = sweep_model();
        let w = n.normalize(&name).unwrap();
        let mut prev: Option<Vec<String>> = None;
        for n_max in 1..=5usize {
            let set = generate_variants(
                model,
                &w,
                VariantBudget::new(n_max).unwrap(),
                mode,
                500,
                &n,
            );
            prop_assert!(!set.variants.is_empty());
            prop_assert!(set.variants.len() <= n_max);
            let rendered: Vec<String> = set.variants.iter().map(|v| v.to_string()).collect();
            let distinct: BTreeSet<&String> = rendered.iter().collect();
            prop_assert_eq!(distinct.len(), rendered.len());
            if mode == MixMode::Mixed {
                prop_assert_eq!(
                    rendered[0].clone(),
                    g2g_core::grapheme::am_units_for(&w).to_string()
                );
            }
            if let Some(p) = prev {
                prop_assert!(rendered.len() >= p.len());
                prop_assert!(rendered.starts_with(&p));
            }
            prev = Some(rendered);
        }
    }
}
