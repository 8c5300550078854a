//! Sequential vs rayon comparison for the data-parallel sections:
//! EM alignment (per-pair expectation), character-LM count collection,
//! and batch variant generation. `jobs = 1` is the sequential path,
//! `jobs = 0` uses all cores; both produce identical output.

use criterion::{Criterion, criterion_group, criterion_main};
use std::hint::black_box;

use g2g_core::align::{AlignConfig, align_em};
use g2g_core::charlm::CharLm;
use g2g_core::config::{MixMode, PipelineConfig};
use g2g_core::data;
use g2g_core::grapheme::{Normalizer, WrittenForm};
use g2g_core::pipeline::{VariantBudget, build_decoding_lexicon, train_g2g_from_pair_list};
use g2g_core::synth;

fn normalizer() -> Normalizer {
    Normalizer::default()
}

fn synth_pairs() -> Vec<(WrittenForm, WrittenForm)> {
    let n = normalizer();
    synth::synthetic_clusters()
        .iter()
        .flat_map(|c| {
            let root = n.normalize(&c.members[0]).unwrap();
            c.members
                .iter()
                .map(|m| (n.normalize(m).unwrap(), root.clone()))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn wordlist() -> Vec<WrittenForm> {
    let n = normalizer();
    data::WORDLIST
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| n.normalize(l).unwrap())
        .collect()
}

fn bench_align_em(c: &mut Criterion) {
    let pairs = synth_pairs();
    let cfg = AlignConfig {
        max_iters: 10,
        min_gain: 0.0,
        ..AlignConfig::default()
    };
    let mut group = c.benchmark_group("align_em_600_pairs");
    group.sample_size(10);
    group.bench_function("jobs_1_sequential", |b| {
        b.iter(|| align_em(black_box(&pairs), &cfg, 1).unwrap())
    });
    group.bench_function("jobs_0_rayon", |b| {
        b.iter(|| align_em(black_box(&pairs), &cfg, 0).unwrap())
    });
    group.finish();
}

fn bench_charlm_train(c: &mut Criterion) {
    let words = wordlist();
    let mut group = c.benchmark_group("charlm_train_order10");
    group.sample_size(10);
    group.bench_function("jobs_1_sequential", |b| {
        b.iter(|| CharLm::train(black_box(&words), 10, 1).unwrap())
    });
    group.bench_function("jobs_0_rayon", |b| {
        b.iter(|| CharLm::train(black_box(&words), 10, 0).unwrap())
    });
    group.finish();
}

fn bench_variant_generation(c: &mut Criterion) {
    let n = normalizer();
    let pairs = synth_pairs();
    let (model, _) = train_g2g_from_pair_list(&pairs, &PipelineConfig::default()).unwrap();
    let names: Vec<WrittenForm> = data::NAMES100
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| n.normalize(l).unwrap())
        .collect();
    let budget = VariantBudget::new(5).unwrap();
    let mut group = c.benchmark_group("build_lexicon_100_names");
    group.sample_size(10);
    group.bench_function("jobs_1_sequential", |b| {
        b.iter(|| {
            build_decoding_lexicon(
                black_box(&names),
                &model,
                budget,
                MixMode::Mixed,
                500,
                &n,
                1,
            )
            .unwrap()
        })
    });
    group.bench_function("jobs_0_rayon", |b| {
        b.iter(|| {
            build_decoding_lexicon(
                black_box(&names),
                &model,
                budget,
                MixMode::Mixed,
                500,
                &n,
                0,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_align_em,
    bench_charlm_train,
    bench_variant_generation
);
criterion_main!(benches);
