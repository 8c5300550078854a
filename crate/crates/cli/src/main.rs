//! `g2g` — train respelling models and build graphemic decoding lexicons.
//!
//! Subcommands: `train-charlm`, `cluster`, `train-g2g`, `apply`,
//! `build-lexicon`. Exit codes: 0 success, 1 data/IO error, 2 usage
//! error. All commands are deterministic: identical inputs produce
//! byte-identical artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use g2g_core::charlm::CharLm;
use g2g_core::config::PipelineConfig;
use g2g_core::decode::decode_topn;
use g2g_core::grapheme::{GraphemeAlphabet, Normalizer, Transliterator, am_units_for};
use g2g_core::homophone::{PhoneInventory, assign_roots, build_clusters, emit_pairs, read_lexicon,
    write_clusters, write_pairs};
use g2g_core::model::G2gModel;
use g2g_core::pipeline::{
    TrainArtifacts, VariantBudget, build_decoding_lexicon, read_names_file, read_words_file,
    train_g2g_from_pairs, train_g2g_hom, write_lexicon,
};
use g2g_core::run_with_jobs;

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (model format v1, charlm format v1)"
);

#[derive(Parser)]
#[command(name = "g2g", version = VERSION, about = "Grapheme-to-grapheme respelling toolkit")]
struct Cli {
    /// Config file (key = value); command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads: 1 = sequential, 0 = all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Grapheme alphabet file (one symbol per line).
    #[arg(long, global = true)]
    alphabet: Option<PathBuf>,

    /// Transliteration table (source<TAB>replacement).
    #[arg(long, global = true)]
    translit: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the position-tagged character LM from a word list.
    TrainCharlm(TrainCharlmArgs),
    /// Build homophone clusters and (member, root) pairs from a lexicon.
    Cluster(ClusterArgs),
    /// Train a grapheme-to-grapheme model from pairs or a lexicon.
    TrainG2g(TrainG2gArgs),
    /// Decode respellings for a word or a file of words.
    Apply(ApplyArgs),
    /// Build a decoding lexicon with per-name pronunciation variants.
    BuildLexicon(BuildLexiconArgs),
}

#[derive(Args)]
struct TrainCharlmArgs {
    /// Word corpus, one word per line.
    #[arg(long)]
    words: PathBuf,
    /// N-gram order.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    order: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Phonetic lexicon: written<TAB>phone phone ...
    #[arg(long)]
    lexicon: PathBuf,
    /// Trained character LM used for root selection.
    #[arg(long)]
    charlm: PathBuf,
    /// Phone inventory file (one X-SAMPA symbol per line).
    #[arg(long)]
    phones: Option<PathBuf>,
    #[arg(long)]
    out_clusters: PathBuf,
    #[arg(long)]
    out_pairs: PathBuf,
}

#[derive(Args)]
struct TrainG2gArgs {
    /// Respelling pairs: source<TAB>target.
    #[arg(long, conflicts_with = "lexicon", required_unless_present = "lexicon")]
    pairs: Option<PathBuf>,
    /// Phonetic lexicon for the homophone path; requires --charlm.
    #[arg(long, requires = "charlm")]
    lexicon: Option<PathBuf>,
    /// Character LM for homophone root selection.
    #[arg(long)]
    charlm: Option<PathBuf>,
    /// Phone inventory file for the homophone path.
    #[arg(long)]
    phones: Option<PathBuf>,
    /// Joint-unit n-gram order.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    order: Option<u32>,
    /// Segment caps as `source,target` (default 2,2).
    #[arg(long)]
    caps: Option<String>,
    /// Write the homophone clusters here (lexicon path only).
    #[arg(long)]
    out_clusters: Option<PathBuf>,
    /// Write the training pairs here (lexicon path only).
    #[arg(long)]
    out_pairs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    model: PathBuf,
    /// A word, or a path to a file of words.
    #[arg(long)]
    input: String,
    /// Hypotheses per word.
    #[arg(short, value_parser = clap::value_parser!(u32).range(1..))]
    n: Option<u32>,
    #[arg(long)]
    beam: Option<usize>,
}

#[derive(Args)]
struct BuildLexiconArgs {
    #[arg(long)]
    model: PathBuf,
    /// Names file, one per line.
    #[arg(long)]
    names: PathBuf,
    /// Variant budget, or a comma-separated sweep like `2,3,4,5`
    /// (a sweep writes one file per N with an `.nK` suffix).
    #[arg(short)]
    n: Option<String>,
    /// mixed | g2g-only | defaults-only.
    #[arg(long)]
    mode: Option<String>,
    /// Emit per-variant scores as a fourth column.
    #[arg(long)]
    scores: bool,
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        cfg.merge_file(path)?;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }

    let alphabet = match &cli.alphabet {
        Some(path) => GraphemeAlphabet::from_file(path)?,
        None => GraphemeAlphabet::default(),
    };
    let translit = match &cli.translit {
        Some(path) => Transliterator::from_file(path)?,
        None => Transliterator::default(),
    };
    let normalizer = Normalizer::new(alphabet, translit)?;

    let jobs = cfg.jobs;
    run_with_jobs(jobs, move || match cli.command {
        Command::TrainCharlm(args) => cmd_train_charlm(args, cfg, &normalizer),
        Command::Cluster(args) => cmd_cluster(args, cfg, &normalizer),
        Command::TrainG2g(args) => cmd_train_g2g(args, cfg, &normalizer),
        Command::Apply(args) => cmd_apply(args, cfg, &normalizer),
        Command::BuildLexicon(args) => cmd_build_lexicon(args, cfg, &normalizer),
    })
}

fn cmd_train_charlm(
    args: TrainCharlmArgs,
    mut cfg: PipelineConfig,
    normalizer: &Normalizer,
) -> Result<(), CliError> {
    if let Some(order) = args.order {
        cfg.charlm_order = order as usize;
    }
    let words = read_words_file(&args.words, normalizer)?;
    let lm = CharLm::train(&words, cfg.charlm_order, cfg.jobs)?;
    lm.save(&args.out)?;
    println!(
        "trained char LM: {} words, vocab {}, order {} -> {}",
        words.len(),
        lm.vocab_len(),
        lm.order(),
        args.out.display()
    );
    Ok(())
}

fn load_phones(path: &Option<PathBuf>) -> Result<PhoneInventory, CliError> {
    Ok(match path {
        Some(p) => PhoneInventory::from_file(p)?,
        None => PhoneInventory::default(),
    })
}

fn cmd_cluster(
    args: ClusterArgs,
    cfg: PipelineConfig,
    normalizer: &Normalizer,
) -> Result<(), CliError> {
    let inventory = load_phones(&args.phones)?;
    let charlm = CharLm::load(&args.charlm)?;
    let entries = read_lexicon(&args.lexicon, &inventory, normalizer)?;
    let clusters = assign_roots(build_clusters(&entries), &charlm, cfg.jobs)?;
    let pairs = emit_pairs(&clusters);
    write_clusters(&args.out_clusters, &clusters)?;
    write_pairs(&args.out_pairs, &pairs)?;
    println!(
        "clusters\t{}\t{}",
        clusters.len(),
        args.out_clusters.display()
    );
    println!("pairs\t{}\t{}", pairs.len(), args.out_pairs.display());
    Ok(())
}

fn parse_caps(caps: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--caps expects `source,target`, got {caps:?}"));
    let (s, t) = caps.split_once(',').ok_or_else(bad)?;
    let s: usize = s.trim().parse().map_err(|_| bad())?;
    let t: usize = t.trim().parse().map_err(|_| bad())?;
    if s < 1 || t < 1 {
        return Err(CliError::Usage("segment caps must be >= 1".into()));
    }
    Ok((s, t))
}

fn cmd_train_g2g(
    args: TrainG2gArgs,
    mut cfg: PipelineConfig,
    normalizer: &Normalizer,
) -> Result<(), CliError> {
    if let Some(order) = args.order {
        cfg.graphone_order = order as usize;
    }
    if let Some(caps) = &args.caps {
        let (s, t) = parse_caps(caps)?;
        cfg.align.max_source_seg = s;
        cfg.align.max_target_seg = t;
    }

    let (model, report) = if let Some(pairs_path) = &args.pairs {
        train_g2g_from_pairs(pairs_path, &cfg, normalizer)?
    } else {
        let lexicon = args.lexicon.as_ref().expect("clap enforces the source group");
        let charlm_path = args
            .charlm
            .as_ref()
            .ok_or_else(|| CliError::Usage("--lexicon requires --charlm".into()))?;
        let charlm = CharLm::load(charlm_path)?;
        let inventory = load_phones(&args.phones)?;
        let artifacts = TrainArtifacts {
            clusters_path: args.out_clusters.clone(),
            pairs_path: args.out_pairs.clone(),
        };
        let out = train_g2g_hom(lexicon, &charlm, &cfg, normalizer, &inventory, &artifacts)?;
        println!("clusters\t{}", out.cluster_count);
        println!("pairs\t{}", out.pair_count);
        (out.model, out.report)
    };

    for (i, ll) in report.loglik_per_iter.iter().enumerate() {
        println!("em iter {}\tloglik {:.6}", i + 1, ll);
    }
    println!(
        "em {} after {} iterations",
        if report.converged { "converged" } else { "stopped" },
        report.iterations
    );
    model.save(&args.out)?;
    println!(
        "model: {} units, lm order {} -> {}",
        model.alignment().len(),
        model.lm_order(),
        args.out.display()
    );
    Ok(())
}

fn cmd_apply(
    args: ApplyArgs,
    cfg: PipelineConfig,
    normalizer: &Normalizer,
) -> Result<(), CliError> {
    let n = args.n.map(|v| v as usize).unwrap_or(5);
    let beam = args.beam.unwrap_or(cfg.beam);
    if beam < n {
        return Err(CliError::Usage(format!("--beam {beam} must be >= -n {n}")));
    }
    let model = G2gModel::load(&args.model)?;

    let input_path = Path::new(&args.input);
    let raw_words: Vec<String> = if input_path.is_file() {
        std::fs::read_to_string(input_path)
            .map_err(|e| CliError::Data(format!("{}: {e}", input_path.display())))?
            .split_whitespace()
            .map(String::from)
            .collect()
    } else {
        vec![args.input.clone()]
    };
    if raw_words.is_empty() {
        return Err(CliError::Data(format!("{}: no words", args.input)));
    }

    let mut succeeded = 0usize;
    let mut out = String::new();
    for raw in &raw_words {
        let word = match normalizer.normalize(raw) {
            Ok(w) => w,
            Err(e) => {
                eprintln!("{raw}: {e}");
                continue;
            }
        };
        match decode_topn(&model, &word, n, beam) {
            Ok(hyps) => {
                for h in hyps {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{:.6}",
                        word,
                        h.rank,
                        am_units_for(&h.output),
                        h.logprob
                    );
                }
                succeeded += 1;
            }
            Err(e) => eprintln!("{word}: {e}"),
        }
    }
    print!("{out}");
    if succeeded == 0 {
        return Err(CliError::Data("no word could be decoded".into()));
    }
    Ok(())
}

fn sweep_path(out: &Path, n: usize, multi: bool) -> PathBuf {
    if !multi {
        return out.to_path_buf();
    }
    match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => out.with_extension(format!("n{n}.{ext}")),
        None => {
            let mut p = out.as_os_str().to_os_string();
            p.push(format!(".n{n}"));
            PathBuf::from(p)
        }
    }
}

fn cmd_build_lexicon(
    args: BuildLexiconArgs,
    mut cfg: PipelineConfig,
    normalizer: &Normalizer,
) -> Result<(), CliError> {
    if let Some(mode) = &args.mode {
        cfg.mode = mode.parse().map_err(CliError::Usage)?;
    }
    let budgets: Vec<usize> = match &args.n {
        None => vec![cfg.n_max],
        Some(spec) => {
            let parsed: Result<Vec<usize>, _> =
                spec.split(',').map(|v| v.trim().parse::<usize>()).collect();
            let list = parsed
                .map_err(|_| CliError::Usage(format!("-n expects integers, got {spec:?}")))?;
            if list.is_empty() || list.iter().any(|&v| v < 1) {
                return Err(CliError::Usage("-n values must be >= 1".into()));
            }
            list
        }
    };
    if cfg.beam < *budgets.iter().max().expect("non-empty") {
        return Err(CliError::Usage(format!(
            "beam {} must be >= the largest -n value",
            cfg.beam
        )));
    }

    let model = G2gModel::load(&args.model)?;
    let names_file = read_names_file(&args.names, normalizer)?;
    for (line, msg) in &names_file.skipped {
        eprintln!("{}:{line}: skipped: {msg}", args.names.display());
    }
    if names_file.names.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no usable names",
            args.names.display()
        )));
    }

    let multi = budgets.len() > 1;
    for &n_max in &budgets {
        let budget = VariantBudget::new(n_max)?;
        let lexicon = build_decoding_lexicon(
            &names_file.names,
            &model,
            budget,
            cfg.mode,
            cfg.beam,
            normalizer,
            cfg.jobs,
        )?;
        let path = sweep_path(&args.out, n_max, multi);
        write_lexicon(&path, &lexicon, cfg.emit_scores || args.scores)?;
        println!(
            "n={} names {} variants {} fallbacks {} -> {}",
            n_max,
            lexicon.stats.names,
            lexicon.stats.total_variants,
            lexicon.stats.fallbacks,
            path.display()
        );
    }
    Ok(())
}
