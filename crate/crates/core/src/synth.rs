//! Deterministic generator for the bundled synthetic homophone lexicon
//! (`data/synthetic_homophones.tsv`).
//!
//! Each base word becomes a cluster of three spellings sharing one
//! pseudo-phone key: the base plus two variants produced by systematic
//! respelling rules (c/k, f/ph, ee/ea, -er/-ur, -le/-el, doubling, ...).
//! Because the rules repeat across clusters, a transducer trained with
//! one member held out per cluster can recover the respelling pattern
//! from the remaining data. A test asserts the committed file matches
//! this generator.

use std::collections::BTreeSet;

const BASES: &[&str] = &[
    "able", "acre", "almond", "amber", "anchor", "animal", "answer", "apple", "arrow", "autumn",
    "bacon", "badge", "baker", "balance", "ballad", "bamboo", "banner", "barley", "basket",
    "beacon", "beaver", "belly", "berry", "bishop", "blanket", "blossom", "bonnet", "border",
    "bottle", "bracket", "branch", "bread", "breeze", "brick", "bridge", "bright", "brook",
    "bucket", "bundle", "butter", "cabin", "cable", "camel", "candle", "canvas", "carbon",
    "carpet", "castle", "cattle", "cellar", "chapel", "cherry", "circle", "clover", "cobalt",
    "coffee", "collar", "copper", "coral", "corner", "cotton", "cradle", "creek", "cricket",
    "crystal", "curtain", "daisy", "dancer", "dapple", "dinner", "dollar", "dolphin", "donkey",
    "dragon", "drain", "dream", "driver", "eagle", "early", "easel", "fabric", "falcon", "fancy",
    "feather", "fellow", "fiddle", "finger", "flavor", "fleet", "flock", "flower", "follow",
    "forest", "fountain", "freckle", "frost", "funnel", "garden", "garlic", "gentle", "ginger",
    "glacier", "goblet", "grain", "gravel", "green", "hammer", "hamlet", "handle", "harbor",
    "hazel", "heather", "hollow", "honey", "hunter", "indigo", "island", "ivory", "jacket",
    "jasmine", "jelly", "jolly", "kettle", "kernel", "kitten", "ladder", "lantern", "laurel",
    "lemon", "letter", "lily", "linen", "lizard", "lucky", "mantle", "maple", "marble", "meadow",
    "mellow", "melon", "mill", "mirror", "monkey", "morning", "mountain", "muffin", "music",
    "mustard", "napkin", "needle", "nickel", "noble", "oak", "ocean", "olive", "orange", "otter",
    "paddle", "panel", "pantry", "parade", "parcel", "pearl", "pebble", "pepper", "pickle",
    "pigeon", "pillow", "pine", "pocket", "pony", "poplar", "puddle", "pumpkin", "puppy",
    "quarry", "quiet", "rabbit", "raven", "reed", "ribbon", "river", "robin", "saddle", "salmon",
    "sandal", "satchel", "scarlet", "shadow", "shell", "silver", "simple", "sorrel", "sparrow",
    "spice", "spindle", "spring", "squirrel", "stable", "steeple", "stone", "summer", "sunny",
    "table", "tailor", "tassel", "thimble", "timber", "tunnel", "turnip", "valley", "velvet",
    "wagon", "walnut", "weasel", "willow", "window", "winter", "wonder", "yellow",
];

const CLUSTER_TARGET: usize = 200;

/// Injective letter-to-phone map used to mint one phone key per base.
fn phone_for(ch: char) -> &'static str {
    match ch {
        'a' => "{",
        'b' => "b",
        'c' => "tS",
        'd' => "d",
        'e' => "E",
        'f' => "f",
        'g' => "g",
        'h' => "h",
        'i' => "I",
        'j' => "dZ",
        'k' => "k",
        'l' => "l",
        'm' => "m",
        'n' => "n",
        'o' => "Q",
        'p' => "p",
        'q' => "aU",
        'r' => "r\\",
        's' => "s",
        't' => "t",
        'u' => "U",
        'v' => "v",
        'w' => "w",
        'x' => "Z",
        'y' => "j",
        'z' => "z",
        _ => panic!("base words are lowercase ascii letters"),
    }
}

fn replace_first(word: &str, from: &str, to: &str) -> Option<String> {
    word.find(from).map(|i| {
        let mut out = String::with_capacity(word.len() + to.len());
        out.push_str(&word[..i]);
        out.push_str(to);
        out.push_str(&word[i + from.len()..]);
        out
    })
}

fn swap_c_for_k(word: &str) -> Option<String> {
    let bytes = word.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'c' && bytes.get(i + 1) != Some(&b'h') && bytes.get(i + 1) != Some(&b'k') {
            let mut out = word.to_string();
            out.replace_range(i..i + 1, "k");
            return Some(out);
        }
    }
    None
}

fn double_internal_consonant(word: &str) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    for i in 1..chars.len().saturating_sub(1) {
        let c = chars[i];
        if "bdglmnprst".contains(c) && chars[i - 1] != c && chars[i + 1] != c {
            let mut out = String::new();
            out.extend(&chars[..=i]);
            out.push(c);
            out.extend(&chars[i + 1..]);
            return Some(out);
        }
    }
    None
}

fn respelling_rules(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |v: Option<String>| {
        if let Some(v) = v.filter(|v| v != word && !out.contains(v)) {
            out.push(v);
        }
    };
    push(swap_c_for_k(word));
    push(replace_first(word, "k", "c"));
    push(replace_first(word, "ph", "f"));
    push(replace_first(word, "f", "ph").filter(|_| !word.contains("ph")));
    push(replace_first(word, "ee", "ea"));
    push(replace_first(word, "ea", "ee"));
    push(word.strip_suffix('y').map(|stem| format!("{stem}ie")));
    push(word.strip_suffix("ie").map(|stem| format!("{stem}y")));
    push(replace_first(word, "ai", "ay"));
    push(replace_first(word, "ay", "ai"));
    push(replace_first(word, "oo", "ou"));
    push(replace_first(word, "er", "ur"));
    push(
        word.strip_suffix("le")
            .filter(|stem| !stem.is_empty())
            .map(|stem| format!("{stem}el")),
    );
    push(double_internal_consonant(word));
    push({
        let last = word.chars().last().unwrap_or('e');
        if "aeiou".contains(last) {
            None
        } else {
            Some(format!("{word}e"))
        }
    });
    push(replace_first(word, "i", "y").filter(|_| !word.ends_with('i')));
    out
}

#[derive(Debug, Clone)]
pub struct SynthCluster {
    /// base spelling first, then its two respellings.
    pub members: Vec<String>,
    pub phones: Vec<String>,
}

/// The full rule-generated cluster set. Member spellings are globally
/// unique; rules rotate with the cluster index so every rule appears in
/// many clusters.
pub fn synthetic_clusters() -> Vec<SynthCluster> {
    let mut used: BTreeSet<String> = BASES.iter().map(|s| s.to_string()).collect();
    let mut clusters = Vec::with_capacity(CLUSTER_TARGET);
    for (idx, base) in BASES.iter().enumerate() {
        if clusters.len() == CLUSTER_TARGET {
            break;
        }
        let candidates: Vec<String> = respelling_rules(base)
            .into_iter()
            .filter(|v| !used.contains(v))
            .collect();
        if candidates.len() < 2 {
            continue;
        }
        let first = idx % candidates.len();
        let second = (idx + 1) % candidates.len();
        let (v1, v2) = (candidates[first].clone(), candidates[second].clone());
        used.insert(v1.clone());
        used.insert(v2.clone());
        let phones = base.chars().map(|c| phone_for(c).to_string()).collect();
        clusters.push(SynthCluster {
            members: vec![base.to_string(), v1, v2],
            phones,
        });
    }
    assert_eq!(clusters.len(), CLUSTER_TARGET, "not enough viable bases");
    clusters
}

/// Renders the cluster set as a phonetic-lexicon TSV
/// (`written<TAB>phone phone ...`).
pub fn synthetic_lexicon_tsv() -> String {
    let mut out = String::new();
    for cluster in synthetic_clusters() {
        let phones = cluster.phones.join(" ");
        for member in &cluster.members {
            out.push_str(member);
            out.push('\t');
            out.push_str(&phones);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_are_well_formed() {
        let clusters = synthetic_clusters();
        assert_eq!(clusters.len(), 200);
        let mut seen = BTreeSet::new();
        for c in &clusters {
            assert_eq!(c.members.len(), 3);
            for m in &c.members {
                assert!(seen.insert(m.clone()), "duplicate member {m}");
                assert!(m.chars().all(|ch| ch.is_ascii_lowercase()));
            }
            assert!(!c.phones.is_empty());
        }
    }

    #[test]
    fn keys_are_unique_per_cluster() {
        let clusters = synthetic_clusters();
        let keys: BTreeSet<String> = clusters.iter().map(|c| c.phones.join(" ")).collect();
        assert_eq!(keys.len(), clusters.len());
    }

    #[test]
    fn committed_lexicon_matches_generator() {
        let bundled = include_str!("../data/synthetic_homophones.tsv");
        assert_eq!(bundled, synthetic_lexicon_tsv());
    }

    #[test]
    #[ignore = "rewrites data/synthetic_homophones.tsv from the generator"]
    fn regenerate_bundled_lexicon() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_homophones.tsv");
        std::fs::write(path, synthetic_lexicon_tsv()).unwrap();
    }

    #[test]
    fn phone_map_is_injective() {
        let mut seen = BTreeSet::new();
        for ch in 'a'..='z' {
            assert!(seen.insert(phone_for(ch)), "phone for {ch} reused");
        }
    }
}
