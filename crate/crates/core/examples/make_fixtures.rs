//! Regenerates the bundled fixtures:
//!
//! * `fixtures/mr_2000.csv`: 2,000 short movie-review sentences in
//!   `label,text` form, balanced, with some label noise and mixed reviews.
//! * `fixtures/embeddings_50d.txt`: a GloVe-format store of about 2,000
//!   words in 50 dimensions in which near-synonyms share a cluster.
//!
//! Synonym clusters deliberately mix words whose usage in the corpus leans
//! the other way (a "rare combination" is praise, a "sparse plot" is not),
//! the way general-purpose embeddings do.
//!
//! Usage: `cargo run --example make_fixtures -- [output_dir]`

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 50;
const N_REVIEWS: usize = 2000;
const STORE_SIZE: usize = 2000;
const LABEL_NOISE: f64 = 0.08;
const MIXED_FRACTION: f64 = 0.12;

/// A synonym cluster: words used with the cluster's own polarity, words the
/// corpus uses with the opposite polarity, and words absent from the corpus.
struct Cluster {
    own: &'static [&'static str],
    opposite: &'static [&'static str],
    unseen: &'static [&'static str],
}

const POSITIVE: &[Cluster] = &[
    Cluster { own: &["clever", "smart", "witty"], opposite: &["calculated", "slick"], unseen: &["shrewd", "astute"] },
    Cluster { own: &["brilliant", "superb", "excellent"], opposite: &["flashy"], unseen: &["stellar", "splendid"] },
    Cluster { own: &["moving", "touching", "poignant"], opposite: &["sentimental", "weepy"], unseen: &["stirring", "affecting"] },
    Cluster { own: &["funny", "hilarious", "amusing"], opposite: &["goofy", "zany"], unseen: &["comical", "droll"] },
    Cluster { own: &["beautiful", "gorgeous", "lovely"], opposite: &["pretty", "glossy"], unseen: &["exquisite", "radiant"] },
    Cluster { own: &["engaging", "gripping", "compelling"], opposite: &["busy", "frantic"], unseen: &["riveting", "absorbing"] },
    Cluster { own: &["rare", "unique", "fresh"], opposite: &["sparse", "odd"], unseen: &["uncommon", "novel"] },
    Cluster { own: &["charming", "delightful", "sweet"], opposite: &["cute", "sugary"], unseen: &["endearing", "winsome"] },
    Cluster { own: &["powerful", "intense", "strong"], opposite: &["heavy", "loud"], unseen: &["potent", "forceful"] },
    Cluster { own: &["wonderful", "terrific", "great"], opposite: &["grand", "overblown"], unseen: &["marvelous", "fabulous"] },
    Cluster { own: &["smooth", "polished", "assured"], opposite: &["glib", "canned"], unseen: &["sleek", "refined"] },
];

const NEGATIVE: &[Cluster] = &[
    Cluster { own: &["dull", "boring", "tedious"], opposite: &["quiet", "calm"], unseen: &["drab", "monotonous"] },
    Cluster { own: &["stupid", "silly", "dumb"], opposite: &["playful", "light"], unseen: &["idiotic", "inane"] },
    Cluster { own: &["mess", "disaster", "failure"], opposite: &["wild", "chaos"], unseen: &["fiasco", "debacle"] },
    Cluster { own: &["bland", "flat", "lifeless"], opposite: &["gentle", "subtle"], unseen: &["insipid", "vapid"] },
    Cluster { own: &["predictable", "formulaic", "stale"], opposite: &["familiar", "classic"], unseen: &["hackneyed", "trite"] },
    Cluster { own: &["awful", "terrible", "dreadful"], opposite: &["wicked", "fierce"], unseen: &["horrid", "atrocious"] },
    Cluster { own: &["slow", "plodding", "sluggish"], opposite: &["patient", "deliberate"], unseen: &["leaden", "ponderous"] },
    Cluster { own: &["clumsy", "awkward", "sloppy"], opposite: &["raw", "rough"], unseen: &["inept", "bungling"] },
    Cluster { own: &["annoying", "irritating", "grating"], opposite: &["bold", "brash"], unseen: &["tiresome", "vexing"] },
    Cluster { own: &["pointless", "empty", "hollow"], opposite: &["spare", "minimal"], unseen: &["aimless", "futile"] },
    Cluster { own: &["ugly", "cheap", "shoddy"], opposite: &["gritty", "modest"], unseen: &["tacky", "chintzy"] },
];

/// Neutral clusters; every member appears in reviews of both classes.
const NEUTRAL: &[&[&str]] = &[
    &["film", "movie", "picture"],
    &["story", "plot", "narrative", "tale"],
    &["screenplay", "script", "writing"],
    &["performance", "acting", "turn"],
    &["cast", "ensemble", "actors"],
    &["director", "filmmaker"],
    &["ending", "finale", "conclusion"],
    &["characters", "heroes", "people"],
    &["dialogue", "lines", "conversation"],
    &["scene", "sequence", "moment"],
    &["offers", "provides", "delivers", "prescribes"],
    &["combination", "mix", "blend", "mixture"],
    &["entertainment", "fun", "diversion"],
    &["education", "lesson", "instruction"],
    &["comedy", "satire", "farce"],
    &["drama", "melodrama", "thriller"],
    &["romance", "love", "affair"],
    &["music", "score", "soundtrack"],
    &["camera", "cinematography", "photography"],
    &["pace", "pacing", "rhythm", "tempo"],
    &["humor", "jokes", "gags"],
    &["audience", "viewers", "crowd"],
    &["year", "season", "summer"],
    &["hour", "minutes", "running"],
    &["family", "kids", "children"],
    &["war", "battle", "conflict"],
    &["city", "town", "village"],
    &["mystery", "puzzle", "riddle"],
    &["feels", "seems", "plays"],
    &["turns", "becomes", "grows"],
];

const INTENSIFIERS: &[&str] = &["very", "so", "quite", "really", "truly", "often", "mostly"];
const DIRECTORS: &[&str] = &["the director", "the filmmaker", "the writer", "this cast", "the star"];

struct Lexicon {
    positive: Vec<&'static str>,
    negative: Vec<&'static str>,
    /// Words the corpus uses with the other polarity than their cluster.
    positive_flavored: Vec<&'static str>,
    negative_flavored: Vec<&'static str>,
}

impl Lexicon {
    fn new() -> Self {
        let flat = |clusters: &[Cluster], pick: fn(&Cluster) -> &'static [&'static str]| {
            clusters.iter().flat_map(|c| pick(c).iter().copied()).collect::<Vec<_>>()
        };
        Lexicon {
            positive: flat(POSITIVE, |c| c.own),
            negative: flat(NEGATIVE, |c| c.own),
            // Opposite members of negative clusters read as positive, and vice versa.
            positive_flavored: flat(NEGATIVE, |c| c.opposite),
            negative_flavored: flat(POSITIVE, |c| c.opposite),
        }
    }

    fn sentiment(&self, rng: &mut ChaCha8Rng, positive: bool) -> &'static str {
        let (main, flavored) = if positive {
            (&self.positive, &self.positive_flavored)
        } else {
            (&self.negative, &self.negative_flavored)
        };
        if rng.gen_bool(0.25) {
            flavored.choose(rng).unwrap()
        } else {
            main.choose(rng).unwrap()
        }
    }
}

fn neutral(rng: &mut ChaCha8Rng, cluster: usize) -> &'static str {
    NEUTRAL[cluster].choose(rng).unwrap()
}

fn noun(rng: &mut ChaCha8Rng) -> &'static str {
    let nouns = [0, 1, 2, 3, 4, 6, 7, 8, 9, 12, 14, 15, 16, 17, 18, 19, 20, 25, 26, 27];
    let cluster = *nouns.choose(rng).unwrap();
    neutral(rng, cluster)
}

fn clause(rng: &mut ChaCha8Rng, lex: &Lexicon, positive: bool) -> String {
    let s = |rng: &mut ChaCha8Rng| lex.sentiment(rng, positive);
    let int = |rng: &mut ChaCha8Rng| *INTENSIFIERS.choose(rng).unwrap();
    match rng.gen_range(0..10) {
        0 => format!("the {} is {} {}", noun(rng), int(rng), s(rng)),
        1 => format!(
            "{} {} a {} {} of {} and {}",
            DIRECTORS.choose(rng).unwrap(),
            neutral(rng, 10),
            s(rng),
            neutral(rng, 11),
            neutral(rng, 12),
            neutral(rng, 13)
        ),
        2 => format!("it's {} {} , with {} {}", int(rng), s(rng), s(rng), noun(rng)),
        3 => format!("a {} {} that {} {} {}", s(rng), noun(rng), neutral(rng, 29), int(rng), s(rng)),
        4 => format!("the {} {} {} from start to finish", noun(rng), neutral(rng, 28), s(rng)),
        5 => format!("{} {} {} and a {} {}", int(rng), s(rng), noun(rng), s(rng), noun(rng)),
        6 => format!("this {} {} is {} but {}", neutral(rng, 0), neutral(rng, 14), s(rng), s(rng)),
        7 => format!("you will find the {} {} and the {} {}", noun(rng), s(rng), noun(rng), s(rng)),
        8 => format!("a {} {} {} for the {}", int(rng), s(rng), neutral(rng, 15), neutral(rng, 21)),
        _ => format!("{} {} in a {} {}", neutral(rng, 29), s(rng), s(rng), noun(rng)),
    }
}

fn review(rng: &mut ChaCha8Rng, lex: &Lexicon, label: u8) -> String {
    let positive = label == 1;
    let mixed = rng.gen_bool(MIXED_FRACTION);
    let n_clauses = rng.gen_range(2..=3);
    let mut parts = Vec::with_capacity(n_clauses);
    for i in 0..n_clauses {
        // Mixed reviews carry one clause of the other polarity.
        let polarity = if mixed && i == 0 { !positive } else { positive };
        parts.push(clause(rng, lex, polarity));
    }
    let joiner = [" , and ", " ; ", " , ", " . "];
    let mut text = parts[0].clone();
    for part in &parts[1..] {
        text.push_str(joiner.choose(rng).unwrap());
        text.push_str(part);
    }
    text.push_str(if rng.gen_bool(0.15) { " !" } else { " ." });
    text
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| gaussian(rng)).collect()
}

fn near(rng: &mut ChaCha8Rng, center: &[f64], spread: f64) -> Vec<f64> {
    center.iter().map(|c| c + spread * gaussian(rng)).collect()
}

fn filler_word(rng: &mut ChaCha8Rng) -> String {
    const ONSETS: &[&str] = &["b", "br", "c", "d", "f", "g", "gl", "k", "l", "m", "n", "p", "pr", "r", "s", "st", "t", "tr", "v", "w", "z"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "ea"];
    const CODAS: &[&str] = &["", "n", "r", "l", "s", "t", "m", "nd", "rk", "st"];
    let syllables = rng.gen_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(VOWELS.choose(rng).unwrap());
    }
    w.push_str(CODAS.choose(rng).unwrap());
    w
}

fn embeddings(rng: &mut ChaCha8Rng, extra_words: &[&str]) -> Vec<(String, Vec<f64>)> {
    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut add = |entries: &mut Vec<(String, Vec<f64>)>, word: &str, v: Vec<f64>| {
        if seen.insert(word.to_string()) {
            entries.push((word.to_string(), v));
        }
    };
    for cluster in POSITIVE.iter().chain(NEGATIVE) {
        let center = random_vector(rng);
        for w in cluster.own.iter().chain(cluster.opposite).chain(cluster.unseen) {
            let v = near(rng, &center, 0.45);
            add(&mut entries, w, v);
        }
    }
    for cluster in NEUTRAL {
        let center = random_vector(rng);
        for w in cluster.iter() {
            let v = near(rng, &center, 0.45);
            add(&mut entries, w, v);
        }
    }
    for w in extra_words {
        let v = random_vector(rng);
        add(&mut entries, w, v);
    }
    while entries.len() < STORE_SIZE {
        let w = filler_word(rng);
        let v = random_vector(rng);
        add(&mut entries, &w, v);
    }
    entries
}

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let lex = Lexicon::new();

    let mut csv = String::from("label,text\n");
    for i in 0..N_REVIEWS {
        let label = (i % 2) as u8;
        let text = review(&mut rng, &lex, label);
        let shown = if rng.gen_bool(LABEL_NOISE) { 1 - label } else { label };
        let _ = writeln!(csv, "{shown},{}", csv_field(&text));
    }
    std::fs::write(out.join("mr_2000.csv"), csv)?;

    let mut extra: Vec<&str> = INTENSIFIERS.to_vec();
    extra.extend(["director", "filmmaker", "writer", "star", "start", "finish", "find", "will"]);
    let mut store = String::new();
    for (word, v) in embeddings(&mut rng, &extra) {
        let _ = write!(store, "{word}");
        for x in v {
            let _ = write!(store, " {x:.5}");
        }
        store.push('\n');
    }
    std::fs::write(out.join("embeddings_50d.txt"), store)?;
    println!("wrote fixtures to {}", out.display());
    Ok(())
}
