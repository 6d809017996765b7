//! Replacement candidates for a single token.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AttackConfig, SubstitutionKind};
use crate::corpus::Token;
use crate::embeddings::EmbeddingStore;

const HOMOGLYPHS: [(char, char); 6] = [
    ('o', '0'),
    ('l', '1'),
    ('a', '@'),
    ('e', '3'),
    ('i', '1'),
    ('s', '5'),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub kind: SubstitutionKind,
}

/// Character index used for the typo edits of the token at `position`.
///
/// Drawn from `[1, len)` so the first character is never the edit target;
/// `None` for single-character words.
pub fn typo_index(seed: u64, position: usize, len: usize) -> Option<usize> {
    if len < 2 {
        return None;
    }
    let stream = seed ^ (position as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    Some(rng.gen_range(1..len))
}

/// Swap, delete and insert edits at character `index` (which must be ≥ 1).
///
/// Swap exchanges characters `index - 1` and `index`; delete drops
/// character `index`; insert duplicates it.
pub fn char_edits(word: &str, index: usize) -> Vec<(String, SubstitutionKind)> {
    let chars: Vec<char> = word.chars().collect();
    if index == 0 || index >= chars.len() {
        return Vec::new();
    }
    let mut swapped = chars.clone();
    swapped.swap(index - 1, index);
    let mut deleted = chars.clone();
    deleted.remove(index);
    let mut inserted = chars.clone();
    inserted.insert(index, chars[index]);
    vec![
        (swapped.into_iter().collect(), SubstitutionKind::CharSwap),
        (deleted.into_iter().collect(), SubstitutionKind::CharDelete),
        (inserted.into_iter().collect(), SubstitutionKind::CharInsert),
    ]
}

/// Replaces the first character that has a look-alike digit or symbol.
pub fn homoglyph(word: &str) -> Option<String> {
    let (at, replacement) = word.char_indices().find_map(|(i, c)| {
        let lower = c.to_ascii_lowercase();
        HOMOGLYPHS
            .iter()
            .find(|(from, _)| *from == lower)
            .map(|&(_, to)| (i, to))
    })?;
    let mut out = String::with_capacity(word.len());
    out.push_str(&word[..at]);
    out.push(replacement);
    out.push_str(&word[at + word[at..].chars().next().map_or(0, char::len_utf8)..]);
    Some(out)
}

fn match_initial_case(original: &str, replacement: &str) -> String {
    let upper = original.chars().next().is_some_and(char::is_uppercase);
    let mut chars = replacement.chars();
    match chars.next() {
        Some(first) if upper => first.to_uppercase().chain(chars).collect(),
        Some(first) if first.is_uppercase() && original.chars().next().is_some_and(char::is_lowercase) => {
            first.to_lowercase().chain(chars).collect()
        }
        _ => replacement.to_string(),
    }
}

/// Synonym neighbors followed by seeded typo variants, deduplicated, with
/// the original surface removed.
pub fn generate_candidates(
    token: &Token,
    position: usize,
    store: &EmbeddingStore,
    config: &AttackConfig,
) -> Vec<Candidate> {
    let mut raw: Vec<(String, SubstitutionKind)> = store
        .nearest_neighbors(
            &token.normalized,
            config.candidates_per_word,
            config.min_embed_sim,
        )
        .into_iter()
        .map(|(word, _)| (word, SubstitutionKind::Synonym))
        .collect();
    if config.enable_char_level {
        let len = token.surface.chars().count();
        if let Some(index) = typo_index(config.seed, position, len) {
            raw.extend(char_edits(&token.surface, index));
        }
        if let Some(glyph) = homoglyph(&token.surface) {
            raw.push((glyph, SubstitutionKind::Homoglyph));
        }
    }
    let mut out: Vec<Candidate> = Vec::with_capacity(raw.len());
    for (text, kind) in raw {
        let text = match_initial_case(&token.surface, &text);
        if text != token.surface && !out.iter().any(|c| c.text == text) {
            out.push(Candidate { text, kind });
        }
    }
    out
}
