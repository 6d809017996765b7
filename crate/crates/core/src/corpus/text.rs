//! Cleaning, tokenization, normalization and stop-word marking.

use std::collections::HashSet;

use super::{PreprocessConfig, Token, TokenizedDocument};

/// Strips markup and control characters and collapses whitespace.
///
/// Tags are replaced by a single space. Removal repeats until no tag
/// remains, so the result is a fixed point of this function.
pub fn clean_text(raw: &str, config: &PreprocessConfig) -> String {
    let mut text: String = raw
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    if config.strip_html {
        loop {
            let stripped = strip_tags_once(&text);
            if stripped == text {
                break;
            }
            text = stripped;
        }
    }
    collapse_whitespace(&text)
}

fn strip_tags_once(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        let after = &rest[open + 1..];
        // A tag has no nested angle brackets and starts with a letter, `/` or `!`.
        let is_tag_start = after
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!');
        let close = after.find(['<', '>']);
        match close {
            Some(end) if is_tag_start && after.as_bytes()[end] == b'>' => {
                out.push_str(&rest[..open]);
                out.push(' ');
                rest = &after[end + 1..];
            }
            _ => {
                out.push_str(&rest[..open + 1]);
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '-' | '\u{2019}')
}

/// Splits cleaned text into word runs and single punctuation characters.
///
/// A word is a maximal run of alphanumeric characters, where an apostrophe or
/// hyphen is kept when it sits between two alphanumerics. Every other
/// non-space character is a token of its own. Tokens shorter than
/// `min_token_chars` are left in the inter-token gaps.
pub fn tokenize(text: &str, config: &PreprocessConfig) -> TokenizedDocument {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_alphanumeric() {
            i += 1;
            loop {
                match chars.get(i) {
                    Some(&(_, c)) if c.is_alphanumeric() => i += 1,
                    Some(&(_, c))
                        if is_joiner(c)
                            && chars.get(i + 1).is_some_and(|&(_, n)| n.is_alphanumeric()) =>
                    {
                        i += 2
                    }
                    _ => break,
                }
            }
        } else {
            i += 1;
        }
        if i - start < config.min_token_chars.max(1) {
            continue;
        }
        let span = byte_at(start)..byte_at(i);
        let surface = text[span.clone()].to_string();
        tokens.push(Token {
            normalized: surface.clone(),
            surface,
            span,
            is_stopword: false,
        });
    }
    TokenizedDocument {
        doc_id: 0,
        cleaned_text: text.to_string(),
        tokens,
    }
}

/// Recomputes every token's normalized form from its surface.
pub fn normalize(mut doc: TokenizedDocument, config: &PreprocessConfig) -> TokenizedDocument {
    for token in &mut doc.tokens {
        token.normalized = normalize_word(&token.surface, config);
    }
    doc
}

pub(crate) fn normalize_word(surface: &str, config: &PreprocessConfig) -> String {
    let base = if config.lowercase {
        surface.to_lowercase()
    } else {
        surface.to_string()
    };
    if config.stem {
        stem(&base)
    } else {
        base
    }
}

fn has_vowel(s: &str) -> bool {
    s.chars()
        .any(|c| matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

/// Minimal suffix stripper.
///
/// Rules, in order: drop a trailing `'s`; then the first of `sses → ss`,
/// `ies → i`, or a trailing `s` after a letter other than `s`; then a
/// trailing `ing` / `ed` when at least three characters containing a vowel
/// remain.
pub fn stem(word: &str) -> String {
    let mut w = word.to_string();
    for suffix in ["'s", "\u{2019}s"] {
        if w.len() > suffix.len() && w.ends_with(suffix) {
            w.truncate(w.len() - suffix.len());
            break;
        }
    }
    if w.ends_with("sses") || w.ends_with("ies") {
        w.truncate(w.len() - 2);
    } else if w.ends_with('s') {
        let prev = w[..w.len() - 1].chars().next_back();
        if prev.is_some_and(|c| c.is_alphabetic() && c != 's' && c != 'S') {
            w.pop();
        }
    }
    for suffix in ["ing", "ed"] {
        if let Some(rest) = w.strip_suffix(suffix) {
            if rest.chars().count() >= 3 && has_vowel(rest) {
                w.truncate(rest.len());
            }
            break;
        }
    }
    w
}

/// Flags tokens whose normalized form is in `stopwords`. Never removes tokens.
pub fn mark_stopwords(mut doc: TokenizedDocument, stopwords: &HashSet<String>) -> TokenizedDocument {
    for token in &mut doc.tokens {
        token.is_stopword = stopwords.contains(&token.normalized);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PreprocessConfig {
        PreprocessConfig::default()
    }

    fn surfaces(doc: &TokenizedDocument) -> Vec<&str> {
        doc.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn clean_strips_tags_and_collapses() {
        assert_eq!(clean_text("<b>good</b>  movie\n", &cfg()), "good movie");
        assert_eq!(clean_text("plain text", &cfg()), "plain text");
        assert_eq!(clean_text("a<br/>b", &cfg()), "a b");
        assert_eq!(clean_text("1 < 2 > 0", &cfg()), "1 < 2 > 0");
        assert_eq!(clean_text("a<a<b>>", &cfg()), "a");
    }

    #[test]
    fn clean_keeps_tags_when_disabled() {
        let config = PreprocessConfig {
            strip_html: false,
            ..cfg()
        };
        assert_eq!(clean_text("<i>x</i>\t y", &config), "<i>x</i> y");
    }

    #[test]
    fn tokenize_review_sentences() {
        let doc = tokenize("it's so clever you want to hate it .", &cfg());
        assert_eq!(doc.tokens.len(), 9);
        assert_eq!(doc.tokens[0].surface, "it's");
        assert_eq!(doc.tokens.last().unwrap().surface, ".");

        let doc = tokenize(
            "offers that rare combination of entertainment and education .",
            &cfg(),
        );
        assert_eq!(doc.tokens.len(), 9);
        assert!(tokenize("", &cfg()).tokens.is_empty());
    }

    #[test]
    fn tokenize_joiners_and_punctuation() {
        let doc = tokenize("a well-made film -- isn't it? 'quoted'", &cfg());
        assert_eq!(
            surfaces(&doc),
            ["a", "well-made", "film", "-", "-", "isn't", "it", "?", "'", "quoted", "'"]
        );
        let doc = tokenize("café naïve", &cfg());
        assert_eq!(surfaces(&doc), ["café", "naïve"]);
        assert_eq!(&doc.cleaned_text[doc.tokens[1].span.clone()], "naïve");
    }

    #[test]
    fn tokenize_min_chars_folds_short_tokens_into_gaps() {
        let config = PreprocessConfig {
            min_token_chars: 2,
            ..cfg()
        };
        let doc = tokenize("a big film .", &config);
        assert_eq!(surfaces(&doc), ["big", "film"]);
        assert_eq!(doc.reconstruct(), "a big film .");
    }

    #[test]
    fn normalize_lowercase_and_stem() {
        let doc = normalize(tokenize("Clever", &cfg()), &cfg());
        assert_eq!(doc.tokens[0].normalized, "clever");
        assert_eq!(doc.tokens[0].surface, "Clever");

        let stemming = PreprocessConfig {
            stem: true,
            ..cfg()
        };
        let doc = normalize(tokenize("curls pulls", &stemming), &stemming);
        assert_eq!(doc.tokens[0].normalized, "curl");
        assert_eq!(doc.tokens[1].normalized, "pull");
    }

    #[test]
    fn stem_rule_table() {
        for (input, expected) in [
            ("film's", "film"),
            ("classes", "class"),
            ("comedies", "comedi"),
            ("ties", "ti"),
            ("glass", "glass"),
            ("s", "s"),
            ("pulling", "pull"),
            ("pulled", "pull"),
            ("sing", "sing"),
            ("bed", "bed"),
            ("hated", "hat"),
            ("screenings", "screen"),
            ("ed", "ed"),
        ] {
            assert_eq!(stem(input), expected, "stem({input})");
        }
    }

    #[test]
    fn mark_flags_without_removing() {
        let stop: HashSet<String> = ["the", "so"].iter().map(|s| s.to_string()).collect();
        let doc = mark_stopwords(normalize(tokenize("The clever so", &cfg()), &cfg()), &stop);
        let flags: Vec<bool> = doc.tokens.iter().map(|t| t.is_stopword).collect();
        assert_eq!(flags, [true, false, true]);

        let doc = mark_stopwords(normalize(tokenize("the so the", &cfg()), &cfg()), &stop);
        assert_eq!(doc.tokens.len(), 3);
        assert!(doc.tokens.iter().all(|t| t.is_stopword));
    }
}
