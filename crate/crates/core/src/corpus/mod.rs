//! Dataset ingestion and text preprocessing.
//!
//! The preprocessing order is fixed: [`clean_text`] → [`tokenize`] →
//! [`normalize`] → [`mark_stopwords`]. Stop words are flagged rather than
//! removed so token positions stay stable for the attack and explanation
//! stages.

mod text;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use text::{clean_text, mark_stopwords, normalize, stem, tokenize};

const BUILTIN_STOPWORDS: &str = include_str!("stopwords.txt");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub text: String,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    /// Byte range of `surface` inside the cleaned text.
    pub span: Range<usize>,
    pub is_stopword: bool,
}

impl Token {
    /// True when the token contains at least one alphanumeric character.
    pub fn is_word(&self) -> bool {
        self.surface.chars().any(char::is_alphanumeric)
    }

    /// Tokens the attack may rewrite: alphabetic words that are not stop words.
    pub fn is_attackable(&self) -> bool {
        !self.is_stopword && self.surface.chars().any(char::is_alphabetic)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub doc_id: usize,
    pub cleaned_text: String,
    pub tokens: Vec<Token>,
}

impl TokenizedDocument {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Text between token `i - 1` and token `i` (leading text for `i == 0`,
    /// trailing text for `i == len`).
    pub fn gap(&self, i: usize) -> &str {
        let start = if i == 0 { 0 } else { self.tokens[i - 1].span.end };
        let end = self
            .tokens
            .get(i)
            .map_or(self.cleaned_text.len(), |t| t.span.start);
        &self.cleaned_text[start..end]
    }

    /// Rebuilds the cleaned text from surfaces and gaps.
    pub fn reconstruct(&self) -> String {
        let mut out = String::with_capacity(self.cleaned_text.len());
        for (i, token) in self.tokens.iter().enumerate() {
            out.push_str(self.gap(i));
            out.push_str(&token.surface);
        }
        out.push_str(self.gap(self.tokens.len()));
        out
    }

    /// Number of tokens that are words (not punctuation-only).
    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_word()).count()
    }

    /// Surfaces of the kept tokens joined by single spaces.
    ///
    /// `keep` must have one entry per token.
    pub fn masked_text(&self, keep: &[bool]) -> String {
        debug_assert_eq!(keep.len(), self.tokens.len());
        let mut out = String::new();
        for (token, &kept) in self.tokens.iter().zip(keep) {
            if kept {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(&token.surface);
            }
        }
        out
    }

    /// The document with token `position` deleted, as probed by word-importance ranking.
    pub fn text_without(&self, position: usize) -> String {
        let keep: Vec<bool> = (0..self.tokens.len()).map(|i| i != position).collect();
        self.masked_text(&keep)
    }

    /// Returns a copy with the surfaces at the given positions replaced.
    ///
    /// Gaps are preserved, so the token count and positions are unchanged.
    /// Replaced tokens get a lowercased normalized form and are never stop words.
    pub fn with_replacements<'a, I>(&self, replacements: I) -> Result<TokenizedDocument>
    where
        I: IntoIterator<Item = (usize, &'a str)>,
    {
        let mut surfaces: Vec<Option<&str>> = vec![None; self.tokens.len()];
        for (position, replacement) in replacements {
            let slot = surfaces.get_mut(position).ok_or(Error::PositionOutOfRange {
                position,
                len: self.tokens.len(),
            })?;
            *slot = Some(replacement);
        }
        let mut cleaned_text = String::with_capacity(self.cleaned_text.len());
        let mut tokens = Vec::with_capacity(self.tokens.len());
        for (i, token) in self.tokens.iter().enumerate() {
            cleaned_text.push_str(self.gap(i));
            let start = cleaned_text.len();
            let new_token = match surfaces[i] {
                Some(replacement) => Token {
                    surface: replacement.to_string(),
                    normalized: replacement.to_lowercase(),
                    span: 0..0,
                    is_stopword: false,
                },
                None => token.clone(),
            };
            cleaned_text.push_str(&new_token.surface);
            tokens.push(Token {
                span: start..cleaned_text.len(),
                ..new_token
            });
        }
        cleaned_text.push_str(self.gap(self.tokens.len()));
        Ok(TokenizedDocument {
            doc_id: self.doc_id,
            cleaned_text,
            tokens,
        })
    }
}

/// Where the stop-word list comes from.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum StopwordSource {
    #[default]
    Builtin,
    None,
    File(PathBuf),
}

impl From<String> for StopwordSource {
    fn from(value: String) -> Self {
        match value.as_str() {
            "builtin" => StopwordSource::Builtin,
            "none" => StopwordSource::None,
            _ => StopwordSource::File(PathBuf::from(value)),
        }
    }
}

impl From<StopwordSource> for String {
    fn from(value: StopwordSource) -> Self {
        value.to_string()
    }
}

impl fmt::Display for StopwordSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopwordSource::Builtin => f.write_str("builtin"),
            StopwordSource::None => f.write_str("none"),
            StopwordSource::File(path) => write!(f, "{}", path.display()),
        }
    }
}

impl StopwordSource {
    pub fn load(&self) -> Result<HashSet<String>> {
        match self {
            StopwordSource::Builtin => Ok(parse_stopwords(BUILTIN_STOPWORDS)),
            StopwordSource::None => Ok(HashSet::new()),
            StopwordSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Ok(parse_stopwords(&text))
            }
        }
    }
}

/// Parses a stop-word list: one token per line, `#` starts a comment.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_html: bool,
    pub stem: bool,
    pub stopwords: StopwordSource,
    pub min_token_chars: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lowercase: true,
            strip_html: true,
            stem: false,
            stopwords: StopwordSource::Builtin,
            min_token_chars: 1,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_chars < 1 {
            return Err(Error::Config("min_token_chars must be >= 1".into()));
        }
        Ok(())
    }
}

/// A preprocessing config with its stop-word list resolved.
#[derive(Clone, Debug)]
pub struct Preprocessor {
    config: PreprocessConfig,
    stopwords: HashSet<String>,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Result<Self> {
        config.validate()?;
        let stopwords = config.stopwords.load()?;
        Ok(Preprocessor { config, stopwords })
    }

    pub fn with_stopwords(config: PreprocessConfig, stopwords: HashSet<String>) -> Self {
        Preprocessor { config, stopwords }
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    /// Runs the full clean → tokenize → normalize → mark pipeline.
    pub fn process(&self, raw: &str) -> TokenizedDocument {
        let cleaned = clean_text(raw, &self.config);
        self.process_cleaned(&cleaned)
    }

    /// Same as [`Preprocessor::process`] for text that is already clean.
    pub fn process_cleaned(&self, cleaned: &str) -> TokenizedDocument {
        let doc = tokenize(cleaned, &self.config);
        let doc = normalize(doc, &self.config);
        mark_stopwords(doc, &self.stopwords)
    }

    /// Processes documents, dropping those that clean to nothing.
    pub fn prepare(&self, docs: &[Document]) -> Vec<(Document, TokenizedDocument)> {
        docs.iter()
            .filter_map(|doc| {
                let mut tokenized = self.process(&doc.text);
                if tokenized.cleaned_text.is_empty() {
                    log::warn!("document {} is empty after cleaning; dropped", doc.id);
                    return None;
                }
                tokenized.doc_id = doc.id;
                Some((doc.clone(), tokenized))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    CsvLabelText,
    TwoDirectory,
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<Document>> {
    let docs = match format {
        DatasetFormat::CsvLabelText => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&bytes)?
        }
        DatasetFormat::TwoDirectory => load_two_directory(path)?,
    };
    if docs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(docs)
}

fn parse_label(field: &str) -> Option<u8> {
    match field.trim() {
        "0" => Some(0),
        "1" => Some(1),
        _ => None,
    }
}

/// Parses `label,text` rows. A first row whose first field is not numeric is
/// treated as a header.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<Document>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut docs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if row == 0 && record.get(0).is_some_and(|f| f.trim().parse::<f64>().is_err()) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Row {
                line,
                message: format!("expected 2 columns (label,text), found {}", record.len()),
            });
        }
        let label = parse_label(&record[0]).ok_or_else(|| Error::Row {
            line,
            message: format!("label {:?} is not 0 or 1", &record[0]),
        })?;
        docs.push(Document {
            id: docs.len(),
            text: record[1].to_string(),
            label,
        });
    }
    Ok(docs)
}

/// Reads `neg/` (label 0) then `pos/` (label 1), files sorted by name.
fn load_two_directory(root: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (dir, label) in [("neg", 0u8), ("pos", 1u8)] {
        let dir = root.join(dir);
        let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut files = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_file() {
                files.push(entry.path());
            }
        }
        files.sort();
        for file in files {
            let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            docs.push(Document {
                id: docs.len(),
                text,
                label,
            });
        }
    }
    Ok(docs)
}

/// Class-stratified deterministic train/test split.
///
/// Each class contributes `round(test_fraction * class_size)` documents to the
/// test side. Both sides are returned in input order.
pub fn split<T: Clone>(
    docs: &[T],
    label_of: impl Fn(&T) -> u8,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if docs.len() < 2 {
        return Err(Error::Split("need at least 2 documents".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, doc) in docs.iter().enumerate() {
        by_class.entry(label_of(doc)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; docs.len()];
    for indices in by_class.values_mut() {
        indices.shuffle(&mut rng);
        let n_test = (test_fraction * indices.len() as f64).round() as usize;
        for &i in &indices[..n_test.min(indices.len())] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = docs
        .iter()
        .zip(&is_test)
        .partition(|(_, &test)| test);
    if test.is_empty() || train.is_empty() {
        return Err(Error::Split(format!(
            "test_fraction {test_fraction} yields an empty {} split",
            if test.is_empty() { "test" } else { "train" }
        )));
    }
    let unzip = |v: Vec<(&T, &bool)>| v.into_iter().map(|(d, _)| d.clone()).collect();
    Ok((unzip(train), unzip(test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: usize, label: u8) -> Document {
        Document {
            id,
            text: format!("doc {id}"),
            label,
        }
    }

    #[test]
    fn csv_review_row() {
        let docs =
            parse_csv(b"1,\"offers that rare combination of entertainment and education .\"\n")
                .unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].label, 1);
        assert_eq!(
            docs[0].text,
            "offers that rare combination of entertainment and education ."
        );
    }

    #[test]
    fn csv_ids_follow_input_order_and_skip_header() {
        let docs = parse_csv(b"label,text\n0,bad\n1,good\n").unwrap();
        assert_eq!(docs, vec![
            Document { id: 0, text: "bad".into(), label: 0 },
            Document { id: 1, text: "good".into(), label: 1 },
        ]);
    }

    #[test]
    fn csv_bad_label_reports_line() {
        let err = parse_csv(b"0,fine\n2,broken\n").unwrap_err();
        match err {
            Error::Row { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "").unwrap();
        let err = load_dataset(&path, DatasetFormat::CsvLabelText).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn two_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("pos")).unwrap();
        fs::create_dir(dir.path().join("neg")).unwrap();
        fs::write(dir.path().join("pos/b.txt"), "great").unwrap();
        fs::write(dir.path().join("pos/a.txt"), "fine").unwrap();
        fs::write(dir.path().join("neg/z.txt"), "awful").unwrap();
        let docs = load_dataset(dir.path(), DatasetFormat::TwoDirectory).unwrap();
        let summary: Vec<_> = docs.iter().map(|d| (d.id, d.text.as_str(), d.label)).collect();
        assert_eq!(summary, [(0, "awful", 0), (1, "fine", 1), (2, "great", 1)]);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/no/such/file.csv"), DatasetFormat::CsvLabelText);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn stratified_split_counts() {
        let docs: Vec<Document> = (0..10).map(|i| doc(i, (i % 2) as u8)).collect();
        let (train, test) = split(&docs, |d| d.label, 0.2, 7).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        assert_eq!(test.iter().filter(|d| d.label == 0).count(), 1);
        assert_eq!(test.iter().filter(|d| d.label == 1).count(), 1);

        let again = split(&docs, |d| d.label, 0.2, 7).unwrap();
        assert_eq!((train, test), again);
    }

    #[test]
    fn split_two_docs_in_half() {
        let docs = vec![doc(0, 1), doc(1, 1)];
        let (train, test) = split(&docs, |d| d.label, 0.5, 3).unwrap();
        assert_eq!((train.len(), test.len()), (1, 1));
    }

    #[test]
    fn split_rejects_empty_side() {
        let docs: Vec<Document> = (0..4).map(|i| doc(i, (i % 2) as u8)).collect();
        assert!(matches!(split(&docs, |d| d.label, 0.1, 1), Err(Error::Split(_))));
        assert!(matches!(split(&docs[..1], |d| d.label, 0.5, 1), Err(Error::Split(_))));
    }

    #[test]
    fn stopword_file_parsing() {
        let set = parse_stopwords("# comment\nthe\n  And \n\nof # trailing\n");
        let mut words: Vec<_> = set.into_iter().collect();
        words.sort();
        assert_eq!(words, ["and", "of", "the"]);
        assert!(StopwordSource::Builtin.load().unwrap().len() >= 140);
    }

    #[test]
    fn preprocessor_flags_default_stopwords() {
        let pre = Preprocessor::new(PreprocessConfig::default()).unwrap();
        let doc = pre.process("The <i>clever</i> film");
        assert_eq!(doc.cleaned_text, "The clever film");
        assert!(doc.tokens[0].is_stopword);
        assert!(!doc.tokens[1].is_stopword);
    }

    #[test]
    fn prepare_drops_empty_documents() {
        let pre = Preprocessor::new(PreprocessConfig::default()).unwrap();
        let docs = vec![
            Document { id: 0, text: "<br/> \n".into(), label: 0 },
            Document { id: 1, text: "fine".into(), label: 1 },
        ];
        let prepared = pre.prepare(&docs);
        assert_eq!(prepared.len(), 1);
        assert_eq!(prepared[0].1.doc_id, 1);
    }

    #[test]
    fn replacements_keep_positions() {
        let pre = Preprocessor::new(PreprocessConfig::default()).unwrap();
        let doc = pre.process("offers that rare combination .");
        let swapped = doc.with_replacements([(0, "prescribes"), (2, "sparse")]).unwrap();
        assert_eq!(swapped.cleaned_text, "prescribes that sparse combination .");
        assert_eq!(swapped.len(), doc.len());
        assert_eq!(swapped.reconstruct(), swapped.cleaned_text);
        assert!(doc.with_replacements([(9, "x")]).is_err());
        assert_eq!(doc.text_without(1), "offers rare combination .");
    }
}
