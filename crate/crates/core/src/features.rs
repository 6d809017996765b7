//! TF-IDF n-gram vectorization.
//!
//! Terms are n-grams over contiguous runs of content tokens: a stop word or
//! punctuation token breaks a run, it is never skipped over. The vocabulary
//! is sorted lexicographically and indexed densely.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDocument;
use crate::{Error, Result, FORMAT_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    /// Use `1 + ln(tf)` instead of the raw count.
    pub sublinear_tf: bool,
    /// When false every idf is 1 and the vectors are plain normalized counts.
    pub use_idf: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram_range: (1, 1),
            min_df: 1,
            sublinear_tf: false,
            use_idf: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ngram_range;
        if !(1 <= lo && lo <= hi && hi <= 2) {
            return Err(Error::Config(format!(
                "ngram_range must satisfy 1 <= lo <= hi <= 2, got ({lo}, {hi})"
            )));
        }
        if self.min_df < 1 {
            return Err(Error::Config("min_df must be >= 1".into()));
        }
        Ok(())
    }
}

/// Smoothed inverse document frequency.
pub fn idf(n_docs: usize, doc_freq: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

/// All n-gram terms of a document, in order of occurrence, with repeats.
pub fn extract_terms(doc: &TokenizedDocument, ngram_range: (usize, usize)) -> Vec<String> {
    let usable: Vec<Option<&str>> = doc
        .tokens
        .iter()
        .map(|t| (!t.is_stopword && t.is_word()).then_some(t.normalized.as_str()))
        .collect();
    let mut terms = Vec::new();
    for n in ngram_range.0..=ngram_range.1 {
        for window in usable.windows(n) {
            if window.iter().all(Option::is_some) {
                let parts: Vec<&str> = window.iter().map(|w| w.unwrap()).collect();
                terms.push(parts.join(" "));
            }
        }
    }
    terms
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    idf: Vec<f64>,
    n_docs: usize,
    config: FeatureConfig,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    format_version: u32,
    config: FeatureConfig,
    n_docs: usize,
    terms: Vec<String>,
    doc_freqs: Vec<usize>,
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VocabularyFile {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            n_docs: self.n_docs,
            terms: self.terms.clone(),
            doc_freqs: self.doc_freq.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = VocabularyFile::deserialize(deserializer)?;
        if file.format_version != FORMAT_VERSION {
            return Err(D::Error::custom(format!(
                "unsupported vocabulary format_version {}",
                file.format_version
            )));
        }
        if file.terms.len() != file.doc_freqs.len() {
            return Err(D::Error::custom("terms and doc_freqs differ in length"));
        }
        if file.n_docs == 0 {
            return Err(D::Error::custom("n_docs must be >= 1"));
        }
        Ok(Vocabulary::from_parts(
            file.terms,
            file.doc_freqs,
            file.n_docs,
            file.config,
        ))
    }
}

impl Vocabulary {
    fn from_parts(
        terms: Vec<String>,
        doc_freq: Vec<usize>,
        n_docs: usize,
        config: FeatureConfig,
    ) -> Self {
        let term_to_index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let idf = doc_freq
            .iter()
            .map(|&df| if config.use_idf { idf(n_docs, df) } else { 1.0 })
            .collect();
        Vocabulary {
            terms,
            term_to_index,
            doc_freq,
            idf,
            n_docs,
            config,
        }
    }

    pub fn fit(docs: &[TokenizedDocument], config: FeatureConfig) -> Result<Self> {
        config.validate()?;
        if docs.is_empty() {
            return Err(Error::EmptyInput("fit_vocabulary needs at least one document"));
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let unique: HashSet<String> = extract_terms(doc, config.ngram_range).into_iter().collect();
            for term in unique {
                *counts.entry(term).or_default() += 1;
            }
        }
        let (terms, doc_freq): (Vec<String>, Vec<usize>) = counts
            .into_iter()
            .filter(|&(_, df)| df >= config.min_df)
            .unzip();
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Ok(Vocabulary::from_parts(terms, doc_freq, docs.len(), config))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_freq[i])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i])
    }

    /// L2-normalized TF-IDF vector of `doc`. Unknown terms are ignored.
    pub fn transform(&self, doc: &TokenizedDocument) -> FeatureVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in extract_terms(doc, self.config.ngram_range) {
            if let Some(i) = self.index_of(&term) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| {
                let tf = if self.config.sublinear_tf { 1.0 + tf.ln() } else { tf };
                (i, tf * self.idf[i])
            })
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
        FeatureVector { entries, norm }
    }

    pub fn transform_batch(&self, docs: &[TokenizedDocument]) -> Vec<FeatureVector> {
        docs.iter().map(|d| self.transform(d)).collect()
    }
}

/// Sparse vector with strictly increasing column indices.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
    /// L2 norm before normalization.
    pub norm: f64,
}

impl FeatureVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }
}
