//! Word vectors in GloVe text format and brute-force cosine neighbors.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct EmbeddingStore {
    words: Vec<String>,
    word_to_row: HashMap<String, usize>,
    vectors: Vec<f32>,
    unit_vectors: Vec<f32>,
    dim: usize,
}

impl EmbeddingStore {
    /// Loads `word v1 v2 ... vd` lines; `.gz` files are decompressed.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
            Box::new(MultiGzDecoder::new(file))
        } else {
            Box::new(file)
        };
        Self::from_reader(BufReader::new(reader)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        let mut dim = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io("<embeddings>", e))?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let values = fields
                .map(|f| {
                    f.parse::<f32>().map_err(|_| Error::Row {
                        line: line_no,
                        message: format!("invalid number {f:?}"),
                    })
                })
                .collect::<Result<Vec<f32>>>()?;
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected || expected == 0 {
                return Err(Error::DimensionMismatch {
                    line: line_no,
                    expected,
                    found: values.len(),
                });
            }
            entries.push((line_no, word.to_string(), values));
        }
        if entries.is_empty() {
            return Err(Error::EmptyInput("embedding file has no entries"));
        }
        Self::build(entries)
    }

    /// Builds a store from in-memory `(word, vector)` pairs.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let entries: Vec<_> = entries
            .into_iter()
            .enumerate()
            .map(|(i, (w, v))| (i + 1, w, v))
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyInput("embedding store needs at least one entry"));
        }
        let dim = entries[0].2.len();
        if let Some((line, _, v)) = entries.iter().find(|(_, _, v)| v.len() != dim || dim == 0) {
            return Err(Error::DimensionMismatch {
                line: *line,
                expected: dim,
                found: v.len(),
            });
        }
        Self::build(entries)
    }

    fn build(entries: Vec<(usize, String, Vec<f32>)>) -> Result<Self> {
        let dim = entries[0].2.len();
        let mut store = EmbeddingStore {
            words: Vec::new(),
            word_to_row: HashMap::new(),
            vectors: Vec::new(),
            unit_vectors: Vec::new(),
            dim,
        };
        for (line, word, values) in entries {
            let norm = values
                .iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 || !norm.is_finite() {
                log::warn!("embedding for {word:?} at line {line} has zero norm; skipped");
                continue;
            }
            if store.word_to_row.contains_key(&word) {
                log::warn!("duplicate embedding for {word:?} at line {line}; keeping the first");
                continue;
            }
            store.word_to_row.insert(word.clone(), store.words.len());
            store.words.push(word);
            store
                .unit_vectors
                .extend(values.iter().map(|&v| (f64::from(v) / norm) as f32));
            store.vectors.extend(values);
        }
        if store.words.is_empty() {
            return Err(Error::EmptyInput("embedding file has no usable vectors"));
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.word_to_row.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.word_to_row
            .get(word)
            .map(|&r| &self.vectors[r * self.dim..(r + 1) * self.dim])
    }

    pub fn unit_vector(&self, word: &str) -> Option<&[f32]> {
        self.word_to_row.get(word).map(|&r| self.unit_row(r))
    }

    fn unit_row(&self, row: usize) -> &[f32] {
        &self.unit_vectors[row * self.dim..(row + 1) * self.dim]
    }

    /// Cosine similarity of two stored words.
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        let ua = self.unit_vector(a).ok_or_else(|| Error::MissingWord(a.to_string()))?;
        let ub = self.unit_vector(b).ok_or_else(|| Error::MissingWord(b.to_string()))?;
        Ok(unit_dot(ua, ub))
    }

    /// Up to `k` other words with similarity at least `min_sim`, most similar
    /// first, ties broken lexicographically. Unknown words have no neighbors.
    pub fn nearest_neighbors(&self, word: &str, k: usize, min_sim: f64) -> Vec<(String, f64)> {
        let Some(&query_row) = self.word_to_row.get(word) else {
            return Vec::new();
        };
        if k == 0 {
            return Vec::new();
        }
        let query = self.unit_row(query_row);
        let ranks_before = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0)
                .then_with(|| self.words[a.1].cmp(&self.words[b.1]))
        };
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for row in 0..self.words.len() {
            if row == query_row {
                continue;
            }
            let sim = unit_dot(query, self.unit_row(row));
            if sim < min_sim {
                continue;
            }
            let candidate = (sim, row);
            if best.len() == k && ranks_before(&candidate, &best[k - 1]) != Ordering::Less {
                continue;
            }
            let at = best.partition_point(|held| ranks_before(held, &candidate) == Ordering::Less);
            best.insert(at, candidate);
            best.truncate(k);
        }
        best.into_iter()
            .map(|(sim, row)| (self.words[row].clone(), sim))
            .collect()
    }
}

/// Dot product accumulated in `f64`, clamped to `[-1, 1]`.
pub fn unit_dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum::<f64>()
        .clamp(-1.0, 1.0)
}
