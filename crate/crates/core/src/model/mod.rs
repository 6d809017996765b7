//! The model-wrapper interface and the bundled linear classifier.
//!
//! Attacks and explainers see a classifier only through [`TextModel`]: a
//! function from raw text to a two-class probability pair plus a monotone
//! count of texts scored.

mod linear;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::{Error, Result};

pub use linear::{loss_and_gradient, sigmoid, HeadType, LinearTextModel, TrainConfig};

/// Class probabilities `(p0, p1)` and the argmax class (ties go to class 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probs: (f64, f64),
    pub predicted_class: u8,
}

impl Prediction {
    pub fn from_p1(p1: f64) -> Self {
        let p1 = if p1.is_nan() { 0.5 } else { p1.clamp(0.0, 1.0) };
        let p0 = 1.0 - p1;
        Prediction {
            probs: (p0, p1),
            predicted_class: u8::from(p1 > p0),
        }
    }

    pub fn prob(&self, class: u8) -> f64 {
        if class == 0 {
            self.probs.0
        } else {
            self.probs.1
        }
    }

    /// Probability of the predicted class.
    pub fn confidence(&self) -> f64 {
        self.prob(self.predicted_class)
    }
}

/// Probability-emitting classifier with query accounting.
///
/// Implementations must return the same prediction for the same text and must
/// advance `query_count` by exactly one per text scored, batches included.
pub trait TextModel: Sync {
    fn predict(&self, text: &str) -> Prediction;

    fn predict_batch(&self, texts: &[String]) -> Vec<Prediction> {
        texts.iter().map(|t| self.predict(t)).collect()
    }

    fn query_count(&self) -> u64;
}

impl<M: TextModel + ?Sized> TextModel for &M {
    fn predict(&self, text: &str) -> Prediction {
        (**self).predict(text)
    }

    fn predict_batch(&self, texts: &[String]) -> Vec<Prediction> {
        (**self).predict_batch(texts)
    }

    fn query_count(&self) -> u64 {
        (**self).query_count()
    }
}

/// Thread-safe monotone counter.
#[derive(Debug, Default)]
pub struct QueryCounter(AtomicU64);

impl QueryCounter {
    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// A per-caller view of a model that counts only its own queries.
///
/// Every query also reaches the wrapped model, so its global counter stays
/// exact while concurrent attacks each read a private delta.
pub struct Metered<'a, M: TextModel + ?Sized> {
    inner: &'a M,
    queries: QueryCounter,
}

impl<'a, M: TextModel + ?Sized> Metered<'a, M> {
    pub fn new(inner: &'a M) -> Self {
        Metered {
            inner,
            queries: QueryCounter::default(),
        }
    }
}

impl<M: TextModel + ?Sized> TextModel for Metered<'_, M> {
    fn predict(&self, text: &str) -> Prediction {
        self.queries.add(1);
        self.inner.predict(text)
    }

    fn predict_batch(&self, texts: &[String]) -> Vec<Prediction> {
        self.queries.add(texts.len() as u64);
        self.inner.predict_batch(texts)
    }

    fn query_count(&self) -> u64 {
        self.queries.get()
    }
}

/// A model backed by a closure returning `p1`. Handy for mocks and for
/// wrapping foreign scorers.
pub struct FnModel<F> {
    score: F,
    queries: QueryCounter,
}

impl<F: Fn(&str) -> f64 + Sync> FnModel<F> {
    pub fn new(score: F) -> Self {
        FnModel {
            score,
            queries: QueryCounter::default(),
        }
    }
}

impl<F: Fn(&str) -> f64 + Sync> TextModel for FnModel<F> {
    fn predict(&self, text: &str) -> Prediction {
        self.queries.add(1);
        Prediction::from_p1((self.score)(text))
    }

    fn query_count(&self) -> u64 {
        self.queries.get()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: Vec<bool>,
}

/// Accuracy of `model` on labeled documents.
pub fn evaluate(model: &dyn TextModel, docs: &[Document]) -> Result<Evaluation> {
    if docs.is_empty() {
        return Err(Error::EmptyInput("evaluate needs at least one document"));
    }
    let texts: Vec<String> = docs.iter().map(|d| d.text.clone()).collect();
    let correct: Vec<bool> = model
        .predict_batch(&texts)
        .iter()
        .zip(docs)
        .map(|(p, d)| p.predicted_class == d.label)
        .collect();
    let hits = correct.iter().filter(|&&c| c).count();
    Ok(Evaluation {
        accuracy: hits as f64 / docs.len() as f64,
        correct,
    })
}
