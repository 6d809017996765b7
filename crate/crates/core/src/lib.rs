//! Adversarial text attacks and explanation drift.
//!
//! The crate trains a linear TF-IDF text classifier, mounts black-box
//! word-level attacks against it, fits local surrogate explanations before
//! and after each perturbation, and reports how confidence and per-word
//! importance shift.
//!
//! Pipeline: [`corpus`] → [`features`] → [`model`] → [`attack`] /
//! [`explain`] → [`drift`]. Everything downstream of [`model`] talks to the
//! classifier only through the [`model::TextModel`] trait.

pub mod attack;
pub mod cli;
pub mod corpus;
pub mod drift;
pub mod embeddings;
mod error;
pub mod explain;
pub mod features;
pub mod model;
pub mod report;

pub use error::{Error, Result};

/// Version tag written into every JSON artifact.
pub const FORMAT_VERSION: u32 = 1;
