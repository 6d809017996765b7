//! Black-box, score-based word substitution attack.
//!
//! Words are ranked by how much deleting them lowers the true-class
//! probability; then, in rank order, every admissible candidate for the word
//! is scored and the one that lowers that probability the most is committed.
//! The search ends on a prediction flip, when the query budget or the edit cap
//! is reached, or when the ranking runs out.
//!
//! Every model call counts as a query, ranking probes included. The original
//! text is always scored once, so `queries <= max(max_queries, 1)`: a new
//! probe is never started once `queries == max_queries`.

mod candidates;
mod search;
mod summary;

use serde::{Deserialize, Serialize};

use crate::model::Prediction;
use crate::{Error, Result};

pub use candidates::{char_edits, generate_candidates, homoglyph, typo_index, Candidate};
pub use search::{check_constraints, greedy_attack, rank_word_importance, ConstraintViolation};
pub use summary::{render_result, summarize, AttackSummary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Cap on the fraction of words that may be modified.
    pub max_percent_words: f64,
    pub min_embed_sim: f64,
    pub candidates_per_word: usize,
    pub enable_char_level: bool,
    pub max_queries: u64,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            max_percent_words: 0.4,
            min_embed_sim: 0.5,
            candidates_per_word: 8,
            enable_char_level: true,
            max_queries: 500,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_percent_words > 0.0 && self.max_percent_words <= 1.0) {
            return Err(Error::Config("max_percent_words must be in (0, 1]".into()));
        }
        if !self.min_embed_sim.is_finite() {
            return Err(Error::Config("min_embed_sim must be finite".into()));
        }
        if self.candidates_per_word < 1 {
            return Err(Error::Config("candidates_per_word must be >= 1".into()));
        }
        if self.max_queries < 1 {
            return Err(Error::Config("max_queries must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstitutionKind {
    Synonym,
    CharSwap,
    CharDelete,
    CharInsert,
    Homoglyph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub token_position: usize,
    pub original: String,
    pub replacement: String,
    pub kind: SubstitutionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackStatus {
    Success,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub doc_id: usize,
    pub truth_label: u8,
    pub status: AttackStatus,
    pub original_text: String,
    pub perturbed_text: String,
    pub original_pred: Prediction,
    pub final_pred: Prediction,
    pub substitutions: Vec<Substitution>,
    pub queries: u64,
    pub percent_words_changed: f64,
    pub words_in_sentence: usize,
    pub config: AttackConfig,
}
