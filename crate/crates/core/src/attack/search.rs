use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::candidates::generate_candidates;
use super::{AttackConfig, AttackResult, AttackStatus, Substitution, SubstitutionKind};
use crate::corpus::TokenizedDocument;
use crate::embeddings::EmbeddingStore;
use crate::model::{Metered, Prediction, TextModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum ConstraintViolation {
    MaxPercentWords { changed: usize, words: usize },
    PositionOutOfRange { position: usize },
    NotAttackable { position: usize },
    LowSimilarity { position: usize, similarity: Option<f64> },
    DuplicatePosition { position: usize },
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintViolation::MaxPercentWords { changed, words } => {
                write!(f, "max_percent_words ({changed} of {words} words)")
            }
            ConstraintViolation::PositionOutOfRange { position } => {
                write!(f, "position_out_of_range ({position})")
            }
            ConstraintViolation::NotAttackable { position } => {
                write!(f, "stopword_or_punctuation (position {position})")
            }
            ConstraintViolation::LowSimilarity { position, .. } => {
                write!(f, "min_embed_sim (position {position})")
            }
            ConstraintViolation::DuplicatePosition { position } => {
                write!(f, "duplicate_position ({position})")
            }
        }
    }
}

fn within_word_cap(changed: usize, words: usize, config: &AttackConfig) -> bool {
    changed == 0 || (words > 0 && changed as f64 / words as f64 <= config.max_percent_words)
}

/// Checks a substitution set against the edit cap, the stop-word and
/// punctuation exclusion, the synonym similarity floor, and position
/// uniqueness.
pub fn check_constraints(
    doc: &TokenizedDocument,
    substitutions: &[Substitution],
    config: &AttackConfig,
    store: &EmbeddingStore,
) -> Result<(), ConstraintViolation> {
    let words = doc.word_count();
    if !within_word_cap(substitutions.len(), words, config) {
        return Err(ConstraintViolation::MaxPercentWords {
            changed: substitutions.len(),
            words,
        });
    }
    let mut seen = HashSet::new();
    for sub in substitutions {
        let position = sub.token_position;
        let token = doc
            .tokens
            .get(position)
            .ok_or(ConstraintViolation::PositionOutOfRange { position })?;
        if !token.is_attackable() {
            return Err(ConstraintViolation::NotAttackable { position });
        }
        if !seen.insert(position) {
            return Err(ConstraintViolation::DuplicatePosition { position });
        }
        if sub.kind == SubstitutionKind::Synonym {
            let similarity = store
                .cosine(&token.normalized, &sub.replacement.to_lowercase())
                .ok();
            if !similarity.is_some_and(|s| s >= config.min_embed_sim) {
                return Err(ConstraintViolation::LowSimilarity { position, similarity });
            }
        }
    }
    Ok(())
}

/// Positions of attackable tokens, most important first.
///
/// Importance of token `i` is `p(class | doc) − p(class | doc without i)`.
/// Ties keep the lower position first. Costs one query for the original plus
/// one per attackable token.
pub fn rank_word_importance(
    model: &dyn TextModel,
    doc: &TokenizedDocument,
    class: u8,
) -> Vec<usize> {
    let eligible = eligible_positions(doc);
    if eligible.is_empty() {
        return Vec::new();
    }
    let base = model.predict(&doc.cleaned_text).prob(class);
    ranked(model, doc, class, base, &eligible, u64::MAX)
        .into_iter()
        .map(|(position, _)| position)
        .collect()
}

fn eligible_positions(doc: &TokenizedDocument) -> Vec<usize> {
    (0..doc.len())
        .filter(|&i| doc.tokens[i].is_attackable())
        .collect()
}

/// Deletion-probe ranking that stops probing once the model has served
/// `max_queries` queries. Unprobed positions are left out.
fn ranked(
    model: &dyn TextModel,
    doc: &TokenizedDocument,
    class: u8,
    base: f64,
    eligible: &[usize],
    max_queries: u64,
) -> Vec<(usize, f64)> {
    let mut scores = Vec::with_capacity(eligible.len());
    for &position in eligible {
        if model.query_count() >= max_queries {
            break;
        }
        let p = model.predict(&doc.text_without(position)).prob(class);
        scores.push((position, base - p));
    }
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scores
}

fn render(doc: &TokenizedDocument, substitutions: &[Substitution]) -> String {
    doc.with_replacements(
        substitutions
            .iter()
            .map(|s| (s.token_position, s.replacement.as_str())),
    )
    .map(|d| d.cleaned_text)
    .unwrap_or_else(|_| doc.cleaned_text.clone())
}

/// Runs the greedy substitution attack against one preprocessed document.
pub fn greedy_attack(
    model: &dyn TextModel,
    doc: &TokenizedDocument,
    truth_label: u8,
    config: &AttackConfig,
    store: &EmbeddingStore,
) -> AttackResult {
    let view = Metered::new(model);
    let words = doc.word_count();
    let original_pred = view.predict(&doc.cleaned_text);
    let finish = |status, substitutions: Vec<Substitution>, final_pred: Prediction, queries| {
        let perturbed_text = render(doc, &substitutions);
        AttackResult {
            doc_id: doc.doc_id,
            truth_label,
            status,
            original_text: doc.cleaned_text.clone(),
            perturbed_text,
            original_pred,
            final_pred,
            percent_words_changed: if words == 0 {
                0.0
            } else {
                substitutions.len() as f64 / words as f64
            },
            substitutions,
            queries,
            words_in_sentence: words,
            config: config.clone(),
        }
    };
    if original_pred.predicted_class != truth_label {
        return finish(AttackStatus::Skipped, Vec::new(), original_pred, view.query_count());
    }

    let budget = config.max_queries;
    let mut current_p = original_pred.prob(truth_label);
    let mut current_pred = original_pred;
    let mut committed: Vec<Substitution> = Vec::new();
    let ranking = ranked(
        &view,
        doc,
        truth_label,
        current_p,
        &eligible_positions(doc),
        budget,
    );

    'positions: for (position, _) in ranking {
        if !within_word_cap(committed.len() + 1, words, config) {
            break;
        }
        let token = &doc.tokens[position];
        let mut best: Option<(Substitution, Prediction)> = None;
        for candidate in generate_candidates(token, position, store, config) {
            let substitution = Substitution {
                token_position: position,
                original: token.surface.clone(),
                replacement: candidate.text,
                kind: candidate.kind,
            };
            committed.push(substitution);
            let admissible = check_constraints(doc, &committed, config, store).is_ok();
            let substitution = committed.pop().unwrap();
            if !admissible {
                continue;
            }
            if view.query_count() >= budget {
                if let Some(choice) = best.take() {
                    commit(&mut committed, &mut current_p, &mut current_pred, choice, truth_label);
                }
                break 'positions;
            }
            let mut trial = committed.clone();
            trial.push(substitution);
            let pred = view.predict(&render(doc, &trial));
            let improves_on_best = best
                .as_ref()
                .is_none_or(|(_, b)| pred.prob(truth_label) < b.prob(truth_label));
            if improves_on_best {
                best = Some((trial.pop().unwrap(), pred));
            }
        }
        if let Some(choice) = best {
            commit(&mut committed, &mut current_p, &mut current_pred, choice, truth_label);
        }
        if current_pred.predicted_class != truth_label {
            let queries = view.query_count();
            return finish(AttackStatus::Success, committed, current_pred, queries);
        }
    }
    if current_pred.predicted_class != truth_label {
        let queries = view.query_count();
        return finish(AttackStatus::Success, committed, current_pred, queries);
    }
    finish(AttackStatus::Failed, committed, current_pred, view.query_count())
}

/// Commits `choice` when it strictly lowers the true-class probability.
fn commit(
    committed: &mut Vec<Substitution>,
    current_p: &mut f64,
    current_pred: &mut Prediction,
    (substitution, pred): (Substitution, Prediction),
    truth_label: u8,
) {
    let p = pred.prob(truth_label);
    if p < *current_p {
        committed.push(substitution);
        *current_p = p;
        *current_pred = pred;
    }
}
