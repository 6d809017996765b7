use serde::{Deserialize, Serialize};

use super::{AttackResult, AttackStatus};
use crate::corpus::TokenizedDocument;
use crate::model::Prediction;
use crate::{Error, Result};

/// Corpus-level attack metrics. Averages marked "over successes" are `None`
/// when there were no successes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub n_examples: usize,
    pub n_success: usize,
    pub n_failed: usize,
    pub n_skipped: usize,
    pub original_accuracy: f64,
    pub accuracy_under_attack: f64,
    /// `n_success / (n_success + n_failed)`; `None` when every example was skipped.
    pub success_rate: Option<f64>,
    pub avg_percent_words_changed: Option<f64>,
    pub avg_queries: Option<f64>,
    pub avg_words_per_sentence: f64,
}

pub fn summarize(results: &[AttackResult]) -> Result<AttackSummary> {
    if results.is_empty() {
        return Err(Error::EmptyInput("summarize needs at least one result"));
    }
    let count = |status| results.iter().filter(|r| r.status == status).count();
    let (n_success, n_failed, n_skipped) = (
        count(AttackStatus::Success),
        count(AttackStatus::Failed),
        count(AttackStatus::Skipped),
    );
    let n = results.len();
    let successes: Vec<&AttackResult> = results
        .iter()
        .filter(|r| r.status == AttackStatus::Success)
        .collect();
    let mean_over_successes = |f: &dyn Fn(&AttackResult) -> f64| {
        (!successes.is_empty())
            .then(|| successes.iter().map(|r| f(r)).sum::<f64>() / successes.len() as f64)
    };
    Ok(AttackSummary {
        n_examples: n,
        n_success,
        n_failed,
        n_skipped,
        original_accuracy: (n - n_skipped) as f64 / n as f64,
        accuracy_under_attack: n_failed as f64 / n as f64,
        success_rate: (n_success + n_failed > 0)
            .then(|| n_success as f64 / (n_success + n_failed) as f64),
        avg_percent_words_changed: mean_over_successes(&|r| r.percent_words_changed),
        avg_queries: mean_over_successes(&|r| r.queries as f64),
        avg_words_per_sentence: results
            .iter()
            .map(|r| r.words_in_sentence as f64)
            .sum::<f64>()
            / n as f64,
    })
}

fn label(pred: &Prediction, class_names: &[String; 2]) -> String {
    let class = pred.predicted_class;
    format!(
        "[[{}({:.0}%)]]",
        class_names[usize::from(class)],
        (pred.prob(class) * 100.0).round()
    )
}

/// Two-line rendering with `[[...]]` around changed words and the
/// prediction label, e.g. `[[rare]] combination ... [[Positive(100%)]]`.
pub fn render_result(
    result: &AttackResult,
    doc: &TokenizedDocument,
    class_names: &[String; 2],
) -> String {
    let bracket = |use_replacement: bool| {
        let marked: Vec<(usize, String)> = result
            .substitutions
            .iter()
            .map(|s| {
                let word = if use_replacement { &s.replacement } else { &s.original };
                (s.token_position, format!("[[{word}]]"))
            })
            .collect();
        doc.with_replacements(marked.iter().map(|(p, w)| (*p, w.as_str())))
            .map(|d| d.cleaned_text)
            .unwrap_or_else(|_| doc.cleaned_text.clone())
    };
    format!(
        "Original:    {}  {}\nAdversarial: {}  {}",
        bracket(false),
        label(&result.original_pred, class_names),
        bracket(true),
        label(&result.final_pred, class_names),
    )
}
