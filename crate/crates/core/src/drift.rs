//! Before/after comparison of predictions and explanations.
//!
//! Tokens are aligned by position using the attack's substitution record;
//! every implemented transformation replaces one token with one token.
//! Weights of tokens outside an explanation's top-K count as zero.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::attack::Substitution;
use crate::corpus::TokenizedDocument;
use crate::explain::Explanation;
use crate::model::Prediction;
use crate::{Error, Result};

/// Magnitude below which a weight has no sign.
const SIGN_EPSILON: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedToken {
    pub position: usize,
    pub token_before: String,
    pub token_after: String,
    pub changed: bool,
    pub weight_before: f64,
    pub weight_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub pred_before: Prediction,
    pub pred_after: Prediction,
    pub flipped: bool,
    /// `probs_after − probs_before`, per class.
    pub confidence_delta: (f64, f64),
    pub topk_jaccard: f64,
    pub spearman_rho: Option<f64>,
    pub sign_flips: usize,
    pub aligned: Vec<AlignedToken>,
    pub transition_text: String,
}

/// One entry per original token; `changed` comes from the substitution record.
pub fn align(doc_before: &TokenizedDocument, substitutions: &[Substitution]) -> Result<Vec<AlignedToken>> {
    let mut aligned: Vec<AlignedToken> = doc_before
        .tokens
        .iter()
        .enumerate()
        .map(|(position, t)| AlignedToken {
            position,
            token_before: t.surface.clone(),
            token_after: t.surface.clone(),
            changed: false,
            weight_before: 0.0,
            weight_after: 0.0,
        })
        .collect();
    for sub in substitutions {
        let entry = aligned
            .get_mut(sub.token_position)
            .ok_or(Error::PositionOutOfRange {
                position: sub.token_position,
                len: doc_before.len(),
            })?;
        entry.token_after = sub.replacement.clone();
        entry.changed = entry.token_after != entry.token_before;
    }
    Ok(aligned)
}

fn positions(e: &Explanation) -> BTreeSet<usize> {
    e.features.iter().map(|f| f.position).collect()
}

/// `|A ∩ B| / |A ∪ B|` over top-K position sets; two empty sets give 1.
pub fn topk_jaccard(before: &Explanation, after: &Explanation) -> f64 {
    let (a, b) = (positions(before), positions(after));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Average (fractional) ranks, 1-based, of `values` in descending order.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return (x == y).then_some(1.0);
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation of importance (`|weight|`) ranks over positions in
/// both top-K sets; `None` with fewer than two shared positions.
pub fn shared_spearman(before: &Explanation, after: &Explanation) -> Option<f64> {
    let weights_after: HashMap<usize, f64> =
        after.features.iter().map(|f| (f.position, f.weight)).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = before
        .features
        .iter()
        .filter_map(|f| weights_after.get(&f.position).map(|&w| (f.weight.abs(), w.abs())))
        .unzip();
    if x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(&x), &average_ranks(&y))
}

pub fn compare(
    expl_before: &Explanation,
    expl_after: &Explanation,
    pred_before: Prediction,
    pred_after: Prediction,
    aligned: &[AlignedToken],
    class_names: &[String; 2],
) -> DriftReport {
    let aligned: Vec<AlignedToken> = aligned
        .iter()
        .map(|a| AlignedToken {
            weight_before: expl_before.weight_at(a.position),
            weight_after: expl_after.weight_at(a.position),
            ..a.clone()
        })
        .collect();
    let sign_flips = aligned
        .iter()
        .filter(|a| {
            a.weight_before.abs() > SIGN_EPSILON
                && a.weight_after.abs() > SIGN_EPSILON
                && a.weight_before.signum() != a.weight_after.signum()
        })
        .count();
    DriftReport {
        pred_before,
        pred_after,
        flipped: pred_before.predicted_class != pred_after.predicted_class,
        confidence_delta: (
            pred_after.probs.0 - pred_before.probs.0,
            pred_after.probs.1 - pred_before.probs.1,
        ),
        topk_jaccard: topk_jaccard(expl_before, expl_after),
        spearman_rho: shared_spearman(expl_before, expl_after),
        sign_flips,
        aligned,
        transition_text: render_transition(&pred_before, &pred_after, class_names),
    }
}

/// `[[<Name> (<p>%)]] to [[<Name> (<p>%)]]` using each argmax class.
pub fn render_transition(before: &Prediction, after: &Prediction, class_names: &[String; 2]) -> String {
    let side = |p: &Prediction| {
        let class = p.predicted_class;
        format!(
            "[[{} ({:.0}%)]]",
            class_names[usize::from(class)],
            (p.prob(class) * 100.0).round()
        )
    };
    format!("{} to {}", side(before), side(after))
}
