//! Local surrogate (LIME-style) explanations for a single text.
//!
//! Perturbations delete tokens; each perturbed text is weighted by an
//! exponential kernel over its cosine distance to the unperturbed text, and a
//! weighted ridge regression over the binary presence masks yields one
//! signed weight per token position. The `num_features` largest weights by
//! magnitude are reported.

mod ridge;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{clean_text, tokenize, PreprocessConfig, TokenizedDocument};
use crate::model::{Prediction, TextModel};
use crate::{Error, Result};

pub use ridge::{fit_surrogate, Surrogate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub num_samples: usize,
    pub num_features: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
    /// Class whose probability is explained; the predicted class when unset.
    pub target_class: Option<u8>,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            num_samples: 1000,
            num_features: 10,
            kernel_width: 25.0,
            ridge_lambda: 1.0,
            seed: 0,
            target_class: None,
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 10 {
            return Err(Error::Config("num_samples must be >= 10".into()));
        }
        if self.num_features < 1 {
            return Err(Error::Config("num_features must be >= 1".into()));
        }
        if !(self.kernel_width > 0.0 && self.kernel_width.is_finite()) {
            return Err(Error::Config("kernel_width must be > 0".into()));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::Config("ridge_lambda must be >= 0".into()));
        }
        if self.target_class.is_some_and(|c| c > 1) {
            return Err(Error::Config("target_class must be 0 or 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub position: usize,
    pub token: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub text: String,
    /// Every token surface, so renderers can lay out the whole sentence.
    pub tokens: Vec<String>,
    pub target_class: u8,
    pub prediction: Prediction,
    pub intercept: f64,
    pub fidelity_r2: f64,
    /// Top features by `|weight|`, ties broken by lower position.
    pub features: Vec<FeatureWeight>,
}

impl Explanation {
    pub fn weight_at(&self, position: usize) -> f64 {
        self.features
            .iter()
            .find(|f| f.position == position)
            .map_or(0.0, |f| f.weight)
    }
}

/// `num_samples` presence masks; the first keeps every token.
///
/// Each further mask removes `d` distinct tokens, `d` uniform in `[1, n_tokens]`.
pub fn sample_masks(n_tokens: usize, num_samples: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks = Vec::with_capacity(num_samples);
    if num_samples == 0 {
        return masks;
    }
    masks.push(vec![true; n_tokens]);
    for _ in 1..num_samples {
        let mut mask = vec![true; n_tokens];
        if n_tokens > 0 {
            let removed = rng.gen_range(1..=n_tokens);
            for i in index::sample(&mut rng, n_tokens, removed) {
                mask[i] = false;
            }
        }
        masks.push(mask);
    }
    masks
}

pub fn mask_to_text(doc: &TokenizedDocument, mask: &[bool]) -> String {
    doc.masked_text(mask)
}

/// `exp(−d²/σ²)` with `d` the cosine distance between `mask` and all-ones.
pub fn kernel_weight(mask: &[bool], kernel_width: f64) -> f64 {
    let kept = mask.iter().filter(|&&m| m).count() as f64;
    let distance = if kept == 0.0 {
        1.0
    } else {
        1.0 - kept / (kept.sqrt() * (mask.len() as f64).sqrt())
    };
    (-(distance * distance) / (kernel_width * kernel_width)).exp()
}

/// Indices of the `k` largest `|values|`, ties broken by lower index.
pub fn top_k_by_magnitude(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Explains `model` around an already tokenized document.
pub fn explain_document(
    model: &dyn TextModel,
    doc: &TokenizedDocument,
    config: &LimeConfig,
) -> Result<Explanation> {
    config.validate()?;
    if doc.is_empty() {
        return Err(Error::EmptyInput("text has no tokens to explain"));
    }
    let masks = sample_masks(doc.len(), config.num_samples, config.seed);
    let texts: Vec<String> = masks.iter().map(|m| mask_to_text(doc, m)).collect();
    let predictions = model.predict_batch(&texts);
    let prediction = predictions[0];
    let target_class = config.target_class.unwrap_or(prediction.predicted_class);
    let targets: Vec<f64> = predictions.iter().map(|p| p.prob(target_class)).collect();
    let weights: Vec<f64> = masks
        .iter()
        .map(|m| kernel_weight(m, config.kernel_width))
        .collect();
    let surrogate = fit_surrogate(&masks, &targets, &weights, config.ridge_lambda)?;
    let features = top_k_by_magnitude(&surrogate.coefficients, config.num_features)
        .into_iter()
        .map(|position| FeatureWeight {
            position,
            token: doc.tokens[position].surface.clone(),
            weight: surrogate.coefficients[position],
        })
        .collect();
    Ok(Explanation {
        text: doc.cleaned_text.clone(),
        tokens: doc.tokens.iter().map(|t| t.surface.clone()).collect(),
        target_class,
        prediction,
        intercept: surrogate.intercept,
        fidelity_r2: surrogate.fidelity_r2,
        features,
    })
}

/// Explains `model` around raw `text`, tokenized with the default rules.
pub fn explain(model: &dyn TextModel, text: &str, config: &LimeConfig) -> Result<Explanation> {
    let rules = PreprocessConfig::default();
    let doc = tokenize(&clean_text(text, &rules), &rules);
    explain_document(model, &doc, config)
}
