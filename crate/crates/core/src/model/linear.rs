use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Prediction, QueryCounter, TextModel};
use crate::corpus::{PreprocessConfig, Preprocessor, TokenizedDocument};
use crate::features::{FeatureVector, Vocabulary};
use crate::{Error, Result, FORMAT_VERSION};

/// Scores of the SVM head are clipped to this range before the sigmoid.
const SVM_SCORE_CLIP: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadType {
    #[default]
    Logistic,
    Svm,
}

impl std::str::FromStr for HeadType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(HeadType::Logistic),
            "svm" => Ok(HeadType::Svm),
            other => Err(Error::Config(format!("unknown head_type {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    /// Mini-batch size; 0 means full-batch gradient descent.
    pub batch_size: usize,
    pub head: HeadType,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 50,
            l2: 1e-4,
            seed: 0,
            shuffle_each_epoch: true,
            batch_size: 32,
            head: HeadType::Logistic,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config("l2 must be >= 0".into()));
        }
        Ok(())
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Loss and gradient of the regularized objective over `batch`.
///
/// Logistic head: `Σ softplus(z) − y·z + (l2/2)‖w‖²` with `z = w·x + b`.
/// SVM head: `Σ max(0, 1 − y'·z) + (l2/2)‖w‖²` with `y' = 2y − 1`.
/// The bias is not regularized.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    batch: &[(&FeatureVector, u8)],
    l2: f64,
    head: HeadType,
) -> (f64, Vec<f64>, f64) {
    let mut grad_w: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut grad_b = 0.0;
    let mut loss = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for &(x, y) in batch {
        let z = x.dot(weights) + bias;
        let y = f64::from(y);
        let dz = match head {
            HeadType::Logistic => {
                loss += softplus(z) - y * z;
                sigmoid(z) - y
            }
            HeadType::Svm => {
                let sign = 2.0 * y - 1.0;
                let margin = 1.0 - sign * z;
                if margin > 0.0 {
                    loss += margin;
                    -sign
                } else {
                    0.0
                }
            }
        };
        if dz != 0.0 {
            for &(i, v) in &x.entries {
                grad_w[i] += dz * v;
            }
            grad_b += dz;
        }
    }
    (loss, grad_w, grad_b)
}

/// Logistic-regression (or linear SVM) classifier over TF-IDF features.
#[derive(Debug)]
pub struct LinearTextModel {
    preprocessor: Preprocessor,
    vocab: Vocabulary,
    weights: Vec<f64>,
    bias: f64,
    head: HeadType,
    queries: QueryCounter,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    head_type: HeadType,
    preprocess: PreprocessConfig,
    vocabulary: Vocabulary,
    weights: Vec<f64>,
    bias: f64,
}

impl Clone for LinearTextModel {
    /// Clones parameters; the clone starts with a fresh query counter.
    fn clone(&self) -> Self {
        LinearTextModel {
            preprocessor: self.preprocessor.clone(),
            vocab: self.vocab.clone(),
            weights: self.weights.clone(),
            bias: self.bias,
            head: self.head,
            queries: QueryCounter::default(),
        }
    }
}

impl LinearTextModel {
    pub fn from_parts(
        preprocessor: Preprocessor,
        vocab: Vocabulary,
        weights: Vec<f64>,
        bias: f64,
        head: HeadType,
    ) -> Result<Self> {
        if weights.len() != vocab.len() {
            return Err(Error::Config(format!(
                "weight vector has {} entries for a vocabulary of {}",
                weights.len(),
                vocab.len()
            )));
        }
        Ok(LinearTextModel {
            preprocessor,
            vocab,
            weights,
            bias,
            head,
            queries: QueryCounter::default(),
        })
    }

    /// Fits the model by mini-batch gradient descent.
    ///
    /// Each step moves against the batch gradient divided by the batch
    /// length. Batches are formed from a permutation drawn from `config.seed`
    /// and the last batch of an epoch may be short.
    pub fn train(
        preprocessor: Preprocessor,
        vocab: Vocabulary,
        docs: &[TokenizedDocument],
        labels: &[u8],
        config: &TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if docs.is_empty() || docs.len() != labels.len() {
            return Err(Error::EmptyInput("train needs one label per document"));
        }
        if let Some(&only) = labels.first().filter(|&&l| labels.iter().all(|&m| m == l)) {
            return Err(Error::SingleClass(only));
        }
        let features = vocab.transform_batch(docs);
        let weights = vec![0.0; vocab.len()];
        let mut model = LinearTextModel::from_parts(preprocessor, vocab, weights, 0.0, config.head)?;

        let batch_size = if config.batch_size == 0 {
            docs.len()
        } else {
            config.batch_size
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..docs.len()).collect();
        for _ in 0..config.epochs {
            if config.shuffle_each_epoch {
                order.shuffle(&mut rng);
            }
            for chunk in order.chunks(batch_size) {
                let batch: Vec<(&FeatureVector, u8)> =
                    chunk.iter().map(|&i| (&features[i], labels[i])).collect();
                let (_, grad_w, grad_b) =
                    loss_and_gradient(&model.weights, model.bias, &batch, config.l2, config.head);
                let step = config.learning_rate / batch.len() as f64;
                for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                    *w -= step * g;
                }
                model.bias -= step * grad_b;
            }
        }
        Ok(model)
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.preprocessor
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn head(&self) -> HeadType {
        self.head
    }

    /// Affine score `w·x + b` of an already preprocessed document.
    pub fn score_document(&self, doc: &TokenizedDocument) -> f64 {
        self.vocab.transform(doc).dot(&self.weights) + self.bias
    }

    fn probability(&self, score: f64) -> f64 {
        match self.head {
            HeadType::Logistic => sigmoid(score),
            HeadType::Svm => sigmoid(score.clamp(-SVM_SCORE_CLIP, SVM_SCORE_CLIP)),
        }
    }

    /// Regularized training objective over labeled documents.
    pub fn loss(&self, docs: &[TokenizedDocument], labels: &[u8], l2: f64) -> f64 {
        let features = self.vocab.transform_batch(docs);
        let batch: Vec<_> = features.iter().zip(labels.iter().copied()).collect();
        loss_and_gradient(&self.weights, self.bias, &batch, l2, self.head).0
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            head_type: self.head,
            preprocess: self.preprocessor.config().clone(),
            vocabulary: self.vocab.clone(),
            weights: self.weights.clone(),
            bias: self.bias,
        };
        let mut json = serde_json::to_string_pretty(&file)?;
        json.push('\n');
        Ok(json)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion(file.format_version));
        }
        let preprocessor = Preprocessor::new(file.preprocess)?;
        LinearTextModel::from_parts(
            preprocessor,
            file.vocabulary,
            file.weights,
            file.bias,
            file.head_type,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LinearTextModel::from_json(&json)
    }
}

impl TextModel for LinearTextModel {
    fn predict(&self, text: &str) -> Prediction {
        self.queries.add(1);
        let doc = self.preprocessor.process(text);
        Prediction::from_p1(self.probability(self.score_document(&doc)))
    }

    fn query_count(&self) -> u64 {
        self.queries.get()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::StopwordSource;
    use crate::features::FeatureConfig;

    fn preprocessor() -> Preprocessor {
        Preprocessor::new(PreprocessConfig {
            stopwords: StopwordSource::None,
            ..Default::default()
        })
        .unwrap()
    }

    fn fit(texts: &[&str], labels: &[u8], config: &TrainConfig) -> Result<LinearTextModel> {
        let pre = preprocessor();
        let docs: Vec<_> = texts.iter().map(|t| pre.process(t)).collect();
        let vocab = Vocabulary::fit(&docs, FeatureConfig::default())?;
        LinearTextModel::train(pre, vocab, &docs, labels, config)
    }

    fn constant(bias: f64) -> LinearTextModel {
        let pre = preprocessor();
        let vocab =
            Vocabulary::fit(&[pre.process("good bad")], FeatureConfig::default()).unwrap();
        LinearTextModel::from_parts(pre, vocab, vec![0.0, 0.0], bias, HeadType::Logistic).unwrap()
    }

    #[test]
    fn separable_toy_corpus_is_fit() {
        let model = fit(&["good", "bad"], &[1, 0], &TrainConfig::default()).unwrap();
        assert_eq!(model.predict("good").predicted_class, 1);
        assert_eq!(model.predict("bad").predicted_class, 0);
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let err = fit(&["good", "fine"], &[1, 1], &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::SingleClass(1)));
    }

    #[test]
    fn training_is_deterministic() {
        let texts = ["good fun", "bad dull", "fine fun", "awful dull", "good", "bad"];
        let labels = [1, 0, 1, 0, 1, 0];
        let config = TrainConfig {
            seed: 11,
            batch_size: 2,
            ..Default::default()
        };
        let a = fit(&texts, &labels, &config).unwrap();
        let b = fit(&texts, &labels, &config).unwrap();
        let bits = |m: &LinearTextModel| m.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.bias().to_bits(), b.bias().to_bits());
    }

    #[test]
    fn predict_closed_forms() {
        let model = constant(0.0);
        assert_eq!(model.predict("anything").probs, (0.5, 0.5));
        let model = constant(9f64.ln());
        let p = model.predict("good");
        assert!((p.probs.1 - 0.9).abs() < 1e-12);
        assert!((p.probs.0 + p.probs.1 - 1.0).abs() < 1e-12);
        assert_eq!(model.predict("").probs.1, p.probs.1);
        assert_eq!(model.query_count(), 2);
    }

    #[test]
    fn gradient_symmetry_and_saturation() {
        let pre = preprocessor();
        let docs = [pre.process("good"), pre.process("bad")];
        let vocab = Vocabulary::fit(&docs, FeatureConfig::default()).unwrap();
        let xs = vocab.transform_batch(&docs);
        let batch = [(&xs[0], 1u8), (&xs[1], 0u8)];
        let (_, _, grad_b) = loss_and_gradient(&[0.0, 0.0], 0.0, &batch, 1e-4, HeadType::Logistic);
        assert_eq!(grad_b, 0.0);

        let (loss, grad_w, grad_b) =
            loss_and_gradient(&[0.0, 0.0], 50.0, &batch[..1], 0.0, HeadType::Logistic);
        assert!(loss < 1e-20);
        assert!(grad_w.iter().all(|&g| g == 0.0));
        assert_eq!(grad_b, 0.0);
    }

    #[test]
    fn svm_head_trains_and_predicts() {
        let config = TrainConfig {
            head: HeadType::Svm,
            ..Default::default()
        };
        let model = fit(&["good", "bad"], &[1, 0], &config).unwrap();
        assert_eq!(model.predict("good").predicted_class, 1);
        assert_eq!(model.predict("bad").predicted_class, 0);
        let back = LinearTextModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back.head(), HeadType::Svm);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = fit(
            &["good fun", "bad dull", "fine", "awful"],
            &[1, 0, 1, 0],
            &TrainConfig::default(),
        )
        .unwrap();
        let json = model.to_json().unwrap();
        let back = LinearTextModel::from_json(&json).unwrap();
        for (a, b) in model.weights().iter().zip(back.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(model.bias().to_bits(), back.bias().to_bits());
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn weight_length_must_match_vocabulary() {
        let pre = preprocessor();
        let vocab = Vocabulary::fit(&[pre.process("a b")], FeatureConfig::default()).unwrap();
        assert!(LinearTextModel::from_parts(pre, vocab, vec![0.0], 0.0, HeadType::Logistic).is_err());
    }
}
