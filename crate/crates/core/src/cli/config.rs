use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::AttackConfig;
use crate::corpus::{DatasetFormat, PreprocessConfig, StopwordSource};
use crate::explain::LimeConfig;
use crate::features::FeatureConfig;
use crate::model::TrainConfig;
use crate::{Error, Result};

/// Everything a command needs, resolved from defaults, an optional config
/// file and command-line flags (applied in that order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub dataset_format: DatasetFormat,
    pub embeddings: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    /// Number of test documents sampled for attacks.
    pub sample_n: usize,
    /// Seed for the split and the attack sample.
    pub seed: u64,
    pub test_fraction: f64,
    pub class_names: [String; 2],
    pub skip_train: bool,
    pub text: Option<String>,
    pub doc_id: Option<usize>,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub attack: AttackConfig,
    pub lime: LimeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            dataset_format: DatasetFormat::CsvLabelText,
            embeddings: None,
            model: None,
            out: PathBuf::from("textshift-out"),
            sample_n: 10,
            seed: 0,
            test_fraction: 0.2,
            class_names: ["Negative".into(), "Positive".into()],
            skip_train: false,
            text: None,
            doc_id: None,
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            attack: AttackConfig::default(),
            lime: LimeConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean for {key}: {value:?}"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting. `seed` also reseeds training,
    /// attack and explanation; the component keys override it individually.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "dataset" => self.dataset = Some(value.into()),
            "dataset_format" => {
                self.dataset_format = match value {
                    "csv" | "csv_label_text" => DatasetFormat::CsvLabelText,
                    "dirs" | "two_directory" => DatasetFormat::TwoDirectory,
                    _ => return Err(Error::Config(format!("unknown dataset_format {value:?}"))),
                }
            }
            "embeddings" => self.embeddings = Some(value.into()),
            "model" => self.model = Some(value.into()),
            "out" => self.out = value.into(),
            "sample" | "sample_n" => self.sample_n = parse(key, value)?,
            "seed" => {
                let seed = parse(key, value)?;
                self.seed = seed;
                self.train.seed = seed;
                self.attack.seed = seed;
                self.lime.seed = seed;
            }
            "test_fraction" => self.test_fraction = parse(key, value)?,
            "class_names" => {
                let names: Vec<&str> = value.split(',').map(str::trim).collect();
                let [neg, pos] = names[..] else {
                    return Err(Error::Config("class_names needs two comma-separated names".into()));
                };
                self.class_names = [neg.into(), pos.into()];
            }
            "skip_train" => self.skip_train = parse_bool(key, value)?,
            "text" => self.text = Some(value.into()),
            "doc_id" => self.doc_id = Some(parse(key, value)?),

            "lowercase" => self.preprocess.lowercase = parse_bool(key, value)?,
            "strip_html" => self.preprocess.strip_html = parse_bool(key, value)?,
            "stem" => self.preprocess.stem = parse_bool(key, value)?,
            "stopwords" => self.preprocess.stopwords = StopwordSource::from(value.to_string()),
            "min_token_chars" => self.preprocess.min_token_chars = parse(key, value)?,

            "ngram_min" => self.features.ngram_range.0 = parse(key, value)?,
            "ngram_max" => self.features.ngram_range.1 = parse(key, value)?,
            "min_df" => self.features.min_df = parse(key, value)?,
            "sublinear_tf" => self.features.sublinear_tf = parse_bool(key, value)?,
            "use_idf" => self.features.use_idf = parse_bool(key, value)?,

            "head" => self.train.head = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "l2" => self.train.l2 = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "shuffle_each_epoch" => self.train.shuffle_each_epoch = parse_bool(key, value)?,
            "train_seed" => self.train.seed = parse(key, value)?,

            "max_percent_words" => self.attack.max_percent_words = parse(key, value)?,
            "min_embed_sim" => self.attack.min_embed_sim = parse(key, value)?,
            "candidates_per_word" => self.attack.candidates_per_word = parse(key, value)?,
            "enable_char_level" => self.attack.enable_char_level = parse_bool(key, value)?,
            "max_queries" => self.attack.max_queries = parse(key, value)?,
            "attack_seed" => self.attack.seed = parse(key, value)?,

            "num_samples" => self.lime.num_samples = parse(key, value)?,
            "num_features" => self.lime.num_features = parse(key, value)?,
            "kernel_width" => self.lime.kernel_width = parse(key, value)?,
            "ridge_lambda" => self.lime.ridge_lambda = parse(key, value)?,
            "lime_seed" => self.lime.seed = parse(key, value)?,
            "target_class" => self.lime.target_class = Some(parse(key, value)?),

            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key = value", i + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_file_text(&text)
    }

    /// Validates every component configuration.
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.features.validate()?;
        self.train.validate()?;
        self.attack.validate()?;
        self.lime.validate()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must be in (0, 1)".into()));
        }
        if self.sample_n == 0 {
            return Err(Error::Config("sample must be >= 1".into()));
        }
        Ok(())
    }

    /// The model path, defaulting to `model.json` in the output directory.
    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.json"))
    }

    pub fn require_dataset(&self) -> Result<&Path> {
        require_file("dataset", self.dataset.as_deref())
    }

    pub fn require_embeddings(&self) -> Result<&Path> {
        require_file("embeddings", self.embeddings.as_deref())
    }
}

/// Usage error unless `path` is given and exists.
pub fn require_file<'a>(what: &str, path: Option<&'a Path>) -> Result<&'a Path> {
    let path = path.ok_or_else(|| Error::Config(format!("--{what} is required")))?;
    if !path.exists() {
        return Err(Error::Config(format!("{what} not found: {}", path.display())));
    }
    Ok(path)
}
