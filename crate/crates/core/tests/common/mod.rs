#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use textshift::corpus::{load_dataset, DatasetFormat, Document, Preprocessor, TokenizedDocument};
use textshift::embeddings::EmbeddingStore;
use textshift::features::Vocabulary;
use textshift::model::{LinearTextModel, TrainConfig};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn corpus_path() -> PathBuf {
    fixture("mr_2000.csv")
}

pub fn embeddings_path() -> PathBuf {
    fixture("embeddings_50d.txt")
}

pub fn fixture_docs() -> Vec<Document> {
    load_dataset(&corpus_path(), DatasetFormat::CsvLabelText).unwrap()
}

pub fn fixture_store() -> EmbeddingStore {
    EmbeddingStore::load(&embeddings_path()).unwrap()
}

/// Logistic model trained on the whole fixture corpus with defaults.
pub fn fixture_model() -> LinearTextModel {
    let docs = fixture_docs();
    let pre = Preprocessor::new(Default::default()).unwrap();
    let (tokenized, labels): (Vec<TokenizedDocument>, Vec<u8>) = pre
        .prepare(&docs)
        .into_iter()
        .map(|(d, t)| (t, d.label))
        .unzip();
    let vocab = Vocabulary::fit(&tokenized, Default::default()).unwrap();
    LinearTextModel::train(pre, vocab, &tokenized, &labels, &TrainConfig::default()).unwrap()
}

/// A random sentence over the model vocabulary, stop words and punctuation.
pub fn random_sentence(rng: &mut impl Rng, model: &LinearTextModel) -> String {
    const FILLER: &[&str] = &["the", "a", "is", "and", "but", "it's", "of", ",", ".", "!", "very", "so"];
    let terms = model.vocabulary().terms();
    let len = rng.gen_range(3..=25);
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.65) {
                terms.choose(rng).unwrap().as_str()
            } else {
                FILLER.choose(rng).unwrap()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
