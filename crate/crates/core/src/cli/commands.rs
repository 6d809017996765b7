use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{require_file, RunConfig};
use crate::attack::{greedy_attack, render_result, summarize, AttackResult, AttackStatus, AttackSummary};
use crate::corpus::{load_dataset, split, Document, Preprocessor, TokenizedDocument};
use crate::drift::{align, compare, DriftReport};
use crate::embeddings::EmbeddingStore;
use crate::explain::{explain_document, Explanation, LimeConfig};
use crate::features::Vocabulary;
use crate::model::{evaluate, LinearTextModel};
use crate::report::{self, IndexEntry};
use crate::{Error, Result, FORMAT_VERSION};

/// Weight change above which a changed token counts as re-weighted.
const WEIGHT_DELTA_THRESHOLD: f64 = 1e-3;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format_version: u32,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `body` with `format_version` and the resolved config, newline-terminated.
fn write_json<T: Serialize>(path: &Path, config: &RunConfig, body: &T) -> Result<()> {
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        config,
        body,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    write_text(path, &text)
}

/// Maps `f` over `items` on scoped worker threads, preserving order.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len())
        .max(1);
    let chunk = items.len().div_ceil(threads).max(1);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

fn load_split(config: &RunConfig) -> Result<(Vec<Document>, Vec<Document>)> {
    let path = config.require_dataset()?;
    let docs = load_dataset(path, config.dataset_format)?;
    split(&docs, |d| d.label, config.test_fraction, config.seed)
}

fn load_model(config: &RunConfig) -> Result<LinearTextModel> {
    let path = require_file("model", config.model.as_deref())?;
    LinearTextModel::load(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub n_train: usize,
    pub n_test: usize,
    pub vocabulary_size: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

fn train_model(config: &RunConfig, train: &[Document]) -> Result<LinearTextModel> {
    let preprocessor = Preprocessor::new(config.preprocess.clone())?;
    let (docs, labels): (Vec<TokenizedDocument>, Vec<u8>) = preprocessor
        .prepare(train)
        .into_iter()
        .map(|(d, t)| (t, d.label))
        .unzip();
    let vocab = Vocabulary::fit(&docs, config.features.clone())?;
    LinearTextModel::train(preprocessor, vocab, &docs, &labels, &config.train)
}

fn train_and_save(
    config: &RunConfig,
    train: &[Document],
    test: &[Document],
) -> Result<(LinearTextModel, TrainMetrics)> {
    let model = train_model(config, train)?;
    let metrics = TrainMetrics {
        n_train: train.len(),
        n_test: test.len(),
        vocabulary_size: model.vocabulary().len(),
        train_accuracy: evaluate(&model, train)?.accuracy,
        test_accuracy: evaluate(&model, test)?.accuracy,
    };
    write_text(&config.model_path(), &model.to_json()?)?;
    write_json(&config.out.join("train_metrics.json"), config, &metrics)?;
    println!(
        "trained on {} documents ({} terms): train accuracy {:.4}, test accuracy {:.4}",
        metrics.n_train, metrics.vocabulary_size, metrics.train_accuracy, metrics.test_accuracy
    );
    Ok((model, metrics))
}

pub fn cmd_train(config: &RunConfig) -> Result<TrainMetrics> {
    let (train, test) = load_split(config)?;
    train_and_save(config, &train, &test).map(|(_, m)| m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub split: String,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluationReport> {
    let model = load_model(config)?;
    let (_, test) = load_split(config)?;
    let eval = evaluate(&model, &test)?;
    let report = EvaluationReport {
        split: "test".into(),
        n: test.len(),
        correct: eval.correct.iter().filter(|&&c| c).count(),
        accuracy: eval.accuracy,
    };
    write_json(&config.out.join("evaluation.json"), config, &report)?;
    println!("test accuracy {:.4} ({}/{})", report.accuracy, report.correct, report.n);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackRun {
    pub sampled_doc_ids: Vec<usize>,
    pub results: Vec<AttackResult>,
    pub summary: AttackSummary,
}

/// Draws `sample_n` test documents under `seed` and attacks each.
fn attack_sample(
    config: &RunConfig,
    model: &LinearTextModel,
    test: &[Document],
    store: &EmbeddingStore,
) -> Result<(Vec<TokenizedDocument>, AttackRun)> {
    let prepared = model.preprocessor().prepare(test);
    if prepared.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = config.sample_n.min(prepared.len());
    if n < config.sample_n {
        log::warn!("only {} test documents available; attacking all of them", n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut picked = index::sample(&mut rng, prepared.len(), n).into_vec();
    picked.sort_unstable();
    let sampled: Vec<(u8, TokenizedDocument)> = picked
        .iter()
        .map(|&i| (prepared[i].0.label, prepared[i].1.clone()))
        .collect();
    let results = parallel_map(&sampled, |(label, doc)| {
        greedy_attack(model, doc, *label, &config.attack, store)
    });
    let summary = summarize(&results)?;
    let docs = sampled.into_iter().map(|(_, d)| d).collect();
    let run = AttackRun {
        sampled_doc_ids: results.iter().map(|r| r.doc_id).collect(),
        results,
        summary,
    };
    Ok((docs, run))
}

fn summary_lines(s: &AttackSummary) -> Vec<String> {
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    vec![
        format!(
            "attacked {} examples: {} succeeded, {} failed, {} skipped",
            s.n_examples, s.n_success, s.n_failed, s.n_skipped
        ),
        format!("original accuracy {:.4}", s.original_accuracy),
        format!("accuracy under attack {:.4}", s.accuracy_under_attack),
        format!("attack success rate {}", opt(s.success_rate)),
        format!("average percent of words changed {}", opt(s.avg_percent_words_changed)),
        format!("average number of queries {}", opt(s.avg_queries)),
        format!("average words per sentence {:.2}", s.avg_words_per_sentence),
    ]
}

pub fn cmd_attack(config: &RunConfig) -> Result<AttackRun> {
    let model = load_model(config)?;
    let store = EmbeddingStore::load(config.require_embeddings()?)?;
    let (_, test) = load_split(config)?;
    let (docs, run) = attack_sample(config, &model, &test, &store)?;
    write_json(&config.out.join("attack_results.json"), config, &run)?;
    for (result, doc) in run.results.iter().zip(&docs) {
        if result.status == AttackStatus::Success {
            println!("{}\n", render_result(result, doc, &config.class_names));
        }
    }
    for line in summary_lines(&run.summary) {
        println!("{line}");
    }
    Ok(run)
}

fn explain_target(config: &RunConfig, model: &LinearTextModel) -> Result<TokenizedDocument> {
    let text = match (&config.text, config.doc_id) {
        (Some(text), _) => text.clone(),
        (None, Some(id)) => {
            let path = config.require_dataset()?;
            let docs = load_dataset(path, config.dataset_format)?;
            docs.into_iter()
                .find(|d| d.id == id)
                .ok_or_else(|| Error::Config(format!("no document with id {id}")))?
                .text
        }
        (None, None) => return Err(Error::Config("explain needs --text or --doc-id".into())),
    };
    Ok(model.preprocessor().process(&text))
}

pub fn cmd_explain(config: &RunConfig) -> Result<Explanation> {
    let model = load_model(config)?;
    let doc = explain_target(config, &model)?;
    let explanation = explain_document(&model, &doc, &config.lime)?;
    write_json(&config.out.join("explanation.json"), config, &explanation)?;
    write_text(
        &config.out.join("explanation.html"),
        &report::explanation_html(&explanation, &config.class_names)?,
    )?;
    for f in &explanation.features {
        println!("{:>4}  {:<20} {:+.4}", f.position, f.token, f.weight);
    }
    Ok(explanation)
}

/// Drift record for one attacked example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleDrift {
    pub doc_id: usize,
    pub status: AttackStatus,
    /// Whether a substitution hit a position in the before-explanation's top-K.
    pub topk_modified: bool,
    /// Largest `|weight_after − weight_before|` over substituted positions.
    pub max_changed_weight_delta: f64,
    pub report: DriftReport,
}

/// Aggregate drift statistics over successful attacks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub n_reports: usize,
    pub n_success: usize,
    pub n_success_flipped: usize,
    pub n_topk_modified: usize,
    pub mean_topk_jaccard_topk_modified: Option<f64>,
    pub fraction_with_weight_delta: Option<f64>,
    pub weight_delta_threshold: f64,
}

impl DriftSummary {
    pub fn from_examples(examples: &[ExampleDrift]) -> Self {
        let successes: Vec<&ExampleDrift> = examples
            .iter()
            .filter(|e| e.status == AttackStatus::Success)
            .collect();
        let modified: Vec<&&ExampleDrift> = successes.iter().filter(|e| e.topk_modified).collect();
        let mean = |f: &dyn Fn(&ExampleDrift) -> f64| {
            (!modified.is_empty())
                .then(|| modified.iter().map(|e| f(e)).sum::<f64>() / modified.len() as f64)
        };
        DriftSummary {
            n_reports: examples.len(),
            n_success: successes.len(),
            n_success_flipped: successes.iter().filter(|e| e.report.flipped).count(),
            n_topk_modified: modified.len(),
            mean_topk_jaccard_topk_modified: mean(&|e| e.report.topk_jaccard),
            fraction_with_weight_delta: mean(&|e| {
                f64::from(u8::from(e.max_changed_weight_delta > WEIGHT_DELTA_THRESHOLD))
            }),
            weight_delta_threshold: WEIGHT_DELTA_THRESHOLD,
        }
    }
}

struct ExampleArtifacts {
    before: Explanation,
    after: Explanation,
    drift: ExampleDrift,
}

fn explain_pair(
    model: &LinearTextModel,
    doc: &TokenizedDocument,
    result: &AttackResult,
    lime: &LimeConfig,
    class_names: &[String; 2],
) -> Result<ExampleArtifacts> {
    let after_doc = doc.with_replacements(
        result
            .substitutions
            .iter()
            .map(|s| (s.token_position, s.replacement.as_str())),
    )?;
    let before = explain_document(model, doc, lime)?;
    let after = explain_document(model, &after_doc, lime)?;
    let aligned = align(doc, &result.substitutions)?;
    let report = compare(
        &before,
        &after,
        result.original_pred,
        result.final_pred,
        &aligned,
        class_names,
    );
    let topk_modified = result
        .substitutions
        .iter()
        .any(|s| before.features.iter().any(|f| f.position == s.token_position));
    let max_changed_weight_delta = report
        .aligned
        .iter()
        .filter(|a| a.changed)
        .map(|a| (a.weight_after - a.weight_before).abs())
        .fold(0.0, f64::max);
    Ok(ExampleArtifacts {
        before,
        after,
        drift: ExampleDrift {
            doc_id: result.doc_id,
            status: result.status,
            topk_modified,
            max_changed_weight_delta,
            report,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutcome {
    pub train: Option<TrainMetrics>,
    pub test_accuracy: f64,
    pub attack: AttackRun,
    pub examples: Vec<ExampleDrift>,
    pub drift_summary: DriftSummary,
}

/// Train (or load), attack a sample, explain each attacked example before
/// and after against the same model, and write drift reports.
pub fn cmd_pipeline(config: &RunConfig) -> Result<PipelineOutcome> {
    let store_path = config.require_embeddings()?;
    let (train, test) = load_split(config)?;
    let (model, train_metrics) = if config.skip_train {
        let model = load_model(config)?;
        log::info!("loaded model from {}", config.model_path().display());
        (model, None)
    } else {
        let (model, metrics) = train_and_save(config, &train, &test)?;
        (model, Some(metrics))
    };
    let test_accuracy = match &train_metrics {
        Some(m) => m.test_accuracy,
        None => evaluate(&model, &test)?.accuracy,
    };
    let store = EmbeddingStore::load(store_path)?;
    let (docs, run) = attack_sample(config, &model, &test, &store)?;
    write_json(&config.out.join("attack_results.json"), config, &run)?;

    let lime = LimeConfig {
        target_class: Some(config.lime.target_class.unwrap_or(1)),
        ..config.lime.clone()
    };
    let attacked: Vec<(&TokenizedDocument, &AttackResult)> = docs
        .iter()
        .zip(&run.results)
        .filter(|(_, r)| r.status != AttackStatus::Skipped)
        .collect();
    let outcomes = parallel_map(&attacked, |(doc, result)| {
        explain_pair(&model, doc, result, &lime, &config.class_names)
    });

    let mut examples = Vec::new();
    let mut first_error = None;
    let mut links = std::collections::HashMap::new();
    for outcome in outcomes {
        let artifacts = match outcome {
            Ok(a) => a,
            Err(e) => {
                first_error.get_or_insert(e);
                continue;
            }
        };
        let id = artifacts.drift.doc_id;
        let dir = config.out.join("examples").join(format!("doc_{id}"));
        write_json(&dir.join("before.json"), config, &artifacts.before)?;
        write_json(&dir.join("after.json"), config, &artifacts.after)?;
        write_json(&dir.join("drift.json"), config, &artifacts.drift)?;
        let html = report::drift_html(
            &artifacts.before,
            &artifacts.after,
            &artifacts.drift.report,
            &config.class_names,
        )?;
        write_text(&dir.join("drift.html"), &html)?;
        links.insert(id, format!("examples/doc_{id}/drift.html"));
        examples.push(artifacts.drift);
    }

    let drift_summary = DriftSummary::from_examples(&examples);
    write_json(&config.out.join("drift_summary.json"), config, &drift_summary)?;

    let mut lines = vec![format!("test accuracy {test_accuracy:.4}")];
    lines.extend(summary_lines(&run.summary));
    lines.push(format!(
        "successful attacks that flipped the drift report {}/{}",
        drift_summary.n_success_flipped, drift_summary.n_success
    ));
    let entries: Vec<IndexEntry> = run
        .results
        .iter()
        .map(|r| IndexEntry {
            doc_id: r.doc_id,
            status: format!("{:?}", r.status).to_lowercase(),
            transition: crate::drift::render_transition(
                &r.original_pred,
                &r.final_pred,
                &config.class_names,
            ),
            link: links.get(&r.doc_id).cloned(),
        })
        .collect();
    write_text(
        &config.out.join("index.html"),
        &report::index_html("textshift pipeline report", &lines, &entries)?,
    )?;
    for line in &lines {
        println!("{line}");
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(PipelineOutcome {
        train: train_metrics,
        test_accuracy,
        attack: run,
        examples,
        drift_summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u32> = (0..37).collect();
        assert_eq!(parallel_map(&items, |x| x * 2), items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&[] as &[u32], |x| *x).is_empty());
    }
}
