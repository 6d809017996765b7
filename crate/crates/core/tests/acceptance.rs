//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the report reads top to bottom.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use textshift::attack::{
    check_constraints, greedy_attack, summarize, AttackConfig, AttackResult, AttackStatus,
};
use textshift::corpus::{tokenize, PreprocessConfig, Preprocessor, StopwordSource};
use textshift::embeddings::EmbeddingStore;
use textshift::explain::{explain, fit_surrogate, kernel_weight, mask_to_text, LimeConfig};
use textshift::features::{FeatureConfig, FeatureVector, Vocabulary};
use textshift::model::{loss_and_gradient, FnModel, HeadType, Prediction, TextModel};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn result_with(status: AttackStatus, p1: f64) -> AttackResult {
    let pred = Prediction::from_p1(p1);
    AttackResult {
        doc_id: 0,
        truth_label: 1,
        status,
        original_text: "a clever film".into(),
        perturbed_text: "a smart film".into(),
        original_pred: pred,
        final_pred: pred,
        substitutions: Vec::new(),
        queries: 10,
        percent_words_changed: 0.5,
        words_in_sentence: 2,
        config: AttackConfig::default(),
    }
}

fn metrics_arithmetic() -> Outcome {
    let mut results = vec![result_with(AttackStatus::Success, 0.9); 9];
    results.push(result_with(AttackStatus::Skipped, 0.1));
    let s = summarize(&results).map_err(|e| e.to_string())?;
    ensure(s.n_examples == 10 && s.n_success == 9 && s.n_skipped == 1 && s.n_failed == 0, || {
        format!("counts {s:?}")
    })?;
    ensure(s.success_rate == Some(1.0), || format!("success_rate {:?}", s.success_rate))?;
    ensure(s.original_accuracy == 0.9, || format!("original_accuracy {}", s.original_accuracy))?;
    Ok(format!("success_rate {:?}, original_accuracy {}", s.success_rate.unwrap(), s.original_accuracy))
}

fn lime_exact_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_coef = 0.0f64;
    let mut worst_r2 = 0.0f64;
    for n in 1..=10usize {
        let coefs: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.04..0.04)).collect();
        let intercept = rng.gen_range(0.45..0.55);
        let words: Vec<String> = (0..n).map(|i| format!("tok{i}")).collect();
        let doc = tokenize(&words.join(" "), &PreprocessConfig::default());
        let model = FnModel::new(|text: &str| {
            let present: HashSet<&str> = text.split(' ').collect();
            intercept
                + words
                    .iter()
                    .zip(&coefs)
                    .filter(|(w, _)| present.contains(w.as_str()))
                    .map(|(_, c)| c)
                    .sum::<f64>()
        });
        let masks: Vec<Vec<bool>> = (0..1u32 << n)
            .map(|bits| (0..n).map(|j| bits >> j & 1 == 1).collect())
            .collect();
        let texts: Vec<String> = masks.iter().map(|m| mask_to_text(&doc, m)).collect();
        let targets: Vec<f64> = model.predict_batch(&texts).iter().map(|p| p.probs.1).collect();
        let weights: Vec<f64> = masks.iter().map(|m| kernel_weight(m, 25.0)).collect();
        let fit = fit_surrogate(&masks, &targets, &weights, 1e-8).map_err(|e| e.to_string())?;
        for (got, want) in fit.coefficients.iter().zip(&coefs) {
            worst_coef = worst_coef.max((got - want).abs());
        }
        worst_r2 = worst_r2.max((fit.fidelity_r2 - 1.0).abs());
    }
    ensure(worst_coef < 1e-6, || format!("coefficient error {worst_coef:e}"))?;
    ensure(worst_r2 <= 1e-9, || format!("fidelity_r2 off by {worst_r2:e}"))?;
    Ok(format!("n = 1..10, max coefficient error {worst_coef:.1e}, max |r2 - 1| {worst_r2:.1e}"))
}

fn lime_nullity() -> Outcome {
    let model = FnModel::new(|_: &str| 0.73);
    let fixture = common::fixture_model();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let text = common::random_sentence(&mut rng, &fixture);
        let config = LimeConfig {
            seed: i,
            ..Default::default()
        };
        let e = explain(&model, &text, &config).map_err(|e| format!("{text:?}: {e}"))?;
        worst = e.features.iter().fold(worst, |m, f| m.max(f.weight.abs()));
    }
    ensure(worst < 1e-6, || format!("max |weight| {worst:e}"))?;
    Ok(format!("20 texts, max |weight| {worst:.1e}"))
}

fn random_attack_config(rng: &mut ChaCha8Rng) -> AttackConfig {
    AttackConfig {
        max_percent_words: [0.1, 0.25, 0.4, 1.0][rng.gen_range(0..4)],
        min_embed_sim: [0.3, 0.5, 0.7][rng.gen_range(0..3)],
        candidates_per_word: rng.gen_range(1..=10),
        enable_char_level: rng.gen_bool(0.5),
        max_queries: [1, 2, 5, 20, 100, 500][rng.gen_range(0..6)],
        seed: rng.gen(),
    }
}

fn attack_fuzz() -> Outcome {
    let model = common::fixture_model();
    let store = common::fixture_store();
    let docs = common::fixture_docs();
    let pre = model.preprocessor().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let started = Instant::now();
    let (mut n_docs, mut n_success) = (0, 0);
    for i in 0..240 {
        let (text, truth) = if i % 2 == 0 {
            let d = &docs[rng.gen_range(0..docs.len())];
            (d.text.clone(), d.label)
        } else {
            (common::random_sentence(&mut rng, &model), rng.gen_range(0..2))
        };
        let config = random_attack_config(&mut rng);
        let doc = pre.process(&text);
        let before = model.query_count();
        let r = greedy_attack(&model, &doc, truth, &config, &store);
        let spent = model.query_count() - before;
        n_docs += 1;
        ensure(r.queries == spent, || format!("doc {i}: reported {} queries, counter saw {spent}", r.queries))?;
        ensure(r.queries <= config.max_queries, || {
            format!("doc {i}: {} queries over budget {}", r.queries, config.max_queries)
        })?;
        if r.status != AttackStatus::Success {
            continue;
        }
        n_success += 1;
        let rescored = model.predict(&r.perturbed_text);
        ensure(r.original_pred.predicted_class == truth, || format!("doc {i}: success on a misclassified input"))?;
        ensure(rescored.predicted_class != truth, || format!("doc {i}: perturbed text keeps the true class"))?;
        ensure(rescored == r.final_pred, || format!("doc {i}: final prediction does not match re-scoring"))?;
        check_constraints(&doc, &r.substitutions, &config, &store)
            .map_err(|v| format!("doc {i}: constraint violated: {v:?}"))?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{n_docs} documents, {n_success} successes re-verified, budgets respected, {:.1}s", elapsed.as_secs_f64()))
}

fn tfidf_oracle() -> Outcome {
    let config = PreprocessConfig {
        stopwords: StopwordSource::None,
        ..Default::default()
    };
    let pre = Preprocessor::new(config).map_err(|e| e.to_string())?;
    let corpus: Vec<_> = ["a", "a", "b"].iter().map(|t| pre.process(t)).collect();
    let vocab = Vocabulary::fit(&corpus, FeatureConfig::default()).map_err(|e| e.to_string())?;
    let v = vocab.transform(&pre.process("a b"));
    let idf_a = (4.0f64 / 3.0).ln() + 1.0;
    let idf_b = 2.0f64.ln() + 1.0;
    let norm = idf_a.hypot(idf_b);
    let want = BTreeMap::from([("a", idf_a / norm), ("b", idf_b / norm)]);
    for (term, expected) in &want {
        let index = vocab.index_of(term).ok_or_else(|| format!("{term} missing"))?;
        let got = v.entries.iter().find(|e| e.0 == index).map(|e| e.1).unwrap_or(0.0);
        ensure((got - expected).abs() <= 1e-9, || format!("{term}: {got} vs {expected}"))?;
    }
    // The often quoted (0.5304, 0.8478) does not follow from this idf; the
    // closed form below is what the formula yields.
    let quoted = (0.5304, 0.8478);
    let matches_quoted = (want["a"] - quoted.0).abs() < 5e-5 && (want["b"] - quoted.1).abs() < 5e-5;
    Ok(format!(
        "weights ({:.4}, {:.4}) within 1e-9 of ln((1+n)/(1+df))+1 closed form{}",
        want["a"],
        want["b"],
        if matches_quoted { "" } else { "; quoted (0.5304, 0.8478) is not reachable from that formula" }
    ))
}

/// Exhaustive scan and full sort, with cosines computed from raw vectors.
fn neighbor_oracle(store: &EmbeddingStore, word: &str, k: usize, min_sim: f64) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = store
        .words()
        .iter()
        .filter(|w| w.as_str() != word)
        .map(|w| (w.clone(), store.cosine(word, w).unwrap()))
        .filter(|(_, s)| *s >= min_sim)
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn raw_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let norm = |v: &[f32]| v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b))
}

fn embedding_neighbors() -> Outcome {
    let base = common::fixture_store();
    ensure(base.len() >= 1000, || format!("fixture store has {} words", base.len()))?;
    // Copies of existing vectors under new names create exact ties.
    let mut entries: Vec<(String, Vec<f32>)> = base
        .words()
        .iter()
        .map(|w| (w.clone(), base.vector(w).unwrap().to_vec()))
        .collect();
    let copies: Vec<(String, Vec<f32>)> = entries
        .iter()
        .step_by(7)
        .map(|(w, v)| (format!("{w}_copy"), v.clone()))
        .collect();
    entries.extend(copies);
    let tied = EmbeddingStore::from_entries(entries).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut queries = 0;
    for store in [&base, &tied] {
        for _ in 0..60 {
            let word = store.words()[rng.gen_range(0..store.len())].clone();
            let k = rng.gen_range(1..=25);
            let min_sim = [-1.0, 0.0, 0.3, 0.5, 0.8][rng.gen_range(0..5)];
            let got = store.nearest_neighbors(&word, k, min_sim);
            let want = neighbor_oracle(store, &word, k, min_sim);
            ensure(got == want, || format!("{word} k={k} min_sim={min_sim}: {got:?} vs {want:?}"))?;
            for (other, sim) in &got {
                let exact = raw_cosine(store.vector(&word).unwrap(), store.vector(other).unwrap());
                ensure((sim - exact).abs() < 1e-5, || format!("{word}/{other}: {sim} vs {exact}"))?;
            }
            queries += 1;
        }
    }
    let tie_probe = tied.nearest_neighbors(&base.words()[0], 1, -1.0);
    ensure(tie_probe.first().map(|(w, _)| w.as_str()) == Some(&format!("{}_copy", base.words()[0])), || {
        format!("duplicate vector not ranked first: {tie_probe:?}")
    })?;
    Ok(format!("{queries} queries over {} and {} words, ties included", base.len(), tied.len()))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let dim = rng.gen_range(2..8);
        let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let bias = rng.gen_range(-1.0..1.0);
        let l2 = rng.gen_range(0.0..0.5);
        let rows: Vec<(FeatureVector, u8)> = (0..rng.gen_range(1..8))
            .map(|_| {
                let mut entries = Vec::new();
                for i in 0..dim {
                    if rng.gen_bool(0.7) {
                        entries.push((i, rng.gen_range(0.0..1.0)));
                    }
                }
                (FeatureVector { entries, norm: 1.0 }, rng.gen_range(0..2))
            })
            .collect();
        let batch: Vec<(&FeatureVector, u8)> = rows.iter().map(|(x, y)| (x, *y)).collect();
        let loss = |w: &[f64], b: f64| loss_and_gradient(w, b, &batch, l2, HeadType::Logistic).0;
        let (_, grad_w, grad_b) = loss_and_gradient(&weights, bias, &batch, l2, HeadType::Logistic);
        let mut numeric = Vec::with_capacity(dim + 1);
        for j in 0..dim {
            let (mut up, mut down) = (weights.clone(), weights.clone());
            up[j] += h;
            down[j] -= h;
            numeric.push((loss(&up, bias) - loss(&down, bias)) / (2.0 * h));
        }
        numeric.push((loss(&weights, bias + h) - loss(&weights, bias - h)) / (2.0 * h));
        let analytic: Vec<f64> = grad_w.iter().copied().chain([grad_b]).collect();
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
        let rel = if scale == 0.0 { diff } else { diff / scale };
        worst = worst.max(rel);
    }
    ensure(worst < 1e-4, || format!("relative error {worst:e}"))?;
    Ok(format!("25 instances, max relative error {worst:.1e}"))
}

fn run_pipeline(out: &Path) -> Result<Duration, String> {
    let started = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_textshift"))
        .args(["pipeline", "--dataset"])
        .arg(common::corpus_path())
        .arg("--embeddings")
        .arg(common::embeddings_path())
        .arg("--out")
        .arg(out)
        .env("TEXTSHIFT_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!("pipeline failed: {}", String::from_utf8_lossy(&output.stderr)));
    }
    Ok(started.elapsed())
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn success_dirs(out: &Path) -> Result<Vec<PathBuf>, String> {
    let results = read_json(&out.join("attack_results.json"))?;
    Ok(results["results"]
        .as_array()
        .ok_or("results missing")?
        .iter()
        .filter(|r| r["status"] == "Success")
        .map(|r| out.join("examples").join(format!("doc_{}", r["doc_id"])))
        .collect())
}

fn end_to_end(out: &Path, elapsed: Duration) -> Outcome {
    let accuracy = read_json(&out.join("train_metrics.json"))?["test_accuracy"]
        .as_f64()
        .ok_or("test_accuracy missing")?;
    let results = read_json(&out.join("attack_results.json"))?;
    let list = results["results"].as_array().ok_or("results missing")?;
    let count = |s: &str| list.iter().filter(|r| r["status"] == s).count();
    let (success, failed) = (count("Success"), count("Failed"));
    let success_rate = if success + failed == 0 { 0.0 } else { success as f64 / (success + failed) as f64 };
    let pct: Vec<f64> = list
        .iter()
        .filter(|r| r["status"] == "Success")
        .filter_map(|r| r["percent_words_changed"].as_f64())
        .collect();
    let mean_pct = if pct.is_empty() { f64::NAN } else { pct.iter().sum::<f64>() / pct.len() as f64 };
    for dir in success_dirs(out)? {
        let drift = read_json(&dir.join("drift.json"))?;
        ensure(drift["report"]["flipped"] == true, || format!("{} not flipped", dir.display()))?;
    }
    ensure(accuracy >= 0.72, || format!("test accuracy {accuracy:.3}"))?;
    ensure(success_rate >= 0.85, || format!("success rate {success_rate:.3}"))?;
    ensure(mean_pct <= 0.25, || format!("mean percent words changed {mean_pct:.3}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "test accuracy {accuracy:.3}, success rate {success_rate:.3} ({success}/{}), mean words changed {mean_pct:.3}, {:.1}s",
        success + failed,
        elapsed.as_secs_f64()
    ))
}

fn feature_weights(explanation: &Value) -> Result<BTreeMap<u64, f64>, String> {
    explanation["features"]
        .as_array()
        .ok_or("features missing")?
        .iter()
        .map(|f| Ok((f["position"].as_u64().ok_or("position")?, f["weight"].as_f64().ok_or("weight")?)))
        .collect()
}

fn drift_observable(out: &Path) -> Outcome {
    let (mut jaccards, mut with_delta) = (Vec::new(), 0usize);
    for dir in success_dirs(out)? {
        let before = feature_weights(&read_json(&dir.join("before.json"))?)?;
        let after = feature_weights(&read_json(&dir.join("after.json"))?)?;
        let drift = read_json(&dir.join("drift.json"))?;
        let changed: BTreeSet<u64> = drift["report"]["aligned"]
            .as_array()
            .ok_or("aligned missing")?
            .iter()
            .filter(|t| t["changed"] == true)
            .filter_map(|t| t["position"].as_u64())
            .collect();
        if !changed.iter().any(|p| before.contains_key(p)) {
            continue;
        }
        let b: BTreeSet<u64> = before.keys().copied().collect();
        let a: BTreeSet<u64> = after.keys().copied().collect();
        let union = b.union(&a).count();
        let jaccard = if union == 0 { 1.0 } else { b.intersection(&a).count() as f64 / union as f64 };
        let reported = drift["report"]["topk_jaccard"].as_f64().ok_or("topk_jaccard missing")?;
        ensure((jaccard - reported).abs() < 1e-12, || format!("{}: jaccard {jaccard} vs {reported}", dir.display()))?;
        jaccards.push(jaccard);
        let weight = |m: &BTreeMap<u64, f64>, p: &u64| m.get(p).copied().unwrap_or(0.0);
        if changed.iter().any(|p| (weight(&after, p) - weight(&before, p)).abs() > 1e-3) {
            with_delta += 1;
        }
    }
    ensure(!jaccards.is_empty(), || "no success modified a top-K token".into())?;
    let mean = jaccards.iter().sum::<f64>() / jaccards.len() as f64;
    let fraction = with_delta as f64 / jaccards.len() as f64;
    ensure(mean < 1.0, || format!("mean jaccard {mean}"))?;
    ensure(fraction >= 0.5, || format!("weight-delta fraction {fraction}"))?;
    Ok(format!("{} cases, mean top-K jaccard {mean:.3}, {:.0}% with weight delta > 1e-3", jaccards.len(), fraction * 100.0))
}

fn json_snapshot(out: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "json") {
                let bytes = fs::read(&path).map_err(|e| e.to_string())?;
                files.insert(path.strip_prefix(out).unwrap().to_path_buf(), bytes);
            }
        }
    }
    Ok(files)
}

fn determinism(out: &Path) -> Outcome {
    let first = json_snapshot(out)?;
    fs::remove_dir_all(out).map_err(|e| e.to_string())?;
    run_pipeline(out)?;
    let second = json_snapshot(out)?;
    ensure(first.len() == second.len(), || format!("{} vs {} JSON files", first.len(), second.len()))?;
    for (path, bytes) in &first {
        ensure(second.get(path) == Some(bytes), || format!("{} differs", path.display()))?;
    }
    Ok(format!("{} JSON artifacts byte-identical", first.len()))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let out = scratch.path().join("pipeline");
    let pipeline = run_pipeline(&out);

    let criteria: Vec<Criterion> = vec![
        ("metrics arithmetic", Box::new(metrics_arithmetic)),
        ("LIME exact recovery", Box::new(lime_exact_recovery)),
        ("LIME nullity", Box::new(lime_nullity)),
        ("attack validity fuzz", Box::new(attack_fuzz)),
        ("end-to-end pipeline", Box::new(|| end_to_end(&out, pipeline.clone()?))),
        ("TF-IDF oracle", Box::new(tfidf_oracle)),
        ("embedding neighbors", Box::new(embedding_neighbors)),
        ("gradient check", Box::new(gradient_check)),
        ("explanation drift observable", Box::new(|| {
            pipeline.clone()?;
            drift_observable(&out)
        })),
        ("determinism", Box::new(|| {
            pipeline.clone()?;
            determinism(&out)
        })),
    ];

    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(reason) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
