//! Static HTML rendering of explanations and drift reports.
//!
//! Pages are self-contained (inline CSS, no scripts) and carry no
//! timestamps, so reruns produce identical files. Every page is checked for
//! balanced markup before it is returned.

use std::fmt::Write as _;

use crate::drift::DriftReport;
use crate::explain::Explanation;
use crate::{Error, Result};

/// Highlight colors as RGB: class 0 orange, class 1 blue.
const CLASS_COLORS: [(u8, u8, u8); 2] = [(245, 135, 48), (49, 130, 206)];

const STYLE: &str = "body{font-family:sans-serif;margin:2em;max-width:60em}\
.sentence{line-height:2em;font-size:1.1em}\
.tok{padding:0.1em 0.2em;border-radius:0.2em}\
.changed{outline:2px solid #444}\
table{border-collapse:collapse}td,th{padding:0.2em 0.6em;text-align:left}\
.panel{display:flex;gap:2em}.panel div{flex:1}\
.bar{display:inline-block;height:0.8em}";

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn page(title: &str, body: &str) -> Result<String> {
    let html = format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n\
         <title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n{body}</body>\n</html>\n",
        escape(title)
    );
    check_well_formed(&html)?;
    Ok(html)
}

/// Background color for a weight, with opacity `|weight| / max_abs`.
///
/// Weights are stored against class 1, so positive weights take the class-1
/// color and negative weights the class-0 color.
fn highlight(weight: f64, max_abs: f64) -> String {
    if weight == 0.0 || max_abs == 0.0 {
        return String::new();
    }
    let (r, g, b) = CLASS_COLORS[usize::from(weight > 0.0)];
    let alpha = (weight.abs() / max_abs).clamp(0.0, 1.0);
    format!(" style=\"background-color:rgba({r},{g},{b},{alpha:.3})\"")
}

/// Signed share of each weight in the summed magnitude of the top features.
pub fn weight_percentages(explanation: &Explanation) -> Vec<f64> {
    let total: f64 = explanation.features.iter().map(|f| f.weight.abs()).sum();
    explanation
        .features
        .iter()
        .map(|f| if total > 0.0 { f.weight / total } else { 0.0 })
        .collect()
}

fn max_abs(explanation: &Explanation) -> f64 {
    explanation
        .features
        .iter()
        .map(|f| f.weight.abs())
        .fold(0.0, f64::max)
}

fn sentence(explanation: &Explanation, changed: &[bool]) -> String {
    let scale = max_abs(explanation);
    let mut out = String::from("<p class=\"sentence\">");
    for (position, token) in explanation.tokens.iter().enumerate() {
        let class = if changed.get(position).copied().unwrap_or(false) {
            "tok changed"
        } else {
            "tok"
        };
        let weight = explanation.weight_at(position);
        let _ = write!(
            out,
            "<span class=\"{class}\"{}>{}</span> ",
            highlight(weight, scale),
            escape(token)
        );
    }
    out.push_str("</p>\n");
    out
}

fn feature_table(explanation: &Explanation) -> String {
    let mut out = String::from(
        "<table>\n<tr><th>position</th><th>token</th><th>weight</th><th>share</th></tr>\n",
    );
    for (f, share) in explanation.features.iter().zip(weight_percentages(explanation)) {
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{}</td><td>{:+.4}</td><td>{:+.0}%</td></tr>",
            f.position,
            escape(&f.token),
            f.weight,
            share * 100.0
        );
    }
    out.push_str("</table>\n");
    out
}

fn prediction_line(explanation: &Explanation, class_names: &[String; 2]) -> String {
    let p = &explanation.prediction;
    format!(
        "<p>Prediction: {} {:.0}%, {} {:.0}%. Weights explain class {}.</p>\n",
        escape(&class_names[0]),
        p.probs.0 * 100.0,
        escape(&class_names[1]),
        p.probs.1 * 100.0,
        escape(&class_names[usize::from(explanation.target_class)]),
    )
}

fn legend(class_names: &[String; 2]) -> String {
    let swatch = |class: usize| {
        let (r, g, b) = CLASS_COLORS[class];
        format!(
            "<span class=\"tok\" style=\"background-color:rgb({r},{g},{b})\">{}</span>",
            escape(&class_names[class])
        )
    };
    format!(
        "<p>Legend: {} {} (darker means more important)</p>\n",
        swatch(0),
        swatch(1)
    )
}

/// Standalone page highlighting one explanation.
pub fn explanation_html(explanation: &Explanation, class_names: &[String; 2]) -> Result<String> {
    let mut body = String::from("<h1>Explanation</h1>\n");
    body.push_str(&legend(class_names));
    body.push_str(&prediction_line(explanation, class_names));
    body.push_str(&sentence(explanation, &[]));
    let _ = writeln!(body, "<p>Surrogate fidelity (R2): {:.4}</p>", explanation.fidelity_r2);
    body.push_str(&feature_table(explanation));
    page("Explanation", &body)
}

fn delta_bars(report: &DriftReport) -> String {
    let scale = report
        .aligned
        .iter()
        .map(|a| (a.weight_after - a.weight_before).abs())
        .fold(0.0, f64::max);
    let mut out = String::from(
        "<table>\n<tr><th>position</th><th>before</th><th>after</th><th>delta</th><th></th></tr>\n",
    );
    for a in &report.aligned {
        let delta = a.weight_after - a.weight_before;
        if a.weight_before == 0.0 && a.weight_after == 0.0 && !a.changed {
            continue;
        }
        let width = if scale > 0.0 { delta.abs() / scale * 10.0 } else { 0.0 };
        let (r, g, b) = CLASS_COLORS[usize::from(delta > 0.0)];
        let token = if a.changed {
            format!("{} &#8594; {}", escape(&a.token_before), escape(&a.token_after))
        } else {
            escape(&a.token_before)
        };
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{token}</td><td>{:+.4}</td><td>{:+.4}</td>\
             <td><span class=\"bar\" style=\"width:{width:.2}em;background-color:rgb({r},{g},{b})\"></span></td></tr>",
            a.position, a.weight_before, delta
        );
    }
    out.push_str("</table>\n");
    out
}

/// Side-by-side before/after panel with a per-token delta list.
pub fn drift_html(
    before: &Explanation,
    after: &Explanation,
    report: &DriftReport,
    class_names: &[String; 2],
) -> Result<String> {
    let changed: Vec<bool> = report.aligned.iter().map(|a| a.changed).collect();
    let mut body = String::from("<h1>Explanation drift</h1>\n");
    let _ = writeln!(body, "<p>{}</p>", escape(&report.transition_text));
    body.push_str(&legend(class_names));
    body.push_str("<div class=\"panel\">\n<div>\n<h2>Original</h2>\n");
    body.push_str(&prediction_line(before, class_names));
    body.push_str(&sentence(before, &[]));
    body.push_str("</div>\n<div>\n<h2>Adversarial</h2>\n");
    body.push_str(&prediction_line(after, class_names));
    body.push_str(&sentence(after, &changed));
    body.push_str("</div>\n</div>\n");
    let rho = report
        .spearman_rho
        .map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}"));
    let _ = writeln!(
        body,
        "<p>Top-K Jaccard: {:.3}. Spearman rho: {rho}. Sign flips: {}.</p>",
        report.topk_jaccard, report.sign_flips
    );
    body.push_str("<h2>Weight changes</h2>\n");
    body.push_str(&delta_bars(report));
    page("Explanation drift", &body)
}

/// One row of the pipeline index page.
pub struct IndexEntry {
    pub doc_id: usize,
    pub status: String,
    pub transition: String,
    pub link: Option<String>,
}

pub fn index_html(title: &str, summary_lines: &[String], entries: &[IndexEntry]) -> Result<String> {
    let mut body = format!("<h1>{}</h1>\n<ul>\n", escape(title));
    for line in summary_lines {
        let _ = writeln!(body, "<li>{}</li>", escape(line));
    }
    body.push_str("</ul>\n<table>\n<tr><th>document</th><th>status</th><th>prediction</th><th>report</th></tr>\n");
    for e in entries {
        let link = e.link.as_ref().map_or_else(String::new, |href| {
            format!("<a href=\"{}\">drift</a>", escape(href))
        });
        let _ = writeln!(
            body,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{link}</td></tr>",
            e.doc_id,
            escape(&e.status),
            escape(&e.transition)
        );
    }
    body.push_str("</table>\n");
    page(title, &body)
}

const VOID_ELEMENTS: [&str; 6] = ["meta", "br", "hr", "img", "link", "input"];

/// Checks that every element is closed in order and attributes are quoted.
pub fn check_well_formed(html: &str) -> Result<()> {
    let fail = |msg: String| Err(Error::Config(format!("malformed html: {msg}")));
    let mut stack: Vec<&str> = Vec::new();
    let mut rest = html;
    while let Some(start) = rest.find('<') {
        if rest[..start].contains('>') {
            return fail("stray '>'".into());
        }
        let after = &rest[start + 1..];
        let Some(end) = after.find('>') else {
            return fail("unterminated tag".into());
        };
        let tag = &after[..end];
        rest = &after[end + 1..];
        if tag.starts_with('!') {
            continue;
        }
        if tag.contains('<') || !tag.matches('"').count().is_multiple_of(2) {
            return fail(format!("bad tag <{tag}>"));
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {}
                other => return fail(format!("</{name}> closes {other:?}")),
            }
            continue;
        }
        let name = tag
            .split(|c: char| c.is_whitespace() || c == '/')
            .next()
            .unwrap_or("");
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric()) {
            return fail(format!("bad element name in <{tag}>"));
        }
        if !tag.ends_with('/') && !VOID_ELEMENTS.contains(&name) {
            stack.push(name);
        }
    }
    if rest.contains('>') {
        return fail("stray '>'".into());
    }
    match stack.last() {
        Some(open) => fail(format!("<{open}> never closed")),
        None => Ok(()),
    }
}
