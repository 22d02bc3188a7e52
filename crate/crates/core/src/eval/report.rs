use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::experiment::{CvKind, ExperimentConfig, Method};
use super::metrics::{confusion, exact_match, hamming_loss, jaccard_similarity, macro_precision, macro_recall, ConfusionCounts};
use crate::error::Result;
use crate::models::LabelBitset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub name: String,
    pub train_size: usize,
    pub test_size: usize,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub hamming_loss: f64,
    pub jaccard: f64,
    pub exact_match: f64,
    pub confusion: ConfusionCounts,
    /// Labels with no positive example in the test fold.
    pub zero_positive_labels: Vec<String>,
    pub warnings: Vec<String>,
}

/// Per-label values and macro averages are means over folds; the
/// example-based metrics pool every test prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub hamming_loss: f64,
    pub jaccard: f64,
    pub exact_match: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub labels: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub aggregate: AggregateMetrics,
}

pub struct FoldInput {
    pub name: String,
    pub train_size: usize,
    pub pred: Vec<LabelBitset>,
    pub truth: Vec<LabelBitset>,
    pub warnings: Vec<String>,
}

fn mean_columns(rows: &[&[f64]], width: usize) -> Vec<f64> {
    (0..width)
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len().max(1) as f64)
        .collect()
}

/// Compute fold and aggregate metrics from per-fold predictions.
pub fn summarize(
    config: &ExperimentConfig,
    labels: &[String],
    folds: Vec<FoldInput>,
) -> Result<EvalReport> {
    let mut reports = Vec::with_capacity(folds.len());
    let mut all_pred = Vec::new();
    let mut all_truth = Vec::new();
    for f in folds {
        let c = confusion(&f.pred, &f.truth)?;
        let zero_positive_labels = c
            .per_label
            .iter()
            .zip(labels)
            .filter(|(l, _)| l.tp + l.fn_ == 0)
            .map(|(_, name)| name.clone())
            .collect();
        let (hamming_loss, jaccard, exact_match) = if f.pred.is_empty() {
            (0.0, 1.0, 1.0)
        } else {
            (
                hamming_loss(&f.pred, &f.truth)?,
                jaccard_similarity(&f.pred, &f.truth)?,
                exact_match(&f.pred, &f.truth)?,
            )
        };
        reports.push(FoldReport {
            name: f.name,
            train_size: f.train_size,
            test_size: f.pred.len(),
            precision: c.per_label.iter().map(|l| l.precision()).collect(),
            recall: c.per_label.iter().map(|l| l.recall()).collect(),
            macro_precision: macro_precision(&c),
            macro_recall: macro_recall(&c),
            hamming_loss,
            jaccard,
            exact_match,
            confusion: c,
            zero_positive_labels,
            warnings: f.warnings,
        });
        all_pred.extend(f.pred);
        all_truth.extend(f.truth);
    }
    let n = labels.len();
    let p_rows: Vec<&[f64]> = reports.iter().map(|r| r.precision.as_slice()).collect();
    let r_rows: Vec<&[f64]> = reports.iter().map(|r| r.recall.as_slice()).collect();
    let folds_n = reports.len().max(1) as f64;
    let aggregate = AggregateMetrics {
        precision: mean_columns(&p_rows, n),
        recall: mean_columns(&r_rows, n),
        macro_precision: reports.iter().map(|r| r.macro_precision).sum::<f64>() / folds_n,
        macro_recall: reports.iter().map(|r| r.macro_recall).sum::<f64>() / folds_n,
        hamming_loss: hamming_loss(&all_pred, &all_truth)?,
        jaccard: jaccard_similarity(&all_pred, &all_truth)?,
        exact_match: exact_match(&all_pred, &all_truth)?,
    };
    Ok(EvalReport { config: config.clone(), labels: labels.to_vec(), folds: reports, aggregate })
}

impl EvalReport {
    pub fn to_markdown(&self, products: &[(String, String)]) -> String {
        render_markdown(std::slice::from_ref(self), products)
    }
}

fn cell(v: f64) -> String {
    format!("{v:.2}")
}

/// Render reports as tables with one column group per method, one table per
/// cross-validation kind. `products` maps product ids to display names and
/// fixes the row order of product folds.
pub fn render_markdown(reports: &[EvalReport], products: &[(String, String)]) -> String {
    let mut out = String::new();
    for cv in [CvKind::Product6, CvKind::Kfold10] {
        let mut group: Vec<&EvalReport> = reports.iter().filter(|r| r.config.cv == cv).collect();
        if group.is_empty() {
            continue;
        }
        group.sort_by_key(|r| Method::ALL.iter().position(|m| *m == r.config.method));
        let labels = &group[0].labels;
        let _ = writeln!(out, "### {}\n", cv.title());
        let mut header = String::from("| |");
        let mut sub = String::from("| Product |");
        let mut rule = String::from("|---|");
        for r in &group {
            for l in labels {
                let _ = write!(header, " {} {l} | |", r.config.method.title());
                sub.push_str(" P | R |");
                rule.push_str("---|---|");
            }
        }
        let _ = writeln!(out, "{header}\n{sub}\n{rule}");
        match cv {
            CvKind::Product6 => {
                let mut names: Vec<String> = products.iter().map(|(id, _)| id.clone()).collect();
                for f in &group[0].folds {
                    if !names.contains(&f.name) {
                        names.push(f.name.clone());
                    }
                }
                let mut row_no = 0;
                for id in &names {
                    if !group.iter().all(|r| r.folds.iter().any(|f| &f.name == id)) {
                        continue;
                    }
                    row_no += 1;
                    let display = products.iter().find(|(p, _)| p == id).map_or(id.as_str(), |(_, n)| n.as_str());
                    let mut line = format!("| {row_no} ({display}) |");
                    for r in &group {
                        let f = r.folds.iter().find(|f| &f.name == id).expect("checked above");
                        for k in 0..labels.len() {
                            let _ = write!(line, " {} | {} |", cell(f.precision[k]), cell(f.recall[k]));
                        }
                    }
                    let _ = writeln!(out, "{line}");
                }
            }
            CvKind::Kfold10 => {
                let mut line = String::from("| |");
                for r in &group {
                    for k in 0..labels.len() {
                        let _ = write!(line, " {} | {} |", cell(r.aggregate.precision[k]), cell(r.aggregate.recall[k]));
                    }
                }
                let _ = writeln!(out, "{line}");
            }
        }
        let span = labels.len() * 2;
        let footer = |name: &str, value: &dyn Fn(&EvalReport) -> f64| {
            let mut line = format!("| **{name}** |");
            for r in &group {
                let _ = write!(line, " {} |{}", cell(value(r)), " |".repeat(span - 1));
            }
            line
        };
        let _ = writeln!(out, "{}", footer("P(MA)", &|r| r.aggregate.macro_precision));
        let _ = writeln!(out, "{}", footer("R(MA)", &|r| r.aggregate.macro_recall));
        let _ = writeln!(out, "{}", footer("Hamming loss", &|r| r.aggregate.hamming_loss));
        let _ = writeln!(out, "{}", footer("Jaccard", &|r| r.aggregate.jaccard));
        let _ = writeln!(out, "{}", footer("Exact match", &|r| r.aggregate.exact_match));
        out.push('\n');
    }
    out
}
