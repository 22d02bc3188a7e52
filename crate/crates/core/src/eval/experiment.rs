use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{kfold_splits, product_splits, FoldPlan};
use super::report::{summarize, EvalReport, FoldInput};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::features::{avg_embedding, fit_tfidf, EmbeddingTable, FeatureVector, TfIdfModel};
use crate::models::{predict_cnn, predict_svm, train_cnn, train_svm_br, CnnConfig, LabelBitset, SvmConfig};
use crate::taxonomy::{LabelGroup, LabelRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SvmTfidf,
    SvmW2v,
    CnnW2v,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::SvmTfidf, Method::SvmW2v, Method::CnnW2v];

    pub fn code(self) -> &'static str {
        match self {
            Method::SvmTfidf => "svm-tfidf",
            Method::SvmW2v => "svm-w2v",
            Method::CnnW2v => "cnn-w2v",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::SvmTfidf => "SVM + tf-idf",
            Method::SvmW2v => "SVM + w2v",
            Method::CnnW2v => "CNN + w2v",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        !matches!(self, Method::SvmTfidf)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?} (expected svm-tfidf, svm-w2v or cnn-w2v)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvKind {
    Kfold10,
    Product6,
}

impl CvKind {
    pub fn code(self) -> &'static str {
        match self {
            CvKind::Kfold10 => "kfold10",
            CvKind::Product6 => "product6",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            CvKind::Kfold10 => "10-fold cross validation",
            CvKind::Product6 => "Product cross validation",
        }
    }
}

impl fmt::Display for CvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for CvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kfold10" => Ok(CvKind::Kfold10),
            "product6" => Ok(CvKind::Product6),
            _ => Err(Error::invalid(format!("unknown cv {s:?} (expected kfold10 or product6)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form description of the labeled data, kept in the report.
    pub dataset: Option<String>,
    pub embeddings: Option<String>,
    pub label_group: LabelGroup,
    pub method: Method,
    pub cv: CvKind,
    /// Number of folds for `kfold10`.
    pub folds: usize,
    /// Seed of the k-fold shuffle.
    pub seed: u64,
    pub svm: SvmConfig,
    pub cnn: CnnConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            embeddings: None,
            label_group: LabelGroup::Top,
            method: Method::SvmTfidf,
            cv: CvKind::Kfold10,
            folds: 10,
            seed: 1,
            svm: SvmConfig::default(),
            cnn: CnnConfig::default(),
        }
    }
}

/// A sentence prepared for one label group.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub sentence_id: String,
    pub product_id: String,
    pub tokens: Vec<String>,
    pub labels: LabelBitset,
}

/// Join sentences with their label records and keep those that take part
/// in experiments on `group`. Unlabeled sentences are skipped.
pub fn build_examples(sentences: &[Sentence], records: &[LabelRecord], group: LabelGroup) -> Result<Vec<Example>> {
    let mut by_id: HashMap<&str, &LabelRecord> = HashMap::with_capacity(records.len());
    for r in records {
        if by_id.insert(r.sentence_id.as_str(), r).is_some() {
            return Err(Error::invalid(format!("sentence {} is labeled twice", r.sentence_id)));
        }
    }
    let known: BTreeSet<&str> = sentences.iter().map(|s| s.sentence_id.as_str()).collect();
    if let Some(r) = records.iter().find(|r| !known.contains(r.sentence_id.as_str())) {
        return Err(Error::NotFound(format!("labeled sentence {}", r.sentence_id)));
    }
    let mut out = Vec::new();
    for s in sentences {
        let Some(record) = by_id.get(s.sentence_id.as_str()) else { continue };
        let ls = record.to_label_set()?;
        if !group.applies_to(&ls) {
            continue;
        }
        out.push(Example {
            sentence_id: s.sentence_id.clone(),
            product_id: s.product_id.clone(),
            tokens: s.tokens.clone(),
            labels: group.bits(&ls)?,
        });
    }
    Ok(out)
}

pub struct FoldOutcome {
    pub predictions: Vec<LabelBitset>,
    pub warnings: Vec<String>,
    /// The fold's tf-idf model, for methods that fit one.
    pub tfidf: Option<TfIdfModel>,
}

/// Trains on one fold and predicts its test set.
pub trait FoldTrainer: Sync {
    fn fit_predict(&self, fold: usize, train: &[&Example], test: &[&Example], labels: &[String]) -> Result<FoldOutcome>;
}

/// The three methods of the experiment grid.
pub struct StandardTrainer<'a> {
    pub method: Method,
    pub svm: SvmConfig,
    pub cnn: CnnConfig,
    pub embeddings: Option<&'a EmbeddingTable>,
}

impl<'a> StandardTrainer<'a> {
    pub fn new(config: &ExperimentConfig, embeddings: Option<&'a EmbeddingTable>) -> Result<Self> {
        if config.method.needs_embeddings() && embeddings.is_none() {
            return Err(Error::invalid(format!("method {} needs pretrained embeddings", config.method)));
        }
        Ok(StandardTrainer { method: config.method, svm: config.svm.clone(), cnn: config.cnn.clone(), embeddings })
    }

    fn table(&self) -> Result<&'a EmbeddingTable> {
        self.embeddings
            .ok_or_else(|| Error::invalid(format!("method {} needs pretrained embeddings", self.method)))
    }
}

fn svm_fit_predict(
    xs_train: &[FeatureVector],
    xs_test: &[FeatureVector],
    train: &[&Example],
    labels: &[String],
    cfg: &SvmConfig,
) -> Result<(Vec<LabelBitset>, Vec<String>)> {
    let ys: Vec<LabelBitset> = train.iter().map(|e| e.labels.clone()).collect();
    let model = train_svm_br(xs_train, &ys, labels, cfg)?;
    let preds = xs_test.iter().map(|x| predict_svm(&model, x)).collect::<Result<_>>()?;
    Ok((preds, model.warnings))
}

impl FoldTrainer for StandardTrainer<'_> {
    fn fit_predict(&self, fold: usize, train: &[&Example], test: &[&Example], labels: &[String]) -> Result<FoldOutcome> {
        let fold_seed = |s: u64| s.wrapping_add(fold as u64);
        match self.method {
            Method::SvmTfidf => {
                let docs: Vec<&[String]> = train.iter().map(|e| e.tokens.as_slice()).collect();
                let tfidf = fit_tfidf(&docs)?;
                let xs: Vec<_> = train.iter().map(|e| tfidf.vector(&e.tokens)).collect();
                let xt: Vec<_> = test.iter().map(|e| tfidf.vector(&e.tokens)).collect();
                let cfg = SvmConfig { seed: fold_seed(self.svm.seed), ..self.svm.clone() };
                let (predictions, warnings) = svm_fit_predict(&xs, &xt, train, labels, &cfg)?;
                Ok(FoldOutcome { predictions, warnings, tfidf: Some(tfidf) })
            }
            Method::SvmW2v => {
                let table = self.table()?;
                let xs: Vec<_> = train.iter().map(|e| avg_embedding(&e.tokens, table)).collect();
                let xt: Vec<_> = test.iter().map(|e| avg_embedding(&e.tokens, table)).collect();
                let cfg = SvmConfig { seed: fold_seed(self.svm.seed), ..self.svm.clone() };
                let (predictions, warnings) = svm_fit_predict(&xs, &xt, train, labels, &cfg)?;
                Ok(FoldOutcome { predictions, warnings, tfidf: None })
            }
            Method::CnnW2v => {
                let table = self.table()?;
                let seqs: Vec<_> = train.iter().map(|e| crate::models::cnn_token_ids(table, &e.tokens)).collect();
                let ys: Vec<LabelBitset> = train.iter().map(|e| e.labels.clone()).collect();
                let cfg = CnnConfig { seed: fold_seed(self.cnn.seed), ..self.cnn.clone() };
                let model = train_cnn(&seqs, &ys, labels, table, &cfg)?;
                let predictions = test
                    .iter()
                    .map(|e| predict_cnn(&model, &model.encode(&e.tokens)).map(|(_, bits)| bits))
                    .collect::<Result<_>>()?;
                Ok(FoldOutcome { predictions, warnings: Vec::new(), tfidf: None })
            }
        }
    }
}

/// One line of the per-fold predictions log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub fold: usize,
    pub sentence_id: String,
    pub pred_bits: LabelBitset,
    pub truth_bits: LabelBitset,
}

pub struct ExperimentOutput {
    pub plan: FoldPlan,
    pub report: EvalReport,
    pub predictions: Vec<PredictionRecord>,
}

/// Run `trainer` over every fold of `plan`, folds in parallel.
pub fn run_with_trainer(
    examples: &[Example],
    plan: FoldPlan,
    config: &ExperimentConfig,
    trainer: &dyn FoldTrainer,
) -> Result<ExperimentOutput> {
    plan.validate(examples.len())?;
    let labels: Vec<String> = config.label_group.labels().iter().map(|s| s.to_string()).collect();
    if let Some(e) = examples.iter().find(|e| e.labels.len() != labels.len()) {
        return Err(Error::invalid(format!(
            "sentence {} has {} label bits, group {} needs {}",
            e.sentence_id,
            e.labels.len(),
            config.label_group,
            labels.len()
        )));
    }
    let outcomes: Vec<FoldOutcome> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let train: Vec<&Example> = fold.train.iter().map(|&i| &examples[i]).collect();
            let test: Vec<&Example> = fold.test.iter().map(|&i| &examples[i]).collect();
            let out = trainer.fit_predict(f, &train, &test, &labels)?;
            if out.predictions.len() != test.len() {
                return Err(Error::invalid(format!("fold {}: trainer returned {} predictions for {} examples", fold.name, out.predictions.len(), test.len())));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut predictions = Vec::with_capacity(examples.len());
    let mut inputs = Vec::with_capacity(plan.folds.len());
    for (f, (fold, outcome)) in plan.folds.iter().zip(outcomes).enumerate() {
        let truth: Vec<LabelBitset> = fold.test.iter().map(|&i| examples[i].labels.clone()).collect();
        for (&i, (p, t)) in fold.test.iter().zip(outcome.predictions.iter().zip(&truth)) {
            predictions.push(PredictionRecord {
                fold: f,
                sentence_id: examples[i].sentence_id.clone(),
                pred_bits: p.clone(),
                truth_bits: t.clone(),
            });
        }
        inputs.push(FoldInput {
            name: fold.name.clone(),
            train_size: fold.train.len(),
            pred: outcome.predictions,
            truth,
            warnings: outcome.warnings,
        });
    }
    let report = summarize(config, &labels, inputs)?;
    Ok(ExperimentOutput { plan, report, predictions })
}

/// Build the fold plan named in `config` and evaluate its method.
pub fn run_experiment(
    examples: &[Example],
    config: &ExperimentConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<ExperimentOutput> {
    let trainer = StandardTrainer::new(config, embeddings)?;
    let plan = match config.cv {
        CvKind::Kfold10 => kfold_splits(examples.len(), config.folds, config.seed)?,
        CvKind::Product6 => {
            let ids: Vec<&str> = examples.iter().map(|e| e.product_id.as_str()).collect();
            product_splits(&ids)?
        }
    };
    run_with_trainer(examples, plan, config, &trainer)
}
