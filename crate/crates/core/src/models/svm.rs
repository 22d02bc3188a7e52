//! Binary-relevance linear SVM trained with Pegasos-style stochastic
//! subgradient descent on the primal hinge loss.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_finite, LabelBitset};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Soft-margin constant; the regulariser is `1 / (C n)`.
    pub c: f64,
    pub epochs: usize,
    /// Stop once an epoch improves the objective by less than this fraction.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, epochs: 30, tol: 1e-5, seed: 1 }
    }
}

/// One label's hyperplane. The bias is learned as the weight of an implicit
/// constant feature and is regularised with the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// `Some(class)` when the training column held a single class.
    pub constant: Option<bool>,
    /// Objective of the retained iterate after each epoch.
    pub objective: Vec<f64>,
}

impl BinarySvm {
    pub fn decision(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrSvmModel {
    pub labels: Vec<String>,
    pub dim: usize,
    pub config: SvmConfig,
    pub classifiers: Vec<BinarySvm>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SvmParameters {
    dim: usize,
    config: SvmConfig,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    constant: Vec<Option<bool>>,
    warnings: Vec<String>,
}

impl BrSvmModel {
    pub(crate) fn parameters(&self) -> SvmParameters {
        SvmParameters {
            dim: self.dim,
            config: self.config.clone(),
            weights: self.classifiers.iter().map(|c| c.weights.clone()).collect(),
            biases: self.classifiers.iter().map(|c| c.bias).collect(),
            constant: self.classifiers.iter().map(|c| c.constant).collect(),
            warnings: self.warnings.clone(),
        }
    }

    pub(crate) fn from_parameters(labels: Vec<String>, p: SvmParameters) -> Result<Self> {
        let n = labels.len();
        if p.weights.len() != n || p.biases.len() != n || p.constant.len() != n {
            return Err(Error::invalid("svm parameters do not match label_order"));
        }
        let mut classifiers = Vec::with_capacity(n);
        for ((weights, bias), constant) in p.weights.into_iter().zip(p.biases).zip(p.constant) {
            if weights.len() != p.dim {
                return Err(Error::DimensionMismatch { expected: p.dim, got: weights.len() });
            }
            check_finite("svm weights", &weights)?;
            check_finite("svm bias", &[bias])?;
            classifiers.push(BinarySvm { weights, bias, constant, objective: Vec::new() });
        }
        Ok(BrSvmModel { labels, dim: p.dim, config: p.config, classifiers, warnings: p.warnings })
    }
}

/// Regularised hinge objective `λ/2 (|w|² + b²) + mean hinge`.
fn objective(xs: &[FeatureVector], ys: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let hinge: f64 = xs.iter().zip(ys).map(|(x, &y)| (1.0 - y * (x.dot(w) + b)).max(0.0)).sum();
    reg + hinge / xs.len() as f64
}

fn train_binary(xs: &[FeatureVector], ys: &[f64], dim: usize, cfg: &SvmConfig) -> BinarySvm {
    let n = xs.len();
    let lambda = 1.0 / (cfg.c * n as f64);
    // w = scale * v keeps the shrink step O(1) for sparse inputs.
    let mut v = vec![0.0; dim];
    let mut vb = 0.0;
    let mut scale = 1.0;
    let mut best_w = vec![0.0; dim];
    let mut best_b = 0.0;
    let mut best_obj = objective(xs, ys, &best_w, best_b, lambda);
    let mut history = Vec::with_capacity(cfg.epochs);
    // The visiting order depends on the seed alone, so each label's model is
    // a function of its own column only.
    let mut rng = crate::seeded_rng(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * scale * (xs[i].dot(&v) + vb);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                vb = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * ys[i] / scale;
                xs[i].add_to(&mut v, step);
                vb += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                vb *= scale;
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let b = vb * scale;
        let obj = objective(xs, ys, &w, b, lambda);
        let improvement = best_obj - obj;
        if obj < best_obj {
            best_w = w;
            best_b = b;
            best_obj = obj;
        }
        history.push(best_obj);
        if improvement >= 0.0 && improvement < cfg.tol * best_obj.abs().max(1e-12) {
            break;
        }
    }
    BinarySvm { weights: best_w, bias: best_b, constant: None, objective: history }
}

/// Train one linear SVM per label column.
pub fn train_svm_br(
    features: &[FeatureVector],
    labels: &[LabelBitset],
    label_names: &[String],
    config: &SvmConfig,
) -> Result<BrSvmModel> {
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature vectors but {} label rows",
            features.len(),
            labels.len()
        )));
    }
    if features.len() < 2 {
        return Err(Error::invalid("at least two training examples are required"));
    }
    if !(config.c > 0.0) || config.epochs == 0 {
        return Err(Error::invalid("C and epochs must be positive"));
    }
    let dim = features[0].dim();
    let provenance = features[0].provenance();
    for f in features {
        if f.dim() != dim || f.extent() > dim {
            return Err(Error::DimensionMismatch { expected: dim, got: f.dim().max(f.extent()) });
        }
        if f.provenance() != provenance {
            return Err(Error::invalid("training features mix sparse and dense vectors"));
        }
    }
    let n_labels = label_names.len();
    if let Some(row) = labels.iter().find(|l| l.len() != n_labels) {
        return Err(Error::DimensionMismatch { expected: n_labels, got: row.len() });
    }

    let results: Vec<(BinarySvm, Option<String>)> = (0..n_labels)
        .into_par_iter()
        .map(|k| {
            let ys: Vec<f64> = labels.iter().map(|l| if l.get(k) { 1.0 } else { -1.0 }).collect();
            let positives = ys.iter().filter(|&&y| y > 0.0).count();
            if positives == 0 || positives == ys.len() {
                let class = positives > 0;
                let warning = format!(
                    "label {} has only {} examples; using a constant classifier",
                    label_names[k],
                    if class { "positive" } else { "negative" }
                );
                let clf = BinarySvm {
                    weights: vec![0.0; dim],
                    bias: if class { 1.0 } else { -1.0 },
                    constant: Some(class),
                    objective: Vec::new(),
                };
                return (clf, Some(warning));
            }
            (train_binary(features, &ys, dim, config), None)
        })
        .collect();

    let mut classifiers = Vec::with_capacity(n_labels);
    let mut warnings = Vec::new();
    for (clf, warning) in results {
        if let Some(w) = warning {
            log::warn!("{w}");
            warnings.push(w);
        }
        classifiers.push(clf);
    }
    Ok(BrSvmModel { labels: label_names.to_vec(), dim, config: config.clone(), classifiers, warnings })
}

/// Bit `k` is set when `w_k · x + b_k > 0`.
pub fn predict_svm(model: &BrSvmModel, x: &FeatureVector) -> Result<LabelBitset> {
    if x.dim() != model.dim || x.extent() > model.dim {
        return Err(Error::DimensionMismatch { expected: model.dim, got: x.dim().max(x.extent()) });
    }
    let bits: Vec<bool> = model.classifiers.iter().map(|c| c.decision(x) > 0.0).collect();
    Ok(LabelBitset::from_bools(&bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DenseVector;

    fn dense(v: &[f64]) -> FeatureVector {
        FeatureVector::Dense(DenseVector { values: v.to_vec(), no_content_words: false })
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|k| format!("L{k}")).collect()
    }

    #[test]
    fn constant_column_warns() {
        let xs = vec![dense(&[1.0, 0.0]), dense(&[0.0, 1.0]), dense(&[1.0, 1.0])];
        let ys = vec![LabelBitset::from_bools(&[true, false]), LabelBitset::from_bools(&[true, true]), LabelBitset::from_bools(&[true, false])];
        let m = train_svm_br(&xs, &ys, &names(2), &SvmConfig::default()).unwrap();
        assert_eq!(m.classifiers[0].constant, Some(true));
        assert_eq!(m.warnings.len(), 1);
        assert!(predict_svm(&m, &dense(&[-5.0, -5.0])).unwrap().get(0));
    }

    #[test]
    fn dimension_checks() {
        let xs = vec![dense(&[1.0, 0.0]), dense(&[0.0])];
        let ys = vec![LabelBitset::from_bools(&[true]), LabelBitset::from_bools(&[false])];
        assert!(train_svm_br(&xs, &ys, &names(1), &SvmConfig::default()).is_err());
        let xs = vec![dense(&[1.0, 0.0]), dense(&[0.0, 1.0])];
        let m = train_svm_br(&xs, &ys, &names(1), &SvmConfig::default()).unwrap();
        assert!(predict_svm(&m, &dense(&[1.0])).is_err());
    }

    #[test]
    fn decision_rule_is_strict() {
        let m = BrSvmModel {
            labels: names(2),
            dim: 1,
            config: SvmConfig::default(),
            classifiers: vec![
                BinarySvm { weights: vec![1.0], bias: 0.0, constant: None, objective: vec![] },
                BinarySvm { weights: vec![1.0], bias: -1.0, constant: None, objective: vec![] },
            ],
            warnings: vec![],
        };
        assert_eq!(predict_svm(&m, &dense(&[0.0])).unwrap().mask(), 0);
        assert_eq!(predict_svm(&m, &dense(&[2.0])).unwrap().mask(), 0b11);
    }
}
