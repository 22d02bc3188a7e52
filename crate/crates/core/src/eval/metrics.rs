use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LabelBitset;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl LabelCounts {
    /// `TP / (TP + FP)`, or 0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `TP / (TP + FN)`, or 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub per_label: Vec<LabelCounts>,
}

impl ConfusionCounts {
    pub fn n_labels(&self) -> usize {
        self.per_label.len()
    }
}

fn check_pair(pred: &[LabelBitset], truth: &[LabelBitset]) -> Result<usize> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!("{} predictions for {} examples", pred.len(), truth.len())));
    }
    let width = truth.first().map_or(0, LabelBitset::len);
    for (p, t) in pred.iter().zip(truth) {
        if p.len() != width || t.len() != width {
            return Err(Error::DimensionMismatch { expected: width, got: if p.len() != width { p.len() } else { t.len() } });
        }
    }
    Ok(width)
}

pub fn confusion(pred: &[LabelBitset], truth: &[LabelBitset]) -> Result<ConfusionCounts> {
    let width = check_pair(pred, truth)?;
    let mut per_label = vec![LabelCounts::default(); width];
    for (p, t) in pred.iter().zip(truth) {
        for (k, c) in per_label.iter_mut().enumerate() {
            match (p.get(k), t.get(k)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(ConfusionCounts { per_label })
}

/// Unweighted mean of per-label precision.
pub fn macro_precision(c: &ConfusionCounts) -> f64 {
    mean(c.per_label.iter().map(LabelCounts::precision))
}

/// Unweighted mean of per-label recall.
pub fn macro_recall(c: &ConfusionCounts) -> f64 {
    mean(c.per_label.iter().map(LabelCounts::recall))
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

fn nonempty(pred: &[LabelBitset], truth: &[LabelBitset]) -> Result<usize> {
    let width = check_pair(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::invalid("example-based metrics need at least one example"));
    }
    Ok(width)
}

/// Mean fraction of wrongly predicted bits.
pub fn hamming_loss(pred: &[LabelBitset], truth: &[LabelBitset]) -> Result<f64> {
    let width = nonempty(pred, truth)?;
    if width == 0 {
        return Ok(0.0);
    }
    let wrong: usize = pred.iter().zip(truth).map(|(p, t)| p.iter().zip(t.iter()).filter(|(a, b)| a != b).count()).sum();
    Ok(wrong as f64 / (width * pred.len()) as f64)
}

/// Mean of `|pred ∩ truth| / |pred ∪ truth|`, with an empty union scoring 1.
pub fn jaccard_similarity(pred: &[LabelBitset], truth: &[LabelBitset]) -> Result<f64> {
    nonempty(pred, truth)?;
    let total: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let inter = p.iter().zip(t.iter()).filter(|&(a, b)| a && b).count();
            let union = p.iter().zip(t.iter()).filter(|&(a, b)| a || b).count();
            if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            }
        })
        .sum();
    Ok(total / pred.len() as f64)
}

/// Fraction of examples whose predicted set equals the true set.
pub fn exact_match(pred: &[LabelBitset], truth: &[LabelBitset]) -> Result<f64> {
    nonempty(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(bits: &[u8]) -> LabelBitset {
        LabelBitset::from_bools(&bits.iter().map(|&x| x == 1).collect::<Vec<_>>())
    }

    #[test]
    fn identity_and_complement() {
        let truth = vec![b(&[1, 0, 1, 0]), b(&[0, 0, 0, 1]), b(&[1, 1, 1, 1])];
        let c = confusion(&truth, &truth).unwrap();
        assert!(c.per_label.iter().all(|l| l.fp == 0 && l.fn_ == 0));
        assert_eq!(hamming_loss(&truth, &truth).unwrap(), 0.0);
        assert_eq!(jaccard_similarity(&truth, &truth).unwrap(), 1.0);
        assert_eq!(exact_match(&truth, &truth).unwrap(), 1.0);

        let comp: Vec<_> = truth.iter().map(LabelBitset::complement).collect();
        let c = confusion(&comp, &truth).unwrap();
        assert!(c.per_label.iter().all(|l| l.tp == 0 && l.tn == 0));
        assert_eq!(hamming_loss(&comp, &truth).unwrap(), 1.0);
        assert_eq!(jaccard_similarity(&comp, &truth).unwrap(), 0.0);
    }

    #[test]
    fn mismatches_are_errors() {
        assert!(confusion(&[b(&[1])], &[]).is_err());
        assert!(confusion(&[b(&[1, 0])], &[b(&[1])]).is_err());
        assert!(hamming_loss(&[], &[]).is_err());
    }

    #[test]
    fn empty_sets_agree() {
        assert_eq!(jaccard_similarity(&[b(&[0, 0])], &[b(&[0, 0])]).unwrap(), 1.0);
    }
}
