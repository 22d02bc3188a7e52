//! Sentence CNN with one convolution layer, max-over-time pooling and one
//! sigmoid output per label, trained end to end including the embeddings.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, dot, LabelBitset};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;

/// Padding token. Its embedding row is fixed at zero.
pub const PAD_ID: u32 = 0;
/// Token missing from the embedding vocabulary.
pub const UNK_ID: u32 = 1;

pub type TokenIds = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    /// Longer sequences are truncated.
    pub max_len: usize,
    pub windows: Vec<usize>,
    pub feature_maps: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Adam step size.
    pub lr: f64,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            max_len: 60,
            windows: vec![3, 4, 5],
            feature_maps: 100,
            dropout: 0.5,
            batch_size: 50,
            epochs: 10,
            lr: 1e-3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct FilterBank {
    width: usize,
    /// `maps x width x dim`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub labels: Vec<String>,
    pub config: CnnConfig,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    dim: usize,
    embeddings: Vec<f64>,
    banks: Vec<FilterBank>,
    /// `labels x total_maps`.
    out_w: Vec<f64>,
    out_b: Vec<f64>,
}

/// Gradients laid out like the model's parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnGradients {
    pub embeddings: Vec<f64>,
    pub filter_weights: Vec<Vec<f64>>,
    pub filter_bias: Vec<Vec<f64>>,
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
}

impl CnnGradients {
    /// Blocks in the same order as [`CnnModel::blocks`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.embeddings];
        for (w, b) in self.filter_weights.iter().zip(&self.filter_bias) {
            out.push(w);
            out.push(b);
        }
        out.push(&self.output_weights);
        out.push(&self.output_bias);
        out
    }
}

struct Trace {
    len: usize,
    x: Vec<f64>,
    argmax: Vec<usize>,
    pre: Vec<f64>,
    mask: Vec<f64>,
    h: Vec<f64>,
    logits: Vec<f64>,
}

fn uniform(rng: &mut impl Rng, n: usize, a: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-a..a)).collect()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit, stable for large |z|.
#[inline]
fn bce_with_logits(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Length up to and including the last non-padding id.
fn real_len(ids: &[u32]) -> usize {
    ids.iter().rposition(|&i| i != PAD_ID).map_or(0, |p| p + 1)
}

/// Map tokens to ids for a model initialised from `table`.
pub fn token_ids<T: AsRef<str>>(table: &EmbeddingTable, tokens: &[T]) -> TokenIds {
    tokens
        .iter()
        .map(|t| table.index_of(t.as_ref()).map_or(UNK_ID, |i| i as u32 + 2))
        .collect()
}

impl CnnModel {
    /// Fresh model whose embeddings start from `table`.
    pub fn init(labels: &[String], table: &EmbeddingTable, config: &CnnConfig) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("at least one label is required"));
        }
        if config.windows.is_empty() || config.windows.contains(&0) || config.feature_maps == 0 {
            return Err(Error::invalid("windows and feature_maps must be positive"));
        }
        if config.max_len == 0 || config.batch_size == 0 || !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::invalid("max_len and batch_size must be positive, dropout in [0, 1)"));
        }
        let dim = table.dim();
        let mut rng = crate::seeded_rng(config.seed);
        let mut vocab = vec!["<pad>".to_string(), "<unk>".to_string()];
        vocab.extend(table.words().iter().cloned());
        let index = vocab.iter().enumerate().skip(2).map(|(i, w)| (w.clone(), i as u32)).collect();
        let mut embeddings = vec![0.0; dim];
        embeddings.extend(uniform(&mut rng, dim, 0.25));
        embeddings.extend(table.data().iter().map(|&v| f64::from(v)));
        let maps = config.feature_maps;
        let banks: Vec<FilterBank> = config
            .windows
            .iter()
            .map(|&width| {
                let a = (6.0 / (width * dim + maps) as f64).sqrt();
                FilterBank { width, weights: uniform(&mut rng, maps * width * dim, a), bias: vec![0.0; maps] }
            })
            .collect();
        let total = maps * banks.len();
        let a = (6.0 / (total + labels.len()) as f64).sqrt();
        let out_w = uniform(&mut rng, labels.len() * total, a);
        Ok(CnnModel {
            labels: labels.to_vec(),
            config: config.clone(),
            epoch_losses: Vec::new(),
            vocab,
            index,
            dim,
            embeddings,
            banks,
            out_w,
            out_b: vec![0.0; labels.len()],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    fn total_maps(&self) -> usize {
        self.config.feature_maps * self.banks.len()
    }

    fn max_width(&self) -> usize {
        self.banks.iter().map(|b| b.width).max().unwrap_or(1)
    }

    pub fn encode<T: AsRef<str>>(&self, tokens: &[T]) -> TokenIds {
        tokens.iter().map(|t| self.index.get(t.as_ref()).copied().unwrap_or(UNK_ID)).collect()
    }

    /// Parameter blocks: embeddings, then weights and bias of each filter
    /// bank, then output weights and output bias.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![("embeddings".into(), &self.embeddings)];
        for b in &self.banks {
            out.push((format!("filters{}.weights", b.width), &b.weights));
            out.push((format!("filters{}.bias", b.width), &b.bias));
        }
        out.push(("output.weights".into(), &self.out_w));
        out.push(("output.bias".into(), &self.out_b));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.embeddings];
        for b in &mut self.banks {
            out.push(&mut b.weights);
            out.push(&mut b.bias);
        }
        out.push(&mut self.out_w);
        out.push(&mut self.out_b);
        out
    }

    fn check_ids(&self, ids: &[u32]) -> Result<()> {
        match ids.iter().find(|&&i| i as usize >= self.vocab.len()) {
            Some(i) => Err(Error::invalid(format!("token id {i} outside vocabulary of {}", self.vocab.len()))),
            None => Ok(()),
        }
    }

    fn forward(&self, ids: &[u32], dropout: Option<&mut dyn rand::RngCore>) -> Trace {
        let d = self.dim;
        let len = real_len(ids).min(self.config.max_len);
        // Only windows that start on a real token are pooled, so appending
        // padding never changes the output. An empty sequence still gets
        // one all-padding window.
        let positions = len.max(1);
        let rows = positions + self.max_width() - 1;
        let mut x = vec![0.0; rows * d];
        for (p, &id) in ids[..len].iter().enumerate() {
            let id = id as usize;
            if id == PAD_ID as usize {
                continue;
            }
            x[p * d..(p + 1) * d].copy_from_slice(&self.embeddings[id * d..(id + 1) * d]);
        }
        let maps = self.config.feature_maps;
        let total = self.total_maps();
        let mut pre = vec![f64::NEG_INFINITY; total];
        let mut argmax = vec![0; total];
        for (bi, bank) in self.banks.iter().enumerate() {
            let span = bank.width * d;
            for m in 0..maps {
                let w = &bank.weights[m * span..(m + 1) * span];
                let slot = bi * maps + m;
                for p in 0..positions {
                    let v = bank.bias[m] + dot(w, &x[p * d..p * d + span]);
                    if v > pre[slot] {
                        pre[slot] = v;
                        argmax[slot] = p;
                    }
                }
            }
        }
        let mask: Vec<f64> = match dropout {
            Some(rng) if self.config.dropout > 0.0 => {
                let keep = 1.0 - self.config.dropout;
                (0..total).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect()
            }
            _ => vec![1.0; total],
        };
        let h: Vec<f64> = pre.iter().zip(&mask).map(|(&v, &k)| v.max(0.0) * k).collect();
        let logits = (0..self.labels.len())
            .map(|l| self.out_b[l] + dot(&self.out_w[l * total..(l + 1) * total], &h))
            .collect();
        Trace { len, x, argmax, pre, mask, h, logits }
    }

    /// Per-label probabilities with dropout disabled.
    pub fn probabilities(&self, ids: &[u32]) -> Vec<f64> {
        self.forward(ids, None).logits.into_iter().map(sigmoid).collect()
    }

    /// Mean per-label sigmoid cross-entropy over a batch and its gradients.
    /// `dropout_seed` fixes the dropout masks; `None` disables dropout.
    pub fn loss_and_gradients(
        &self,
        batch: &[&[u32]],
        labels: &[&LabelBitset],
        dropout_seed: Option<u64>,
    ) -> Result<(f64, CnnGradients)> {
        if batch.is_empty() || batch.len() != labels.len() {
            return Err(Error::invalid("batch and labels must be non-empty and of equal length"));
        }
        for (ids, y) in batch.iter().zip(labels) {
            self.check_ids(ids)?;
            if y.len() != self.labels.len() {
                return Err(Error::DimensionMismatch { expected: self.labels.len(), got: y.len() });
            }
        }
        Ok(self.batch_pass(batch, labels, dropout_seed))
    }

    fn batch_pass(&self, batch: &[&[u32]], labels: &[&LabelBitset], dropout_seed: Option<u64>) -> (f64, CnnGradients) {
        let d = self.dim;
        let maps = self.config.feature_maps;
        let total = self.total_maps();
        let n_labels = self.labels.len();
        let mut grads = CnnGradients {
            embeddings: vec![0.0; self.embeddings.len()],
            filter_weights: self.banks.iter().map(|b| vec![0.0; b.weights.len()]).collect(),
            filter_bias: self.banks.iter().map(|b| vec![0.0; b.bias.len()]).collect(),
            output_weights: vec![0.0; self.out_w.len()],
            output_bias: vec![0.0; n_labels],
        };
        let mut rng = dropout_seed.map(crate::seeded_rng);
        let scale = 1.0 / (batch.len() * n_labels) as f64;
        let mut loss = 0.0;
        let mut dh = vec![0.0; total];
        for (ids, y) in batch.iter().zip(labels) {
            let tr = self.forward(ids, rng.as_mut().map(|r| r as &mut dyn rand::RngCore));
            dh.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..n_labels {
                let target = if y.get(l) { 1.0 } else { 0.0 };
                let z = tr.logits[l];
                loss += bce_with_logits(z, target);
                let dz = (sigmoid(z) - target) * scale;
                grads.output_bias[l] += dz;
                let row = l * total;
                for j in 0..total {
                    grads.output_weights[row + j] += dz * tr.h[j];
                    dh[j] += dz * self.out_w[row + j];
                }
            }
            for (bi, bank) in self.banks.iter().enumerate() {
                let span = bank.width * d;
                for m in 0..maps {
                    let slot = bi * maps + m;
                    if tr.pre[slot] <= 0.0 || tr.mask[slot] == 0.0 {
                        continue;
                    }
                    let g = dh[slot] * tr.mask[slot];
                    let p = tr.argmax[slot];
                    grads.filter_bias[bi][m] += g;
                    let gw = &mut grads.filter_weights[bi][m * span..(m + 1) * span];
                    for (gwk, &xk) in gw.iter_mut().zip(&tr.x[p * d..p * d + span]) {
                        *gwk += g * xk;
                    }
                    let w = &bank.weights[m * span..(m + 1) * span];
                    for j in 0..bank.width {
                        let pos = p + j;
                        if pos >= tr.len {
                            break;
                        }
                        let id = ids[pos] as usize;
                        if id == PAD_ID as usize {
                            continue;
                        }
                        let ge = &mut grads.embeddings[id * d..(id + 1) * d];
                        for (gek, &wk) in ge.iter_mut().zip(&w[j * d..(j + 1) * d]) {
                            *gek += g * wk;
                        }
                    }
                }
            }
        }
        (loss * scale, grads)
    }

    pub(crate) fn parameters(&self) -> CnnParameters {
        let d = self.dim;
        CnnParameters {
            dim: d,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            embeddings: self.embeddings.chunks(d).map(<[f64]>::to_vec).collect(),
            filters: self
                .banks
                .iter()
                .map(|b| FilterParameters {
                    width: b.width,
                    weights: b
                        .weights
                        .chunks(b.width * d)
                        .map(|m| m.chunks(d).map(<[f64]>::to_vec).collect())
                        .collect(),
                    bias: b.bias.clone(),
                })
                .collect(),
            output_weights: self.out_w.chunks(self.total_maps()).map(<[f64]>::to_vec).collect(),
            output_bias: self.out_b.clone(),
            epoch_losses: self.epoch_losses.clone(),
        }
    }

    pub(crate) fn from_parameters(labels: Vec<String>, p: CnnParameters) -> Result<Self> {
        let d = p.dim;
        let bad = |what: &str| Error::invalid(format!("cnn parameters: {what}"));
        if d == 0 || p.vocab.len() < 2 || p.embeddings.len() != p.vocab.len() {
            return Err(bad("embedding rows must match the vocabulary"));
        }
        if p.embeddings.iter().any(|r| r.len() != d) {
            return Err(bad("embedding row of wrong dimension"));
        }
        let maps = p.config.feature_maps;
        let mut banks = Vec::new();
        for f in &p.filters {
            let ok = f.weights.len() == maps
                && f.bias.len() == maps
                && f.weights.iter().all(|m| m.len() == f.width && m.iter().all(|r| r.len() == d));
            if !ok {
                return Err(bad("filter bank shape"));
            }
            banks.push(FilterBank {
                width: f.width,
                weights: f.weights.iter().flatten().flatten().copied().collect(),
                bias: f.bias.clone(),
            });
        }
        let total = maps * banks.len();
        if p.output_weights.len() != labels.len()
            || p.output_weights.iter().any(|r| r.len() != total)
            || p.output_bias.len() != labels.len()
        {
            return Err(bad("output layer shape"));
        }
        let index = p.vocab.iter().enumerate().skip(2).map(|(i, w)| (w.clone(), i as u32)).collect();
        let model = CnnModel {
            labels,
            config: p.config,
            epoch_losses: p.epoch_losses,
            vocab: p.vocab,
            index,
            dim: d,
            embeddings: p.embeddings.into_iter().flatten().collect(),
            banks,
            out_w: p.output_weights.into_iter().flatten().collect(),
            out_b: p.output_bias,
        };
        for (name, block) in model.blocks() {
            check_finite(&name, block)?;
        }
        Ok(model)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct FilterParameters {
    width: usize,
    weights: Vec<Vec<Vec<f64>>>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CnnParameters {
    dim: usize,
    config: CnnConfig,
    vocab: Vec<String>,
    embeddings: Vec<Vec<f64>>,
    filters: Vec<FilterParameters>,
    output_weights: Vec<Vec<f64>>,
    output_bias: Vec<f64>,
    epoch_losses: Vec<f64>,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &CnnModel) -> Self {
        let sizes: Vec<usize> = model.blocks().iter().map(|(_, b)| b.len()).collect();
        Adam {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut CnnModel, grads: &CnnGradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let grad_blocks = grads.blocks();
        for (bi, params) in model.blocks_mut().into_iter().enumerate() {
            let g = grad_blocks[bi];
            let (m, v) = (&mut self.m[bi], &mut self.v[bi]);
            for i in 0..params.len() {
                m[i] = Self::B1 * m[i] + (1.0 - Self::B1) * g[i];
                v[i] = Self::B2 * v[i] + (1.0 - Self::B2) * g[i] * g[i];
                params[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Train a CNN on token-id sequences produced by [`token_ids`] for `init`.
pub fn train_cnn(
    sequences: &[TokenIds],
    labels: &[LabelBitset],
    label_names: &[String],
    init: &EmbeddingTable,
    config: &CnnConfig,
) -> Result<CnnModel> {
    if sequences.is_empty() || sequences.len() != labels.len() {
        return Err(Error::invalid("need at least one sequence and one label row per sequence"));
    }
    if config.epochs == 0 || !(config.lr > 0.0) {
        return Err(Error::invalid("epochs and lr must be positive"));
    }
    let mut model = CnnModel::init(label_names, init, config)?;
    for (ids, y) in sequences.iter().zip(labels) {
        model.check_ids(ids)?;
        if y.len() != label_names.len() {
            return Err(Error::DimensionMismatch { expected: label_names.len(), got: y.len() });
        }
    }
    let truncated = sequences.iter().filter(|s| real_len(s) > config.max_len).count();
    if truncated > 0 {
        log::warn!("{truncated} sequences longer than {} tokens were truncated", config.max_len);
    }
    let mut rng = crate::seeded_rng(config.seed.wrapping_add(0x5eed));
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&[u32]> = chunk.iter().map(|&i| sequences[i].as_slice()).collect();
            let ys: Vec<&LabelBitset> = chunk.iter().map(|&i| &labels[i]).collect();
            let (loss, grads) = model.batch_pass(&batch, &ys, Some(rng.random()));
            adam.step(&mut model, &grads, config.lr);
            total += loss * chunk.len() as f64;
        }
        let mean = total / sequences.len() as f64;
        log::debug!("cnn epoch {}: mean loss {mean:.4}", epoch + 1);
        model.epoch_losses.push(mean);
    }
    Ok(model)
}

/// Probabilities with dropout off, and bits with `p >= 0.5` mapped to 1.
pub fn predict_cnn(model: &CnnModel, ids: &[u32]) -> Result<(Vec<f64>, LabelBitset)> {
    model.check_ids(ids)?;
    if real_len(ids) > model.config.max_len {
        log::warn!("sequence of {} tokens truncated to {}", real_len(ids), model.config.max_len);
    }
    let p = model.probabilities(ids);
    let bits: Vec<bool> = p.iter().map(|&v| v >= 0.5).collect();
    Ok((p, LabelBitset::from_bools(&bits)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let words: Vec<String> = ["battery", "dies", "fast", "love", "it", "app", "crashes"].iter().map(|s| s.to_string()).collect();
        let data = (0..words.len() * 4).map(|i| ((i * 7 % 11) as f32 - 5.0) / 10.0).collect();
        EmbeddingTable::new(words, 4, data).unwrap()
    }

    fn small() -> CnnConfig {
        CnnConfig { feature_maps: 3, windows: vec![2, 3], batch_size: 2, epochs: 3, ..Default::default() }
    }

    fn names() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn token_ids_match_encode() {
        let t = table();
        let m = CnnModel::init(&names(), &t, &small()).unwrap();
        let toks = ["battery", "zzz", "crashes"];
        assert_eq!(token_ids(&t, &toks), m.encode(&toks));
        assert_eq!(m.encode(&toks), vec![2, UNK_ID, 8]);
    }

    #[test]
    fn padding_does_not_change_output() {
        let m = CnnModel::init(&names(), &table(), &small()).unwrap();
        let ids = vec![2, 3, 4];
        let mut padded = ids.clone();
        padded.extend([PAD_ID; 5]);
        assert_eq!(m.probabilities(&ids), m.probabilities(&padded));
        assert_eq!(m.probabilities(&[]), m.probabilities(&[PAD_ID, PAD_ID]));
        assert_eq!(m.probabilities(&[]).len(), 2);
    }

    #[test]
    fn bce_is_stable() {
        assert!((bce_with_logits(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(bce_with_logits(800.0, 0.0).is_finite());
        assert!(bce_with_logits(-800.0, 1.0).is_finite());
        assert!(bce_with_logits(50.0, 1.0) < 1e-20);
    }

    #[test]
    fn rejects_bad_ids() {
        let t = table();
        let m = CnnModel::init(&names(), &t, &small()).unwrap();
        assert!(predict_cnn(&m, &[99]).is_err());
        let y = LabelBitset::zeros(2);
        assert!(m.loss_and_gradients(&[&[99]], &[&y], None).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let t = table();
        let ys = vec![LabelBitset::from_bools(&[true, false]), LabelBitset::from_bools(&[false, true])];
        let seqs = vec![vec![2, 3, 4], vec![7, 8]];
        let m = train_cnn(&seqs, &ys, &names(), &t, &small()).unwrap();
        let back = CnnModel::from_parameters(names(), serde_json::from_value(serde_json::to_value(m.parameters()).unwrap()).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
