//! Skip-gram word2vec with negative sampling.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Word2VecConfig {
    pub dim: usize,
    /// Maximum distance between centre and context word.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
    /// Initial learning rate, decayed linearly towards zero.
    pub lr: f64,
    /// Threads. Results are bit-reproducible only with a single worker.
    pub workers: usize,
    pub seed: u64,
}

impl Default for Word2VecConfig {
    fn default() -> Self {
        Word2VecConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 5,
            subsample: 1e-3,
            lr: 0.025,
            workers: 1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedEmbeddings {
    pub table: EmbeddingTable,
    /// Mean negative-sampling loss per (centre, context) pair, one per epoch.
    pub epoch_losses: Vec<f64>,
    /// Corpus frequency of each table row.
    pub counts: Vec<u64>,
}

/// `f32` matrix shared between Hogwild workers. Relaxed atomics compile to
/// plain loads and stores, so the single-worker path pays nothing for it.
struct SharedMatrix(Vec<AtomicU32>);

impl SharedMatrix {
    fn new(values: impl Iterator<Item = f32>) -> Self {
        SharedMatrix(values.map(|v| AtomicU32::new(v.to_bits())).collect())
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn add(&self, i: usize, delta: f32) {
        let v = self.get(i) + delta;
        self.0[i].store(v.to_bits(), Ordering::Relaxed);
    }

    fn into_vec(self) -> Vec<f32> {
        self.0.into_iter().map(|a| f32::from_bits(a.into_inner())).collect()
    }
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

fn build_vocab<D: AsRef<[T]>, T: AsRef<str>>(corpus: &[D], min_count: usize) -> Vocab {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in corpus {
        for t in doc.as_ref() {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count as u64).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
    Vocab { words, counts: kept.iter().map(|&(_, c)| c).collect(), index }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn log_sigmoid(x: f32) -> f64 {
    let x = f64::from(x);
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

struct Trainer<'a> {
    cfg: &'a Word2VecConfig,
    input: SharedMatrix,
    output: SharedMatrix,
    keep_prob: Vec<f32>,
    noise: WeightedAliasIndex<f64>,
    processed: AtomicU64,
    total_work: u64,
}

impl Trainer<'_> {
    fn lr(&self) -> f32 {
        let progress = self.processed.load(Ordering::Relaxed) as f64 / (self.total_work + 1) as f64;
        (self.cfg.lr * (1.0 - progress).max(1e-4)) as f32
    }

    /// One pass over `docs`; returns (loss sum, pair count).
    fn run_shard<R: Rng>(&self, docs: &[Vec<u32>], rng: &mut R) -> (f64, u64) {
        let d = self.cfg.dim;
        let mut grad = vec![0.0f32; d];
        let mut kept: Vec<u32> = Vec::new();
        let mut loss = 0.0f64;
        let mut pairs = 0u64;
        for doc in docs {
            kept.clear();
            kept.extend(doc.iter().copied().filter(|&w| {
                let p = self.keep_prob[w as usize];
                p >= 1.0 || rng.random::<f32>() < p
            }));
            let lr = self.lr();
            self.processed.fetch_add(doc.len() as u64, Ordering::Relaxed);
            for (pos, &center) in kept.iter().enumerate() {
                let reduced = rng.random_range(0..self.cfg.window);
                let span = self.cfg.window - reduced;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span + 1).min(kept.len());
                for (cpos, &context) in kept.iter().enumerate().take(hi).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    // The context word's input vector predicts the centre word.
                    let l1 = context as usize * d;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for s in 0..=self.cfg.negatives {
                        let (target, label) = if s == 0 {
                            (center, 1.0f32)
                        } else {
                            let t = self.noise.sample(rng) as u32;
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let l2 = target as usize * d;
                        let mut dot = 0.0f32;
                        for k in 0..d {
                            dot += self.input.get(l1 + k) * self.output.get(l2 + k);
                        }
                        loss -= if label > 0.5 { log_sigmoid(dot) } else { log_sigmoid(-dot) };
                        let g = (label - sigmoid(dot)) * lr;
                        for (k, gk) in grad.iter_mut().enumerate() {
                            *gk += g * self.output.get(l2 + k);
                            self.output.add(l2 + k, g * self.input.get(l1 + k));
                        }
                    }
                    for (k, &gk) in grad.iter().enumerate() {
                        self.input.add(l1 + k, gk);
                    }
                    pairs += 1;
                }
            }
        }
        (loss, pairs)
    }
}

/// Train skip-gram embeddings on a tokenised corpus.
pub fn train_word2vec<D, T>(corpus: &[D], config: &Word2VecConfig) -> Result<TrainedEmbeddings>
where
    D: AsRef<[T]> + Sync,
    T: AsRef<str>,
{
    if config.dim == 0 || config.window == 0 || config.epochs == 0 || config.workers == 0 {
        return Err(Error::invalid("dim, window, epochs and workers must be positive"));
    }
    if !(config.lr > 0.0) || config.subsample < 0.0 {
        return Err(Error::invalid("lr must be positive and subsample non-negative"));
    }
    let n_tokens: usize = corpus.iter().map(|d| d.as_ref().len()).sum();
    let needed = 10 * config.min_count.max(1);
    if n_tokens < needed {
        return Err(Error::invalid(format!(
            "corpus has {n_tokens} tokens; at least {needed} required for min_count {}",
            config.min_count
        )));
    }
    let vocab = build_vocab(corpus, config.min_count);
    if vocab.words.is_empty() {
        return Err(Error::invalid(format!("no token occurs at least {} times", config.min_count)));
    }
    let docs: Vec<Vec<u32>> = corpus
        .iter()
        .map(|d| d.as_ref().iter().filter_map(|t| vocab.index.get(t.as_ref()).copied()).collect())
        .collect();
    let train_words: u64 = vocab.counts.iter().sum();

    let keep_prob: Vec<f32> = vocab
        .counts
        .iter()
        .map(|&c| {
            if config.subsample == 0.0 {
                return 1.0;
            }
            let t = config.subsample * train_words as f64;
            (((c as f64 / t).sqrt() + 1.0) * t / c as f64) as f32
        })
        .collect();
    let noise = WeightedAliasIndex::new(vocab.counts.iter().map(|&c| (c as f64).powf(0.75)).collect())
        .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;

    let d = config.dim;
    let mut init_rng = crate::seeded_rng(config.seed);
    let input = SharedMatrix::new((0..vocab.words.len() * d).map(|_| (init_rng.random::<f32>() - 0.5) / d as f32));
    let output = SharedMatrix::new(std::iter::repeat_n(0.0, vocab.words.len() * d));
    let trainer = Trainer {
        cfg: config,
        input,
        output,
        keep_prob,
        noise,
        processed: AtomicU64::new(0),
        total_work: train_words * config.epochs as u64,
    };

    let workers = config.workers.min(docs.len().max(1));
    let shard_len = docs.len().div_ceil(workers).max(1);
    let shards: Vec<&[Vec<u32>]> = docs.chunks(shard_len).collect();
    let mut rngs: Vec<_> = (0..shards.len())
        .map(|w| crate::seeded_rng(config.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(w as u64 + 1))))
        .collect();

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, pairs) = if shards.len() == 1 {
            trainer.run_shard(shards[0], &mut rngs[0])
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = shards
                    .iter()
                    .zip(rngs.iter_mut())
                    .map(|(shard, rng)| {
                        let trainer = &trainer;
                        scope.spawn(move || trainer.run_shard(shard, rng))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("word2vec worker panicked"))
                    .fold((0.0, 0), |acc, (l, p)| (acc.0 + l, acc.1 + p))
            })
        };
        let mean = if pairs == 0 { 0.0 } else { loss / pairs as f64 };
        log::debug!("word2vec epoch {}: mean loss {mean:.4} over {pairs} pairs", epoch + 1);
        epoch_losses.push(mean);
    }

    let data = trainer.input.into_vec();
    let table = EmbeddingTable::new(vocab.words, d, data)?.with_config(config.clone());
    Ok(TrainedEmbeddings { table, epoch_losses, counts: vocab.counts })
}
