//! Vector representations of sentences.

mod embedding;
mod pos;
mod tfidf;
mod word2vec;

pub use embedding::{avg_embedding, EmbeddingTable};
pub use pos::{pos_tag, CoarsePosTag};
pub use tfidf::{fit_tfidf, TfIdfModel};
pub use word2vec::{train_word2vec, TrainedEmbeddings, Word2VecConfig};

use serde::{Deserialize, Serialize};

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector { dim, indices: Vec::new(), values: Vec::new() }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.indices
            .binary_search(&index)
            .map(|i| self.values[i])
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

/// Dense vector, e.g. an averaged embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector {
    pub values: Vec<f64>,
    /// Set when no token qualified for averaging and the vector is zero.
    pub no_content_words: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Tfidf,
    W2vAvg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureVector {
    Sparse(SparseVector),
    Dense(DenseVector),
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Sparse(s) => s.dim,
            FeatureVector::Dense(d) => d.values.len(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            FeatureVector::Sparse(_) => Provenance::Tfidf,
            FeatureVector::Dense(_) => Provenance::W2vAvg,
        }
    }

    /// Dot product with a dense weight slice of length `dim()`.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            FeatureVector::Sparse(s) => s.iter().map(|(i, v)| weights[i] * v).sum(),
            FeatureVector::Dense(d) => d.values.iter().zip(weights).map(|(a, b)| a * b).sum(),
        }
    }

    /// `weights += alpha * self`.
    pub fn add_to(&self, weights: &mut [f64], alpha: f64) {
        match self {
            FeatureVector::Sparse(s) => {
                for (i, v) in s.iter() {
                    weights[i] += alpha * v;
                }
            }
            FeatureVector::Dense(d) => {
                for (w, v) in weights.iter_mut().zip(&d.values) {
                    *w += alpha * v;
                }
            }
        }
    }

    pub fn norm_squared(&self) -> f64 {
        match self {
            FeatureVector::Sparse(s) => s.values.iter().map(|v| v * v).sum(),
            FeatureVector::Dense(d) => d.values.iter().map(|v| v * v).sum(),
        }
    }

    /// Largest index referenced plus one (sparse) or the length (dense).
    pub(crate) fn extent(&self) -> usize {
        match self {
            FeatureVector::Sparse(s) => s.indices.last().map_or(0, |i| i + 1),
            FeatureVector::Dense(d) => d.values.len(),
        }
    }
}
