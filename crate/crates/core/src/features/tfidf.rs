use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FeatureVector, SparseVector};
use crate::error::{Error, Result};

/// Document frequencies of a fitted vocabulary. Columns follow the sorted
/// order of the tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub vocab: BTreeMap<String, usize>,
    pub df: Vec<usize>,
    pub n_docs: usize,
}

/// Fit a vocabulary over every token of `docs` (stop words included).
pub fn fit_tfidf<D, T>(docs: &[D]) -> Result<TfIdfModel>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    if docs.is_empty() {
        return Err(Error::invalid("tf-idf needs at least one document"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
        for t in unique {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::invalid("all documents are empty"));
    }
    let mut vocab = BTreeMap::new();
    let mut df = Vec::with_capacity(counts.len());
    for (i, (t, c)) in counts.into_iter().enumerate() {
        vocab.insert(t.to_owned(), i);
        df.push(c);
    }
    Ok(TfIdfModel { vocab, df, n_docs: docs.len() })
}

impl TfIdfModel {
    pub fn dim(&self) -> usize {
        self.df.len()
    }

    /// Smoothed inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
    pub fn idf(&self, column: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df[column] as f64)).ln() + 1.0
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.vocab.get(token).map(|&c| self.idf(c))
    }

    /// Raw term count times idf, L2-normalized. Unknown tokens are ignored; a
    /// document without known tokens maps to the zero vector.
    pub fn transform<T: AsRef<str>>(&self, doc: &[T]) -> SparseVector {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for t in doc {
            if let Some(&c) = self.vocab.get(t.as_ref()) {
                *tf.entry(c).or_insert(0.0) += 1.0;
            }
        }
        let mut indices = Vec::with_capacity(tf.len());
        let mut values = Vec::with_capacity(tf.len());
        for (c, count) in tf {
            indices.push(c);
            values.push(count * self.idf(c));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        SparseVector { dim: self.dim(), indices, values }
    }

    pub fn vector<T: AsRef<str>>(&self, doc: &[T]) -> FeatureVector {
        FeatureVector::Sparse(self.transform(doc))
    }
}
