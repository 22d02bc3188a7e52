use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::CvKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// `fold-1`.. for k-fold plans, the held-out product id otherwise.
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub kind: CvKind,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Check that test sets partition `0..n` and each train set is the
    /// complement of its test set.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for fold in &self.folds {
            let mut in_test = vec![false; n];
            for &i in &fold.test {
                if i >= n {
                    return Err(Error::invalid(format!("fold {}: index {i} out of range", fold.name)));
                }
                if seen[i] {
                    return Err(Error::invalid(format!("index {i} appears in more than one test set")));
                }
                seen[i] = true;
                in_test[i] = true;
            }
            for &i in &fold.train {
                if i >= n || in_test[i] {
                    return Err(Error::invalid(format!("fold {}: train index {i} invalid or in test", fold.name)));
                }
            }
            if fold.train.len() + fold.test.len() != n {
                return Err(Error::invalid(format!("fold {}: train and test do not cover all items", fold.name)));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("index {i} is in no test set")));
        }
        Ok(())
    }
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; n];
    test.iter().for_each(|&i| mark[i] = true);
    (0..n).filter(|&i| !mark[i]).collect()
}

/// Seeded shuffle of `0..n`, cut into `k` contiguous chunks whose sizes
/// differ by at most one (the first `n % k` chunks are larger).
pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    if n < k {
        return Err(Error::invalid(format!("{n} items cannot be split into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::seeded_rng(seed));
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        start += size;
        folds.push(Fold { name: format!("fold-{}", f + 1), train: complement(n, &test), test });
    }
    Ok(FoldPlan { kind: CvKind::Kfold10, folds })
}

/// One fold per product, ordered by product id.
pub fn product_splits<S: AsRef<str>>(product_ids: &[S]) -> Result<FoldPlan> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in product_ids.iter().enumerate() {
        groups.entry(p.as_ref()).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::invalid(format!("product split needs at least 2 products, found {}", groups.len())));
    }
    let n = product_ids.len();
    let folds = groups
        .into_iter()
        .map(|(p, test)| Fold { name: p.to_string(), train: complement(n, &test), test })
        .collect();
    Ok(FoldPlan { kind: CvKind::Product6, folds })
}
