use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Items × categories table of rater counts with a constant number of raters
/// per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementMatrix {
    counts: Vec<Vec<u32>>,
    raters: u32,
}

impl AgreementMatrix {
    /// Build a matrix, checking that every row sums to the same rater count.
    pub fn new(counts: Vec<Vec<u32>>) -> Result<Self> {
        let first = counts
            .first()
            .ok_or_else(|| Error::invalid("agreement matrix has no items"))?;
        let categories = first.len();
        let raters: u32 = first.iter().sum();
        for (i, row) in counts.iter().enumerate() {
            if row.len() != categories {
                return Err(Error::invalid(format!(
                    "item {i} has {} categories, expected {categories}",
                    row.len()
                )));
            }
            let sum: u32 = row.iter().sum();
            if sum != raters {
                return Err(Error::invalid(format!(
                    "item {i} has {sum} ratings, expected {raters}"
                )));
            }
        }
        Ok(AgreementMatrix { counts, raters })
    }

    /// Build from per-item rater choices (category index per rater).
    pub fn from_choices(choices: &[Vec<usize>], categories: usize) -> Result<Self> {
        let counts = choices
            .iter()
            .map(|item| {
                let mut row = vec![0u32; categories];
                for &c in item {
                    if c >= categories {
                        return Err(Error::invalid(format!("category {c} out of range")));
                    }
                    row[c] += 1;
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(counts)
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.counts
    }
}

/// Result of a kappa computation. Chance agreement of exactly one (all ratings
/// in a single category) leaves the statistic undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "value")]
pub enum Kappa {
    Value(f64),
    Degenerate,
}

impl Kappa {
    pub fn value(self) -> Option<f64> {
        match self {
            Kappa::Value(v) => Some(v),
            Kappa::Degenerate => None,
        }
    }
}

/// Fleiss' kappa: `(P̄ - P̄e) / (1 - P̄e)` where `P̄` is the mean per-item
/// proportion of agreeing rater pairs and `P̄e` the sum of squared category
/// proportions.
pub fn fleiss_kappa(m: &AgreementMatrix) -> Result<Kappa> {
    if m.items() < 2 {
        return Err(Error::invalid("fleiss kappa needs at least 2 items"));
    }
    if m.raters() < 2 {
        return Err(Error::invalid("fleiss kappa needs at least 2 raters"));
    }
    let n = f64::from(m.raters());
    let items = m.items() as f64;

    let mut category_totals = vec![0f64; m.categories()];
    let mut p_bar = 0.0;
    for row in m.rows() {
        let mut squares = 0.0;
        for (j, &c) in row.iter().enumerate() {
            let c = f64::from(c);
            category_totals[j] += c;
            squares += c * c;
        }
        p_bar += (squares - n) / (n * (n - 1.0));
    }
    p_bar /= items;

    let p_e: f64 = category_totals
        .iter()
        .map(|t| {
            let p = t / (items * n);
            p * p
        })
        .sum();

    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(Kappa::Degenerate);
    }
    Ok(Kappa::Value((p_bar - p_e) / (1.0 - p_e)))
}
