//! Review ingestion, balanced sampling, segmentation and preprocessing.

mod preprocess;
mod segment;

pub use preprocess::preprocess;
pub use segment::{segment_sentences, ABBREVIATIONS};

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One retail review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Review {
    pub review_id: String,
    pub product_id: String,
    pub star_rating: u8,
    pub text: String,
    pub verified: bool,
}

impl Review {
    pub fn sentence_count(&self) -> usize {
        segment_sentences(&self.text).len()
    }
}

/// A segmented, preprocessed sentence of a review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub review_id: String,
    pub product_id: String,
    pub star_rating: u8,
    pub raw: String,
    pub tokens: Vec<String>,
}

/// Input format of a review export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewFormat {
    Jsonl,
    Csv,
}

impl ReviewFormat {
    /// Guess the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReviewFormat::Csv,
            _ => ReviewFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for ReviewFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(ReviewFormat::Jsonl),
            "csv" => Ok(ReviewFormat::Csv),
            other => Err(Error::invalid(format!("unknown review format `{other}`"))),
        }
    }
}

fn check_review(review: &Review) -> std::result::Result<(), String> {
    if !(1..=5).contains(&review.star_rating) {
        return Err(format!(
            "star_rating must be between 1 and 5, got {}",
            review.star_rating
        ));
    }
    if review.review_id.is_empty() {
        return Err("review_id is empty".into());
    }
    Ok(())
}

/// Load reviews from a JSONL or CSV export, preserving input order.
///
/// Blank JSONL lines are skipped. Line numbers in errors are 1-based and count
/// the CSV header.
pub fn load_reviews(path: &Path, format: ReviewFormat) -> Result<Vec<Review>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut records: Vec<(usize, Review)> = Vec::new();
    match format {
        ReviewFormat::Jsonl => {
            let reader = BufReader::new(File::open(path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let review: Review =
                    serde_json::from_str(&line).map_err(|e| parse_err(idx + 1, e.to_string()))?;
                records.push((idx + 1, review));
            }
        }
        ReviewFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
            let headers = reader.headers()?.clone();
            let expected = ["review_id", "product_id", "star_rating", "text", "verified"];
            let mut got: Vec<&str> = headers.iter().collect();
            got.sort_unstable();
            let mut want = expected.to_vec();
            want.sort_unstable();
            if got != want {
                return Err(parse_err(
                    1,
                    format!("expected columns {expected:?}, got {:?}", headers.iter().collect::<Vec<_>>()),
                ));
            }
            for row in reader.records() {
                let record = row.map_err(|e| {
                    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                    parse_err(line, e.to_string())
                })?;
                let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
                let review: Review = record
                    .deserialize(Some(&headers))
                    .map_err(|e| parse_err(line, e.to_string()))?;
                records.push((line, review));
            }
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, review) in records {
        check_review(&review).map_err(|m| parse_err(line, m))?;
        if !seen.insert(review.review_id.clone()) {
            return Err(Error::DuplicateReviewId(review.review_id));
        }
        out.push(review);
    }
    Ok(out)
}

/// Per product and star rating, keep at most `per_star` reviews that have no
/// more than `max_sentences` sentences, chosen uniformly at random.
///
/// Groups are visited in sorted product order and star order with a single
/// seeded generator, so the selection depends only on the input and `seed`.
/// Selected reviews come back in input order.
pub fn sample_balanced(
    reviews: &[Review],
    per_star: usize,
    max_sentences: usize,
    seed: u64,
) -> Vec<Review> {
    let mut groups: BTreeMap<(&str, u8), Vec<usize>> = BTreeMap::new();
    for (i, r) in reviews.iter().enumerate() {
        if r.sentence_count() <= max_sentences {
            groups.entry((r.product_id.as_str(), r.star_rating)).or_default().push(i);
        }
    }

    let mut rng = crate::seeded_rng(seed);
    let mut chosen = Vec::new();
    for (_, mut candidates) in groups {
        if candidates.len() > per_star {
            candidates.shuffle(&mut rng);
            candidates.truncate(per_star);
        }
        chosen.extend(candidates);
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| reviews[i].clone()).collect()
}

/// Segment and preprocess every review. Sentence ids are
/// `<review_id>-<index>` with a zero-based index.
pub fn sentences_from_reviews(reviews: &[Review]) -> Vec<Sentence> {
    reviews
        .iter()
        .flat_map(|r| {
            segment_sentences(&r.text)
                .into_iter()
                .enumerate()
                .map(move |(i, raw)| Sentence {
                    sentence_id: format!("{}-{}", r.review_id, i),
                    review_id: r.review_id.clone(),
                    product_id: r.product_id.clone(),
                    star_rating: r.star_rating,
                    raw: raw.to_owned(),
                    tokens: preprocess(raw),
                })
        })
        .collect()
}

/// Name and domain of a product, as listed in an optional product catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductInfo {
    pub product_id: String,
    pub name: String,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub product_id: String,
    pub name: String,
    pub domain: String,
    pub reviews: usize,
    /// Sentence counts for 1 to 5 stars.
    pub sentences_per_star: [usize; 5],
    pub total: usize,
}

/// Summary of an ingested corpus: per-product, per-star sentence counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub products: Vec<ManifestEntry>,
    pub total_reviews: usize,
    pub total_sentences: usize,
}

impl CorpusManifest {
    /// Build the manifest for `sentences`. Products appear in catalog order
    /// first, then any remaining ones sorted by id.
    pub fn build(reviews: &[Review], sentences: &[Sentence], catalog: &[ProductInfo]) -> Self {
        let mut order: Vec<String> = catalog.iter().map(|p| p.product_id.clone()).collect();
        let mut extra: Vec<String> = reviews
            .iter()
            .map(|r| r.product_id.clone())
            .filter(|p| !order.contains(p))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        order.append(&mut extra);

        let mut products: Vec<ManifestEntry> = order
            .iter()
            .map(|pid| {
                let info = catalog.iter().find(|p| &p.product_id == pid);
                ManifestEntry {
                    product_id: pid.clone(),
                    name: info.map(|p| p.name.clone()).unwrap_or_else(|| pid.clone()),
                    domain: info.map(|p| p.domain.clone()).unwrap_or_default(),
                    reviews: reviews.iter().filter(|r| &r.product_id == pid).count(),
                    sentences_per_star: [0; 5],
                    total: 0,
                }
            })
            .collect();

        for s in sentences {
            if let Some(entry) = products.iter_mut().find(|e| e.product_id == s.product_id) {
                entry.sentences_per_star[usize::from(s.star_rating - 1)] += 1;
                entry.total += 1;
            }
        }
        // Products present only in the catalog stay listed with zero counts.
        products.retain(|e| e.reviews > 0 || catalog.iter().any(|p| p.product_id == e.product_id));

        CorpusManifest {
            total_reviews: reviews.len(),
            total_sentences: products.iter().map(|e| e.total).sum(),
            products,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.products
            .iter()
            .all(|e| e.sentences_per_star.iter().sum::<usize>() == e.total)
            && self.products.iter().map(|e| e.total).sum::<usize>() == self.total_sentences
    }
}

/// Write any serializable records as JSON lines.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read JSON lines, reporting the failing line number on error.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
