//! Ground-truth creation: annotation projects, agreement statistics and
//! quality-control sampling.
//!
//! A project is an append-only event log (`<id>.events.jsonl`); its state is
//! whatever replaying the log produces.

mod kappa;

pub use kappa::{fleiss_kappa, AgreementMatrix, Kappa};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::{LabelRecord, LabelSet, TopLabel};

pub const DEFAULT_DAILY_QUOTA: u32 = 100;

/// A sentence as shown to annotators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSentence {
    pub sentence_id: String,
    pub text: String,
    #[serde(default)]
    pub product_id: String,
    #[serde(default)]
    pub star_rating: u8,
}

impl From<&crate::corpus::Sentence> for ProjectSentence {
    fn from(s: &crate::corpus::Sentence) -> Self {
        ProjectSentence {
            sentence_id: s.sentence_id.clone(),
            text: s.raw.clone(),
            product_id: s.product_id.clone(),
            star_rating: s.star_rating,
        }
    }
}

/// One label submission by an annotator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub annotator: String,
    pub sentence_id: String,
    pub labels: LabelSet,
    /// Client-generated id; resubmitting the same id is a no-op.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_id: Option<String>,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProjectEvent {
    Created {
        project_id: String,
        sentences: Vec<ProjectSentence>,
        annotators: Vec<String>,
        daily_quota: u32,
    },
    Annotated(Submission),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub labels: LabelSet,
    pub at: DateTime<Utc>,
    /// Position of the submission among all accepted submissions.
    pub seq: usize,
}

/// Trace of an overwritten annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub annotator: String,
    pub sentence_id: String,
    pub previous: LabelSet,
    pub replacement: LabelSet,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaWarning {
    pub annotator: String,
    pub date: NaiveDate,
    pub count: u32,
    pub quota: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Stored,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub status: RecordStatus,
    pub overwritten: bool,
    pub quota_warning: Option<QuotaWarning>,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationProject {
    project_id: String,
    sentences: Vec<ProjectSentence>,
    sentence_index: HashMap<String, usize>,
    annotators: Vec<String>,
    daily_quota: u32,
    records: BTreeMap<(String, String), AnnotationRecord>,
    audit: Vec<AuditEntry>,
    daily_counts: BTreeMap<(String, NaiveDate), u32>,
    quota_warnings: Vec<QuotaWarning>,
    client_ids: HashMap<String, RecordOutcome>,
    submissions: usize,
    events: Vec<ProjectEvent>,
}

impl AnnotationProject {
    /// Start a project with every (sentence, annotator) pair pending.
    pub fn create(
        project_id: impl Into<String>,
        sentences: Vec<ProjectSentence>,
        annotators: Vec<String>,
        daily_quota: u32,
    ) -> Result<Self> {
        Self::from_created(ProjectEvent::Created {
            project_id: project_id.into(),
            sentences,
            annotators,
            daily_quota,
        })
    }

    fn from_created(event: ProjectEvent) -> Result<Self> {
        let ProjectEvent::Created { project_id, sentences, annotators, daily_quota } = &event else {
            return Err(Error::invalid("event log must start with a `created` event"));
        };
        if project_id.is_empty() || !project_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::invalid(format!("invalid project id `{project_id}`")));
        }
        if sentences.is_empty() {
            return Err(Error::invalid("a project needs at least one sentence"));
        }
        if annotators.is_empty() {
            return Err(Error::invalid("a project needs at least one annotator"));
        }
        let mut sentence_index = HashMap::new();
        for (i, s) in sentences.iter().enumerate() {
            if sentence_index.insert(s.sentence_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate sentence id `{}`", s.sentence_id)));
            }
        }
        let unique: BTreeSet<&String> = annotators.iter().collect();
        if unique.len() != annotators.len() {
            return Err(Error::invalid("duplicate annotator id"));
        }
        Ok(AnnotationProject {
            project_id: project_id.clone(),
            sentences: sentences.clone(),
            sentence_index,
            annotators: annotators.clone(),
            daily_quota: *daily_quota,
            records: BTreeMap::new(),
            audit: Vec::new(),
            daily_counts: BTreeMap::new(),
            quota_warnings: Vec::new(),
            client_ids: HashMap::new(),
            submissions: 0,
            events: vec![event],
        })
    }

    /// Rebuild a project by replaying its events.
    pub fn replay(events: impl IntoIterator<Item = ProjectEvent>) -> Result<Self> {
        let mut events = events.into_iter();
        let first = events
            .next()
            .ok_or_else(|| Error::invalid("empty event log"))?;
        let mut project = Self::from_created(first)?;
        for event in events {
            match event {
                ProjectEvent::Annotated(sub) => {
                    project.record(sub)?;
                }
                ProjectEvent::Created { .. } => {
                    return Err(Error::invalid("duplicate `created` event"));
                }
            }
        }
        Ok(project)
    }

    pub fn id(&self) -> &str {
        &self.project_id
    }

    pub fn sentences(&self) -> &[ProjectSentence] {
        &self.sentences
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn daily_quota(&self) -> u32 {
        self.daily_quota
    }

    pub fn events(&self) -> &[ProjectEvent] {
        &self.events
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn quota_warnings(&self) -> &[QuotaWarning] {
        &self.quota_warnings
    }

    pub fn annotation(&self, annotator: &str, sentence_id: &str) -> Option<&AnnotationRecord> {
        self.records.get(&(annotator.to_owned(), sentence_id.to_owned()))
    }

    pub fn pairs_total(&self) -> usize {
        self.sentences.len() * self.annotators.len()
    }

    pub fn pending(&self) -> usize {
        self.pairs_total() - self.records.len()
    }

    /// Check a submission without applying it.
    pub fn check(&self, sub: &Submission) -> Result<()> {
        if !self.annotators.contains(&sub.annotator) {
            return Err(Error::NotFound(format!("annotator `{}`", sub.annotator)));
        }
        if !self.sentence_index.contains_key(&sub.sentence_id) {
            return Err(Error::NotFound(format!("sentence `{}`", sub.sentence_id)));
        }
        sub.labels.ensure_valid()
    }

    /// Whether `client_id` was already accepted.
    pub fn is_duplicate(&self, sub: &Submission) -> bool {
        sub.client_id
            .as_ref()
            .is_some_and(|id| self.client_ids.contains_key(id))
    }

    /// Store an annotation, overwriting (with an audit entry) any earlier one
    /// for the same pair. Exceeding the daily quota stores the annotation and
    /// reports a warning.
    pub fn record(&mut self, sub: Submission) -> Result<RecordOutcome> {
        if let Some(prev) = sub.client_id.as_ref().and_then(|id| self.client_ids.get(id)) {
            let mut outcome = prev.clone();
            outcome.status = RecordStatus::Duplicate;
            outcome.pending = self.pending();
            return Ok(outcome);
        }
        self.check(&sub)?;

        let key = (sub.annotator.clone(), sub.sentence_id.clone());
        let record = AnnotationRecord {
            labels: sub.labels.clone(),
            at: sub.at,
            seq: self.submissions,
        };
        self.submissions += 1;
        let overwritten = match self.records.insert(key, record) {
            Some(previous) => {
                self.audit.push(AuditEntry {
                    annotator: sub.annotator.clone(),
                    sentence_id: sub.sentence_id.clone(),
                    previous: previous.labels,
                    replacement: sub.labels.clone(),
                    at: sub.at,
                });
                true
            }
            None => false,
        };

        let date = sub.at.date_naive();
        let count = self
            .daily_counts
            .entry((sub.annotator.clone(), date))
            .or_insert(0);
        *count += 1;
        let quota_warning = (*count > self.daily_quota).then(|| QuotaWarning {
            annotator: sub.annotator.clone(),
            date,
            count: *count,
            quota: self.daily_quota,
        });
        if let Some(w) = &quota_warning {
            self.quota_warnings.push(w.clone());
        }

        let outcome = RecordOutcome {
            status: RecordStatus::Stored,
            overwritten,
            quota_warning,
            pending: self.pending(),
        };
        if let Some(id) = &sub.client_id {
            self.client_ids.insert(id.clone(), outcome.clone());
        }
        self.events.push(ProjectEvent::Annotated(sub));
        Ok(outcome)
    }

    /// First sentence, in project order, that `annotator` has not labeled.
    pub fn next_for(&self, annotator: &str) -> Result<Option<&ProjectSentence>> {
        if !self.annotators.iter().any(|a| a == annotator) {
            return Err(Error::NotFound(format!("annotator `{annotator}`")));
        }
        Ok(self
            .sentences
            .iter()
            .find(|s| self.annotation(annotator, &s.sentence_id).is_none()))
    }

    pub fn daily_count(&self, annotator: &str, date: NaiveDate) -> u32 {
        self.daily_counts
            .get(&(annotator.to_owned(), date))
            .copied()
            .unwrap_or(0)
    }

    /// Annotator → date → count.
    pub fn daily_counts(&self) -> BTreeMap<String, BTreeMap<NaiveDate, u32>> {
        let mut out: BTreeMap<String, BTreeMap<NaiveDate, u32>> = BTreeMap::new();
        for ((a, d), c) in &self.daily_counts {
            out.entry(a.clone()).or_default().insert(*d, *c);
        }
        out
    }

    /// Sentence ids with at least one annotation, in project order.
    pub fn annotated_ids(&self) -> Vec<&str> {
        let annotated: BTreeSet<&str> = self.records.keys().map(|(_, s)| s.as_str()).collect();
        self.sentences
            .iter()
            .map(|s| s.sentence_id.as_str())
            .filter(|id| annotated.contains(id))
            .collect()
    }

    /// Sentences labeled by every annotator in the project.
    fn fully_annotated(&self) -> Vec<&ProjectSentence> {
        self.sentences
            .iter()
            .filter(|s| {
                self.annotators
                    .iter()
                    .all(|a| self.annotation(a, &s.sentence_id).is_some())
            })
            .collect()
    }

    /// Labeled-sentence records: per sentence, the most recent annotation
    /// (optionally restricted to one annotator). Unlabeled sentences are
    /// left out.
    pub fn export(&self, annotator: Option<&str>) -> Vec<LabelRecord> {
        self.sentences
            .iter()
            .filter_map(|s| {
                self.annotators
                    .iter()
                    .filter(|a| annotator.is_none_or(|want| want == a.as_str()))
                    .filter_map(|a| self.annotation(a, &s.sentence_id))
                    .max_by_key(|r| r.seq)
                    .map(|r| LabelRecord::from_label_set(s.sentence_id.clone(), &r.labels))
            })
            .collect()
    }

    pub fn stats(&self) -> ProjectStats {
        let per_annotator = self
            .annotators
            .iter()
            .map(|a| {
                let done = self.records.keys().filter(|(ann, _)| ann == a).count();
                let daily = self
                    .daily_counts
                    .iter()
                    .filter(|((ann, _), _)| ann == a)
                    .map(|((_, d), c)| (*d, *c))
                    .collect();
                (a.clone(), AnnotatorProgress { done, daily })
            })
            .collect();
        let (kappa, kappa_error) = match per_category_kappa(self) {
            Ok(k) => (Some(k), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let total = self.pairs_total();
        ProjectStats {
            project_id: self.project_id.clone(),
            sentences: self.sentences.len(),
            annotators: self.annotators.len(),
            daily_quota: self.daily_quota,
            pairs_total: total,
            pairs_done: self.records.len(),
            pending: self.pending(),
            progress: self.records.len() as f64 / total as f64,
            per_annotator,
            kappa,
            kappa_error,
            quota_warnings: self.quota_warnings.clone(),
            audit_entries: self.audit.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProgress {
    pub done: usize,
    pub daily: BTreeMap<NaiveDate, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectStats {
    pub project_id: String,
    pub sentences: usize,
    pub annotators: usize,
    pub daily_quota: u32,
    pub pairs_total: usize,
    pub pairs_done: usize,
    pub pending: usize,
    pub progress: f64,
    pub per_annotator: BTreeMap<String, AnnotatorProgress>,
    pub kappa: Option<CategoryKappa>,
    pub kappa_error: Option<String>,
    pub quota_warnings: Vec<QuotaWarning>,
    pub audit_entries: usize,
}

/// Agreement over the sentences every annotator has labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryKappa {
    pub items: usize,
    pub raters: usize,
    /// Binary present/absent kappa per top-level category.
    pub per_category: BTreeMap<String, Kappa>,
    /// Mean over the categories whose kappa is defined.
    pub mean: Option<f64>,
    /// Kappa treating each distinct top-level label set as one category.
    pub label_set: Kappa,
}

/// Per-category binary Fleiss' kappa (plus mean and whole-set view) over the
/// sentences labeled by every annotator.
pub fn per_category_kappa(project: &AnnotationProject) -> Result<CategoryKappa> {
    if project.annotators.len() < 2 {
        return Err(Error::invalid("kappa needs at least two annotators"));
    }
    let items = project.fully_annotated();
    if items.len() < 2 {
        return Err(Error::invalid(
            "kappa needs at least two sentences labeled by every annotator",
        ));
    }
    let sets: Vec<Vec<&LabelSet>> = items
        .iter()
        .map(|s| {
            project
                .annotators
                .iter()
                .map(|a| &project.annotation(a, &s.sentence_id).expect("fully annotated").labels)
                .collect()
        })
        .collect();

    let mut per_category = BTreeMap::new();
    let mut defined = Vec::new();
    for label in TopLabel::ALL {
        let rows: Vec<Vec<u32>> = sets
            .iter()
            .map(|raters| {
                let present = raters.iter().filter(|ls| ls.has(label)).count() as u32;
                vec![present, raters.len() as u32 - present]
            })
            .collect();
        let k = fleiss_kappa(&AgreementMatrix::new(rows)?)?;
        if let Kappa::Value(v) = k {
            defined.push(v);
        }
        per_category.insert(label.code().to_owned(), k);
    }

    let mut distinct: Vec<&std::collections::BTreeSet<TopLabel>> = Vec::new();
    let choices: Vec<Vec<usize>> = sets
        .iter()
        .map(|raters| {
            raters
                .iter()
                .map(|ls| match distinct.iter().position(|d| **d == ls.top) {
                    Some(i) => i,
                    None => {
                        distinct.push(&ls.top);
                        distinct.len() - 1
                    }
                })
                .collect()
        })
        .collect();
    let label_set = fleiss_kappa(&AgreementMatrix::from_choices(&choices, distinct.len())?)?;

    Ok(CategoryKappa {
        items: items.len(),
        raters: project.annotators.len(),
        mean: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        per_category,
        label_set,
    })
}

/// Uniform sample without replacement of `round(fraction × annotated)`
/// annotated sentence ids, returned in project order.
pub fn qc_sample(project: &AnnotationProject, fraction: f64, seed: u64) -> Result<Vec<String>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let annotated = project.annotated_ids();
    if annotated.is_empty() {
        return Err(Error::invalid("no annotated sentences to sample"));
    }
    let n = (fraction * annotated.len() as f64).round() as usize;
    let mut picked = rand::seq::index::sample(&mut crate::seeded_rng(seed), annotated.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| annotated[i].to_owned()).collect())
}

/// Directory of project event logs.
#[derive(Debug, Clone)]
pub struct ProjectStore {
    dir: PathBuf,
}

impl ProjectStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ProjectStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, project_id: &str) -> PathBuf {
        self.dir.join(format!("{project_id}.events.jsonl"))
    }

    pub fn exists(&self, project_id: &str) -> bool {
        self.path(project_id).exists()
    }

    /// Persist a freshly created project. Fails if the log already exists.
    pub fn create(&self, project: &AnnotationProject) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(self.path(project.id()))?;
        for e in project.events() {
            serde_json::to_writer(&mut f, e)?;
            f.write_all(b"\n")?;
        }
        f.sync_all()?;
        Ok(())
    }

    pub fn load(&self, project_id: &str) -> Result<AnnotationProject> {
        let path = self.path(project_id);
        if !path.exists() {
            return Err(Error::NotFound(format!("project `{project_id}`")));
        }
        let reader = BufReader::new(File::open(&path)?);
        let mut events = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.clone(),
                line: idx + 1,
                message: e.to_string(),
            })?);
        }
        AnnotationProject::replay(events)
    }

    /// Validate, append to the log, then apply. Duplicate client ids are
    /// answered from memory and not logged again.
    pub fn record(&self, project: &mut AnnotationProject, sub: Submission) -> Result<RecordOutcome> {
        if !project.is_duplicate(&sub) {
            project.check(&sub)?;
            let mut f = OpenOptions::new().append(true).open(self.path(project.id()))?;
            let mut line = serde_json::to_vec(&ProjectEvent::Annotated(sub.clone()))?;
            line.push(b'\n');
            f.write_all(&line)?;
            f.sync_data()?;
        }
        project.record(sub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{SubLabel, TopLabel::*};
    use chrono::TimeZone;

    fn sentences(n: usize) -> Vec<ProjectSentence> {
        (0..n)
            .map(|i| ProjectSentence {
                sentence_id: format!("s{i}"),
                text: format!("Sentence {i}."),
                product_id: "P".into(),
                star_rating: 3,
            })
            .collect()
    }

    fn annotators(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    fn day(d: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2017, 10, d, 12, 0, 0).unwrap()
    }

    fn sub(a: &str, s: &str, labels: LabelSet, at: DateTime<Utc>) -> Submission {
        Submission { annotator: a.into(), sentence_id: s.into(), labels, client_id: None, at }
    }

    #[test]
    fn pilot_sized_project() {
        let p = AnnotationProject::create("pilot", sentences(80), annotators(5), 100).unwrap();
        assert_eq!(p.pending(), 400);
        let p = AnnotationProject::create("tiny", sentences(1), annotators(1), 100).unwrap();
        assert_eq!(p.pending(), 1);
        assert!(AnnotationProject::create("none", sentences(3), vec![], 100).is_err());
        assert!(AnnotationProject::create("empty", vec![], annotators(2), 100).is_err());
        assert!(AnnotationProject::create("../x", sentences(1), annotators(1), 100).is_err());
    }

    #[test]
    fn record_and_overwrite() {
        let mut p = AnnotationProject::create("p", sentences(3), annotators(2), 100).unwrap();
        let out = p.record(sub("a0", "s0", LabelSet::new([General]), day(1))).unwrap();
        assert_eq!(out.status, RecordStatus::Stored);
        assert!(!out.overwritten);
        assert_eq!(out.pending, 5);

        let before_other = p.annotation("a0", "s0").cloned();
        p.record(sub("a1", "s1", LabelSet::new([Hardware]), day(1))).unwrap();
        assert_eq!(p.annotation("a0", "s0").cloned(), before_other);

        let out = p.record(sub("a0", "s0", LabelSet::new([Software]), day(1))).unwrap();
        assert!(out.overwritten);
        assert_eq!(out.pending, 4);
        assert_eq!(p.audit_log().len(), 1);
        assert_eq!(p.audit_log()[0].previous, LabelSet::new([General]));
        assert_eq!(p.annotation("a0", "s0").unwrap().labels, LabelSet::new([Software]));
    }

    #[test]
    fn invalid_submissions() {
        let mut p = AnnotationProject::create("p", sentences(2), annotators(1), 100).unwrap();
        assert!(matches!(p.record(sub("zz", "s0", LabelSet::new([General]), day(1))), Err(Error::NotFound(_))));
        assert!(matches!(p.record(sub("a0", "s9", LabelSet::new([General]), day(1))), Err(Error::NotFound(_))));
        let bad = LabelSet::new([General]).with_software([SubLabel::FeatureRequest]);
        match p.record(sub("a0", "s0", bad, day(1))) {
            Err(Error::InvalidLabels(v)) => assert_eq!(v, vec!["software_sub without SW"]),
            other => panic!("{other:?}"),
        }
        assert_eq!(p.pending(), 2);
    }

    #[test]
    fn quota_warning_on_the_101st_sentence() {
        let mut p = AnnotationProject::create("q", sentences(105), annotators(1), 100).unwrap();
        for i in 0..100 {
            let out = p.record(sub("a0", &format!("s{i}"), LabelSet::new([General]), day(2))).unwrap();
            assert!(out.quota_warning.is_none());
        }
        let out = p.record(sub("a0", "s100", LabelSet::new([General]), day(2))).unwrap();
        let w = out.quota_warning.expect("warning");
        assert_eq!((w.count, w.quota), (101, 100));
        assert!(p.annotation("a0", "s100").is_some());
        // A new day starts a new count.
        let out = p.record(sub("a0", "s101", LabelSet::new([General]), day(3))).unwrap();
        assert!(out.quota_warning.is_none());
        assert_eq!(p.quota_warnings().len(), 1);
    }

    #[test]
    fn client_ids_are_idempotent() {
        let mut p = AnnotationProject::create("p", sentences(2), annotators(1), 100).unwrap();
        let mut s = sub("a0", "s0", LabelSet::new([General]), day(1));
        s.client_id = Some("c-1".into());
        assert_eq!(p.record(s.clone()).unwrap().status, RecordStatus::Stored);
        assert_eq!(p.record(s).unwrap().status, RecordStatus::Duplicate);
        assert_eq!(p.events().len(), 2);
        assert_eq!(p.daily_count("a0", day(1).date_naive()), 1);
        assert!(p.audit_log().is_empty());
    }

    #[test]
    fn next_and_export() {
        let mut p = AnnotationProject::create("p", sentences(2), annotators(2), 100).unwrap();
        assert_eq!(p.next_for("a0").unwrap().unwrap().sentence_id, "s0");
        p.record(sub("a0", "s0", LabelSet::new([General]), day(1))).unwrap();
        p.record(sub("a1", "s0", LabelSet::new([Hardware]), day(1))).unwrap();
        assert_eq!(p.next_for("a0").unwrap().unwrap().sentence_id, "s1");
        p.record(sub("a0", "s1", LabelSet::new([General]), day(1))).unwrap();
        assert!(p.next_for("a0").unwrap().is_none());
        assert!(p.next_for("nobody").is_err());

        let all = p.export(None);
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].labels, vec!["HW"]);
        let only_a0 = p.export(Some("a0"));
        assert_eq!(only_a0[0].labels, vec!["GN"]);
    }

    #[test]
    fn unanimous_kappa_is_one() {
        let mut p = AnnotationProject::create("k", sentences(4), annotators(3), 100).unwrap();
        let sets = [
            LabelSet::new([General]),
            LabelSet::new([Software, OtherProduct]),
            LabelSet::new([Hardware]),
            LabelSet::new([Software]),
        ];
        for a in annotators(3) {
            for (i, ls) in sets.iter().enumerate() {
                p.record(sub(&a, &format!("s{i}"), ls.clone(), day(1))).unwrap();
            }
        }
        let k = per_category_kappa(&p).unwrap();
        assert_eq!(k.items, 4);
        for (code, v) in &k.per_category {
            match code.as_str() {
                "HW" | "SW" | "GN" | "OP" => assert_eq!(*v, Kappa::Value(1.0), "{code}"),
                _ => assert_eq!(*v, Kappa::Degenerate, "{code}"),
            }
        }
        assert_eq!(k.mean, Some(1.0));
        assert_eq!(k.label_set, Kappa::Value(1.0));
    }

    #[test]
    fn disjoint_choices_are_below_chance() {
        let mut p = AnnotationProject::create("k", sentences(6), annotators(2), 100).unwrap();
        for i in 0..6 {
            let (x, y) = if i % 2 == 0 { (Hardware, Software) } else { (Software, Hardware) };
            p.record(sub("a0", &format!("s{i}"), LabelSet::new([x]), day(1))).unwrap();
            p.record(sub("a1", &format!("s{i}"), LabelSet::new([y]), day(1))).unwrap();
        }
        let k = per_category_kappa(&p).unwrap();
        for code in ["HW", "SW"] {
            assert!(k.per_category[code].value().unwrap() <= 0.0);
        }
    }

    #[test]
    fn kappa_needs_overlap() {
        let mut p = AnnotationProject::create("k", sentences(4), annotators(2), 100).unwrap();
        p.record(sub("a0", "s0", LabelSet::new([General]), day(1))).unwrap();
        p.record(sub("a1", "s1", LabelSet::new([General]), day(1))).unwrap();
        assert!(per_category_kappa(&p).is_err());
        assert!(p.stats().kappa_error.is_some());
    }

    #[test]
    fn qc_sampling() {
        let mut p = AnnotationProject::create("qc", sentences(11), annotators(1), 100).unwrap();
        assert!(qc_sample(&p, 0.5, 1).is_err());
        for i in 0..10 {
            p.record(sub("a0", &format!("s{i}"), LabelSet::new([General]), day(1))).unwrap();
        }
        let all = qc_sample(&p, 1.0, 3).unwrap();
        assert_eq!(all, p.annotated_ids());
        let half = qc_sample(&p, 0.5, 3).unwrap();
        assert_eq!(half.len(), 5);
        assert_eq!(half, qc_sample(&p, 0.5, 3).unwrap());
        assert!(qc_sample(&p, 0.0, 3).is_err());
        assert!(qc_sample(&p, 1.5, 3).is_err());
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = ProjectStore::new(dir.path());
        let mut p = AnnotationProject::create("rt", sentences(3), annotators(2), 1).unwrap();
        store.create(&p).unwrap();
        assert!(store.create(&p).is_err());
        let mut s = sub("a0", "s0", LabelSet::new([Software]).with_software([SubLabel::Inquiry]), day(4));
        s.client_id = Some("x".into());
        store.record(&mut p, s.clone()).unwrap();
        store.record(&mut p, s).unwrap();
        store.record(&mut p, sub("a0", "s1", LabelSet::new([General]), day(4))).unwrap();
        store.record(&mut p, sub("a0", "s1", LabelSet::new([Hardware]), day(4))).unwrap();
        assert!(store.record(&mut p, sub("a0", "s1", LabelSet::default(), day(4))).is_err());
        let loaded = store.load("rt").unwrap();
        assert_eq!(loaded, p);
        assert_eq!(loaded.quota_warnings().len(), 2);
        assert!(matches!(store.load("missing"), Err(Error::NotFound(_))));
    }
}
