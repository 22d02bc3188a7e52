//! Two-level label schema and the grouping used in classification runs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LabelBitset;

/// Top-level category of a review sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TopLabel {
    #[serde(rename = "HW")]
    Hardware,
    #[serde(rename = "SW")]
    Software,
    #[serde(rename = "GN")]
    General,
    #[serde(rename = "UB")]
    UserBackground,
    #[serde(rename = "OP")]
    OtherProduct,
    #[serde(rename = "US")]
    UsageScenario,
    #[serde(rename = "CS")]
    CustomerService,
    #[serde(rename = "MS")]
    Miscellaneous,
}

impl TopLabel {
    pub const ALL: [TopLabel; 8] = [
        TopLabel::Hardware,
        TopLabel::Software,
        TopLabel::General,
        TopLabel::UserBackground,
        TopLabel::OtherProduct,
        TopLabel::UsageScenario,
        TopLabel::CustomerService,
        TopLabel::Miscellaneous,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TopLabel::Hardware => "HW",
            TopLabel::Software => "SW",
            TopLabel::General => "GN",
            TopLabel::UserBackground => "UB",
            TopLabel::OtherProduct => "OP",
            TopLabel::UsageScenario => "US",
            TopLabel::CustomerService => "CS",
            TopLabel::Miscellaneous => "MS",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TopLabel::Hardware => "Hardware",
            TopLabel::Software => "Software",
            TopLabel::General => "General",
            TopLabel::UserBackground => "User Background",
            TopLabel::OtherProduct => "Other Product",
            TopLabel::UsageScenario => "Usage Scenario",
            TopLabel::CustomerService => "Customer Service",
            TopLabel::Miscellaneous => "Miscellaneous",
        }
    }
}

impl fmt::Display for TopLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TopLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TopLabel::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::UnknownLabelCodes(vec![s.to_owned()]))
    }
}

/// Second-level category, used under Software and mirrored under Hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubLabel {
    #[serde(rename = "IG")]
    InformationGiving,
    #[serde(rename = "IQ")]
    Inquiry,
    #[serde(rename = "FR")]
    FeatureRequest,
    #[serde(rename = "PD")]
    ProblemDiscovery,
}

impl SubLabel {
    pub const ALL: [SubLabel; 4] = [
        SubLabel::InformationGiving,
        SubLabel::Inquiry,
        SubLabel::FeatureRequest,
        SubLabel::ProblemDiscovery,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SubLabel::InformationGiving => "IG",
            SubLabel::Inquiry => "IQ",
            SubLabel::FeatureRequest => "FR",
            SubLabel::ProblemDiscovery => "PD",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SubLabel::InformationGiving => "Information Giving",
            SubLabel::Inquiry => "Inquiry",
            SubLabel::FeatureRequest => "Feature Request",
            SubLabel::ProblemDiscovery => "Problem Discovery",
        }
    }
}

impl fmt::Display for SubLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SubLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubLabel::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::UnknownLabelCodes(vec![s.to_owned()]))
    }
}

/// Labels assigned to one sentence. Empty sub-label sets mean "not given".
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSet {
    pub top: BTreeSet<TopLabel>,
    #[serde(default)]
    pub software_sub: BTreeSet<SubLabel>,
    #[serde(default)]
    pub hardware_sub: BTreeSet<SubLabel>,
}

/// A broken [`LabelSet`] invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    EmptyTop,
    SoftwareSubWithoutSoftware,
    HardwareSubWithoutHardware,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::EmptyTop => "empty top",
            Violation::SoftwareSubWithoutSoftware => "software_sub without SW",
            Violation::HardwareSubWithoutHardware => "hardware_sub without HW",
        })
    }
}

impl LabelSet {
    pub fn new(top: impl IntoIterator<Item = TopLabel>) -> Self {
        LabelSet {
            top: top.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn with_software(mut self, sub: impl IntoIterator<Item = SubLabel>) -> Self {
        self.software_sub.extend(sub);
        self
    }

    pub fn with_hardware(mut self, sub: impl IntoIterator<Item = SubLabel>) -> Self {
        self.hardware_sub.extend(sub);
        self
    }

    pub fn has(&self, label: TopLabel) -> bool {
        self.top.contains(&label)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.top.is_empty() {
            v.push(Violation::EmptyTop);
        }
        if !self.software_sub.is_empty() && !self.has(TopLabel::Software) {
            v.push(Violation::SoftwareSubWithoutSoftware);
        }
        if !self.hardware_sub.is_empty() && !self.has(TopLabel::Hardware) {
            v.push(Violation::HardwareSubWithoutHardware);
        }
        v
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLabels(v.iter().map(ToString::to_string).collect()))
        }
    }
}

/// Label group a classifier is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelGroup {
    /// HW, SW, GN and OT (the other five top-level categories merged).
    Top,
    /// FR, IG and PD (Inquiry merged into Problem Discovery), over
    /// software sentences only.
    Software,
}

impl LabelGroup {
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            LabelGroup::Top => &["HW", "SW", "GN", "OT"],
            LabelGroup::Software => &["FR", "IG", "PD"],
        }
    }

    pub fn len(self) -> usize {
        self.labels().len()
    }

    /// Whether a labeled sentence takes part in experiments on this group.
    pub fn applies_to(self, ls: &LabelSet) -> bool {
        match self {
            LabelGroup::Top => !ls.top.is_empty(),
            LabelGroup::Software => ls.has(TopLabel::Software) && !ls.software_sub.is_empty(),
        }
    }

    /// Grouped bits of `ls` in this group's label order.
    pub fn bits(self, ls: &LabelSet) -> Result<LabelBitset> {
        match self {
            LabelGroup::Top => Ok(group_toplevel(ls)?.bits()),
            LabelGroup::Software => Ok(group_software(&ls.software_sub)?.bits()),
        }
    }
}

impl fmt::Display for LabelGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelGroup::Top => "top",
            LabelGroup::Software => "software",
        })
    }
}

impl FromStr for LabelGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" => Ok(LabelGroup::Top),
            "software" | "sw" => Ok(LabelGroup::Software),
            other => Err(Error::invalid(format!("unknown label group `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct GroupedTopLabels {
    pub hardware: bool,
    pub software: bool,
    pub general: bool,
    pub other: bool,
}

impl GroupedTopLabels {
    pub fn bits(self) -> LabelBitset {
        LabelBitset::from_bools(&[self.hardware, self.software, self.general, self.other])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct GroupedSoftwareLabels {
    pub feature_request: bool,
    pub information_giving: bool,
    pub problem_discovery: bool,
}

impl GroupedSoftwareLabels {
    pub fn bits(self) -> LabelBitset {
        LabelBitset::from_bools(&[
            self.feature_request,
            self.information_giving,
            self.problem_discovery,
        ])
    }
}

/// Collapse User Background, Other Product, Usage Scenario, Customer Service
/// and Miscellaneous into a single OT bit.
pub fn group_toplevel(ls: &LabelSet) -> Result<GroupedTopLabels> {
    ls.ensure_valid()?;
    Ok(GroupedTopLabels {
        hardware: ls.has(TopLabel::Hardware),
        software: ls.has(TopLabel::Software),
        general: ls.has(TopLabel::General),
        other: ls.top.iter().any(|l| {
            matches!(
                l,
                TopLabel::UserBackground
                    | TopLabel::OtherProduct
                    | TopLabel::UsageScenario
                    | TopLabel::CustomerService
                    | TopLabel::Miscellaneous
            )
        }),
    })
}

/// Merge Inquiry into Problem Discovery.
pub fn group_software(sub: &BTreeSet<SubLabel>) -> Result<GroupedSoftwareLabels> {
    if sub.is_empty() {
        return Err(Error::invalid("software sub-label set is empty"));
    }
    Ok(GroupedSoftwareLabels {
        feature_request: sub.contains(&SubLabel::FeatureRequest),
        information_giving: sub.contains(&SubLabel::InformationGiving),
        problem_discovery: sub.contains(&SubLabel::ProblemDiscovery) || sub.contains(&SubLabel::Inquiry),
    })
}

/// One line of a labeled-sentence JSONL file. Codes stay strings here so that
/// unknown codes can be reported all at once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub sentence_id: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub software_sub: Vec<String>,
    #[serde(default)]
    pub hardware_sub: Vec<String>,
}

impl LabelRecord {
    pub fn from_label_set(sentence_id: impl Into<String>, ls: &LabelSet) -> Self {
        LabelRecord {
            sentence_id: sentence_id.into(),
            labels: ls.top.iter().map(|l| l.code().to_owned()).collect(),
            software_sub: ls.software_sub.iter().map(|l| l.code().to_owned()).collect(),
            hardware_sub: ls.hardware_sub.iter().map(|l| l.code().to_owned()).collect(),
        }
    }

    /// Codes in this record that are not part of the taxonomy.
    pub fn unknown_codes(&self) -> Vec<String> {
        let mut bad: Vec<String> = self
            .labels
            .iter()
            .filter(|c| c.parse::<TopLabel>().is_err())
            .cloned()
            .collect();
        bad.extend(
            self.software_sub
                .iter()
                .chain(&self.hardware_sub)
                .filter(|c| c.parse::<SubLabel>().is_err())
                .cloned(),
        );
        bad
    }

    /// Parse into a validated [`LabelSet`].
    pub fn to_label_set(&self) -> Result<LabelSet> {
        let bad = self.unknown_codes();
        if !bad.is_empty() {
            return Err(Error::UnknownLabelCodes(bad));
        }
        let ls = LabelSet {
            top: self.labels.iter().map(|c| c.parse()).collect::<Result<_>>()?,
            software_sub: self.software_sub.iter().map(|c| c.parse()).collect::<Result<_>>()?,
            hardware_sub: self.hardware_sub.iter().map(|c| c.parse()).collect::<Result<_>>()?,
        };
        ls.ensure_valid()?;
        Ok(ls)
    }
}

/// Parse a batch of records, listing every offending code with its sentence id.
pub fn parse_label_records(records: &[LabelRecord]) -> Result<Vec<(String, LabelSet)>> {
    let offenders: Vec<String> = records
        .iter()
        .flat_map(|r| {
            r.unknown_codes()
                .into_iter()
                .map(move |c| format!("{}: {c}", r.sentence_id))
        })
        .collect();
    if !offenders.is_empty() {
        return Err(Error::UnknownLabelCodes(offenders));
    }
    records
        .iter()
        .map(|r| {
            r.to_label_set()
                .map(|ls| (r.sentence_id.clone(), ls))
                .map_err(|e| match e {
                    Error::InvalidLabels(v) => {
                        Error::InvalidLabels(v.into_iter().map(|m| format!("{}: {m}", r.sentence_id)).collect())
                    }
                    other => other,
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub code: String,
    pub name: String,
    pub count: usize,
    /// Percentage of all sentences.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCategoryShare {
    pub code: String,
    pub name: String,
    pub count: usize,
    /// Percentage of software sentences.
    pub percent_of_software: f64,
    /// Percentage of all sentences.
    pub percent_of_all: f64,
}

/// Category frequencies over a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub sentences: usize,
    pub software_sentences: usize,
    pub top_level: Vec<CategoryShare>,
    pub software: Vec<SubCategoryShare>,
    pub hardware: Vec<SubCategoryShare>,
    /// Feature Request, Problem Discovery and Inquiry memberships over all
    /// sentences, in percent.
    pub directly_applicable_percent: f64,
    /// The same memberships over software sentences, in percent.
    pub directly_applicable_percent_of_software: f64,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Count each sentence once per category it carries, at both levels.
pub fn label_distribution(sets: &[LabelSet]) -> LabelDistribution {
    let n = sets.len();
    let top_level = TopLabel::ALL
        .iter()
        .map(|&l| {
            let count = sets.iter().filter(|s| s.has(l)).count();
            CategoryShare {
                code: l.code().into(),
                name: l.name().into(),
                count,
                percent: pct(count, n),
            }
        })
        .collect();

    let sub_shares = |pick: fn(&LabelSet) -> &BTreeSet<SubLabel>, parent: TopLabel| {
        let parent_count = sets.iter().filter(|s| s.has(parent)).count();
        SubLabel::ALL
            .iter()
            .map(|&l| {
                let count = sets.iter().filter(|s| pick(s).contains(&l)).count();
                SubCategoryShare {
                    code: l.code().into(),
                    name: l.name().into(),
                    count,
                    percent_of_software: pct(count, parent_count),
                    percent_of_all: pct(count, n),
                }
            })
            .collect::<Vec<_>>()
    };
    let software = sub_shares(|s| &s.software_sub, TopLabel::Software);
    let hardware = sub_shares(|s| &s.hardware_sub, TopLabel::Hardware);

    let software_sentences = sets.iter().filter(|s| s.has(TopLabel::Software)).count();
    let applicable: usize = software
        .iter()
        .filter(|s| s.code != "IG")
        .map(|s| s.count)
        .sum();

    LabelDistribution {
        sentences: n,
        software_sentences,
        top_level,
        software,
        hardware,
        directly_applicable_percent: pct(applicable, n),
        directly_applicable_percent_of_software: pct(applicable, software_sentences),
    }
}
