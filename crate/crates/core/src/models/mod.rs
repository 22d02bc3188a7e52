//! Multi-label classifiers and the model file format.

mod cnn;
mod svm;

pub use cnn::{predict_cnn, token_ids as cnn_token_ids, train_cnn, CnnConfig, CnnGradients, CnnModel, TokenIds, PAD_ID, UNK_ID};
pub use svm::{predict_svm, train_svm_br, BinarySvm, BrSvmModel, SvmConfig};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Fixed-order bit vector over the labels of one label group.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LabelBitset {
    bits: Vec<bool>,
}

impl LabelBitset {
    pub fn zeros(len: usize) -> Self {
        LabelBitset { bits: vec![false; len] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        LabelBitset { bits: bits.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn set(&mut self, k: usize, value: bool) {
        self.bits[k] = value;
    }

    /// Number of set bits.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Bits packed little-endian into an integer; label 0 is bit 0.
    pub fn mask(&self) -> u64 {
        assert!(self.bits.len() <= 64, "mask needs at most 64 labels");
        self.bits
            .iter()
            .enumerate()
            .fold(0, |m, (k, &b)| if b { m | (1 << k) } else { m })
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn complement(&self) -> Self {
        LabelBitset { bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Bits as 0/1 integers, the serialized form.
    pub fn to_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| u8::from(b)).collect()
    }
}

impl fmt::Debug for LabelBitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LabelBitset(")?;
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

impl Serialize for LabelBitset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_u8().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelBitset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        let bits = raw
            .into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!("label bit must be 0 or 1, got {other}"))),
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(LabelBitset { bits })
    }
}

/// Versioned JSON wrapper written to model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEnvelope {
    pub schema_version: u32,
    pub kind: String,
    pub label_order: Vec<String>,
    pub parameters: serde_json::Value,
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Either trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    Svm(BrSvmModel),
    Cnn(CnnModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierModel::Svm(_) => "br-svm",
            ClassifierModel::Cnn(_) => "cnn",
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            ClassifierModel::Svm(m) => &m.labels,
            ClassifierModel::Cnn(m) => &m.labels,
        }
    }

    pub fn to_envelope(&self) -> Result<ModelEnvelope> {
        let parameters = match self {
            ClassifierModel::Svm(m) => serde_json::to_value(m.parameters())?,
            ClassifierModel::Cnn(m) => serde_json::to_value(m.parameters())?,
        };
        Ok(ModelEnvelope {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: self.kind().to_string(),
            label_order: self.labels().to_vec(),
            parameters,
        })
    }

    pub fn from_envelope(env: ModelEnvelope) -> Result<Self> {
        if env.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::invalid(format!("unsupported model schema version {}", env.schema_version)));
        }
        match env.kind.as_str() {
            "br-svm" => Ok(ClassifierModel::Svm(BrSvmModel::from_parameters(
                env.label_order,
                serde_json::from_value(env.parameters)?,
            )?)),
            "cnn" => Ok(ClassifierModel::Cnn(CnnModel::from_parameters(
                env.label_order,
                serde_json::from_value(env.parameters)?,
            )?)),
            other => Err(Error::invalid(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, &self.to_envelope()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::from_envelope(serde_json::from_reader(file)?)
    }
}

/// Dot product with four partial sums, which lets the compiler vectorise.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite value in {name}")))
    }
}
