//! Mining consumer product reviews for requirement-relevant sentences.
//!
//! The crate covers the whole batch pipeline:
//!
//! * [`corpus`]: loading review exports, balanced sampling per star rating,
//!   sentence segmentation and token preprocessing.
//! * [`taxonomy`]: the eight top-level categories, the four second-level
//!   categories and the label grouping used by the classifiers.
//! * [`annotate`]: annotation projects backed by an append-only event log,
//!   Fleiss' kappa and quality-control sampling.
//! * [`features`]: tf-idf, skip-gram word2vec and part-of-speech filtered
//!   embedding averages.
//! * [`models`]: binary-relevance linear SVM and a multi-label sentence CNN.
//! * [`eval`]: fold plans, multi-label metrics and experiment orchestration.
//! * [`synth`]: a synthetic six-product corpus with a planted label
//!   distribution, used as the bundled fixture.

pub mod annotate;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod synth;
pub mod taxonomy;

pub use error::{Error, Result};

pub use annotate::{fleiss_kappa, AgreementMatrix, AnnotationProject, Kappa};
pub use corpus::{CorpusManifest, Review, ReviewFormat, Sentence};
pub use eval::{CvKind, EvalReport, FoldPlan, Method};
pub use features::{EmbeddingTable, FeatureVector, TfIdfModel};
pub use models::{BrSvmModel, CnnModel, LabelBitset};
pub use taxonomy::{LabelGroup, LabelSet, SubLabel, TopLabel};

pub(crate) fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
