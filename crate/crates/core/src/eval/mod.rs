//! Cross-validation protocols, multi-label metrics and experiment runs.

mod experiment;
mod folds;
mod metrics;
mod report;

pub use experiment::{
    build_examples, run_experiment, run_with_trainer, CvKind, Example, ExperimentConfig, ExperimentOutput,
    FoldOutcome, FoldTrainer, Method, PredictionRecord, StandardTrainer,
};
pub use folds::{kfold_splits, product_splits, Fold, FoldPlan};
pub use metrics::{
    confusion, exact_match, hamming_loss, jaccard_similarity, macro_precision, macro_recall, ConfusionCounts,
    LabelCounts,
};
pub use report::{render_markdown, summarize, AggregateMetrics, EvalReport, FoldInput, FoldReport};

