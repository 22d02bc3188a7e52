//! Shared inputs for the benchmarks.

use reviewscope::corpus::sentences_from_reviews;
use reviewscope::eval::{build_examples, Example};
use reviewscope::synth;
use reviewscope::LabelGroup;

/// Top-level examples of the bundled fixture (seed 1).
pub fn fixture_examples() -> Vec<Example> {
    let ds = synth::bundled_dataset(1);
    let sentences = sentences_from_reviews(&synth::qualifying_reviews(&ds, 1));
    build_examples(&sentences, &ds.labels, LabelGroup::Top).expect("fixture labels are valid")
}

pub fn token_docs(examples: &[Example]) -> Vec<&[String]> {
    examples.iter().map(|e| e.tokens.as_slice()).collect()
}
