//! Token preprocessing: printable-ASCII filtering, lowercasing and splitting
//! on whitespace and punctuation.

/// Turn a sentence into lowercase word tokens.
///
/// Whitespace of any kind becomes a separator, every other character outside
/// printable ASCII is dropped, and the remainder is split at whitespace and
/// punctuation. Tokens made only of punctuation are discarded, so the result
/// is the list of maximal ASCII alphanumeric runs.
pub fn preprocess(sentence: &str) -> Vec<String> {
    let cleaned: String = sentence
        .chars()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if (' '..='~').contains(&c) {
                Some(c.to_ascii_lowercase())
            } else {
                None
            }
        })
        .collect();

    cleaned
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}
