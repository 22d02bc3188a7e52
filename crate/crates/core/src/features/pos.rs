//! Coarse part-of-speech tagging from a bundled lexicon and suffix rules.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoarsePosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl CoarsePosTag {
    /// Nouns, verbs, adjectives and adverbs.
    pub fn is_content(self) -> bool {
        !matches!(self, CoarsePosTag::Other)
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "NOUN" => CoarsePosTag::Noun,
            "VERB" => CoarsePosTag::Verb,
            "ADJ" => CoarsePosTag::Adj,
            "ADV" => CoarsePosTag::Adv,
            "OTHER" => CoarsePosTag::Other,
            _ => return None,
        })
    }
}

const LEXICON: &str = include_str!("lexicon.txt");

fn lexicon() -> &'static HashMap<&'static str, CoarsePosTag> {
    static MAP: OnceLock<HashMap<&'static str, CoarsePosTag>> = OnceLock::new();
    MAP.get_or_init(|| {
        let mut map = HashMap::new();
        for line in LEXICON.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, words) = line.split_once(':').expect("lexicon line without tag");
            let tag = CoarsePosTag::parse(tag.trim()).expect("unknown lexicon tag");
            // Later lines win, so the trailing NOUN block can override suffix
            // look-alikes listed earlier.
            for w in words.split_whitespace() {
                map.insert(w, tag);
            }
        }
        map
    })
}

fn has_suffix(word: &str, suffix: &str) -> bool {
    // Require a stem of at least two letters so that e.g. "fly" and "red"
    // are not caught.
    word.len() >= suffix.len() + 2 && word.ends_with(suffix)
}

/// Tag one lowercase token.
pub fn tag_token(token: &str) -> CoarsePosTag {
    if let Some(&tag) = lexicon().get(token) {
        return tag;
    }
    if token.chars().all(|c| c.is_ascii_digit()) {
        return CoarsePosTag::Other;
    }
    if has_suffix(token, "ly") {
        CoarsePosTag::Adv
    } else if has_suffix(token, "ing") || has_suffix(token, "ed") {
        CoarsePosTag::Verb
    } else if ["ous", "ful", "ive", "able"].iter().any(|s| has_suffix(token, s)) {
        CoarsePosTag::Adj
    } else {
        CoarsePosTag::Noun
    }
}

/// Tag a token sequence; the output has the same length as the input.
pub fn pos_tag<T: AsRef<str>>(tokens: &[T]) -> Vec<CoarsePosTag> {
    tokens.iter().map(|t| tag_token(t.as_ref())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use CoarsePosTag::*;

    #[test]
    fn basic_rules() {
        assert_eq!(pos_tag(&["quickly"]), vec![Adv]);
        assert_eq!(pos_tag(&["the"]), vec![Other]);
        assert_eq!(pos_tag(&["charging", "wanted", "dangerous", "useful", "responsive", "washable"]), vec![Verb, Verb, Adj, Adj, Adj, Adj]);
        assert_eq!(pos_tag(&["gizmo", "42", "fly", "cable"]), vec![Noun, Other, Noun, Noun]);
        assert!(pos_tag::<&str>(&[]).is_empty());
    }

    #[test]
    fn lexicon_parses() {
        assert!(lexicon().len() > 500);
        assert_eq!(tag_token("thing"), Noun);
        assert_eq!(tag_token("only"), Adj);
    }
}
