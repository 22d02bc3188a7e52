//! Rule-based sentence segmentation.
//!
//! A boundary is placed after a run of terminators (`.`, `!`, `?`, plus any
//! closing quotes or brackets that follow them) when the run is followed by
//! whitespace and then an uppercase letter or a digit (optionally behind an
//! opening quote or bracket). A period closing a known abbreviation never
//! ends a sentence.

/// Abbreviations (lowercase, including the final period) that do not end a
/// sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "mt.", "vs.", "e.g.", "i.e.",
    "u.s.", "u.k.", "u.s.a.", "inc.", "ltd.", "co.", "corp.", "approx.", "dept.", "fig.",
    "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.",
    "dec.", "a.m.", "p.m.", "min.", "max.", "est.", "ft.", "lbs.", "oz.", "gen.", "ver.",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// Whether the word ending right before byte offset `dot` (a period) is a
/// known abbreviation.
fn ends_with_abbreviation(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let word_start = before
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    let word = before[word_start..].trim_start_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() {
        return false;
    }
    let candidate = format!("{}.", word.to_lowercase());
    ABBREVIATIONS.contains(&candidate.as_str())
}

/// Split `text` into sentences. Every returned segment is a trimmed, non-empty
/// slice of the input.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        // Extend over the whole terminator run, e.g. `?!`, `...`, `."`.
        let run_start = pos;
        let mut j = i;
        while j < chars.len() && is_terminator(chars[j].1) {
            j += 1;
        }
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map(|&(p, _)| p).unwrap_or(text.len());

        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let has_space = k > j;
        while k < chars.len() && is_opener(chars[k].1) {
            k += 1;
        }
        let next_starts_sentence = chars
            .get(k)
            .is_some_and(|&(_, n)| n.is_uppercase() || n.is_ascii_digit());

        let single_period = c == '.' && !chars[i + 1..j].iter().any(|&(_, t)| is_terminator(t));
        let abbreviation = single_period && ends_with_abbreviation(text, run_start);

        if has_space && next_starts_sentence && !abbreviation {
            let seg = text[start..end].trim();
            if !seg.is_empty() {
                out.push(seg);
            }
            start = end;
        }
        i = j.max(i + 1);
    }

    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_blank() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("   \n\t ").is_empty());
    }

    #[test]
    fn two_simple_sentences() {
        assert_eq!(
            segment_sentences("I love it. It works!"),
            vec!["I love it.", "It works!"]
        );
    }

    #[test]
    fn abbreviations_do_not_split() {
        let text = "I asked Dr. Smith about it. He said e.g. Alexa works. Made in the U.S. Great stuff.";
        assert_eq!(
            segment_sentences(text),
            vec![
                "I asked Dr. Smith about it.",
                "He said e.g. Alexa works.",
                "Made in the U.S. Great stuff."
            ]
        );
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(segment_sentences("It is ok. or not."), vec!["It is ok. or not."]);
    }

    #[test]
    fn digits_and_quotes_start_sentences() {
        assert_eq!(
            segment_sentences("Wow!! 5 stars. \"Best buy ever,\" she said?! (Yes) no."),
            vec!["Wow!!", "5 stars.", "\"Best buy ever,\" she said?!", "(Yes) no."]
        );
        assert_eq!(
            segment_sentences("He said \"stop.\" Then it died..."),
            vec!["He said \"stop.\"", "Then it died..."]
        );
    }

    #[test]
    fn no_space_no_split() {
        assert_eq!(segment_sentences("Version 2.0 is out.It works."), vec!["Version 2.0 is out.It works."]);
    }

    #[test]
    fn non_ascii_is_preserved() {
        assert_eq!(segment_sentences("I ♥ it. Über gut."), vec!["I ♥ it.", "Über gut."]);
    }
}
