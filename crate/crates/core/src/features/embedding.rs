//! Word embedding tables and part-of-speech filtered averaging.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use super::pos::pos_tag;
use super::word2vec::Word2VecConfig;
use super::{DenseVector, FeatureVector};
use crate::error::{Error, Result};

/// Token to dense vector lookup, stored row-major in `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    index: HashMap<String, usize>,
    words: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    config: Option<Word2VecConfig>,
}

impl EmbeddingTable {
    /// Build a table from `words.len() * dim` row-major values.
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if data.len() != words.len() * dim {
            return Err(Error::DimensionMismatch { expected: words.len() * dim, got: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value in row for {:?}",
                words[pos / dim]
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("invalid embedding token {w:?}")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate embedding token {w:?}")));
            }
        }
        Ok(EmbeddingTable { index, words, dim, data, config: None })
    }

    pub fn with_config(mut self, config: Word2VecConfig) -> Self {
        self.config = Some(config);
        self
    }

    /// Training configuration, when the table came out of `train_word2vec`.
    pub fn config(&self) -> Option<&Word2VecConfig> {
        self.config.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Cosine similarity of two in-vocabulary tokens; 0 when either row is zero.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (x, y) = (self.get(a)?, self.get(b)?);
        let mut dot = 0.0;
        let mut nx = 0.0;
        let mut ny = 0.0;
        for (&p, &q) in x.iter().zip(y) {
            let (p, q) = (f64::from(p), f64::from(q));
            dot += p * q;
            nx += p * p;
            ny += q * q;
        }
        if nx == 0.0 || ny == 0.0 {
            return Some(0.0);
        }
        Some(dot / (nx.sqrt() * ny.sqrt()))
    }

    /// Same vocabulary with rows randomly reassigned between tokens.
    /// Serves as a baseline that keeps the vector distribution but breaks
    /// the link between a word and its vector.
    pub fn shuffled_rows(&self, seed: u64) -> EmbeddingTable {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut crate::seeded_rng(seed));
        let mut data = Vec::with_capacity(self.data.len());
        for &src in &order {
            data.extend_from_slice(self.row(src));
        }
        EmbeddingTable { data, config: None, ..self.clone() }
    }

    /// Text format: a `d n_vocab` header, then `token v1 .. vd` per line.
    pub fn write_text<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = BufWriter::new(writer);
        writeln!(out, "{} {}", self.dim, self.len())?;
        let mut line = String::new();
        for (i, w) in self.words.iter().enumerate() {
            line.clear();
            line.push_str(w);
            for v in self.row(i) {
                // `Display` for f32 prints the shortest string that parses back
                // to the same value.
                write!(line, " {v}").expect("write to String");
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_text<R: Read>(reader: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.into(),
            line,
            message,
        };
        let mut lines = BufReader::new(reader).lines();
        let header = lines.next().transpose()?.ok_or_else(|| parse_err(1, "missing header".into()))?;
        let mut fields = header.split_whitespace();
        let mut next_num = |name: &str| -> Result<usize> {
            fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| parse_err(1, format!("header needs {name}")))
        };
        let dim = next_num("dimension")?;
        let n = next_num("vocabulary size")?;
        let mut words = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("non-empty line");
            let before = data.len();
            for p in parts {
                let v: f32 = p.parse().map_err(|_| parse_err(lineno, format!("bad float {p:?}")))?;
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(parse_err(lineno, format!("expected {dim} values, got {}", data.len() - before)));
            }
            words.push(token.to_string());
        }
        if words.len() != n {
            return Err(parse_err(1, format!("header announces {n} rows, found {}", words.len())));
        }
        EmbeddingTable::new(words, dim, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_text(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_text(std::fs::File::open(path)?, &path.display().to_string())
    }
}

/// Mean of the embedding rows of content-word tokens found in the table.
pub fn avg_embedding<T: AsRef<str>>(tokens: &[T], table: &EmbeddingTable) -> FeatureVector {
    let tags = pos_tag(tokens);
    let mut sum = vec![0.0f64; table.dim()];
    let mut count = 0usize;
    for (tok, tag) in tokens.iter().zip(tags) {
        if !tag.is_content() {
            continue;
        }
        if let Some(row) = table.get(tok.as_ref()) {
            for (s, &v) in sum.iter_mut().zip(row) {
                *s += f64::from(v);
            }
            count += 1;
        }
    }
    if count > 0 {
        let n = count as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    FeatureVector::Dense(DenseVector { values: sum, no_content_words: count == 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::new(
            vec!["battery".into(), "dies".into(), "the".into(), "fast".into()],
            2,
            vec![1.0, 2.0, 3.0, -4.0, 9.0, 9.0, 0.1, 0.7],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let t = EmbeddingTable::new(vec!["a".into(), "b".into()], 3, vec![0.1, -1e-7, 3.4028235e38, 1.0 / 3.0, 0.0, -2.5]).unwrap();
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        let back = EmbeddingTable::read_text(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, t);
        assert!(String::from_utf8(buf).unwrap().starts_with("3 2\n"));
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(EmbeddingTable::new(vec!["a".into()], 2, vec![1.0]).is_err());
        assert!(EmbeddingTable::new(vec!["a".into(), "a".into()], 1, vec![1.0, 2.0]).is_err());
        assert!(EmbeddingTable::new(vec!["a".into()], 1, vec![f32::NAN]).is_err());
        assert!(EmbeddingTable::read_text("2 1\na 1.0\n".as_bytes(), "mem").is_err());
        assert!(EmbeddingTable::read_text("1 2\na 1.0\n".as_bytes(), "mem").is_err());
    }

    #[test]
    fn averaging_skips_function_words_and_oov() {
        let t = table();
        let FeatureVector::Dense(v) = avg_embedding(&["the", "battery", "dies", "zzz"], &t) else { panic!() };
        assert_eq!(v.values, vec![2.0, -1.0]);
        assert!(!v.no_content_words);

        let FeatureVector::Dense(v) = avg_embedding(&["the", "a"], &t) else { panic!() };
        assert_eq!(v.values, vec![0.0, 0.0]);
        assert!(v.no_content_words);
    }

    #[test]
    fn shuffled_rows_keep_multiset() {
        let t = table();
        let s = t.shuffled_rows(3);
        assert_eq!(s.words(), t.words());
        let mut a: Vec<_> = (0..4).map(|i| t.row(i).to_vec()).collect();
        let mut b: Vec<_> = (0..4).map(|i| s.row(i).to_vec()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn cosine_basics() {
        let t = table();
        assert!((t.cosine("battery", "battery").unwrap() - 1.0).abs() < 1e-12);
        assert!(t.cosine("battery", "nope").is_none());
    }
}
