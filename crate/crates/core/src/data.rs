//! Sparse datasets in LIBSVM text format.
//!
//! Each line is `<label> <index>:<value> ...` with 1-based, strictly
//! increasing feature indices. Anything after `#` is a comment. Labels are
//! mapped to canonical class indices `0..k` in order of first appearance.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::fs::File;

use crate::error::{Error, Result};

/// A sparse feature vector with its squared norm cached.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseInstance {
    indices: Vec<u32>,
    values: Vec<f64>,
    norm_sq: f64,
}

impl SparseInstance {
    /// Builds an instance from 1-based, strictly increasing indices.
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.first() == Some(&0) {
            return Err(Error::InvalidInput("feature indices are 1-based".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("feature indices must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature values must be finite".into()));
        }
        let norm_sq = values.iter().map(|v| v * v).sum();
        Ok(SparseInstance { indices, values, norm_sq })
    }

    /// Builds an instance from a dense slice, keeping the nonzero entries.
    pub fn from_dense(x: &[f64]) -> Self {
        let (indices, values) = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32 + 1, v))
            .unzip();
        SparseInstance::new(indices, values).expect("dense input yields a valid instance")
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `(0-based feature, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize - 1, v))
    }

    /// Largest 1-based feature index, 0 for an empty instance.
    pub fn max_index(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize)
    }

    pub fn dot(&self, other: &SparseInstance) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }
}

/// Original label tokens, in canonical order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelMap {
    labels: Vec<String>,
    keys: Vec<f64>,
}

fn label_key(token: &str) -> Option<f64> {
    let x: f64 = token.parse().ok()?;
    // -0 and 0 are the same class
    x.is_finite().then_some(if x == 0.0 { 0.0 } else { x })
}

impl LabelMap {
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut map = LabelMap::default();
        for l in labels {
            let key = label_key(l.as_ref())
                .ok_or_else(|| Error::InvalidInput(format!("label {:?} is not numeric", l.as_ref())))?;
            if map.lookup_key(key).is_some() {
                return Err(Error::InvalidInput(format!("duplicate label {:?}", l.as_ref())));
            }
            map.labels.push(l.as_ref().to_string());
            map.keys.push(key);
        }
        Ok(map)
    }

    fn lookup_key(&self, key: f64) -> Option<usize> {
        self.keys.iter().position(|&k| k == key)
    }

    /// Canonical index of an original label, compared numerically.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.lookup_key(label_key(label)?)
    }

    fn index_or_insert(&mut self, token: &str, key: f64) -> usize {
        match self.lookup_key(key) {
            Some(i) => i,
            None => {
                self.labels.push(token.to_string());
                self.keys.push(key);
                self.labels.len() - 1
            }
        }
    }

    pub fn label(&self, class: usize) -> &str {
        &self.labels[class]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Instances with canonical labels in `0..k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDataset {
    instances: Vec<SparseInstance>,
    labels: Vec<usize>,
    label_map: LabelMap,
    d: usize,
    dropped_zero_norm: usize,
}

impl SparseDataset {
    /// Assembles a dataset. Labels must be canonical indices into `label_map`.
    pub fn new(instances: Vec<SparseInstance>, labels: Vec<usize>, label_map: LabelMap) -> Result<Self> {
        if instances.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= label_map.len()) {
            return Err(Error::InvalidInput(format!("label index {y} outside the label map")));
        }
        let d = instances.iter().map(SparseInstance::max_index).max().unwrap_or(0);
        Ok(SparseDataset { instances, labels, label_map, d, dropped_zero_norm: 0 })
    }

    /// Dense rows with labels `0..k` named `"1".."k"`.
    pub fn from_dense(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Self> {
        let names: Vec<String> = (1..=k).map(|c| c.to_string()).collect();
        let map = LabelMap::from_labels(&names)?;
        SparseDataset::new(rows.iter().map(|r| SparseInstance::from_dense(r)).collect(), labels.to_vec(), map)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Number of classes.
    pub fn k(&self) -> usize {
        self.label_map.len()
    }

    /// Feature dimension (largest index seen).
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn instances(&self) -> &[SparseInstance] {
        &self.instances
    }

    pub fn instance(&self, i: usize) -> &SparseInstance {
        &self.instances[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    /// Zero-norm lines skipped while parsing.
    pub fn dropped_zero_norm(&self) -> usize {
        self.dropped_zero_norm
    }

    /// Checks the preconditions for training.
    pub fn validate_for_training(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.k() < 2 {
            return Err(Error::SingleClassDataset);
        }
        if let Some(i) = self.instances.iter().position(|x| !(x.norm_sq() > 0.0)) {
            return Err(Error::ZeroNormInstance(i));
        }
        Ok(())
    }

    pub fn write_libsvm<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for (x, &y) in self.instances.iter().zip(&self.labels) {
            line.clear();
            line.push_str(self.label_map.label(y));
            for (&i, &v) in x.indices.iter().zip(&x.values) {
                write!(line, " {i}:{v}").expect("writing to a String");
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_libsvm_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_libsvm(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("labels and numbers are ASCII")
    }
}

fn parse_line(content: &str, line_no: usize) -> Result<Option<(&str, SparseInstance)>> {
    let malformed = |reason: String| Error::MalformedLine { line: line_no, reason };
    let mut tokens = content.split_whitespace();
    let Some(label) = tokens.next() else {
        return Ok(None);
    };
    if label_key(label).is_none() {
        return Err(malformed(format!("label {label:?} is not a number")));
    }
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| malformed(format!("expected index:value, got {tok:?}")))?;
        let idx: u32 = idx
            .parse()
            .map_err(|_| malformed(format!("bad feature index {idx:?}")))?;
        if idx == 0 {
            return Err(malformed("feature indices are 1-based".into()));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| malformed(format!("bad feature value {val:?}")))?;
        if !val.is_finite() {
            return Err(malformed(format!("feature value {val} is not finite")));
        }
        if let Some(&prev) = indices.last() {
            if idx == prev {
                return Err(malformed(format!("duplicate feature index {idx}")));
            }
            if idx < prev {
                return Err(malformed(format!("feature index {idx} follows {prev}")));
            }
        }
        indices.push(idx);
        values.push(val);
    }
    let x = SparseInstance::new(indices, values).map_err(|e| malformed(e.to_string()))?;
    Ok(Some((label, x)))
}

fn parse_with<R: Read>(source: R, keep_zero_norm: bool) -> Result<SparseDataset> {
    let reader = BufReader::new(source);
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    let mut label_map = LabelMap::default();
    let mut dropped = 0usize;
    let mut seen_any = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let Some((label, x)) = parse_line(content, i + 1)? else {
            continue;
        };
        seen_any = true;
        if !keep_zero_norm && !(x.norm_sq() > 0.0) {
            dropped += 1;
            continue;
        }
        let key = label_key(label).expect("validated by parse_line");
        labels.push(label_map.index_or_insert(label, key));
        instances.push(x);
    }
    if !seen_any {
        return Err(Error::EmptyInput);
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} zero-norm instance(s)");
    }
    let mut ds = SparseDataset::new(instances, labels, label_map)?;
    ds.dropped_zero_norm = dropped;
    Ok(ds)
}

/// Parses LIBSVM text for training: zero-norm instances are dropped (they
/// contribute a constant to the objective) and counted.
pub fn parse_libsvm<R: Read>(source: R) -> Result<SparseDataset> {
    parse_with(source, false)
}

/// Parses LIBSVM text keeping every instance, for prediction and scoring.
pub fn parse_libsvm_keep_all<R: Read>(source: R) -> Result<SparseDataset> {
    parse_with(source, true)
}

pub fn read_libsvm_file<P: AsRef<Path>>(path: P) -> Result<SparseDataset> {
    parse_libsvm(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_file() {
        let ds = parse_libsvm("2 1:0.5 3:-1.2\n1 2:1\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.d(), 3);
        assert_eq!(ds.k(), 2);
        assert_eq!(ds.label_map().labels(), &["2".to_string(), "1".to_string()]);
        assert_eq!(ds.labels(), &[0, 1]);
        assert!((ds.instance(0).norm_sq() - (0.25 + 1.44)).abs() < 1e-15);
    }

    #[test]
    fn drops_zero_norm_lines() {
        let ds = parse_libsvm("1 1:0\n2 1:1\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dropped_zero_norm(), 1);
        assert_eq!(ds.k(), 1);
        assert!(matches!(ds.validate_for_training(), Err(Error::SingleClassDataset)));

        let all = parse_libsvm_keep_all("1 1:0\n2 1:1\n".as_bytes()).unwrap();
        assert_eq!(all.len(), 2);
        assert!(matches!(all.validate_for_training(), Err(Error::ZeroNormInstance(0))));
    }

    #[test]
    fn rejects_bad_lines() {
        for (text, line) in [
            ("1 3:1 2:1\n", 1),
            ("1 1:1\n1 2:1 2:3\n", 2),
            ("1 1:x\n", 1),
            ("a 1:1\n", 1),
            ("1 0:1\n", 1),
            ("1 1:1\n\n2 4\n", 3),
        ] {
            match parse_libsvm(text.as_bytes()) {
                Err(Error::MalformedLine { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse_libsvm("".as_bytes()), Err(Error::EmptyInput)));
        assert!(matches!(parse_libsvm("# only a comment\n\n".as_bytes()), Err(Error::EmptyInput)));
    }

    #[test]
    fn comments_and_numeric_label_identity() {
        let ds = parse_libsvm("+1 1:1 # note\n1 2:2\n-1 1:3\n".as_bytes()).unwrap();
        assert_eq!(ds.k(), 2);
        assert_eq!(ds.labels(), &[0, 0, 1]);
        assert_eq!(ds.label_map().index_of("1.0"), Some(0));
    }

    #[test]
    fn sparse_dot() {
        let a = SparseInstance::new(vec![1, 3, 7], vec![1.0, 2.0, 3.0]).unwrap();
        let b = SparseInstance::new(vec![3, 4, 7], vec![5.0, 1.0, -1.0]).unwrap();
        assert_eq!(a.dot(&b), 7.0);
    }
}
