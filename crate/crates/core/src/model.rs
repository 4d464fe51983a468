//! Trained models: prediction, scoring and the `wwsvm-model v1` text format.
//!
//! ```text
//! wwsvm-model v1
//! k <k> d <d>
//! <original labels, canonical order, space separated>
//! <d lines of k weights: row = feature, column = class>
//! ```
//!
//! Weights are written in the shortest form that parses back to the same
//! value, so a save/load cycle reproduces every bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{LabelMap, SparseDataset, SparseInstance};
use crate::error::{Error, Result};
use crate::reparam::WeightMatrix;

pub const MODEL_HEADER: &str = "wwsvm-model v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    weights: WeightMatrix,
    label_map: LabelMap,
}

impl Model {
    pub fn new(weights: WeightMatrix, label_map: LabelMap) -> Result<Self> {
        if weights.k() != label_map.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weight columns but {} labels",
                weights.k(),
                label_map.len()
            )));
        }
        Ok(Model { weights, label_map })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    pub fn k(&self) -> usize {
        self.weights.k()
    }

    pub fn d(&self) -> usize {
        self.weights.d()
    }

    /// Canonical class with the largest score; ties go to the lowest index.
    pub fn predict_class(&self, x: &SparseInstance) -> usize {
        let scores = self.weights.scores(x);
        let mut best = 0;
        for (j, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = j;
            }
        }
        best
    }

    /// Original label of the predicted class.
    pub fn predict(&self, x: &SparseInstance) -> &str {
        self.label_map.label(self.predict_class(x))
    }

    /// Fraction of instances whose original label matches the prediction.
    /// Labels the model never saw count as errors.
    pub fn accuracy(&self, dataset: &SparseDataset) -> Result<f64> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let truth: Vec<Option<usize>> = dataset
            .label_map()
            .labels()
            .iter()
            .map(|l| self.label_map.index_of(l))
            .collect();
        let correct = dataset
            .instances()
            .iter()
            .zip(dataset.labels())
            .filter(|(x, &y)| truth[y] == Some(self.predict_class(x)))
            .count();
        Ok(correct as f64 / dataset.len() as f64)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{MODEL_HEADER}")?;
        writeln!(out, "k {} d {}", self.k(), self.d())?;
        writeln!(out, "{}", self.label_map.labels().join(" "))?;
        let mut line = String::new();
        for f in 0..self.d() {
            line.clear();
            for (j, w) in self.weights.row(f).iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                write!(line, "{w:?}").expect("writing to a String");
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(source: R) -> Result<Self> {
        let mut lines = BufReader::new(source).lines();
        let mut next_line = |no: usize| -> Result<String> {
            match lines.next() {
                Some(line) => Ok(line?),
                None => Err(Error::ParseError { line: no, reason: "unexpected end of file".into() }),
            }
        };

        let header = next_line(1)?;
        if header.trim_end() != MODEL_HEADER {
            return Err(Error::FormatVersionMismatch(header));
        }

        let dims = next_line(2)?;
        let bad_dims = || Error::ParseError { line: 2, reason: format!("expected `k <k> d <d>`, got {dims:?}") };
        let (k, d) = match dims.split_whitespace().collect::<Vec<_>>()[..] {
            ["k", k, "d", d] => (k.parse::<usize>().map_err(|_| bad_dims())?, d.parse::<usize>().map_err(|_| bad_dims())?),
            _ => return Err(bad_dims()),
        };

        let label_line = next_line(3)?;
        let labels: Vec<&str> = label_line.split_whitespace().collect();
        if labels.len() != k {
            return Err(Error::DimensionMismatch(format!("k = {k} but {} labels listed", labels.len())));
        }
        let label_map = LabelMap::from_labels(&labels).map_err(|e| Error::ParseError { line: 3, reason: e.to_string() })?;

        let mut w = Vec::with_capacity(d * k);
        for f in 0..d {
            let no = 4 + f;
            let row = next_line(no).map_err(|_| {
                Error::DimensionMismatch(format!("d = {d} but only {f} weight rows present"))
            })?;
            let before = w.len();
            for tok in row.split_whitespace() {
                let x: f64 = tok
                    .parse()
                    .map_err(|_| Error::ParseError { line: no, reason: format!("bad weight {tok:?}") })?;
                w.push(x);
            }
            if w.len() - before != k {
                return Err(Error::DimensionMismatch(format!(
                    "line {no} has {} weights, expected k = {k}",
                    w.len() - before
                )));
            }
        }
        for (offset, rest) in lines.enumerate() {
            if !rest?.trim().is_empty() {
                return Err(Error::DimensionMismatch(format!(
                    "extra content on line {} beyond d = {d} rows",
                    4 + d + offset
                )));
            }
        }
        Model::new(WeightMatrix::from_rows(d, k, w)?, label_map)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("model text is ASCII")
    }
}

pub fn save_model<P: AsRef<Path>>(model: &Model, path: P) -> Result<()> {
    model.write(File::create(path)?)
}

pub fn load_model<P: AsRef<Path>>(path: P) -> Result<Model> {
    Model::read(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> LabelMap {
        LabelMap::from_labels(names).unwrap()
    }

    #[test]
    fn zero_model_predicts_first_class() {
        let m = Model::new(WeightMatrix::zeros(3, 3), labels(&["7", "2", "5"])).unwrap();
        let x = SparseInstance::new(vec![1, 2], vec![0.3, -1.0]).unwrap();
        assert_eq!(m.predict(&x), "7");
    }

    #[test]
    fn picks_aligned_column() {
        let x = SparseInstance::new(vec![1, 2], vec![3.0, 4.0]).unwrap();
        let mut w = WeightMatrix::zeros(2, 3);
        w.set(0, 1, 0.6);
        w.set(1, 1, 0.8);
        let m = Model::new(w, labels(&["10", "20", "30"])).unwrap();
        assert_eq!(m.predict(&x), "20");
        assert!(LabelMap::from_labels(&["a1"]).is_err());
    }

    #[test]
    fn ignores_features_beyond_d() {
        let mut w = WeightMatrix::zeros(1, 2);
        w.set(0, 1, 1.0);
        let m = Model::new(w, labels(&["1", "2"])).unwrap();
        let x = SparseInstance::new(vec![1, 5], vec![1.0, 100.0]).unwrap();
        assert_eq!(m.predict(&x), "2");
    }

    #[test]
    fn round_trip_is_exact() {
        let w = WeightMatrix::from_rows(2, 2, vec![0.1 + 0.2, -1e-300, 1.0 / 3.0, 12345.678901234567]).unwrap();
        let m = Model::new(w, labels(&["-1", "+1"])).unwrap();
        let back = Model::read(m.to_text().as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn read_errors() {
        assert!(matches!(Model::read("".as_bytes()), Err(Error::ParseError { line: 1, .. })));
        assert!(matches!(Model::read("wwsvm-model v2\n".as_bytes()), Err(Error::FormatVersionMismatch(_))));
        let wrong_k = "wwsvm-model v1\nk 3 d 1\n1 2 3\n0.5 0.5\n";
        assert!(matches!(Model::read(wrong_k.as_bytes()), Err(Error::DimensionMismatch(_))));
        let short = "wwsvm-model v1\nk 2 d 2\n1 2\n0.5 0.5\n";
        assert!(matches!(Model::read(short.as_bytes()), Err(Error::DimensionMismatch(_))));
        let bad = "wwsvm-model v1\nk 2 d 1\n1 2\n0.5 zz\n";
        assert!(matches!(Model::read(bad.as_bytes()), Err(Error::ParseError { line: 4, .. })));
        let bad_dims = "wwsvm-model v1\nk two d 1\n";
        assert!(matches!(Model::read(bad_dims.as_bytes()), Err(Error::ParseError { line: 2, .. })));
    }

    #[test]
    fn accuracy_counts_unseen_labels_as_errors() {
        let m = Model::new(WeightMatrix::zeros(1, 2), labels(&["1", "2"])).unwrap();
        let ds = crate::data::parse_libsvm("1 1:1\n3 1:1\n2 1:1\n1 1:2\n".as_bytes()).unwrap();
        assert_eq!(m.accuracy(&ds).unwrap(), 0.5);
    }
}
