//! The CSV log shared by `train --log` and `benchmark --csv`. Floats use the
//! shortest representation that parses back to the same value.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use wwsvm::LogRow;

pub const HEADER: &str = "dataset,solver,C,outer_iter,elapsed_s,primal,dual,gap,test_acc";
pub const SOLVER: &str = "walrus";

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub c: f64,
    pub row: LogRow,
    pub test_acc: Option<f64>,
}

/// Dataset column value: the file name up to its first dot.
pub fn dataset_name(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.split('.').next().unwrap_or("");
    let stem = if stem.is_empty() { name.as_str() } else { stem };
    stem.replace([',', '"', '\n', '\r'], "_")
}

pub fn write_records<W: Write>(mut out: W, dataset: &str, records: &[Record]) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in records {
        let acc = r.test_acc.map(|a| format!("{a:?}")).unwrap_or_default();
        writeln!(
            out,
            "{dataset},{SOLVER},{:?},{},{:?},{:?},{:?},{:?},{acc}",
            r.c, r.row.outer_iter, r.row.elapsed_s, r.row.primal, r.row.dual, r.row.gap
        )?;
    }
    out.flush()
}

pub fn save_records(path: &Path, dataset: &str, records: &[Record]) -> io::Result<()> {
    let mut buf = Vec::new();
    write_records(&mut buf, dataset, records)?;
    fs::write(path, buf)
}
