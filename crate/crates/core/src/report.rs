//! Comma-separated report tables. Reals are printed with four decimals and
//! undefined values are left blank.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{ClassAccuracyReport, SweepTable};
use crate::labels::csv_err;

fn fixed4(x: f64) -> String {
    format!("{x:.4}")
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn to_file(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(Error::io(path))?;
    write_rows(file, header, rows).map_err(|e| csv_err(path, e))
}

/// `threshold,percent_classified`
pub fn coverage_rows(curve: &[(f64, f64)]) -> Vec<Vec<String>> {
    curve
        .iter()
        .map(|(t, frac)| vec![fixed4(*t), fixed4(frac * 100.0)])
        .collect()
}

pub const COVERAGE_HEADER: [&str; 2] = ["threshold", "percent_classified"];

pub fn write_coverage_csv(curve: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    to_file(path.as_ref(), &COVERAGE_HEADER, coverage_rows(curve))
}

pub const CLASS_HEADER: [&str; 3] = ["class", "frequency", "accuracy"];

/// `class,frequency,accuracy`, followed by an `Average` row when accuracies
/// are known. Accuracy is a fraction.
pub fn class_rows(
    freq: &[(String, usize)],
    accuracy: Option<&ClassAccuracyReport>,
) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = freq
        .iter()
        .map(|(label, n)| {
            let acc = accuracy
                .and_then(|r| r.classes.iter().find(|c| &c.label == label))
                .map(|c| fixed4(c.accuracy))
                .unwrap_or_default();
            vec![label.clone(), n.to_string(), acc]
        })
        .collect();
    if let Some(r) = accuracy {
        let total: usize = freq
            .iter()
            .filter(|(l, _)| r.classes.iter().any(|c| &c.label == l))
            .map(|(_, n)| n)
            .sum();
        rows.push(vec!["Average".into(), total.to_string(), fixed4(r.average)]);
    }
    rows
}

pub fn write_class_csv(
    freq: &[(String, usize)],
    accuracy: Option<&ClassAccuracyReport>,
    path: impl AsRef<Path>,
) -> Result<()> {
    to_file(path.as_ref(), &CLASS_HEADER, class_rows(freq, accuracy))
}

pub const SWEEP_HEADER: [&str; 7] = [
    "threshold",
    "classified",
    "hits",
    "hit_rate",
    "errors",
    "error_rate",
    "ratio",
];

pub fn sweep_rows(table: &SweepTable) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .map(|r| {
            vec![
                fixed4(r.threshold),
                r.classified.to_string(),
                r.hits.to_string(),
                fixed4(r.hit_rate),
                r.errors.to_string(),
                fixed4(r.error_rate),
                r.ratio.map(fixed4).unwrap_or_default(),
            ]
        })
        .collect()
}

pub fn write_sweep_csv(table: &SweepTable, path: impl AsRef<Path>) -> Result<()> {
    to_file(path.as_ref(), &SWEEP_HEADER, sweep_rows(table))
}

/// Renders the sweep as an aligned plain-text table for the terminal.
pub fn format_sweep_table(table: &SweepTable) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>9} {:>10} {:>6} {:>8} {:>6} {:>10} {:>7}",
        "threshold", "classified", "hits", "hit_rate", "errors", "error_rate", "ratio"
    );
    for r in sweep_rows(table) {
        let _ = writeln!(
            s,
            "{:>9} {:>10} {:>6} {:>8} {:>6} {:>10} {:>7}",
            r[0],
            r[1],
            r[2],
            r[3],
            r[4],
            r[5],
            if r[6].is_empty() { "-" } else { &r[6] }
        );
    }
    s
}
