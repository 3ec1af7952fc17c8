//! Result rows and their CSV / JSON-lines encodings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "snr_db",
    "n_c",
    "q",
    "trials",
    "se_mean",
    "se_std",
    "ee_mean",
    "wall_s",
    "residual_mean",
    "failures",
];

/// Aggregate of one scheme at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub snr_db: f64,
    pub n_c: usize,
    pub q: usize,
    pub trials: usize,
    pub se_mean: f64,
    pub se_std: f64,
    pub ee_mean: f64,
    pub wall_s: f64,
    pub residual_mean: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

/// `printf("%g")`: six significant digits, trailing zeros dropped, exponent
/// form outside `[1e-4, 1e6)`.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_record(row: &ResultRow) -> [String; 11] {
    [
        row.scheme.clone(),
        format_g(row.snr_db),
        row.n_c.to_string(),
        row.q.to_string(),
        row.trials.to_string(),
        format_g(row.se_mean),
        format_g(row.se_std),
        format_g(row.ee_mean),
        format_g(row.wall_s),
        format_g(row.residual_mean),
        row.failures.to_string(),
    ]
}

/// Writes `rows` sorted by scheme name, then SNR.
pub fn write_results<W: Write>(rows: &[ResultRow], out: W, format: Format) -> std::io::Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.snr_db.total_cmp(&b.snr_db)));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for row in &sorted {
                w.write_record(csv_record(row))?;
            }
            w.flush()
        }
        Format::Jsonl => {
            let mut out = out;
            for row in &sorted {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

pub fn emit_results(rows: &[ResultRow], path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_results(rows, BufWriter::new(file), format).map_err(|e| HarnessError::io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::io(path, e.into()))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| HarnessError::io(path, e.into())))
        .collect()
}

pub fn read_results_jsonl(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::io(path, e.into())))
        .collect()
}
