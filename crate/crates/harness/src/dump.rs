//! Plain-text matrix dump: a `name rows cols` line, then one line per row of
//! space-separated `re im` pairs. Floats print in shortest round-trip form.

use std::io::{self, Write};

use hybrid_precoding::linalg::CMatrix;
use hybrid_precoding::HybridPrecoder;
use num_complex::Complex64;

pub fn write_matrix<W: Write + ?Sized>(out: &mut W, name: &str, m: &CMatrix) -> io::Result<()> {
    writeln!(out, "{name} {} {}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols())
            .map(|c| format!("{} {}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Writes `S_t`, `P_t` and `F_BB` in that order.
pub fn write_precoder<W: Write + ?Sized>(out: &mut W, pre: &HybridPrecoder) -> io::Result<()> {
    let s = pre.switches.to_complex();
    write_matrix(out, "switches", &s)?;
    write_matrix(out, "phases", pre.phases.entries())?;
    write_matrix(out, "digital", &pre.digital)
}

/// Parses the output of [`write_matrix`] calls back into named matrices.
pub fn read_matrices(text: &str) -> Result<Vec<(String, CMatrix)>, String> {
    let mut lines = text.lines();
    let mut out = Vec::new();
    while let Some(header) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [name, rows, cols] = parts[..] else {
            return Err(format!("bad header {header:?}"));
        };
        let rows: usize = rows.parse().map_err(|e| format!("{header:?}: {e}"))?;
        let cols: usize = cols.parse().map_err(|e| format!("{header:?}: {e}"))?;
        let mut m = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines.next().ok_or_else(|| format!("{name}: missing row {r}"))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| format!("{name} row {r}: {e}")))
                .collect::<Result<_, _>>()?;
            if vals.len() != 2 * cols {
                return Err(format!("{name} row {r}: expected {} numbers", 2 * cols));
            }
            for c in 0..cols {
                m[(r, c)] = Complex64::new(vals[2 * c], vals[2 * c + 1]);
            }
        }
        out.push((name.to_string(), m));
    }
    Ok(out)
}
