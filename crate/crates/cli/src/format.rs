//! Text formats of the persisted artifacts. Every float in a CSV file is
//! written with 12 significant digits.

use gapforge::bands::DispersionTable;
use gapforge::operator::PotentialGrid;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Significant digits of CSV floats.
pub const CSV_DIGITS: usize = 12;

/// `x` in scientific notation with [`CSV_DIGITS`] significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{:.*e}", CSV_DIGITS - 1, x)
    } else {
        format!("{x}")
    }
}

pub fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

/// Header line plus one line per row, fields joined by commas.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Sidecar of a potential grid CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "V_plus")]
    pub v_plus: f64,
}

/// Row-major grid: line `j` holds the values at `(0, j), (1, j), ...`. A 1D
/// grid is a single line.
pub fn potential_csv(v: &PotentialGrid) -> String {
    let mut out = String::new();
    for row in v.values.chunks(v.n) {
        let line: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn potential_meta(v: &PotentialGrid) -> GridMeta {
    GridMeta {
        d: v.dim,
        n: v.n,
        v_plus: v.v_plus,
    }
}

fn data_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Data {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })
}

/// Read `<stem>.csv` with its sidecar `<stem>.json`.
pub fn read_potential(csv_path: &Path) -> CliResult<PotentialGrid> {
    let meta_path = csv_path.with_extension("json");
    let meta: GridMeta = serde_json::from_str(&read(&meta_path)?)
        .map_err(|e| data_err(&meta_path, e.to_string()))?;
    let text = read(csv_path)?;
    let mut values = Vec::new();
    for (ln, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        for field in line.split(',') {
            let x = parse_num(field).ok_or_else(|| {
                data_err(csv_path, format!("line {}: bad number {field:?}", ln + 1))
            })?;
            values.push(x);
        }
    }
    PotentialGrid::new(meta.d, meta.n, values, meta.v_plus)
        .map_err(|e| data_err(csv_path, e.to_string()))
}

/// Columns `k_index, arc_length, kx, ky, E_1, ..., E_J`.
pub fn dispersion_csv(t: &DispersionTable) -> String {
    let mut header = vec![
        "k_index".to_string(),
        "arc_length".into(),
        "kx".into(),
        "ky".into(),
    ];
    header.extend((1..=t.bands).map(|j| format!("E_{j}")));
    let mut out = header.join(",");
    out.push('\n');
    for (i, (k, e)) in t.ks.points.iter().zip(&t.energies).enumerate() {
        let arc = t.ks.arc.get(i).copied().unwrap_or(f64::NAN);
        let _ = write!(
            out,
            "{i},{},{},{}",
            fmt_num(arc),
            fmt_num(k.0[0]),
            fmt_num(k.0[1])
        );
        for x in e {
            let _ = write!(out, ",{}", fmt_num(*x));
        }
        out.push('\n');
    }
    out
}

/// Parse a dispersion CSV back into `(arc, kx, ky, energies)` rows.
pub fn parse_dispersion_csv(text: &str) -> Option<Vec<(f64, f64, f64, Vec<f64>)>> {
    let mut rows = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let f: Vec<f64> = line.split(',').map(parse_num).collect::<Option<_>>()?;
        if f.len() < 5 {
            return None;
        }
        rows.push((f[1], f[2], f[3], f[4..].to_vec()));
    }
    Some(rows)
}

/// Pretty JSON with a trailing newline.
pub fn json_text<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// One compact JSON record per line.
pub fn jsonl_text<T: Serialize>(records: &[T]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("serializable"));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.1236992), "1.12369920000e0");
        assert_eq!(fmt_num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(fmt_num(0.0), "0.00000000000e0");
    }
}
