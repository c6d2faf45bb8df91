//! CSV, JSON and gnuplot writers. All numbers are formatted deterministically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// C-style `%.12e`: `-1.234567890123e-05`.
pub fn fmt_e(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => fmt_e(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Two whitespace-separated columns for gnuplot.
    pub fn to_dat(&self, x: usize, y: usize) -> String {
        let mut out = format!("# {} {}\n", self.header[x], self.header[y]);
        for row in &self.rows {
            let _ = writeln!(out, "{} {}", row[x].render(), row[y].render());
        }
        out
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| crate::Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printf_style() {
        assert_eq!(fmt_e(1.0), "1.000000000000e+00");
        assert_eq!(fmt_e(-1.0 / 24.0), "-4.166666666667e-02");
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(6.02e123), "6.020000000000e+123");
        assert_eq!(fmt_e(f64::NAN), "nan");
    }

    #[test]
    fn csv_and_dat() {
        let mut t = Table::new(&["slices", "error"]);
        t.push(vec![Cell::Int(4), Cell::Real(0.5)]);
        assert_eq!(t.to_csv(), "slices,error\n4,5.000000000000e-01\n");
        assert_eq!(t.to_dat(0, 1), "# slices error\n4 5.000000000000e-01\n");
    }
}
