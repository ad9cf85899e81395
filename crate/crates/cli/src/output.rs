//! CSV emission. The format is part of the reproducibility contract:
//! a header row, a fixed column order per subcommand, probabilities in
//! scientific notation, and all other reals as decimal text with 17
//! significant digits, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Scientific notation with 17 significant digits, for probabilities and
/// their standard errors.
pub fn format_probability(x: f64) -> String {
    format!("{x:.16e}")
}

/// Decimal text with 17 significant digits, for sample sizes, thresholds,
/// ratios, and other non-probability reals.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = libm::floor(libm::log10(x.abs())) as i32;
    let decimals = (16 - exponent).clamp(0, 320) as usize;
    format!("{x:.decimals$}")
}

/// One CSV table: header plus rows of already-formatted cells.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        assert!(
            row.iter().all(|cell| !cell.contains([',', '\n', '"'])),
            "cells must not need CSV quoting"
        );
        self.rows.push(row);
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    }

    /// Writes to `path`, or to standard output when no path is given.
    pub fn emit(&self, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => self.write_to(BufWriter::new(File::create(p)?)),
            None => self.write_to(io::stdout().lock()),
        }
    }
}
