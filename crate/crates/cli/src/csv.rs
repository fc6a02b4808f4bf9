//! Minimal CSV writer with `#` comment lines and fixed numeric formatting.

use std::io::{self, Write};

/// 17 significant digits, lowercase scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv<W: Write> {
    out: W,
}

impl<W: Write> Csv<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn comment(&mut self, text: &str) -> io::Result<()> {
        for line in text.lines() {
            writeln!(self.out, "# {line}")?;
        }
        Ok(())
    }

    pub fn value(&mut self, key: &str, v: f64) -> io::Result<()> {
        writeln!(self.out, "# {key} = {}", num(v))
    }

    pub fn columns(&mut self, names: &[&str]) -> io::Result<()> {
        writeln!(self.out, "{}", names.join(","))
    }

    pub fn row(&mut self, cells: &[String]) -> io::Result<()> {
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn numbers(&mut self, xs: &[f64]) -> io::Result<()> {
        let cells: Vec<String> = xs.iter().map(|&x| num(x)).collect();
        self.row(&cells)
    }
}
