//! CSV emission and run manifests.
//!
//! Every table starts with one comment line naming the format version and the
//! manifest id, followed by an ordinary RFC-4180 header row:
//!
//! ```text
//! # rydtherm-csv v1 table=fig2 manifest=3f9c0a1b22d4e5f6
//! y,F
//! 0.01,-0.0328928155023
//! ```
//!
//! Floats are printed with 12 significant digits.  The manifest id is a hash
//! of everything that determines the numbers (tool version, data version,
//! command line, solver settings), so re-running the same command gives a
//! byte-identical table.  Wall time is recorded in the manifest file but is
//! not part of the id.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CSV_FORMAT_VERSION: u32 = 1;
const SIG_DIGITS: usize = 12;

/// Format `x` with 12 significant digits, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".into() } else { t.to_string() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_sig(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// An in-memory table, written in one ordered pass.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W, manifest_id: &str) -> Result<()> {
        let mut out = out;
        writeln!(out, "# rydtherm-csv v{CSV_FORMAT_VERSION} table={} manifest={manifest_id}", self.name)
            .map_err(|e| Error::Csv(e.into()))?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_string(&self, manifest_id: &str) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf, manifest_id)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub data_version: String,
    pub command_line: Vec<String>,
    /// Ordered (key, value) solver settings.
    pub settings: Vec<(String, String)>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(data_version: &str, command_line: Vec<String>, settings: Vec<(String, String)>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            data_version: data_version.to_string(),
            command_line,
            settings,
            wall_time_s: 0.0,
        }
    }

    /// 16 hex digits of a SHA-256 over the reproducibility-relevant fields.
    pub fn id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.tool_version.as_bytes());
        h.update([0]);
        h.update(self.data_version.as_bytes());
        h.update([0]);
        for a in &self.command_line {
            h.update(a.as_bytes());
            h.update([0]);
        }
        for (k, v) in &self.settings {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update([0]);
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `key = value` text, readable by the species-file parser.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str("# rydtherm run manifest\n");
        s.push_str(&format!("id = {}\n", self.id()));
        s.push_str(&format!("tool_version = {}\n", self.tool_version));
        s.push_str(&format!("data_version = {}\n", self.data_version));
        s.push_str(&format!("command_line = {}\n", self.command_line.join(" ")));
        for (k, v) in &self.settings {
            s.push_str(&format!("setting.{k} = {v}\n"));
        }
        s.push_str(&format!("wall_time_s = {:.3}\n", self.wall_time_s));
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

/// One row of a thermometry measurement file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRow {
    pub transition: String,
    pub offset_hz: f64,
    pub sigma_hz: f64,
}

/// Read `transition,offset_hz,sigma_hz` rows; `#` lines are comments and a
/// header row is required.
pub fn read_measurements<R: Read>(input: R) -> Result<Vec<MeasurementRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let expect = ["transition", "offset_hz", "sigma_hz"];
    if headers.len() != 3 || headers.iter().zip(expect).any(|(a, b)| a != b) {
        return Err(Error::Validation(format!("measurement header must be {}, got {:?}", expect.join(","), headers)));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|_| Error::Validation(format!("row {}: bad number {:?}", i + 1, &rec[j])))
        };
        rows.push(MeasurementRow { transition: rec[0].to_string(), offset_hz: num(1)?, sigma_hz: num(2)? });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(-2454.123456789012), "-2454.12345679");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.5e-9), "1.5e-9");
        assert_eq!(fmt_sig(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_sig(1e-300 * 1e-300), "0");
        for x in [1.234567890123456e-3, 987654.3210987654, -7.3e-17] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11);
        }
    }

    #[test]
    fn table_layout_and_quoting() {
        let mut t = Table::new("demo", &["n", "label", "value"]);
        t.push(vec![25u32.into(), "a,b".into(), 0.5.into()]);
        let s = t.to_string("abc").unwrap();
        assert_eq!(s, "# rydtherm-csv v1 table=demo manifest=abc\nn,label,value\n25,\"a,b\",0.5\n");
    }

    #[test]
    fn manifest_id_ignores_wall_time() {
        let mut m = RunManifest::new("v1", vec!["rydtherm".into(), "fig2".into()], vec![("span".into(), "35".into())]);
        let id = m.id();
        m.wall_time_s = 12.0;
        assert_eq!(m.id(), id);
        assert_eq!(id.len(), 16);
        m.settings[0].1 = "36".into();
        assert_ne!(m.id(), id);
    }

    #[test]
    fn measurement_file() {
        let text = "# comment\ntransition,offset_hz,sigma_hz\n3D1:25, 2400.5, 0.16\n3D1:30,2401,0.2\n";
        let rows = read_measurements(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], MeasurementRow { transition: "3D1:25".into(), offset_hz: 2400.5, sigma_hz: 0.16 });
        assert!(read_measurements("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_measurements("transition,offset_hz,sigma_hz\nx,abc,1\n".as_bytes()).is_err());
    }
}
