//! CSV and JSON report writers.
//!
//! CSV: fixed column order, floats with 17 significant digits, LF line
//! endings. JSON: an envelope with provenance and the full rows, described
//! by `schema/report.schema.json`.

use anyhow::Result;
use serde::Serialize;
use std::io::Write;

/// Format of a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Plain text; tables fall back to CSV.
    Text,
    Csv,
    Json,
}

/// A record with a fixed CSV layout.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// `x` with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Where the run came from; enough to regenerate the report.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub build: &'static str,
    pub workers: usize,
    pub command: Vec<String>,
}

impl Provenance {
    pub fn new(workers: usize, command: Vec<String>) -> Self {
        Self {
            tool: "dustcycle",
            version: env!("CARGO_PKG_VERSION"),
            build: env!("DUSTCYCLE_BUILD_ID"),
            workers,
            command,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, R> {
    kind: &'a str,
    provenance: &'a Provenance,
    rows: &'a [R],
}

pub fn write_csv<R: CsvRow>(out: impl Write, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(R::header())?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<R: Serialize>(mut out: impl Write, kind: &str, provenance: &Provenance, rows: &[R]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &Envelope { kind, provenance, rows })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes a table in the chosen format (text means CSV).
pub fn write_table<R: CsvRow + Serialize>(
    out: impl Write,
    format: Format,
    kind: &str,
    provenance: &Provenance,
    rows: &[R],
) -> Result<()> {
    match format {
        Format::Text | Format::Csv => write_csv(out, rows),
        Format::Json => write_json(out, kind, provenance, rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Row(f64, Option<f64>, &'static str);

    impl CsvRow for Row {
        fn header() -> &'static [&'static str] {
            &["a", "b", "label"]
        }
        fn fields(&self) -> Vec<String> {
            vec![float(self.0), opt_float(self.1), self.2.to_string()]
        }
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 2.0 * std::f64::consts::PI * std::f64::consts::PI, -1e-300, 6.02e23] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[Row(1.0, None, "x,y"), Row(0.25, Some(2.0), "z")]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a,b,label\n1.0000000000000000e0,,\"x,y\"\n2.5000000000000000e-1,2.0000000000000000e0,z\n");
        assert!(!text.contains('\r'));
    }
}
