//! JSON and CSV encoders. Floating-point values are written with 17
//! significant digits in scientific notation.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, Result};

pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// Pretty printer that writes floats via [`format_f64`].
struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Encode(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Encode(e.to_string()))
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    OptFloat(Option<f64>),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_f64(*v),
            Cell::OptFloat(v) => format_opt(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let enc = |e: csv::Error| CliError::Encode(e.to_string());
        w.write_record(&self.header).map_err(enc)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(enc)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Encode(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Encode(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_17_significant_digits() {
        assert_eq!(format_f64(4.0 / 9.0), "4.4444444444444442e-1");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
        assert_eq!(format_f64(0.0), "0.0000000000000000e0");
        for v in [1.0 / 3.0, 2.0 / 7.0, 1e-300, 6.02e23, -0.125] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_round_trips_floats() {
        #[derive(Serialize)]
        struct Doc {
            x: f64,
            v: Vec<f64>,
            missing: Option<f64>,
        }
        let s = to_json(&Doc {
            x: 2.0 / 7.0,
            v: vec![0.1, 5.0],
            missing: None,
        })
        .unwrap();
        assert!(s.contains("\"x\": 2.8571428571428570e-1"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 2.0 / 7.0);
        assert_eq!(back["v"][0].as_f64().unwrap(), 0.1);
        assert!(back["missing"].is_null());
    }

    #[test]
    fn csv_rendering() {
        let mut t = Table::new(vec!["type", "value", "se", "label"]);
        t.push(vec![
            Cell::Int(1),
            Cell::Float(0.5),
            Cell::OptFloat(None),
            Cell::Text("(0,1)".into()),
        ]);
        assert_eq!(
            t.to_csv().unwrap(),
            "type,value,se,label\n1,5.0000000000000000e-1,,\"(0,1)\"\n"
        );
    }
}
