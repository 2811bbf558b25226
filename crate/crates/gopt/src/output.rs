//! CSV and JSON renderings of run results.

use std::io::Write;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// One table cell. The variant fixes the CSV text; JSON always gets the raw
/// number.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(usize),
    /// Scientific notation, 6 significant digits.
    Sci(f64),
    /// Shortest text that reads back to the same value.
    Num(f64),
    Fixed(f64, usize),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt_fixed(v: Option<f64>, digits: usize) -> Cell {
        v.map_or(Cell::Empty, |v| Cell::Fixed(v, digits))
    }

    pub fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Sci(v) => sci6(*v),
            Cell::Num(v) => format!("{v:?}"),
            Cell::Fixed(v, d) => format!("{v:.d$}", d = *d),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Sci(v) | Cell::Num(v) | Cell::Fixed(v, _) => Value::from(*v),
            Cell::Bool(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// `d.ddddde±XX`.
pub fn sci6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wr = |e: csv::Error| Error::Write(e.to_string());
        w.write_record(&self.columns).map_err(wr)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).map_err(wr)?;
        }
        w.flush().map_err(|e| Error::Write(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Write(e.to_string()))
    }

    pub fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// A finished run: a table plus run metadata for the JSON form.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub meta: Value,
    pub table: Table,
}

impl Report {
    pub fn to_json(&self) -> Value {
        serde_json::json!({ "meta": self.meta, "rows": self.table.json_rows() })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialize");
        s.push('\n');
        s
    }
}

/// Drops the named columns from CSV text, for comparisons that must ignore
/// timings.
pub fn strip_csv_columns(csv_text: &str, drop: &[&str]) -> Result<String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| Error::Write(e.to_string()))?,
        None => return Ok(String::new()),
    };
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !drop.contains(&&header[i])).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let pick = |r: &csv::StringRecord| keep.iter().map(|&i| r[i].to_string()).collect::<Vec<_>>();
    w.write_record(pick(&header)).map_err(|e| Error::Write(e.to_string()))?;
    for r in records {
        let r = r.map_err(|e| Error::Write(e.to_string()))?;
        w.write_record(pick(&r)).map_err(|e| Error::Write(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Write(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Write(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format() {
        assert_eq!(sci6(1.196), "1.19600e+00");
        assert_eq!(sci6(3.858e-1), "3.85800e-01");
        assert_eq!(sci6(2.4991234e-2), "2.49912e-02");
        assert_eq!(sci6(0.0), "0.00000e+00");
        assert_eq!(sci6(1.5e120), "1.50000e+120");
    }

    #[test]
    fn csv_and_json() {
        let mut t = Table::new(vec!["n", "err", "rate"]);
        t.push(vec![Cell::Int(16), Cell::Sci(1.196), Cell::Empty]);
        t.push(vec![Cell::Int(64), Cell::Sci(0.3858), Cell::Fixed(1.6291, 4)]);
        assert_eq!(
            t.to_csv_string().unwrap(),
            "n,err,rate\n16,1.19600e+00,\n64,3.85800e-01,1.6291\n"
        );
        let rows = t.json_rows();
        assert_eq!(rows[0]["rate"], Value::Null);
        assert_eq!(rows[1]["err"], Value::from(0.3858));
        let stripped = strip_csv_columns(&t.to_csv_string().unwrap(), &["err"]).unwrap();
        assert_eq!(stripped, "n,rate\n16,\n64,1.6291\n");
    }
}
