//! Tabular results and their CSV / JSON rendering.

use std::io::Write;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), v);
    s.parse().unwrap_or(v)
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W, digits: usize) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => round_sig(*v, digits).to_string(),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
            }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, digits: usize) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, c)| (k.clone(), cell_json(c, digits)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

fn cell_json(c: &Cell, digits: usize) -> Value {
    match c {
        Cell::Num(v) => Number::from_f64(round_sig(*v, digits)).map_or(Value::Null, Value::Number),
        Cell::Int(v) => Value::from(*v),
        Cell::Text(s) => Value::from(s.as_str()),
    }
}

/// Rounds every float in a JSON value.
pub fn round_json(v: Value, digits: usize) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|f| Number::from_f64(round_sig(f, digits)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(|x| round_json(x, digits)).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, round_json(x, digits))).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(round_sig(1.0 / 3.0, 6), 0.333333);
        assert_eq!(round_sig(4.0 / 3.0, 3), 1.33);
        assert_eq!(round_sig(123456789.0, 2), 120000000.0);
        assert_eq!(round_sig(0.0, 6), 0.0);
        assert!(round_sig(f64::NAN, 6).is_nan());
    }

    #[test]
    fn csv_rendering() {
        let mut t = Table::new(["n", "x"]);
        t.push(vec![Cell::from(3usize), Cell::from(2.0 / 3.0)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, 4).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,x\n3,0.6667\n");
    }

    #[test]
    fn json_rendering() {
        let mut t = Table::new(["method", "v"]);
        t.push(vec![Cell::from("a"), Cell::from(0.123456789)]);
        assert_eq!(t.to_json(3).to_string(), r#"[{"method":"a","v":0.123}]"#);
    }
}
