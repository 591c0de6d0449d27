//! Tabular results and their CSV / JSON encodings.

use std::io::Write;

use serde_json::{Map, Number, Value as Json};

use crate::CliError;

/// One cell of a [`SweepReport`].
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Empty,
    Int(u64),
    Bool(bool),
    /// Echoed input or timing, written in shortest round-trip form.
    Num(f64),
    /// Computed quantity, written with 17 significant digits.
    Exact(f64),
    /// Rate vector; `;`-separated in CSV.
    List(Vec<f64>),
}

impl Value {
    pub fn exact_or_empty(x: Option<f64>) -> Self {
        x.map_or(Value::Empty, Value::Exact)
    }

    fn csv(&self) -> String {
        match self {
            Value::Empty => String::new(),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Num(x) => x.to_string(),
            Value::Exact(x) => exact(*x),
            Value::List(v) => v.iter().map(|x| exact(*x)).collect::<Vec<_>>().join(";"),
        }
    }

    fn json(&self) -> Json {
        let num = |x: f64| Number::from_f64(x).map_or(Json::Null, Json::Number);
        match self {
            Value::Empty => Json::Null,
            Value::Int(i) => Json::from(*i),
            Value::Bool(b) => Json::Bool(*b),
            Value::Num(x) | Value::Exact(x) => num(*x),
            Value::List(v) => Json::Array(v.iter().map(|x| num(*x)).collect()),
        }
    }
}

/// `d.dddddddddddddddde±x`: 17 significant digits, enough to round-trip.
pub fn exact(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Rows under a fixed column list.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl SweepReport {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Array of objects keyed by column name.
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Json> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Json::Object(obj)
            })
            .collect();
        serde_json::to_writer_pretty(&mut out, &rows)?;
        writeln!(out).map_err(serde_json::Error::io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepReport {
        let mut r = SweepReport::new(&["snr_db", "k", "p", "rates", "ok", "t"]);
        r.push(vec![
            Value::Num(20.0),
            Value::Int(1),
            Value::Exact(0.07),
            Value::List(vec![1.5, 2.0]),
            Value::Bool(true),
            Value::Empty,
        ]);
        r
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.07, 1.0 / 3.0, 6.02e-23, 12345.678, 0.0] {
            let s = exact(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "snr_db,k,p,rates,ok,t\n20,1,7.0000000000000007e-2,1.5000000000000000e0;2.0000000000000000e0,true,\n"
        );
    }

    #[test]
    fn json_has_same_keys() {
        let mut buf = Vec::new();
        sample().write_json(&mut buf).unwrap();
        let v: Json = serde_json::from_slice(&buf).unwrap();
        let row = &v.as_array().unwrap()[0];
        let keys: Vec<&str> = row.as_object().unwrap().keys().map(String::as_str).collect();
        let mut want = vec!["snr_db", "k", "p", "rates", "ok", "t"];
        want.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, want);
        assert_eq!(row["p"], 0.07);
        assert!(row["t"].is_null());
    }
}
