//! Model files, fixed-precision number formatting, and CSV/JSON tables.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{LevyModel, ModelParams};
use crate::valuation::ValueCurve;

/// Significant digits in every emitted number.
pub const SIG_DIGITS: usize = 12;

/// On-disk model description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub drift_d: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub q: f64,
    pub alpha: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override to one of the scalar fields.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override `{assignment}` is not key=value")))?;
        let value = parse_num(raw.trim())?;
        match key.trim() {
            "drift_d" => self.drift_d = value,
            "sigma" => self.sigma = value,
            "lambda" => self.lambda = value,
            "q" => self.q = value,
            other => return Err(Error::Config(format!("unknown override key `{other}`"))),
        }
        Ok(())
    }

    pub fn to_model(&self) -> Result<LevyModel> {
        LevyModel::from_params(&ModelParams {
            drift_d: self.drift_d,
            sigma: self.sigma,
            lambda: self.lambda,
            q: self.q,
            alpha: self.alpha.clone(),
            sub_generator: self.t.clone(),
        })
    }
}

pub fn parse_num(raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{raw}` is not a number")))
}

/// Comma-separated list of numbers.
pub fn parse_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(parse_num).collect()
}

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to the emitted precision.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

/// JSON number at the emitted precision; non-finite values become `null`.
pub fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
}

/// A table of named numeric columns; `None` cells are left empty (CSV) or
/// `null` (JSON).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Some(v)).collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map(fmt_num).unwrap_or_default())).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ascii output"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let parse = |e: csv::Error| Error::Parse(e.to_string());
        let columns = r.headers().map_err(parse)?.iter().map(String::from).collect();
        let mut table = Self { columns, rows: Vec::new() };
        for rec in r.records() {
            let rec = rec.map_err(parse)?;
            let row = rec
                .iter()
                .map(|c| if c.is_empty() { Ok(None) } else { parse_num(c).map(Some) })
                .collect::<Result<Vec<_>>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }

    /// Array of records keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let rec: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, v)| (k.clone(), v.map_or(Value::Null, json_num)))
                        .collect();
                    Value::Object(rec)
                })
                .collect(),
        )
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = || Error::Parse("expected an array of flat numeric records".into());
        let recs = value.as_array().ok_or_else(bad)?;
        let columns: Vec<String> = match recs.first() {
            Some(Value::Object(m)) => m.keys().cloned().collect(),
            Some(_) => return Err(bad()),
            None => Vec::new(),
        };
        let mut table = Self { columns, rows: Vec::new() };
        for rec in recs {
            let m = rec.as_object().ok_or_else(bad)?;
            let row = table
                .columns
                .iter()
                .map(|k| match m.get(k) {
                    Some(Value::Null) => Ok(None),
                    Some(v) => v.as_f64().map(Some).ok_or_else(bad),
                    None => Err(bad()),
                })
                .collect::<Result<Vec<_>>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }
}

/// `x, v, dv` table of a value curve.
pub fn curve_table(curve: &ValueCurve) -> Table {
    let mut t = Table::new(["x", "v", "dv"]);
    for ((x, v), dv) in curve.xs.iter().zip(&curve.vs).zip(&curve.dvs) {
        t.push_values(&[*x, *v, *dv]);
    }
    t
}

/// Pretty-printed JSON with a trailing newline.
pub fn json_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formatting_matches_c_style() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(1e-5), "1e-05");
        assert_eq!(fmt_num(0.0001234), "0.0001234");
        assert_eq!(fmt_num(1.5e12), "1.5e+12");
        assert_eq!(fmt_num(999999999999.6), "1e+12");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    proptest! {
        #[test]
        fn formatting_is_idempotent(x in prop::num::f64::NORMAL) {
            let s = fmt_num(x);
            prop_assert_eq!(fmt_num(s.parse::<f64>().unwrap()), s);
        }
    }

    #[test]
    fn model_file_round_trip_and_overrides() {
        let text = "drift_d = 2.0\nsigma = 0.0\nlambda = 1.0\nq = 0.05\nalpha = [1.0]\nT = [[-1.0]]\n";
        let mut f = ModelFile::parse(text).unwrap();
        assert_eq!(f.t, vec![vec![-1.0]]);
        f.set("q=0.1").unwrap();
        f.set(" lambda = 2 ").unwrap();
        assert_eq!((f.q, f.lambda), (0.1, 2.0));
        assert!(matches!(f.set("beta=1"), Err(Error::Config(_))));
        assert!(matches!(f.set("q"), Err(Error::Parse(_))));
        assert!(f.to_model().is_ok());
        let again = ModelFile::parse(&toml::to_string(&f).unwrap()).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn model_file_rejects_unknown_keys_and_bad_shapes() {
        let extra = "drift_d = 2.0\nsigma = 0.0\nlambda = 1.0\nq = 0.05\nalpha = [1.0]\nT = [[-1.0]]\nmu = 3\n";
        assert!(matches!(ModelFile::parse(extra), Err(Error::Parse(_))));
        let shape = "drift_d = 2.0\nsigma = 0.0\nlambda = 1.0\nq = 0.05\nalpha = [1.0, 0.0]\nT = [[-1.0]]\n";
        assert!(matches!(ModelFile::parse(shape).unwrap().to_model(), Err(Error::InvalidPhaseType(_))));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let mut t = Table::new(["x", "v"]);
        t.push_values(&[0.0, 1.0 / 3.0]);
        t.push(vec![Some(2.0), None]);
        let csv = t.to_csv().unwrap();
        assert_eq!(csv, "x,v\n0,0.333333333333\n2,\n");
        let back = Table::from_csv(&csv).unwrap();
        assert_eq!(back.to_csv().unwrap(), csv);
        let json = t.to_json();
        assert_eq!(json[0]["v"].as_f64().unwrap(), 0.333333333333);
        assert!(json[1]["v"].is_null());
        let from_json = Table::from_json(&json).unwrap();
        assert_eq!(from_json.to_csv().unwrap(), csv);
    }

    #[test]
    fn lists_parse() {
        assert_eq!(parse_list("10,5, 0.1").unwrap(), vec![10.0, 5.0, 0.1]);
        assert!(parse_list("1,x").is_err());
    }
}
