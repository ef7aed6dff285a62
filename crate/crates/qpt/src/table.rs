//! Result tables and their CSV / JSON renderings.

use serde_json::{json, Map, Value as Json};

use crate::config::{ConfigFile, Task};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Value {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Float)
    }

    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    /// 17 significant digits for reals.
    fn csv_field(&self) -> String {
        match self {
            Value::Float(x) if x.is_nan() => "NaN".into(),
            Value::Float(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Value::Float(x) => format!("{x:.16e}"),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::Missing => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Float(x) if x.is_finite() => json!(x),
            Value::Float(_) | Value::Missing => Json::Null,
            Value::Int(i) => json!(i),
            Value::Bool(b) => json!(b),
            Value::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: &'static str) -> Self {
        Column { name: name.into(), unit }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub values: Vec<Value>,
    /// Some value in this row is missing, unconverged or flagged by its solver.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct ResultTable {
    pub task: Task,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// Canonical echo of the run.
    pub config: ConfigFile,
    pub derived: Map<String, Json>,
    /// Task-specific summary (e.g. the minimizer behind a landscape).
    pub notes: Map<String, Json>,
    pub wall_time_s: f64,
}

impl ResultTable {
    pub fn flagged_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn metadata(&self) -> Json {
        json!({
            "tool": "optomech-qpt",
            "version": env!("CARGO_PKG_VERSION"),
            "table_schema": format!("{}/1", self.task),
            "config": self.config,
            "derived": self.derived,
            "rows": self.rows.len(),
            "flagged_rows": self.flagged_rows(),
            "notes": self.notes,
            "wall_time_s": self.wall_time_s,
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| format!("{} ({})", c.name, c.unit)))?;
        for row in &self.rows {
            w.write_record(row.values.iter().map(Value::csv_field))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("fields are UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = json!({
            "columns": self.columns.iter().map(|c| json!({"name": c.name, "unit": c.unit})).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| r.values.iter().map(Value::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "metadata": self.metadata(),
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn metadata_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.metadata())?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_field_format() {
        assert_eq!(Value::Float(0.8).csv_field(), "8.0000000000000004e-1");
        assert_eq!(Value::Float(-2.0).csv_field(), "-2.0000000000000000e0");
        assert_eq!(Value::Float(f64::NAN).csv_field(), "NaN");
        assert_eq!(Value::Missing.csv_field(), "");
        let x = 0.1 + 0.2;
        assert_eq!(Value::Float(x).csv_field().parse::<f64>().unwrap(), x);
    }
}
