//! JSON reports with sorted keys and fixed 17-significant-digit floats.

use crate::error::CliError;
use nalgebra::{DMatrix, DVector, Matrix4};
use screwkin::linalg::{rank, singular_values, RANK_RTOL};
use screwkin::{ScrewVec, Tolerances};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::io;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Default)]
pub struct Diagnostics {
    pub condition_numbers: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    /// Record a condition number, or a warning if it is not finite.
    pub fn condition(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.condition_numbers.insert(name.to_string(), value);
        } else {
            self.warnings.push(format!("{name}: matrix is rank deficient"));
        }
    }

    /// Condition number over the numerical rank, `σ_max / σ_r`.
    pub fn effective_condition(&mut self, name: &str, m: &DMatrix<f64>) {
        let s = singular_values(m);
        let r = rank(m, RANK_RTOL);
        if r == 0 {
            self.warnings.push(format!("{name}: matrix is zero"));
        } else {
            self.condition_numbers.insert(name.to_string(), s[0] / s[r - 1]);
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }
}

pub struct Report {
    pub command: &'static str,
    pub model: Value,
    pub inputs: Value,
    pub outputs: Value,
    pub diagnostics: Diagnostics,
}

fn tolerances_json(t: &Tolerances) -> Value {
    json!({"orth": t.orth, "loop": t.loop_closure, "cone": t.cone, "rank": t.rank, "cond": t.cond})
}

impl Report {
    /// Assemble the document, rejecting non-finite numbers in the outputs.
    pub fn to_value(&self, tol: &Tolerances) -> Result<Value, CliError> {
        if let Some(path) = first_null(&self.outputs, "outputs") {
            return Err(CliError::numeric(format!("non-finite value at {path}")));
        }
        let diag = json!({
            "tolerances": tolerances_json(tol),
            "condition_numbers": self.diagnostics.condition_numbers,
            "warnings": self.diagnostics.warnings,
        });
        Ok(sorted(json!({
            "command": self.command,
            "model": self.model,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "diagnostics": diag,
            "version": VERSION,
        })))
    }
}

/// `serde_json` maps floats outside the finite range to `null`.
fn first_null(v: &Value, path: &str) -> Option<String> {
    match v {
        Value::Null => Some(path.to_string()),
        Value::Array(a) => a.iter().enumerate().find_map(|(i, x)| first_null(x, &format!("{path}[{i}]"))),
        Value::Object(m) => m.iter().find_map(|(k, x)| first_null(x, &format!("{path}.{k}"))),
        _ => None,
    }
}

/// Rebuild objects with keys in sorted order, independent of whether the
/// map type preserves insertion order.
fn sorted(v: Value) -> Value {
    match v {
        Value::Array(a) => Value::Array(a.into_iter().map(sorted).collect()),
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, x)| (k, sorted(x))).collect::<Map<_, _>>())
        }
        other => other,
    }
}

/// Pretty printer that writes every float as `{:.16e}`.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        let v = if value == 0.0 { 0.0 } else { value };
        write!(w, "{v:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
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
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn render(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::new()));
    v.serialize(&mut ser).expect("writing to a Vec cannot fail");
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

pub fn vector(v: &DVector<f64>) -> Value {
    json!(v.as_slice())
}

pub fn vectors(vs: &[DVector<f64>]) -> Value {
    Value::Array(vs.iter().map(vector).collect())
}

pub fn screw(s: &ScrewVec) -> Value {
    json!(s.as_slice())
}

pub fn screws(s: &[ScrewVec]) -> Value {
    Value::Array(s.iter().map(screw).collect())
}

/// Rows of a dynamic matrix.
pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|r| json!(m.row(r).iter().copied().collect::<Vec<_>>())).collect())
}

pub fn matrix4(m: &Matrix4<f64>) -> Value {
    Value::Array((0..4).map(|r| json!([m[(r, 0)], m[(r, 1)], m[(r, 2)], m[(r, 3)]])).collect())
}
