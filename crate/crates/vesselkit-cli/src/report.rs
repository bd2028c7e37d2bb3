//! Reports, threshold checks and CSV writing.

use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;
use vesselkit_core::json::complex_to_json;
use vesselkit_core::{CMatrix, C64};

/// One residual compared against its threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"le"`: value ≤ threshold; `"ge"`: value ≥ threshold; `"true"`: value = 1.
    pub relation: &'static str,
    pub pass: bool,
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    pub fn le(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let pass = value.is_finite() && value <= threshold;
        self.0.push(Check { name: name.into(), value, threshold, relation: "le", pass });
    }

    pub fn ge(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let pass = value.is_finite() && value >= threshold;
        self.0.push(Check { name: name.into(), value, threshold, relation: "ge", pass });
    }

    pub fn flag(&mut self, name: impl Into<String>, ok: bool) {
        let value = if ok { 1.0 } else { 0.0 };
        self.0.push(Check { name: name.into(), value, threshold: 1.0, relation: "true", pass: ok });
    }

    pub fn passed(&self) -> bool {
        self.0.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.0.iter().find(|c| c.name == name)
    }
}

/// What a scenario produced: the report body and the CSV files next to it.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: &'static str,
    pub checks: Checks,
    pub details: Value,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, checks: Checks::default(), details: Value::Object(Default::default()), files: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.passed()
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("serializable detail");
        if let Value::Object(m) = &mut self.details {
            m.insert(key.to_string(), v);
        }
    }

    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Pretty JSON with a trailing newline.
    pub fn report_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            kind: &'a str,
            passed: bool,
            checks: &'a [Check],
            details: &'a Value,
            files: Vec<&'a str>,
        }
        let r = Report {
            kind: self.kind,
            passed: self.passed(),
            checks: &self.checks.0,
            details: &self.details,
            files: self.files.iter().map(|(n, _)| n.as_str()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&r).expect("serializable report");
        s.push('\n');
        s
    }
}

/// CSV built row by row; floats use the shortest round-trip form.
pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self { out }
    }

    pub fn row(&mut self, fields: &[Field]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            let _ = match f {
                Field::F(x) => write!(self.out, "{x:?}"),
                Field::U(n) => write!(self.out, "{n}"),
            };
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Field {
    F(f64),
    U(usize),
}

/// Complex matrix as nested `[re, im]` arrays.
pub fn matrix_value(m: &CMatrix) -> Value {
    serde_json::to_value(vesselkit_core::json::matrix_to_json(m)).expect("serializable matrix")
}

pub fn complex_value(z: C64) -> Value {
    serde_json::to_value(complex_to_json(z)).expect("serializable complex")
}

/// Rows `prefix…, row, col, re, im` for every entry of `m`.
pub fn matrix_rows(csv: &mut Csv, prefix: &[Field], m: &CMatrix) {
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            let z = m[(r, col)];
            let mut fields = prefix.to_vec();
            fields.extend([Field::U(r), Field::U(col), Field::F(z.re), Field::F(z.im)]);
            csv.row(&fields);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_values_fail() {
        let mut c = Checks::default();
        c.le("nan", f64::NAN, 1.0);
        c.ge("inf", f64::INFINITY, 0.0);
        assert!(c.0.iter().all(|x| !x.pass));
        let mut ok = Checks::default();
        ok.le("a", 1.0, 1.0);
        ok.ge("b", 8.0, 8.0);
        ok.flag("c", true);
        assert!(ok.passed());
    }

    #[test]
    fn report_lists_files_and_ends_with_newline() {
        let mut o = Outcome::new("moments");
        o.file("a.csv", "x\n".into());
        o.detail("n", 3);
        let s = o.report_json();
        assert!(s.ends_with("}\n"));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["files"][0], "a.csv");
        assert_eq!(v["details"]["n"], 3);
        assert_eq!(v["passed"], true);
    }
}
