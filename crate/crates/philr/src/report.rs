//! Machine-readable run reports.
//!
//! Reports are emitted as JSON through a small dedicated writer rather than a
//! serialization framework: field order is fixed, maps are sorted, and every
//! real number is printed with 17 significant digits so that re-running a
//! command reproduces all non-timing fields byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::core::{ComputationError, Result};

/// A single report value.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Real(f64),
    Int(i64),
    Text(String),
    Flag(bool),
    List(Vec<ReportValue>),
}

impl From<f64> for ReportValue {
    fn from(v: f64) -> Self {
        ReportValue::Real(v)
    }
}

impl From<usize> for ReportValue {
    fn from(v: usize) -> Self {
        ReportValue::Int(v as i64)
    }
}

impl From<bool> for ReportValue {
    fn from(v: bool) -> Self {
        ReportValue::Flag(v)
    }
}

impl From<&str> for ReportValue {
    fn from(v: &str) -> Self {
        ReportValue::Text(v.to_string())
    }
}

impl From<String> for ReportValue {
    fn from(v: String) -> Self {
        ReportValue::Text(v)
    }
}

/// Self-describing record of one command invocation.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub command: String,
    pub inputs: BTreeMap<String, ReportValue>,
    pub outputs: BTreeMap<String, ReportValue>,
    pub timings_seconds: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<ReportValue>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn output(&mut self, key: &str, value: impl Into<ReportValue>) -> &mut Self {
        self.outputs.insert(key.to_string(), value.into());
        self
    }

    pub fn timing(&mut self, key: &str, seconds: f64) -> &mut Self {
        self.timings_seconds.insert(key.to_string(), seconds);
        self
    }

    /// Renders the report as a JSON document.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = write!(s, "  \"command\": {},\n", quote(&self.command));
        let _ = write!(
            s,
            "  \"tool_version\": {},\n",
            quote(env!("CARGO_PKG_VERSION"))
        );
        s.push_str("  \"inputs\": ");
        write_map(&mut s, &self.inputs, 1);
        s.push_str(",\n  \"outputs\": ");
        write_map(&mut s, &self.outputs, 1);
        s.push_str(",\n  \"timings_seconds\": ");
        let timing_map: BTreeMap<String, ReportValue> = self
            .timings_seconds
            .iter()
            .map(|(k, &v)| (k.clone(), ReportValue::Real(v)))
            .collect();
        write_map(&mut s, &timing_map, 1);
        s.push_str("\n}\n");
        s
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| ComputationError::IoFailure(format!("{}: {e}", path.display())))
    }
}

fn write_map(out: &mut String, map: &BTreeMap<String, ReportValue>, depth: usize) {
    if map.is_empty() {
        out.push_str("{}");
        return;
    }
    let pad = "  ".repeat(depth + 1);
    out.push_str("{\n");
    for (idx, (k, v)) in map.iter().enumerate() {
        let _ = write!(out, "{pad}{}: ", quote(k));
        write_value(out, v);
        if idx + 1 < map.len() {
            out.push(',');
        }
        out.push('\n');
    }
    let _ = write!(out, "{}}}", "  ".repeat(depth));
}

fn write_value(out: &mut String, v: &ReportValue) {
    match v {
        ReportValue::Real(x) => out.push_str(&format_real(*x)),
        ReportValue::Int(i) => {
            let _ = write!(out, "{i}");
        }
        ReportValue::Text(t) => out.push_str(&quote(t)),
        ReportValue::Flag(b) => out.push_str(if *b { "true" } else { "false" }),
        ReportValue::List(items) => {
            out.push('[');
            for (idx, item) in items.iter().enumerate() {
                if idx > 0 {
                    out.push_str(", ");
                }
                write_value(out, item);
            }
            out.push(']');
        }
    }
}

/// 17 significant digits, always decimal, valid JSON.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "\"nan\"".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "\"inf\"" } else { "\"-inf\"" }.to_string();
    }
    format!("{x:.16e}")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_roundtrip_at_full_precision() {
        for &x in &[
            std::f64::consts::PI,
            1.0 / 3.0,
            -2.2250738585072014e-308,
            6.02214076e23,
            0.0,
        ] {
            let s = format_real(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn report_is_deterministic_and_parses() {
        let mut r = RunReport::new("scr");
        r.input("tol", 1e-5)
            .input("path", "in.mtx")
            .output("rank", 3usize)
            .output("converged", true)
            .output(
                "history",
                ReportValue::List(vec![ReportValue::Real(1.0), ReportValue::Real(0.5)]),
            )
            .timing("total", 0.123);
        let a = r.to_json();
        let b = r.to_json();
        assert_eq!(a, b);
        assert!(a.contains("\"rank\": 3"));
        assert!(a.contains("1.0000000000000001e-5"));
    }
}
