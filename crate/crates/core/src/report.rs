//! Deterministic JSON: sorted keys, two-space indent, floats with 17
//! significant digits, and a top-level `"schema": "1"`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA: &str = "1";

/// Fixed 17-significant-digit float format (exactly round-trips an `f64`).
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // normalise −0
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, x, indent + 1);
                out.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}]", pad(indent));
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for (k, key) in keys.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String((*key).clone()));
                write_value(out, &m[*key], indent + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}}}", pad(indent));
        }
    }
}

/// Serializes `value` (which must be a JSON object) with the schema key added.
pub fn to_report_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut v = serde_json::to_value(value)?;
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), Value::String(SCHEMA.into()));
    } else {
        let mut m = Map::new();
        m.insert("schema".into(), Value::String(SCHEMA.into()));
        m.insert("value".into(), v);
        v = Value::Object(m);
    }
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 6.02214076e23] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(-0.0), format_float(0.0));
    }

    #[test]
    fn stable_layout() {
        #[derive(Serialize)]
        struct S {
            b: f64,
            a: Vec<u32>,
        }
        let s = to_report_json(&S { b: 0.5, a: vec![1, 2] }).unwrap();
        assert_eq!(s, "{\n  \"a\": [\n    1,\n    2\n  ],\n  \"b\": 5.0000000000000000e-1,\n  \"schema\": \"1\"\n}\n");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], 0.5);
    }
}
