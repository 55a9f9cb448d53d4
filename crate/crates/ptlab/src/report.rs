//! Machine-readable reports for the `ptlab` CLI.
//!
//! A report is a flat JSON object with sorted keys: schema version, the
//! invoking command, a digest of the input file, analysis results keyed by
//! name, and wall-clock timing. Floats use the shortest decimal that
//! round-trips.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::mat::CMatrix;
use crate::process::Process;

pub const SCHEMA_VERSION: u32 = 1;

/// Accumulates analysis output keyed by name; serializes deterministically.
#[derive(Debug, Clone)]
pub struct Report {
    command: Vec<String>,
    input_path: Option<String>,
    input_digest: Option<String>,
    data: BTreeMap<String, Value>,
    elapsed_ms: Option<f64>,
}

impl Report {
    pub fn new(command: &[String]) -> Self {
        Report {
            command: command.to_vec(),
            input_path: None,
            input_digest: None,
            data: BTreeMap::new(),
            elapsed_ms: None,
        }
    }

    /// Record the input file and its SHA-256 digest.
    pub fn set_input(&mut self, path: &str, contents: &str) {
        self.input_path = Some(path.to_string());
        let mut hasher = Sha256::new();
        hasher.update(contents.as_bytes());
        self.input_digest = Some(format!("{:x}", hasher.finalize()));
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.data.insert(key.to_string(), value);
    }

    pub fn set_elapsed_ms(&mut self, ms: f64) {
        self.elapsed_ms = Some(ms);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.data.get(key)
    }

    /// The full report as a JSON object with sorted keys.
    pub fn to_value(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("command".into(), json!(self.command));
        map.insert("elapsed_ms".into(), json!(self.elapsed_ms));
        map.insert("input_digest".into(), json!(self.input_digest));
        map.insert("input_path".into(), json!(self.input_path));
        map.insert("results".into(), Value::Object(self.data.clone().into_iter().collect()));
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        Value::Object(map)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("report serializes")
    }
}

/// A complex matrix as nested `[re, im]` pairs.
pub fn matrix_value(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|r| {
            let row: Vec<Value> = (0..m.cols())
                .map(|c| {
                    let z = m.get(r, c);
                    json!([z.re, z.im])
                })
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

/// A process as its type signature plus transfer matrix.
pub fn process_value(p: &Process) -> Value {
    json!({
        "cod": p.cod().to_string(),
        "dom": p.dom().to_string(),
        "transfer": matrix_value(p.transfer()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process;
    use crate::process::SystemType;

    #[test]
    fn keys_are_sorted_and_schema_present() {
        let mut r = Report::new(&["ptlab".into(), "parse".into()]);
        r.set_input("x.ptc", "main = one\n");
        r.set("zeta", json!(1));
        r.set("alpha", json!(2));
        let text = r.to_json();
        let alpha = text.find("\"alpha\"").unwrap();
        let zeta = text.find("\"zeta\"").unwrap();
        assert!(alpha < zeta);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], json!(SCHEMA_VERSION));
        assert_eq!(
            v["input_digest"].as_str().unwrap().len(),
            64,
            "sha-256 hex digest"
        );
    }

    #[test]
    fn float_round_trip_through_json() {
        let mut r = Report::new(&[]);
        let x = 0.1_f64 + 0.2_f64;
        r.set("value", json!(x));
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["results"]["value"].as_f64().unwrap(), x);
    }

    #[test]
    fn process_serialization_shape() {
        let p = process::identity(&SystemType::classical(2));
        let v = process_value(&p);
        assert_eq!(v["dom"], v["cod"]);
        assert_eq!(v["transfer"][0][0], json!([1.0, 0.0]));
        assert_eq!(v["transfer"][0][1], json!([0.0, 0.0]));
    }
}
