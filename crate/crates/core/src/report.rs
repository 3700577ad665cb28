//! Persisted certification records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateReport {
    pub run_id: String,
    pub operation: String,
    pub inputs_digest: String,
    pub inputs: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub node_counts: BTreeMap<String, u64>,
    pub outputs: BTreeMap<String, Value>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the canonical JSON encoding of `inputs`.
pub fn digest_of(inputs: &Value) -> String {
    sha256_hex(serde_json::to_string(inputs).unwrap_or_default().as_bytes())
}

impl CertificateReport {
    pub fn new(operation: &str, inputs: impl Serialize) -> Self {
        let inputs = serde_json::to_value(inputs).unwrap_or(Value::Null);
        let inputs_digest = digest_of(&inputs);
        let run_id = sha256_hex(format!("{operation}:{inputs_digest}").as_bytes())[..16].to_string();
        Self {
            run_id,
            operation: operation.to_string(),
            inputs_digest,
            inputs,
            tolerances: BTreeMap::new(),
            node_counts: BTreeMap::new(),
            outputs: BTreeMap::new(),
            passed: true,
            seed: None,
        }
    }

    pub fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    pub fn nodes(mut self, key: &str, count: usize) -> Self {
        self.node_counts.insert(key.to_string(), count as u64);
        self
    }

    pub fn output(mut self, key: &str, value: impl Serialize) -> Self {
        self.outputs
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn passed(mut self, passed: bool) -> Self {
        self.passed = passed;
        self
    }

    pub fn output_f64(&self, key: &str) -> Option<f64> {
        self.outputs.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// On-disk layout: the deterministic report plus a wall-clock envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub report: CertificateReport,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix_ms: Option<u128>,
    pub tool_version: String,
}

impl Envelope {
    pub fn now() -> Self {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_millis());
        Self {
            created_unix_ms: created,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn write_report(path: impl AsRef<Path>, report: &CertificateReport) -> Result<()> {
    let file = ReportFile {
        report: report.clone(),
        envelope: Envelope::now(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

/// Accepts either a bare report or a [`ReportFile`].
pub fn read_report(path: impl AsRef<Path>) -> Result<CertificateReport> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    if value.get("report").is_some() {
        Ok(serde_json::from_value::<ReportFile>(value)?.report)
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_is_stable_under_reserialization() {
        let r = CertificateReport::new("certify-sector", json!({"theta": 0.5, "n": 3}))
            .tolerance("solve", 1e-10)
            .nodes("samples", 100)
            .output("k_hat", 1.25);
        let back = CertificateReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(digest_of(&back.inputs), r.inputs_digest);
        assert_eq!(back.to_json(), r.to_json());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = CertificateReport::new("power", json!({})).output("x", vec![1.0, 2.0]);
        write_report(&path, &r).unwrap();
        assert_eq!(read_report(&path).unwrap(), r);
    }
}
