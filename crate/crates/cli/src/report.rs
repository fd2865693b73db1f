//! Deterministic JSON reports. Identical inputs and seed produce
//! byte-identical output: wall time goes to stderr and only enters the
//! report under `--timings`.

use std::collections::BTreeMap;

use busby_core::InvariantRecord;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub property: String,
    pub pass: bool,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<InvariantRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_level: Option<Vec<InvariantRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<Verdict>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl Report {
    pub fn new(command: String, inputs: Vec<InputDigest>) -> Self {
        Report {
            command,
            inputs,
            seed: None,
            tolerances: BTreeMap::new(),
            record: None,
            per_level: None,
            verdicts: None,
            wall_time_ms: None,
        }
    }

    pub fn emit(&self, pretty: bool) {
        let json = if pretty {
            serde_json::to_string_pretty(self)
        } else {
            serde_json::to_string(self)
        }
        .expect("report serialization cannot fail");
        // Tolerate a closed pipe (e.g. `busby ... | head`).
        use std::io::Write;
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        let _ = writeln!(lock, "{json}");
        let _ = lock.flush();
    }
}

pub fn digest(path: &str, bytes: &[u8]) -> InputDigest {
    use sha2::{Digest, Sha256};
    InputDigest {
        path: path.to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}
