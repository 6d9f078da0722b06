//! Run report emitted to stderr after every command. Data outputs stay on
//! stdout / in files so they remain byte-deterministic; the report carries
//! the non-deterministic metadata (wall time) plus echoed inputs.

use serde::Serialize;
use serde_json::Value;

#[derive(Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub inputs: Value,
    pub outputs: Vec<String>,
    pub tolerances: Value,
    pub wall_ms: u128,
}

impl RunReport {
    pub fn emit(&self) {
        eprintln!("{}", serde_json::to_string(self).expect("report serializes"));
    }
}
