use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Run record written next to every output. Wall time is kept out so that
/// repeated runs produce identical bytes.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config_hash: String,
    pub config: Value,
    pub outputs: Vec<String>,
    pub summary: Value,
}

pub fn config_value<T: Serialize>(config: &T) -> Result<Value, CliError> {
    serde_json::to_value(config).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn hash(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON value serializes");
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    denoise_core::io::write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub fn write(
    out_dir: &Path,
    command: &str,
    seed: u64,
    config: Value,
    outputs: Vec<String>,
    summary: Value,
) -> Result<(), CliError> {
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_hash: hash(&config),
        config,
        outputs,
        summary,
    };
    write_json(&out_dir.join("manifest.json"), &m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        let v: Value = serde_json::from_str(r#"{"b":1,"a":[1,2]}"#).unwrap();
        let w: Value = serde_json::from_str(r#"{"a":[1,2],"b":1}"#).unwrap();
        assert_eq!(hash(&v), hash(&w));
        assert!(hash(&v).starts_with("sha256:"));
        assert_eq!(hash(&v).len(), 7 + 64);
    }
}
