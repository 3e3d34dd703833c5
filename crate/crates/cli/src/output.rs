//! Output plumbing: run manifests and RFC-4180 CSV writing with
//! shortest-round-trip float formatting, so reruns are bitwise identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::Failure;

/// A run directory with its manifest already persisted.
pub struct RunDir {
    pub dir: PathBuf,
}

impl RunDir {
    /// Create the output directory and write `manifest.json` describing the
    /// run: command, parsed config, master seed, arithmetic mode, package
    /// version and the hash over all of those. The manifest alone is enough
    /// to reproduce every output file.
    pub fn create(
        dir: &Path,
        command: &str,
        config: &serde_json::Value,
        seed: u64,
        mode: &str,
    ) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
        let identity = json!({
            "command": command,
            "config": config,
            "seed": seed,
            "mode": mode,
        });
        // serde_json maps are sorted, so this serialization is canonical.
        let canonical = serde_json::to_string(&identity).expect("serializable");
        let hash = hex(&Sha256::digest(canonical.as_bytes()));
        let manifest = json!({
            "command": command,
            "config": config,
            "seed": seed,
            "mode": mode,
            "package_version": env!("CARGO_PKG_VERSION"),
            "config_hash": hash,
        });
        let body = serde_json::to_string_pretty(&manifest).expect("serializable");
        std::fs::write(dir.join("manifest.json"), body + "\n")
            .map_err(|e| Failure::Run(format!("cannot write manifest: {e}")))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn write_text(&self, name: &str, contents: &str) -> Result<(), Failure> {
        std::fs::write(self.dir.join(name), contents)
            .map_err(|e| Failure::Run(format!("cannot write {name}: {e}")))
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
        let body = serde_json::to_string_pretty(value).expect("serializable");
        self.write_text(name, &(body + "\n"))
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// RFC-4180 CSV builder: CRLF line endings, mandatory header row, `.`
/// decimal separator via Rust's shortest-round-trip float formatting.
pub struct Csv {
    body: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut body = String::new();
        body.push_str(&header.join(","));
        body.push_str("\r\n");
        Self { body, columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "CSV row arity mismatch");
        self.body.push_str(&fields.join(","));
        self.body.push_str("\r\n");
    }

    pub fn finish(self) -> String {
        self.body
    }
}

/// Shortest-round-trip decimal rendering of a float.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x}")
    }
}
