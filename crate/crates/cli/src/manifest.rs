//! Run manifests: enough to re-execute a command and check its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use wiretap_core::channel::SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> std::io::Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_hex(&fs::read(path)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name, with absolute paths.
    pub args: Vec<String>,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            parameters: Value::Null,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_seconds: 0.0,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Flags whose value is a file path or an output prefix.
pub const PATH_FLAGS: [&str; 6] = ["--channel", "--config", "--joint", "--game", "--params", "--out"];

/// Rewrites path-valued flags to absolute paths and drops `--threads`,
/// which never affects outputs.
pub fn normalize_args(args: &[String]) -> Vec<String> {
    let cwd = std::env::current_dir().unwrap_or_default();
    let abs = |v: &str| -> String {
        let p = Path::new(v);
        if p.is_absolute() {
            v.to_string()
        } else {
            cwd.join(p).to_string_lossy().into_owned()
        }
    };
    let mut out = Vec::with_capacity(args.len());
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if a == "--threads" {
            i += 2;
            continue;
        }
        if a.starts_with("--threads=") {
            i += 1;
            continue;
        }
        if let Some((flag, value)) = a.split_once('=') {
            if PATH_FLAGS.contains(&flag) {
                out.push(format!("{flag}={}", abs(value)));
                i += 1;
                continue;
            }
        }
        out.push(a.clone());
        if PATH_FLAGS.contains(&a.as_str()) && i + 1 < args.len() {
            out.push(abs(&args[i + 1]));
            i += 2;
            continue;
        }
        i += 1;
    }
    out
}

/// `args` with the value of `--out` replaced.
pub fn replace_out(args: &[String], prefix: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--out" {
            out.push("--out".to_string());
            out.push(prefix.to_string());
            i += 2;
        } else if args[i].starts_with("--out=") {
            out.push(format!("--out={prefix}"));
            i += 1;
        } else {
            out.push(args[i].clone());
            i += 1;
        }
    }
    out
}
