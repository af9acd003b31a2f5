use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// SHA-256 of `blob <len>\0<bytes>`, hex encoded.
pub fn git_style_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn csv_bytes<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r.as_ref()).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s.into_bytes()
}

/// Collects the files of one command and its manifest.
pub struct RunOutput {
    dir: PathBuf,
    command: String,
    config: RunConfig,
    files: Vec<(String, String)>,
    extra: Map<String, Value>,
}

impl RunOutput {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            dir: config.out_dir(),
            command: command.to_string(),
            config: config.clone(),
            files: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.files.push((name.to_string(), git_style_hash(bytes)));
        Ok(path)
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        self.extra.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serialisable"),
        );
    }

    /// Writes `manifest.json`; `wall_time_s` is its only non-reproducible field.
    pub fn finish(self, wall_time_s: f64) -> Result<(), CliError> {
        let config_json = self.config.canonical_json();
        let mut m = Map::new();
        m.insert(
            "tool".into(),
            format!("procmat {}", env!("CARGO_PKG_VERSION")).into(),
        );
        m.insert("command".into(), self.command.clone().into());
        m.insert(
            "config".into(),
            serde_json::from_str(&config_json).expect("valid json"),
        );
        m.insert(
            "config_hash".into(),
            git_style_hash(config_json.as_bytes()).into(),
        );
        if let Ok(hz) = self.config.params_hz() {
            m.insert(
                "params_hz".into(),
                serde_json::to_value(hz).expect("serialisable"),
            );
            m.insert(
                "params_rad_s".into(),
                serde_json::to_value(hz.to_rad()).expect("serialisable"),
            );
        }
        m.insert("base_seed".into(), self.config.base_seed.into());
        m.insert("n_traj".into(), self.config.n_traj.into());
        let files: Map<String, Value> = self
            .files
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect();
        m.insert("outputs".into(), Value::Object(files));
        for (k, v) in self.extra {
            m.insert(k, v);
        }
        m.insert("wall_time_s".into(), wall_time_s.into());
        write_atomic(
            &self.dir.join("manifest.json"),
            &json_bytes(&Value::Object(m)),
        )
    }
}
