//! Artifact writing: atomic files stamped with the config hash and version.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const OUT_DIR_ENV: &str = "SIGMAK_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "sigmak-out";

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, config_sha256: String, seed: u64) -> Self {
        Self { tool: "sigmak", version: env!("CARGO_PKG_VERSION"), command: command.into(), config_sha256, seed }
    }

    fn csv_line(&self) -> String {
        format!("# {} {} {} config_sha256={} seed={}\n", self.tool, self.version, self.command, self.config_sha256, self.seed)
    }
}

pub struct Artifacts {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl Artifacts {
    /// The env override wins over the config value.
    pub fn new(config_dir: Option<&Path>, meta: Meta) -> Result<Self> {
        let dir = match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => config_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, meta, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write_atomic(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path).with_context(|| format!("renaming onto {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `{"meta": ..., <body fields>}` pretty-printed.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<PathBuf> {
        let v = self.stamp(serde_json::to_value(body)?);
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        self.write_atomic(name, s.as_bytes())
    }

    /// One stamped object per line.
    pub fn json_lines(&mut self, name: &str, rows: &[Value]) -> Result<PathBuf> {
        let mut s = String::new();
        for r in rows {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        self.write_atomic(name, s.as_bytes())
    }

    /// CSV produced by `fill`, preceded by a comment line with the metadata.
    pub fn csv<F>(&mut self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = self.meta.csv_line().into_bytes();
        fill(&mut buf)?;
        self.write_atomic(name, &buf)
    }

    pub fn stamp(&self, body: Value) -> Value {
        let meta = serde_json::to_value(&self.meta).expect("meta serializes");
        match body {
            Value::Object(mut m) => {
                m.insert("meta".into(), meta);
                Value::Object(m)
            }
            other => json!({ "meta": meta, "data": other }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(Some(dir.path()), Meta::new("test", "ab".into(), 3)).unwrap();
        let p = a.json("x.json", &json!({"v": 1.5})).unwrap();
        let v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(v["meta"]["config_sha256"], "ab");
        assert_eq!(v["v"], 1.5);
        let p = a.csv("y.csv", |w| writeln!(w, "a,b")).unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert!(text.starts_with("# sigmak"));
        assert!(!dir.path().join(".y.csv.tmp").exists());
    }
}
