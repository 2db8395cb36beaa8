//! Per-run record of what each stage read, wrote and which seeds it drew.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tablescene::seed::digest_hex;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Master seed of the most recent seeded stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Arguments after the program name, exactly as given.
    pub command: Vec<String>,
    /// Directory the relative paths in `command` resolve against.
    pub cwd: PathBuf,
    pub seeds: BTreeMap<String, u64>,
    /// Every effective setting, defaults included.
    pub config: serde_json::Value,
    /// Path → SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigestMismatch {
    pub path: String,
    pub expected: String,
    /// `None` when the file is missing.
    pub actual: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    fn load_or_new(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                ..Default::default()
            })
        }
    }

    /// Output digests of `stage` that no longer match the files on disk.
    pub fn verify(&self, stage: &str) -> Result<Vec<DigestMismatch>> {
        let rec = self.stages.get(stage).with_context(|| format!("no stage {stage:?} in manifest"))?;
        Ok(rec
            .outputs
            .iter()
            .filter_map(|(p, expected)| {
                let actual = std::fs::read(rec.cwd.join(p)).ok().map(|b| digest_hex(&b));
                (actual.as_ref() != Some(expected)).then(|| DigestMismatch {
                    path: p.clone(),
                    expected: expected.clone(),
                    actual,
                })
            })
            .collect())
    }

    /// Recorded digest of a file, looked up by path relative to `base`.
    pub fn digest_of(&self, base: &Path, file: &Path) -> Option<&str> {
        self.stages.values().find_map(|rec| {
            rec.outputs
                .iter()
                .find(|(p, _)| same_file(&rec.cwd.join(p), &base.join(file)))
                .map(|(_, d)| d.as_str())
        })
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Collects one stage's record while it runs.
pub struct Stage {
    record: StageRecord,
    master: Option<u64>,
}

impl Stage {
    pub fn new(argv: &[String]) -> Result<Self> {
        Ok(Self {
            record: StageRecord {
                command: argv.to_vec(),
                cwd: std::env::current_dir()?,
                seeds: BTreeMap::new(),
                config: serde_json::Value::Null,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
            master: None,
        })
    }

    pub fn master_seed(&mut self, seed: u64) {
        self.master = Some(seed);
        self.record.seeds.insert("master".into(), seed);
    }

    pub fn seed(&mut self, label: &str, seed: u64) {
        self.record.seeds.insert(label.into(), seed);
    }

    pub fn config(&mut self, value: impl Serialize) -> Result<()> {
        self.record.config = serde_json::to_value(value)?;
        Ok(())
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.record.inputs.insert(path.display().to_string(), digest_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_string(&mut self, path: &Path) -> Result<String> {
        String::from_utf8(self.read(path)?).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.record.outputs.insert(path.display().to_string(), digest_hex(bytes));
        Ok(())
    }

    /// Merges the record into the manifest at `path` under `key`.
    pub fn finish(self, key: &str, path: &Path) -> Result<()> {
        let mut m = RunManifest::load_or_new(path)?;
        m.tool_version = env!("CARGO_PKG_VERSION").to_string();
        if self.master.is_some() {
            m.master_seed = self.master;
        }
        m.stages.insert(key.to_string(), self.record);
        write_atomic(path, (serde_json::to_string_pretty(&m)? + "\n").as_bytes())
    }
}

/// `explicit`, or `manifest.json` inside `dir`.
pub fn manifest_path(explicit: Option<&Path>, dir: &Path) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| dir.join(MANIFEST_FILE))
}

/// Directory holding `file`, `.` for a bare file name.
pub fn parent_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
