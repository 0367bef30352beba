use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::RunError;

/// Round-trip exact: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Splits a CSV written by [`OutputDir::write_csv`] into its `#` metadata and
/// the data section that follows.
pub fn data_section(text: &str) -> &str {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        offset += line.len();
    }
    &text[offset..]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub schema_version: u32,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Output directory that remembers what it wrote so a failed run can be
/// rolled back.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|e| RunError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| RunError::io(&path, e))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes `# key: value` metadata lines, then a header row and the data.
    pub fn write_csv<I>(
        &mut self,
        name: &str,
        metadata: &[(&str, String)],
        header: &[&str],
        rows: I,
    ) -> Result<(), RunError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut out = Vec::new();
        for (key, value) in metadata {
            out.extend_from_slice(format!("# {key}: {value}\n").as_bytes());
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let csv_err = |e: csv::Error| RunError::Runtime(format!("{name}: {e}"));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        let out = w
            .into_inner()
            .map_err(|e| RunError::Runtime(format!("{name}: {e}")))?;
        self.write(name, &out)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| RunError::Runtime(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest listing every file produced so far.
    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest, RunError> {
        manifest.files = self.files.clone();
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| RunError::Runtime(format!("manifest: {e}")))?;
        text.push('\n');
        let path = self.root.join(MANIFEST_NAME);
        if let Err(e) = fs::write(&path, text) {
            self.abort();
            return Err(RunError::io(&path, e));
        }
        Ok(manifest)
    }

    /// Removes everything this run wrote.
    pub fn abort(self) {
        for f in &self.files {
            let path = self.root.join(&f.name);
            if let Err(e) = fs::remove_file(&path) {
                log::warn!("could not remove partial output {}: {e}", path.display());
            }
        }
        let _ = fs::remove_file(self.root.join(MANIFEST_NAME));
    }
}
