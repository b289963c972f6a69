//! Atomic output: files are written into a staging directory inside the
//! destination and renamed into place only once every file is complete.

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

const STAGE: &str = "output";

pub struct StagedOutput {
    dir: PathBuf,
    staging: PathBuf,
    files: Vec<String>,
    created_dir: bool,
    committed: bool,
}

impl StagedOutput {
    pub fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(STAGE, dir, e))?;
        let staging = dir.join(format!(".lhfi-staging-{}", std::process::id()));
        if staging.exists() {
            std::fs::remove_dir_all(&staging).map_err(|e| CliError::io(STAGE, &staging, e))?;
        }
        let out = Self { dir: dir.to_path_buf(), staging, files: Vec::new(), created_dir, committed: false };
        std::fs::create_dir(&out.staging).map_err(|e| CliError::io(STAGE, &out.staging, e))?;
        Ok(out)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.staging.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(STAGE, &path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Moves every staged file into the destination. If any rename fails,
    /// the files already moved are removed again.
    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut moved = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let (from, to) = (self.staging.join(name), self.dir.join(name));
            if let Err(e) = std::fs::rename(&from, &to) {
                for p in &moved {
                    let _ = std::fs::remove_file(p);
                }
                return Err(CliError::io(STAGE, &to, e));
            }
            moved.push(to);
        }
        self.committed = true;
        let _ = std::fs::remove_dir_all(&self.staging);
        Ok(moved)
    }
}

impl Drop for StagedOutput {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.staging);
        if !self.committed && self.created_dir {
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

/// CSV text from a header and rows of already-formatted fields.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::validation(STAGE, e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::validation(STAGE, e.to_string()))
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
