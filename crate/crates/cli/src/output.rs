//! Result files: CSV for tables, pretty JSON for reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

/// Shortest round-trip decimal, in exponent form below 1e-4 and from 1e15 in magnitude.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl Output {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::config(format!("output_dir {}: {e}", dir.display())))?;
        let probe = dir.join(".evikit-write-test");
        fs::write(&probe, b"").and_then(|_| fs::remove_file(&probe)).map_err(|e| CliError::config(format!("output_dir {} is not writable: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::config(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv<S: AsRef<str>>(&mut self, name: &str, header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let err = |e: csv::Error| CliError::config(format!("cannot write {name}: {e}"));
        w.write_record(header.iter().map(|h| h.as_ref())).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::config(format!("cannot write {name}: {e}")))?;
        self.write(name, &bytes)
    }
}
