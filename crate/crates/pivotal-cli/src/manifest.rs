//! The run manifest echoed into every output file: everything needed to
//! reproduce the output byte for byte. Volatile context (wall-clock time,
//! thread count) is logged to stderr instead, so reruns stay identical.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut manifest = RunManifest { entries: Vec::new() };
        manifest.push("command", command);
        manifest.push("version", env!("CARGO_PKG_VERSION"));
        manifest
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_owned(), value.to_string()));
    }

    pub fn push_path(&mut self, key: &str, path: &Path) {
        self.push(key, path.display());
    }

    fn header(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.entries {
            writeln!(out, "# {key} = {value}").expect("string write");
        }
        out
    }

    /// Create the output file with the manifest as leading comment lines,
    /// then append the CSV `header` row; rows follow through the writer.
    pub fn create_csv(&self, path: &Path, header: &str) -> Result<impl Write, CliError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(self.header().as_bytes())?;
        writeln!(file, "{header}")?;
        Ok(file)
    }

    /// Stderr note with the volatile context (not part of the output).
    pub fn log(&self) {
        let when = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        eprintln!(
            "pivotal: {} (unix time {when}, {} threads)",
            self.entries
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" "),
            rayon::current_num_threads(),
        );
    }
}

/// Fixed-precision decimal with '.' separator, locale-independent.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}
