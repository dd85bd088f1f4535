//! Run-directory management and artifact metadata.
//!
//! Every command writes into a fresh timestamped directory under the
//! configured output root; prior results are never overwritten. Artifacts
//! carry a metadata header (run_meta.json plus a `#` comment line atop each
//! CSV) sufficient to reproduce them.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct RunDir {
    pub path: PathBuf,
    meta_line: String,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_hash: String,
    seed: u64,
    created_utc: String,
    threads: usize,
}

impl RunDir {
    /// Creates `<root>/<command>-<timestamp>[ -k ]` and writes run_meta.json.
    pub fn create(root: &Path, command: &str, config_hash: u64, seed: u64) -> Result<Self> {
        let stamp = chrono::Utc::now().format("%Y%m%d-%H%M%S");
        let mut path = root.join(format!("{command}-{stamp}"));
        let mut attempt = 1;
        while path.exists() {
            attempt += 1;
            path = root.join(format!("{command}-{stamp}-{attempt}"));
        }
        std::fs::create_dir_all(&path)
            .with_context(|| format!("creating run directory {}", path.display()))?;
        let version = env!("CARGO_PKG_VERSION");
        let meta = RunMeta {
            tool: "passforge",
            version,
            command,
            config_hash: format!("{config_hash:#018x}"),
            seed,
            created_utc: chrono::Utc::now().to_rfc3339(),
            threads: rayon::current_num_threads(),
        };
        std::fs::write(
            path.join("run_meta.json"),
            serde_json::to_string_pretty(&meta)?,
        )?;
        let meta_line = format!(
            "# passforge v{version} cmd={command} config_hash={config_hash:#018x} seed={seed}"
        );
        Ok(Self { path, meta_line })
    }

    /// Opens a CSV in the run dir with the metadata comment and header row.
    pub fn csv(&self, name: &str, header: &str) -> Result<std::fs::File> {
        let mut file = std::fs::File::create(self.path.join(name))?;
        writeln!(file, "{}", self.meta_line)?;
        writeln!(file, "{header}")?;
        Ok(file)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        std::fs::write(
            self.path.join(name),
            serde_json::to_string_pretty(value)?,
        )?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.path.join(name), text)?;
        Ok(())
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}
