//! Atomic result writing. Files land under the output directory via a
//! temporary name plus rename, so a crashed run never leaves a torn file.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
        })
    }

    /// Write `content` to `name` atomically.
    pub fn write(&self, name: &str, content: &str) -> Result<PathBuf> {
        let final_path = self.dir.join(name);
        let tmp_path = self.dir.join(format!(".{name}.tmp"));
        {
            let mut tmp = std::fs::File::create(&tmp_path)
                .with_context(|| format!("cannot create {}", tmp_path.display()))?;
            tmp.write_all(content.as_bytes())
                .with_context(|| format!("cannot write {}", tmp_path.display()))?;
            tmp.sync_all().ok();
        }
        std::fs::rename(&tmp_path, &final_path)
            .with_context(|| format!("cannot move results into {}", final_path.display()))?;
        Ok(final_path)
    }
}

/// Render one CSV line; floats use the shortest round-trip form so output
/// bytes are stable across runs.
pub fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
