use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

/// Writes every `(name, bytes)` pair under `dir`, each through a temporary file
/// renamed into place. Nothing is written unless all temporaries succeed.
pub fn write_atomic(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<Vec<PathBuf>, CliError> {
    let io = |what: &str, e: std::io::Error| CliError::io(format!("{what} {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(|e| io("cannot create output directory", e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io("cannot create temporary file in", e))?;
        tmp.write_all(bytes).map_err(|e| io("cannot write to", e))?;
        tmp.as_file().sync_all().map_err(|e| io("cannot sync file in", e))?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| CliError::io(format!("cannot write {}: {}", target.display(), e.error)))?;
        written.push(target);
    }
    Ok(written)
}
