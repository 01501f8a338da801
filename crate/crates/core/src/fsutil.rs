//! Small filesystem helpers shared by the persistence and export code.

use std::fs;
use std::io;
use std::path::Path;

/// Writes a file atomically: the content goes to a temporary sibling first
/// and is renamed into place, so readers never observe a half-written file.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
