pub mod classify;
pub mod pdp;
pub mod report;
pub mod simulate;
pub mod train;
pub mod verify;

use std::path::{Path, PathBuf};

use crate::fail::{io_at, CliResult};

/// Create the output directory (once artifacts are about to be written).
pub fn ensure_out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_at(dir, e))
}

/// Write a JSON summary file.
pub fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    std::fs::write(path, text + "\n").map_err(|e| io_at(path, e))
}
