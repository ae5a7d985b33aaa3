//! Deterministic file output: atomic writes and reproducible float
//! formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// 17 significant digits; round-trips every f64 and keeps reruns
/// byte-identical.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write through a temporary file in the target directory and rename, so a
/// killed process never leaves a truncated file under the target name.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp: PathBuf = {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".tmp.{}", std::process::id()));
        path.with_file_name(name)
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Assemble a CSV with '\n' endings and the reproducible float format.
pub fn csv_bytes(header: &[String], rows: &[Vec<f64>]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_float(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out.into_bytes()
}
