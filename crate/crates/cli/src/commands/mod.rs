//! Subcommand implementations.

pub mod curvature;
pub mod simulate;
pub mod sweep;
pub mod transform;
pub mod verify;

use std::path::PathBuf;

/// Failure modes mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CmdError {
    /// exit 2
    Config(String),
    /// exit 1
    ChecksFailed(String),
    /// exit 3
    Runtime(String),
    /// exit 2
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) | CmdError::Io(_) => 2,
            CmdError::ChecksFailed(_) => 1,
            CmdError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Config(m)
            | CmdError::ChecksFailed(m)
            | CmdError::Runtime(m)
            | CmdError::Io(m) => m,
        }
    }
}

/// Shared invocation context.
pub struct Ctx {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Ctx {
    pub fn say(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub(crate) fn write_json<T: serde::Serialize>(
    ctx: &Ctx,
    name: &str,
    value: &T,
) -> Result<PathBuf, CmdError> {
    let path = ctx.out_path(name);
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CmdError::Io(format!("serializing {name}: {e}")))?;
    bytes.push(b'\n');
    crate::output::atomic_write(&path, &bytes)
        .map_err(|e| CmdError::Io(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}
