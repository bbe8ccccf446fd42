pub mod bench;
pub mod classify;
pub mod gradcheck;
pub mod nystrom;
pub mod pool;
pub mod synth;

use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub(crate) fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
