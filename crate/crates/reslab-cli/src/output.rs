//! Artifact output: stdout by default, atomic file replacement with `--out`.

use std::io::Write;
use std::path::Path;

use anyhow::Context;

/// Write the artifact to `path` through a sibling temp file and rename, so
/// an interrupted run never leaves a partial artifact; stdout when no path
/// is given.
pub fn write_artifact(path: Option<&Path>, artifact: &str) -> anyhow::Result<()> {
    let Some(path) = path else {
        print!("{artifact}");
        std::io::stdout().flush().context("flushing stdout")?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".reslab-out")
        .tempfile_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(artifact.as_bytes()).context("writing artifact")?;
    tmp.as_file().sync_all().context("syncing artifact")?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
