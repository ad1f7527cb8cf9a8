//! Command implementations shared between the binary and the integration
//! tests. Each command writes its outputs under the configured directory and
//! returns the summary it serialized, so tests can assert on both.

pub mod angular;
pub mod evolve;
pub mod overlap;
pub mod rates;
pub mod run;
pub mod sweep;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub use angular::{angular_command, AngularSummary};
pub use evolve::{evolve_command, EvolveSummary};
pub use overlap::{overlap_command, OverlapSummary};
pub use rates::{rates_command, RatesSummary};
pub use run::{run_command, RunSummary};
pub use sweep::{sweep_command, SweepAggregate, SweepOutcome, TrialRecord};

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing summary")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub(crate) fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file =
        std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(std::io::BufWriter::new(file))
}

/// File-name fragment for a time value, e.g. `0.01` or `inf`.
pub(crate) fn time_label(t: f64) -> String {
    if t.is_infinite() {
        "inf".to_string()
    } else {
        format!("{t}")
    }
}

pub(crate) fn join(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
