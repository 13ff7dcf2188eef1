//! On-disk documents the CLI exchanges between subcommands, and atomic file
//! output. Every writer goes through a temp-file-then-rename so a crash or
//! error never leaves a half-written artifact behind.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sawfilt_core::{ApodizationWindow, DesignTargets, FilterMetrics, LadderTopology, StageRole};

use crate::error::{Context, Result, ShellError};

pub const TOOL_NAME: &str = "sawfilt";

/// Everything `design` decides: the electrical ladder, its predicted
/// metrics, and the physical plan for each distinct resonator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignDocument {
    pub tool: String,
    /// sha256 of the config file that produced this design.
    pub config_sha256: String,
    pub targets: DesignTargets,
    pub topology: LadderTopology,
    pub metrics: FilterMetrics,
    pub resonators: Vec<ResonatorPlan>,
}

/// Physical realization of one resonator model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonatorPlan {
    pub role: StageRole,
    pub f_s_hz: f64,
    /// IDT period from the dispersion table, in μm.
    pub lambda_um: f64,
    /// Coupling the table predicts at that period.
    pub k2_at_lambda: f64,
    /// Static capacitance the electrical design asked for, in farad.
    pub c0_target_f: f64,
    /// What the integer electrode count actually realizes.
    pub c0_realized_f: f64,
    pub aperture_um: f64,
    /// Electrode count of the uniform-overlap equivalent.
    pub n_e_conventional: u32,
    /// Electrode count after apodization scaling.
    pub n_e_apodized: u32,
    pub window: ApodizationWindow,
}

/// Output of `report`: the measured metrics plus provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub tool: String,
    pub config_sha256: String,
    pub metrics: FilterMetrics,
}

/// Writes bytes to `path` atomically: the content lands in a temp file in
/// the same directory and is renamed over the target only when complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)
        .context(&format!("cannot create directory {}", parent.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&parent)
        .context(&format!("cannot create temp file in {}", parent.display()))?;
    tmp.write_all(bytes)
        .context(&format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| ShellError(format!("cannot write {}: {}", path.display(), e)))?;
    Ok(())
}

/// Serializes a document as pretty JSON (stable field order, trailing
/// newline) and writes it atomically.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing output")?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).context(&format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).context(&format!("{}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
    }

    #[test]
    fn atomic_write_creates_missing_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/out.txt");
        write_atomic(&path, b"x").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"x");
    }

    #[test]
    fn json_documents_round_trip_bit_exactly() {
        // awkward values on purpose: full-mantissa floats must survive the
        // text round trip bit for bit
        let m = MetricsDocument {
            tool: TOOL_NAME.into(),
            config_sha256: "deadbeef".into(),
            metrics: sawfilt_core::FilterMetrics {
                il_db: std::f64::consts::LN_2,
                f_center: 4.3e9 * (1.0 + 1e-13),
                fbw_3db: 0.0324 * (1.0 + f64::EPSILON),
                oob_rejection_db: 17.5,
                max_inband_s11_db: -12.75,
            },
        };
        let text = serde_json::to_string_pretty(&m).unwrap();
        let back: MetricsDocument = serde_json::from_str(&text).unwrap();
        // serde_json prints shortest-round-trip floats, so this is exact
        assert_eq!(m.metrics.il_db.to_bits(), back.metrics.il_db.to_bits());
        assert_eq!(
            m.metrics.f_center.to_bits(),
            back.metrics.f_center.to_bits()
        );
        let again = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, again);
    }
}
