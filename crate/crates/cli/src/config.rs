//! Project configuration: the single JSON document that drives `design` and
//! `report`. Relative paths inside the config resolve against the config
//! file's own directory, and everything referenced is loaded and validated
//! up front so later stages never trip over a bad path.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sawfilt_core::{
    ApodizationWindow, CapacitanceModel, DesignTargets, DispersionRow, DispersionTable, GridSpacing,
};

use crate::error::{Context, Result, ShellError};
use crate::sha256_hex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub targets: DesignTargets,
    pub technology: Technology,
    pub apodization: Apodization,
    /// Sweep used while optimizing the design.
    pub grid: GridSpec,
    /// Where auxiliary artifacts (plot CSVs) land, relative to the config.
    pub output_dir: String,
}

/// Fabrication-side constants of the acoustic technology.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Technology {
    /// Electromechanical coupling used for synthesis, as a fraction.
    pub k2: f64,
    pub q_shunt: f64,
    pub q_series: f64,
    /// Static capacitance range the layout can realize, in farad. Also the
    /// seed range for the optimizer's capacitance search.
    pub c0_bounds_f: [f64; 2],
    /// Acoustic aperture range in μm.
    pub aperture_bounds_um: [f64; 2],
    pub capacitance: CapacitanceModel,
    /// Dispersion table CSV (lambda_um, f_s_hz, k2), path relative to the
    /// config file.
    pub dispersion_table: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Apodization {
    pub window: ApodizationWindow,
    /// Measured finger-count scale factor; when absent the analytic
    /// 1/mean-overlap value is used.
    pub calibration: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n: usize,
    pub spacing: GridSpacing,
}

/// A parsed config plus everything it references.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ProjectConfig,
    /// sha256 of the raw config bytes, stamped into outputs for provenance.
    pub sha256: String,
    pub dispersion: DispersionTable,
    /// Directory of the config file; relative paths resolve against it.
    pub base_dir: PathBuf,
}

impl ProjectConfig {
    pub fn validate(&self) -> Result<()> {
        self.targets.validate()?;
        let t = &self.technology;
        if !(t.k2 > 0.0 && t.k2 < 1.0) {
            return Err(ShellError(format!("coupling {} must be in (0, 1)", t.k2)));
        }
        for (name, q) in [("q_shunt", t.q_shunt), ("q_series", t.q_series)] {
            if !(q > 0.0) {
                return Err(ShellError(format!("{name} {q} must be > 0")));
            }
        }
        let [c_lo, c_hi] = t.c0_bounds_f;
        if !(c_lo.is_finite() && c_hi.is_finite() && 0.0 < c_lo && c_lo < c_hi) {
            return Err(ShellError(format!(
                "c0_bounds_f [{c_lo}, {c_hi}] must be positive and increasing"
            )));
        }
        let [a_lo, a_hi] = t.aperture_bounds_um;
        if !(a_lo.is_finite() && a_hi.is_finite() && 0.0 < a_lo && a_lo < a_hi) {
            return Err(ShellError(format!(
                "aperture_bounds_um [{a_lo}, {a_hi}] must be positive and increasing"
            )));
        }
        t.capacitance.validate()?;
        if t.dispersion_table.is_empty() {
            return Err(ShellError::new("dispersion_table path is empty"));
        }
        self.apodization.window.validate()?;
        if let Some(c) = self.apodization.calibration {
            if !(c.is_finite() && c > 0.0) {
                return Err(ShellError(format!(
                    "calibration factor {c} must be finite and > 0"
                )));
            }
        }
        let g = &self.grid;
        if !(g.f_start_hz.is_finite() && g.f_start_hz > 0.0 && g.f_start_hz < g.f_stop_hz) {
            return Err(ShellError(format!(
                "grid [{}, {}] Hz must be positive and increasing",
                g.f_start_hz, g.f_stop_hz
            )));
        }
        if g.n < 2 {
            return Err(ShellError(format!(
                "grid needs at least 2 points, got {}",
                g.n
            )));
        }
        if self.output_dir.is_empty() {
            return Err(ShellError::new("output_dir is empty"));
        }
        Ok(())
    }
}

/// Reads, validates, and hashes a config file, then loads the dispersion
/// table it points at.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = fs::read(path).context(&format!("cannot read {}", path.display()))?;
    let sha256 = sha256_hex(&bytes);
    let config: ProjectConfig =
        serde_json::from_slice(&bytes).context(&format!("{}", path.display()))?;
    config
        .validate()
        .map_err(|e| ShellError(format!("{}: {}", path.display(), e)))?;
    let base_dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let table_path = base_dir.join(&config.technology.dispersion_table);
    let table_text = fs::read_to_string(&table_path)
        .context(&format!("cannot read {}", table_path.display()))?;
    let dispersion = read_dispersion_csv(&table_text)
        .map_err(|e| ShellError(format!("{}: {}", table_path.display(), e)))?;
    Ok(LoadedConfig {
        config,
        sha256,
        dispersion,
        base_dir,
    })
}

/// Parses a dispersion table from CSV text: three comma-separated columns
/// (lambda_um, f_s_hz, k2), `#` comments, and an optional header row.
pub fn read_dispersion_csv(text: &str) -> Result<DispersionTable> {
    let mut rows = Vec::new();
    let mut saw_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if !saw_content && cols[0].parse::<f64>().is_err() {
            // header row
            saw_content = true;
            continue;
        }
        saw_content = true;
        if cols.len() != 3 {
            return Err(ShellError(format!(
                "line {line_no}: expected 3 comma-separated columns, got {}",
                cols.len()
            )));
        }
        let mut v = [0.0f64; 3];
        for (k, c) in cols.iter().enumerate() {
            v[k] = c
                .parse()
                .map_err(|_| ShellError(format!("line {line_no}: bad number {c:?}")))?;
        }
        rows.push(DispersionRow {
            lambda_um: v[0],
            f_s_hz: v[1],
            k2: v[2],
        });
    }
    Ok(DispersionTable::new(rows)?)
}
