//! Third-order ladder filter construction, simulation, metric extraction,
//! and reference-matched optimization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mbvd::MbvdModel;
use crate::netcore::{
    abcd_of_series_admittance, abcd_of_shunt_admittance, abcd_to_s, cascade, AbcdResponse,
    FrequencyGrid, TwoPortResponse,
};
use crate::optim;

/// How a stage hangs in the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageRole {
    Shunt,
    Series,
}

/// An ordered ladder of resonator stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderTopology {
    pub stages: Vec<(StageRole, MbvdModel)>,
}

impl LadderTopology {
    pub fn new(stages: Vec<(StageRole, MbvdModel)>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidParameter(
                "ladder needs at least one stage".into(),
            ));
        }
        for (_, m) in &stages {
            m.validate()?;
        }
        Ok(Self { stages })
    }
}

/// The five-resonator ladder: shunt, series, shunt, series, shunt. The three
/// shunt stages share one model and the two series stages share the other.
pub fn canonical_ladder(shunt_model: MbvdModel, series_model: MbvdModel) -> LadderTopology {
    LadderTopology {
        stages: vec![
            (StageRole::Shunt, shunt_model.clone()),
            (StageRole::Series, series_model.clone()),
            (StageRole::Shunt, shunt_model.clone()),
            (StageRole::Series, series_model),
            (StageRole::Shunt, shunt_model),
        ],
    }
}

/// Cascades every stage's chain matrix and converts to scattering
/// parameters at `z_ref`.
pub fn simulate(t: &LadderTopology, grid: &FrequencyGrid, z_ref: f64) -> Result<TwoPortResponse> {
    if t.stages.is_empty() {
        return Err(Error::InvalidParameter(
            "ladder needs at least one stage".into(),
        ));
    }
    let mut chain = AbcdResponse::identity(grid.clone());
    for (role, model) in &t.stages {
        let y = model.admittance(grid, z_ref)?;
        let stage = match role {
            StageRole::Shunt => abcd_of_shunt_admittance(&y)?,
            StageRole::Series => abcd_of_series_admittance(&y)?,
        };
        chain = cascade(&chain, &stage)?;
    }
    abcd_to_s(&chain, z_ref)
}

/// What the filter must achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignTargets {
    /// Passband center in Hz.
    pub f_center: f64,
    /// Target 3-dB fractional bandwidth, in (0, 0.2).
    pub fbw_3db: f64,
    /// Reference impedance in ohm.
    pub z_ref: f64,
    /// Stopband intervals (f_lo, f_hi) in Hz, disjoint from the band.
    pub stopbands: Vec<(f64, f64)>,
    /// Minimum attenuation demanded over every stopband, in dB.
    pub min_rejection_db: f64,
}

impl DesignTargets {
    pub fn new(
        f_center: f64,
        fbw_3db: f64,
        z_ref: f64,
        stopbands: Vec<(f64, f64)>,
        min_rejection_db: f64,
    ) -> Result<Self> {
        let t = Self {
            f_center,
            fbw_3db,
            z_ref,
            stopbands,
            min_rejection_db,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_center.is_finite() && self.f_center > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "center frequency {} must be > 0",
                self.f_center
            )));
        }
        if !(self.fbw_3db > 0.0 && self.fbw_3db < 0.2) {
            return Err(Error::InvalidParameter(format!(
                "fractional bandwidth {} must be in (0, 0.2)",
                self.fbw_3db
            )));
        }
        if !(self.z_ref.is_finite() && self.z_ref > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference impedance {} must be > 0",
                self.z_ref
            )));
        }
        if !(self.min_rejection_db.is_finite() && self.min_rejection_db >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "minimum rejection {} dB must be >= 0",
                self.min_rejection_db
            )));
        }
        let band_lo = self.f_center * (1.0 - self.fbw_3db);
        let band_hi = self.f_center * (1.0 + self.fbw_3db);
        for &(lo, hi) in &self.stopbands {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "stopband ({lo}, {hi}) Hz is not an increasing positive interval"
                )));
            }
            if lo < band_hi && hi > band_lo {
                return Err(Error::InvalidParameter(format!(
                    "stopband ({lo}, {hi}) Hz overlaps the passband guard interval \
                     ({band_lo}, {band_hi}) Hz"
                )));
            }
        }
        Ok(())
    }
}

/// Scalar summary of a simulated filter response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterMetrics {
    /// Minimum insertion loss in dB (never negative).
    pub il_db: f64,
    /// Midpoint of the 3-dB band in Hz.
    pub f_center: f64,
    /// 3-dB bandwidth over f_center.
    pub fbw_3db: f64,
    /// Worst (smallest) attenuation over the declared stopbands, in dB;
    /// infinite when no stopband was declared.
    pub oob_rejection_db: f64,
    /// Largest in-band reflection, in dB.
    pub max_inband_s11_db: f64,
}

/// Reads the passband and stopband figures off a two-port response.
///
/// The 3-dB band is the contiguous interval around the |S21| peak where the
/// level stays within 3 dB of it; edges are located by linear interpolation
/// in (frequency, dB). Errors with "band not bracketed" when either edge
/// fails to cross inside the grid.
pub fn metrics(r: &TwoPortResponse, targets: &DesignTargets) -> Result<FilterMetrics> {
    targets.validate()?;
    let f = r.grid().points();
    let s21_db: Vec<f64> = r
        .samples()
        .iter()
        .map(|s| 20.0 * s.s21.norm().log10())
        .collect();

    let mut i_peak = 0;
    for (i, v) in s21_db.iter().enumerate() {
        if *v > s21_db[i_peak] {
            i_peak = i;
        }
    }
    let peak = s21_db[i_peak];
    if !peak.is_finite() {
        return Err(Error::BandNotBracketed);
    }
    let threshold = peak - 3.0;

    // walk outward from the peak to the first crossings below peak - 3 dB
    let mut f_lo = None;
    for i in (0..i_peak).rev() {
        if s21_db[i] < threshold {
            let t = (threshold - s21_db[i]) / (s21_db[i + 1] - s21_db[i]);
            f_lo = Some(f[i] + t * (f[i + 1] - f[i]));
            break;
        }
    }
    let mut f_hi = None;
    for i in i_peak + 1..f.len() {
        if s21_db[i] < threshold {
            let t = (threshold - s21_db[i - 1]) / (s21_db[i] - s21_db[i - 1]);
            f_hi = Some(f[i - 1] + t * (f[i] - f[i - 1]));
            break;
        }
    }
    let (f_lo, f_hi) = match (f_lo, f_hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::BandNotBracketed),
    };

    let f_center = 0.5 * (f_lo + f_hi);
    let fbw_3db = (f_hi - f_lo) / f_center;
    let il_db = (-peak).max(0.0);

    let mut oob_rejection_db = f64::INFINITY;
    for &(lo, hi) in &targets.stopbands {
        let mut covered = false;
        for (i, &fi) in f.iter().enumerate() {
            if fi >= lo && fi <= hi {
                covered = true;
                oob_rejection_db = oob_rejection_db.min(-s21_db[i]);
            }
        }
        if !covered {
            return Err(Error::StopbandNotCovered {
                f_lo_hz: lo,
                f_hi_hz: hi,
            });
        }
    }

    let mut max_inband_s11_db = f64::NEG_INFINITY;
    for (i, &fi) in f.iter().enumerate() {
        if fi >= f_lo && fi <= f_hi {
            max_inband_s11_db = max_inband_s11_db.max(20.0 * r.samples()[i].s11.norm().log10());
        }
    }

    Ok(FilterMetrics {
        il_db,
        f_center,
        fbw_3db,
        oob_rejection_db,
        max_inband_s11_db,
    })
}

/// Seeds the canonical ladder from technology figures: the series resonator
/// sits at the band center and the shunt resonator is detuned down so its
/// parallel resonance lands on the series resonance.
pub fn init_design(
    targets: &DesignTargets,
    k2: f64,
    q_shunt: f64,
    q_series: f64,
    c0_shunt: f64,
    c0_series: f64,
) -> Result<LadderTopology> {
    targets.validate()?;
    if !(k2 > 0.0 && k2 < 0.2) {
        return Err(Error::InvalidParameter(format!(
            "coupling {k2} must be in (0, 0.2)"
        )));
    }
    let series = MbvdModel::single_branch_from_figures(targets.f_center, q_series, k2, c0_series)?;
    let cm_over_c0 = 8.0 * k2 / (std::f64::consts::PI * std::f64::consts::PI);
    let f_s_shunt = targets.f_center / (1.0 + cm_over_c0).sqrt();
    let shunt = MbvdModel::single_branch_from_figures(f_s_shunt, q_shunt, k2, c0_shunt)?;
    Ok(canonical_ladder(shunt, series))
}

// Optimizer walls: detuning stays within ±5% and static capacitance within
// two decades of the seed, which is far beyond anything a sane ladder needs.
const MAX_DETUNE: f64 = 0.05;
const MAX_LN_C0_EXCURSION: f64 = 4.6;

/// Tunes the two-model ladder for the targets over four variables: both
/// static capacitances and both series-resonance detunings. Branch Q and
/// coupling stay fixed. The search is a deterministic derivative-free
/// simplex; the returned topology is never worse (by the cost below) than
/// the start.
///
/// cost = max(0, max in-band |S11| dB + 10) + il_db
///      + max(0, rejection shortfall) + 2·|fbw − target|/target
pub fn optimize(
    t0: &LadderTopology,
    targets: &DesignTargets,
    grid: &FrequencyGrid,
) -> Result<(LadderTopology, FilterMetrics)> {
    targets.validate()?;
    let (shunt0, series0) = two_model_structure(t0)?;

    // infeasible starts fail here, before any optimization
    let m0 = metrics(&simulate(t0, grid, targets.z_ref)?, targets)?;
    let cost_of = |m: &FilterMetrics| -> f64 {
        (m.max_inband_s11_db + 10.0).max(0.0)
            + m.il_db
            + (targets.min_rejection_db - m.oob_rejection_db).max(0.0)
            + 2.0 * (m.fbw_3db - targets.fbw_3db).abs() / targets.fbw_3db
    };

    let f_sh0 = shunt0.main_branch().series_resonance_hz();
    let f_se0 = series0.main_branch().series_resonance_hz();
    let x0 = [shunt0.c_0.ln(), series0.c_0.ln(), 0.0, 0.0];

    let build = |x: &[f64]| -> Result<LadderTopology> {
        if x[2].abs() >= MAX_DETUNE
            || x[3].abs() >= MAX_DETUNE
            || (x[0] - x0[0]).abs() >= MAX_LN_C0_EXCURSION
            || (x[1] - x0[1]).abs() >= MAX_LN_C0_EXCURSION
        {
            return Err(Error::OutOfRange {
                what: "optimizer variable",
                value: f64::NAN,
                lo: -MAX_DETUNE,
                hi: MAX_DETUNE,
            });
        }
        let shunt = retune_preserving_q(&shunt0.scale_c0(x[0].exp())?, f_sh0 * (1.0 + x[2]))?;
        let series = retune_preserving_q(&series0.scale_c0(x[1].exp())?, f_se0 * (1.0 + x[3]))?;
        Ok(canonical_ladder(shunt, series))
    };

    let cost = |x: &[f64]| -> f64 {
        let Ok(t) = build(x) else {
            return f64::INFINITY;
        };
        let Ok(r) = simulate(&t, grid, targets.z_ref) else {
            return f64::INFINITY;
        };
        let Ok(m) = metrics(&r, targets) else {
            return f64::INFINITY;
        };
        let c = cost_of(&m);
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    };

    let result = optim::minimize(
        cost,
        &x0,
        &optim::Options {
            max_iterations: 600,
            cost_tolerance: 1e-9,
            initial_steps: vec![0.2, 0.2, 0.004, 0.004],
        },
    );

    // the initial vertex is part of the simplex, so the best-found point can
    // only tie or beat the start; fall back explicitly if it somehow failed
    if result.cost > cost_of(&m0) {
        return Ok((t0.clone(), m0));
    }
    let best = build(&result.x)?;
    let best_metrics = metrics(&simulate(&best, grid, targets.z_ref)?, targets)?;
    Ok((best, best_metrics))
}

/// Rescales the main resonance to `f_target` while keeping every branch's
/// quality factor: inductances pick up the square of the ratio, resistances
/// the ratio itself.
fn retune_preserving_q(m: &MbvdModel, f_target: f64) -> Result<MbvdModel> {
    let ratio = m.main_branch().series_resonance_hz() / f_target;
    let mut out = m.scale_to_frequency(f_target)?;
    for b in &mut out.branches {
        b.r_m *= ratio;
    }
    Ok(out)
}

/// The optimizer's two models: the single model shared by every shunt stage
/// and the one shared by every series stage.
fn two_model_structure(t: &LadderTopology) -> Result<(MbvdModel, MbvdModel)> {
    let mut shunt: Option<&MbvdModel> = None;
    let mut series: Option<&MbvdModel> = None;
    for (role, m) in &t.stages {
        let slot = match role {
            StageRole::Shunt => &mut shunt,
            StageRole::Series => &mut series,
        };
        match slot {
            None => *slot = Some(m),
            Some(existing) if *existing == m => {}
            Some(_) => {
                return Err(Error::InvalidParameter(
                    "optimizer needs all stages of a role to share one model".into(),
                ))
            }
        }
    }
    match (shunt, series) {
        (Some(sh), Some(se)) => Ok((sh.clone(), se.clone())),
        _ => Err(Error::InvalidParameter(
            "optimizer needs at least one shunt and one series stage".into(),
        )),
    }
}
