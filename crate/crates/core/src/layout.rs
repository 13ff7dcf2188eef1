//! Physical dimensioning: dispersion-table period selection, apodization
//! windows and their mean electrode overlap, finger-count scaling that
//! preserves static capacitance, and C0-to-geometry conversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transducer apodization profile. Positions are normalized so the
/// electrodes span x ∈ [−a, a] for the triangular window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ApodizationWindow {
    Uniform,
    Bartlett { a: f64 },
}

impl ApodizationWindow {
    pub fn validate(&self) -> Result<()> {
        if let ApodizationWindow::Bartlett { a } = self {
            if !(a.is_finite() && *a > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "window half-width {a} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }
}

/// Overlap fraction at normalized position `x`: 1 for the uniform window,
/// 1 − |x/a| (clamped to [0, 1]) for the triangular one. Positions beyond
/// the electrode extent of a triangular window are an error.
pub fn window_value(w: &ApodizationWindow, x: f64) -> Result<f64> {
    w.validate()?;
    match *w {
        ApodizationWindow::Uniform => Ok(1.0),
        ApodizationWindow::Bartlett { a } => {
            if x.abs() > a {
                Err(Error::WindowDomain { x, a })
            } else {
                Ok((1.0 - (x / a).abs()).clamp(0.0, 1.0))
            }
        }
    }
}

/// Mean of the window over the electrode extent: 1 for uniform, 1/2 for the
/// triangular window (computed by adaptive quadrature to 1e-9 absolute, one
/// panel per linear flank so the kink at the center costs no accuracy).
pub fn mean_overlap(w: &ApodizationWindow) -> Result<f64> {
    w.validate()?;
    match *w {
        ApodizationWindow::Uniform => Ok(1.0),
        ApodizationWindow::Bartlett { a } => {
            let f = |x: f64| (1.0 - (x / a).abs()).clamp(0.0, 1.0);
            let area = adaptive_simpson(&f, -a, 0.0, 0.5e-9 * a)
                + adaptive_simpson(&f, 0.0, a, 0.5e-9 * a);
            Ok(area / (2.0 * a))
        }
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, mid: f64, hi: f64) -> f64 {
        (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        lo: f64,
        mid: f64,
        hi: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lmid = 0.5 * (lo + mid);
        let rmid = 0.5 * (mid + hi);
        let left = simpson(f, lo, lmid, mid);
        let right = simpson(f, mid, rmid, hi);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, lo, lmid, mid, left, 0.5 * tol, depth - 1)
                + recurse(f, mid, rmid, hi, right, 0.5 * tol, depth - 1)
        }
    }
    let mid = 0.5 * (lo + hi);
    recurse(f, lo, mid, hi, simpson(f, lo, mid, hi), tol, 48)
}

/// Rescales a conventional (uniform-window) electrode count so the apodized
/// transducer keeps the same static capacitance. The factor defaults to
/// 1/mean_overlap of the window; an explicit calibration factor overrides
/// it. Rounding is to the nearest integer, ties away from zero.
pub fn scale_fingers(
    n_e_conv: u32,
    w: &ApodizationWindow,
    calibration: Option<f64>,
) -> Result<u32> {
    if n_e_conv < 2 {
        return Err(Error::InvalidParameter(format!(
            "electrode count {n_e_conv} must be at least 2"
        )));
    }
    let factor = match calibration {
        Some(c) => {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "calibration factor {c} must be finite and > 0"
                )));
            }
            c
        }
        None => 1.0 / mean_overlap(w)?,
    };
    Ok((n_e_conv as f64 * factor).round() as u32)
}

/// Measured dispersion of the technology: period, series resonance, and
/// coupling, one row per simulated or measured period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionTable {
    rows: Vec<DispersionRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    /// IDT period in μm.
    pub lambda_um: f64,
    /// Series resonance at that period, in Hz.
    pub f_s_hz: f64,
    /// Coupling coefficient at that period (fraction).
    pub k2: f64,
}

impl DispersionTable {
    pub fn new(rows: Vec<DispersionRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "dispersion table needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        for r in &rows {
            if !(r.lambda_um.is_finite() && r.lambda_um > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "period {} um must be finite and > 0",
                    r.lambda_um
                )));
            }
            if !(r.f_s_hz.is_finite() && r.f_s_hz > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "resonance {} Hz must be finite and > 0",
                    r.f_s_hz
                )));
            }
            if !(r.k2.is_finite() && r.k2 > 0.0 && r.k2 < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "coupling {} must be in (0, 1)",
                    r.k2
                )));
            }
        }
        for pair in rows.windows(2) {
            if pair[1].lambda_um <= pair[0].lambda_um {
                return Err(Error::InvalidParameter(format!(
                    "periods must strictly increase: {} then {}",
                    pair[0].lambda_um, pair[1].lambda_um
                )));
            }
            if pair[1].f_s_hz >= pair[0].f_s_hz {
                return Err(Error::InvalidParameter(format!(
                    "resonance must strictly decrease with period: {} Hz then {} Hz",
                    pair[0].f_s_hz, pair[1].f_s_hz
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[DispersionRow] {
        &self.rows
    }
}

/// Picks the IDT period whose series resonance hits `f_target`, by monotone
/// piecewise-linear interpolation of period against resonance; the coupling
/// is interpolated against period inside the same segment. No extrapolation:
/// a target outside the table's resonance range is an error.
pub fn select_period(d: &DispersionTable, f_target: f64) -> Result<(f64, f64)> {
    let rows = d.rows();
    let f_hi = rows[0].f_s_hz;
    let f_lo = rows[rows.len() - 1].f_s_hz;
    if !(f_target >= f_lo && f_target <= f_hi) {
        return Err(Error::OutOfRange {
            what: "target frequency in Hz",
            value: f_target,
            lo: f_lo,
            hi: f_hi,
        });
    }
    for pair in rows.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if f_target <= a.f_s_hz && f_target >= b.f_s_hz {
            if f_target == a.f_s_hz {
                return Ok((a.lambda_um, a.k2));
            }
            if f_target == b.f_s_hz {
                return Ok((b.lambda_um, b.k2));
            }
            let t = (f_target - a.f_s_hz) / (b.f_s_hz - a.f_s_hz);
            let lambda = a.lambda_um + t * (b.lambda_um - a.lambda_um);
            let u = (lambda - a.lambda_um) / (b.lambda_um - a.lambda_um);
            let k2 = a.k2 + u * (b.k2 - a.k2);
            return Ok((lambda, k2));
        }
    }
    unreachable!("target inside range always falls in a segment");
}

/// Static capacitance per electrode pair per micrometer of overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceModel {
    pub c_per_pair_per_um: f64,
}

impl CapacitanceModel {
    pub fn new(c_per_pair_per_um: f64) -> Result<Self> {
        let m = Self { c_per_pair_per_um };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_per_pair_per_um.is_finite() && self.c_per_pair_per_um > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pair capacitance {} F/um must be finite and > 0",
                self.c_per_pair_per_um
            )));
        }
        Ok(())
    }

    /// Static capacitance of `n_e` electrodes at aperture `aperture_um`
    /// under window `w`: (n_e − 1) pairs, each seeing the mean overlap.
    pub fn c0_of(&self, n_e: u32, aperture_um: f64, w: &ApodizationWindow) -> Result<f64> {
        self.validate()?;
        if n_e < 2 {
            return Err(Error::InvalidParameter(format!(
                "electrode count {n_e} must be at least 2"
            )));
        }
        if !(aperture_um.is_finite() && aperture_um > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "aperture {aperture_um} um must be finite and > 0"
            )));
        }
        Ok((n_e - 1) as f64 * self.c_per_pair_per_um * aperture_um * mean_overlap(w)?)
    }
}

/// The geometry of one resonator on the die.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorLayout {
    /// IDT period in μm.
    pub lambda_um: f64,
    /// Acoustic aperture in μm.
    pub aperture_um: f64,
    /// Electrode count.
    pub n_e: u32,
    pub window: ApodizationWindow,
    /// Static capacitance this geometry realizes, in farad.
    pub c0: f64,
}

// Acceptable relative gap between requested and realized C0.
const C0_TOLERANCE: f64 = 0.02;

/// Converts a target static capacitance into electrode count and aperture at
/// the given period. The electrode count is the integer whose exact-fit
/// aperture lands closest to the midpoint of `l_bounds_um`; the aperture is
/// then solved exactly (clamped into bounds), and the achieved capacitance
/// must come out within 2% of the target, otherwise the error reports the
/// nearest achievable value.
pub fn dimension_from_c0(
    c0_target: f64,
    lambda_um: f64,
    cm: &CapacitanceModel,
    w: &ApodizationWindow,
    l_bounds_um: (f64, f64),
) -> Result<ResonatorLayout> {
    cm.validate()?;
    w.validate()?;
    if !(c0_target.is_finite() && c0_target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target capacitance {c0_target} F must be finite and > 0"
        )));
    }
    if !(lambda_um.is_finite() && lambda_um > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "period {lambda_um} um must be finite and > 0"
        )));
    }
    let (l_lo, l_hi) = l_bounds_um;
    if !(l_lo.is_finite() && l_hi.is_finite() && 0.0 < l_lo && l_lo <= l_hi) {
        return Err(Error::InvalidParameter(format!(
            "aperture bounds ({l_lo}, {l_hi}) um must be positive and ordered"
        )));
    }

    let mean = mean_overlap(w)?;
    let per_pair_at = |l: f64| cm.c_per_pair_per_um * l * mean;
    // real-valued pair count needed at a given aperture
    let pairs_at = |l: f64| c0_target / per_pair_at(l);
    let exact_aperture = |pairs: u32| c0_target / (pairs as f64 * cm.c_per_pair_per_um * mean);

    let l_mid = 0.5 * (l_lo + l_hi);
    // integer pair counts whose exact-fit aperture stays inside the bounds
    // (the 1e-9 slack forgives last-ulp rounding at the boundary)
    let lo_int = ((pairs_at(l_hi) - 1e-9).ceil().max(1.0)) as u64;
    let hi_int = (pairs_at(l_lo) + 1e-9).floor() as u64;

    let mut candidates: Vec<u32> = if lo_int <= hi_int {
        // exact fits exist; the one nearest the midpoint wins
        let ideal = pairs_at(l_mid);
        let mut c: Vec<u64> = vec![
            lo_int,
            hi_int,
            (ideal.floor() as u64).clamp(lo_int, hi_int),
            (ideal.ceil() as u64).clamp(lo_int, hi_int),
        ];
        c.sort_unstable();
        c.dedup();
        c.into_iter().map(|p| p as u32).collect()
    } else {
        // no exact fit: evaluate the integers flanking the feasible edge
        let mut c: Vec<u64> = vec![
            (pairs_at(l_lo).floor() as u64).max(1),
            pairs_at(l_lo).ceil() as u64,
            (pairs_at(l_hi).floor() as u64).max(1),
            pairs_at(l_hi).ceil() as u64,
        ];
        c.retain(|&p| p >= 1);
        c.sort_unstable();
        c.dedup();
        c.into_iter().map(|p| p as u32).collect()
    };
    candidates.retain(|&p| p < u32::MAX - 1);
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no electrode count can approach {c0_target} F within apertures \
             ({l_lo}, {l_hi}) um"
        )));
    }

    let mut best: Option<(ResonatorLayout, f64, f64)> = None; // layout, |c0 err|, |L − mid|
    for pairs in candidates {
        let aperture = exact_aperture(pairs).clamp(l_lo, l_hi);
        let n_e = pairs + 1;
        let achieved = cm.c0_of(n_e, aperture, w)?;
        let c0_err = (achieved - c0_target).abs();
        let mid_dist = (aperture - l_mid).abs();
        let candidate = (
            ResonatorLayout {
                lambda_um,
                aperture_um: aperture,
                n_e,
                window: *w,
                c0: achieved,
            },
            c0_err,
            mid_dist,
        );
        best = match best {
            None => Some(candidate),
            Some(b) => {
                // prefer smaller capacitance error; break ties toward the
                // aperture midpoint
                if (candidate.1, candidate.2) < (b.1, b.2) {
                    Some(candidate)
                } else {
                    Some(b)
                }
            }
        };
    }

    let (layout, c0_err, _) = best.expect("at least one candidate was evaluated");
    if c0_err <= C0_TOLERANCE * c0_target {
        Ok(layout)
    } else {
        Err(Error::DimensionOutOfReach {
            target_c0: c0_target,
            nearest_c0: layout.c0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bartlett() -> ApodizationWindow {
        ApodizationWindow::Bartlett { a: 0.5 }
    }

    fn sample_table() -> DispersionTable {
        // anchored so a 0.90 um period resonates at 4.35 GHz
        let v = 3915.0; // m/s
        let rows = [0.80, 0.85, 0.90, 0.95, 1.00]
            .iter()
            .zip([0.043, 0.044, 0.045, 0.046, 0.047])
            .map(|(&lambda, k2)| DispersionRow {
                lambda_um: lambda,
                f_s_hz: v / (lambda * 1e-6),
                k2,
            })
            .collect();
        DispersionTable::new(rows).unwrap()
    }

    #[test]
    fn window_samples() {
        let w = bartlett();
        assert_eq!(window_value(&w, 0.0).unwrap(), 1.0);
        assert_eq!(window_value(&w, 0.5).unwrap(), 0.0);
        assert_eq!(window_value(&w, -0.5).unwrap(), 0.0);
        assert_eq!(window_value(&w, 0.25).unwrap(), 0.5);
        assert_eq!(
            window_value(&ApodizationWindow::Uniform, 123.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn window_is_even() {
        let w = ApodizationWindow::Bartlett { a: 0.73 };
        for x in [0.0, 0.1, 0.25, 0.5, 0.72, 0.73] {
            assert_eq!(window_value(&w, x).unwrap(), window_value(&w, -x).unwrap());
        }
    }

    #[test]
    fn window_rejects_positions_beyond_extent() {
        match window_value(&bartlett(), 0.6) {
            Err(Error::WindowDomain { x, a }) => {
                assert_eq!(x, 0.6);
                assert_eq!(a, 0.5);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn mean_overlap_values() {
        assert_eq!(mean_overlap(&ApodizationWindow::Uniform).unwrap(), 1.0);
        for a in [0.5, 1.0, 2.3, 17.0] {
            let m = mean_overlap(&ApodizationWindow::Bartlett { a }).unwrap();
            assert!((m - 0.5).abs() < 1e-9, "a = {a}: mean {m}");
            assert!(m <= 1.0);
        }
    }

    #[test]
    fn finger_scaling_matches_design_table() {
        let w = bartlett();
        // identity for the uniform window
        assert_eq!(
            scale_fingers(39, &ApodizationWindow::Uniform, None).unwrap(),
            39
        );
        // analytic overlap argument doubles the count
        assert_eq!(scale_fingers(39, &w, None).unwrap(), 78);
        assert_eq!(scale_fingers(29, &w, None).unwrap(), 58);
        // calibrated factor reproduces the fabricated design
        assert_eq!(scale_fingers(39, &w, Some(2.37)).unwrap(), 92);
        assert_eq!(scale_fingers(29, &w, Some(2.37)).unwrap(), 69);
    }

    #[test]
    fn finger_scaling_rejects_bad_inputs() {
        assert!(scale_fingers(1, &bartlett(), None).is_err());
        assert!(scale_fingers(39, &bartlett(), Some(0.0)).is_err());
        assert!(scale_fingers(39, &bartlett(), Some(-1.0)).is_err());
    }

    #[test]
    fn period_selection_hits_nodes_and_midpoints() {
        let table = sample_table();
        let (lambda, k2) = select_period(&table, 4.35e9).unwrap();
        assert_eq!(lambda, 0.90);
        assert_eq!(k2, 0.045);

        // halfway in f_s between two rows lands between their periods
        let rows = table.rows();
        let f_mid = 0.5 * (rows[2].f_s_hz + rows[3].f_s_hz);
        let (lambda, k2) = select_period(&table, f_mid).unwrap();
        assert_relative_eq!(lambda, 0.925, max_relative = 1e-12);
        assert!(k2 > 0.045 && k2 < 0.046);
    }

    #[test]
    fn period_selection_is_monotone() {
        let table = sample_table();
        let rows = table.rows();
        let f_lo = rows[rows.len() - 1].f_s_hz;
        let f_hi = rows[0].f_s_hz;
        let mut prev_lambda = f64::INFINITY;
        for i in 0..200 {
            let f = f_lo + (f_hi - f_lo) * i as f64 / 199.0;
            let (lambda, _) = select_period(&table, f).unwrap();
            assert!(
                lambda <= prev_lambda,
                "lambda grew with frequency at {f} Hz"
            );
            prev_lambda = lambda;
        }
    }

    #[test]
    fn period_selection_refuses_extrapolation() {
        let table = sample_table();
        assert!(select_period(&table, 5.2e9).is_err());
        assert!(select_period(&table, 3.0e9).is_err());
        let rows = table.rows();
        assert!(select_period(&table, rows[0].f_s_hz).is_ok());
        assert!(select_period(&table, rows[rows.len() - 1].f_s_hz).is_ok());
    }

    #[test]
    fn table_validation() {
        let good = sample_table();
        assert_eq!(good.rows().len(), 5);
        // resonance must fall with period
        let bad = DispersionTable::new(vec![
            DispersionRow {
                lambda_um: 0.9,
                f_s_hz: 4.0e9,
                k2: 0.045,
            },
            DispersionRow {
                lambda_um: 1.0,
                f_s_hz: 4.1e9,
                k2: 0.045,
            },
        ]);
        assert!(bad.is_err());
        let short = DispersionTable::new(vec![DispersionRow {
            lambda_um: 0.9,
            f_s_hz: 4.0e9,
            k2: 0.045,
        }]);
        assert!(short.is_err());
    }

    #[test]
    fn dimensioning_doubles_pairs_with_capacitance() {
        let cm = CapacitanceModel::new(1e-15).unwrap();
        let w = ApodizationWindow::Uniform;
        let c0 = 40.0 * 1e-15 * 20.0; // exactly 40 pairs at the 20 um midpoint
        let a = dimension_from_c0(c0, 0.9, &cm, &w, (10.0, 30.0)).unwrap();
        assert_eq!(a.n_e, 41);
        assert_relative_eq!(a.aperture_um, 20.0, max_relative = 1e-12);
        let b = dimension_from_c0(2.0 * c0, 0.9, &cm, &w, (10.0, 30.0)).unwrap();
        assert_eq!(b.n_e, 81);
        assert_eq!((b.n_e - 1), 2 * (a.n_e - 1));
    }

    #[test]
    fn bartlett_needs_about_twice_the_fingers() {
        let cm = CapacitanceModel::new(1e-15).unwrap();
        let c0 = 0.8e-12;
        let u = dimension_from_c0(c0, 0.9, &cm, &ApodizationWindow::Uniform, (15.0, 25.0)).unwrap();
        let b = dimension_from_c0(c0, 0.9, &cm, &bartlett(), (15.0, 25.0)).unwrap();
        let ratio = (b.n_e - 1) as f64 / (u.n_e - 1) as f64;
        assert!((ratio - 2.0).abs() < 0.1, "pair ratio {ratio}");
    }

    #[test]
    fn conventional_design_capacitance_ratio() {
        let cm = CapacitanceModel::new(7.5e-16).unwrap();
        let w = ApodizationWindow::Uniform;
        let shunt = cm.c0_of(29, 21.0, &w).unwrap();
        let series = cm.c0_of(39, 24.0, &w).unwrap();
        assert_relative_eq!(shunt / series, 0.6447368421052632, max_relative = 1e-12);
    }

    #[test]
    fn achieved_capacitance_is_reproducible_and_tight() {
        let cm = CapacitanceModel::new(7.5e-16).unwrap();
        for (c0, w) in [
            (0.74e-12, ApodizationWindow::Uniform),
            (1.1e-12, bartlett()),
            (0.33e-12, bartlett()),
        ] {
            let layout = dimension_from_c0(c0, 0.9, &cm, &w, (15.0, 30.0)).unwrap();
            assert!(layout.n_e >= 2);
            assert!(layout.aperture_um >= 15.0 && layout.aperture_um <= 30.0);
            assert!((layout.c0 - c0).abs() <= 0.02 * c0);
            let recomputed = cm
                .c0_of(layout.n_e, layout.aperture_um, &layout.window)
                .unwrap();
            assert_eq!(recomputed, layout.c0);
        }
    }

    #[test]
    fn unreachable_capacitance_names_the_nearest() {
        let cm = CapacitanceModel::new(1e-15).unwrap();
        let w = ApodizationWindow::Uniform;
        // fixed aperture: only integer pair counts are reachable
        let c0 = 10.5 * 1e-15 * 10.0;
        match dimension_from_c0(c0, 0.9, &cm, &w, (10.0, 10.0)) {
            Err(Error::DimensionOutOfReach {
                target_c0,
                nearest_c0,
            }) => {
                assert_eq!(target_c0, c0);
                let pairs = (nearest_c0 / (1e-15 * 10.0)).round();
                assert!(pairs == 10.0 || pairs == 11.0, "nearest pairs {pairs}");
            }
            other => panic!("expected out-of-reach error, got {other:?}"),
        }
    }
}
