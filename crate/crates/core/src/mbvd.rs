//! Multi-branch modified Butterworth-Van Dyke resonator model.
//!
//! Topology: a series resistance `r_s` feeding the parallel combination of a
//! static branch (`r_0` in series with `c_0`) and one or more motional
//! branches (`r_m`, `l_m`, `c_m` in series). The first branch is the main
//! tone; additional branches carry higher-order modes and are included in
//! admittance evaluation but excluded from the figures of merit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::netcore::{FrequencyGrid, OnePortResponse};

/// One series-RLC motional branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionalBranch {
    /// Motional resistance in ohm, >= 0.
    pub r_m: f64,
    /// Motional inductance in henry, > 0.
    pub l_m: f64,
    /// Motional capacitance in farad, > 0.
    pub c_m: f64,
}

impl MotionalBranch {
    pub fn new(r_m: f64, l_m: f64, c_m: f64) -> Result<Self> {
        let b = Self { r_m, l_m, c_m };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_m.is_finite() && self.r_m >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "motional resistance {} must be finite and >= 0",
                self.r_m
            )));
        }
        if !(self.l_m.is_finite() && self.l_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "motional inductance {} must be finite and > 0",
                self.l_m
            )));
        }
        if !(self.c_m.is_finite() && self.c_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "motional capacitance {} must be finite and > 0",
                self.c_m
            )));
        }
        Ok(())
    }

    /// Series resonance frequency 1/(2*pi*sqrt(l_m*c_m)) in Hz.
    pub fn series_resonance_hz(&self) -> f64 {
        1.0 / (TAU * (self.l_m * self.c_m).sqrt())
    }

    /// Motional quality factor sqrt(l_m/c_m)/r_m; infinite when r_m = 0.
    pub fn q(&self) -> f64 {
        if self.r_m == 0.0 {
            f64::INFINITY
        } else {
            (self.l_m / self.c_m).sqrt() / self.r_m
        }
    }
}

/// Modified Butterworth-Van Dyke model with one or more motional branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbvdModel {
    /// Series (electrode/busline) resistance in ohm, >= 0.
    pub r_s: f64,
    /// Static-branch resistance in ohm, >= 0.
    pub r_0: f64,
    /// Static capacitance in farad, > 0.
    pub c_0: f64,
    /// Motional branches; the first is the main tone.
    pub branches: Vec<MotionalBranch>,
}

impl MbvdModel {
    pub fn new(r_s: f64, r_0: f64, c_0: f64, branches: Vec<MotionalBranch>) -> Result<Self> {
        let m = Self {
            r_s,
            r_0,
            c_0,
            branches,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a single-branch model from its figures of merit, with
    /// r_s = r_0 = 0. `q` may be infinite for a lossless seed.
    pub fn single_branch_from_figures(f_s: f64, q: f64, k2: f64, c_0: f64) -> Result<Self> {
        if !(f_s.is_finite() && f_s > 0.0) {
            return Err(Error::InvalidParameter(format!("f_s {f_s} must be > 0")));
        }
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("q {q} must be > 0")));
        }
        if !(k2.is_finite() && k2 > 0.0 && k2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "k2 {k2} must be in (0, 1)"
            )));
        }
        if !(c_0.is_finite() && c_0 > 0.0) {
            return Err(Error::InvalidParameter(format!("c_0 {c_0} must be > 0")));
        }
        let c_m = c_0 * 8.0 * k2 / (PI * PI);
        let omega_s = TAU * f_s;
        let l_m = 1.0 / (omega_s * omega_s * c_m);
        let r_m = if q.is_finite() {
            (l_m / c_m).sqrt() / q
        } else {
            0.0
        };
        Self::new(0.0, 0.0, c_0, vec![MotionalBranch { r_m, l_m, c_m }])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_s.is_finite() && self.r_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "series resistance {} must be finite and >= 0",
                self.r_s
            )));
        }
        if !(self.r_0.is_finite() && self.r_0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "static-branch resistance {} must be finite and >= 0",
                self.r_0
            )));
        }
        if !(self.c_0.is_finite() && self.c_0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "static capacitance {} must be finite and > 0",
                self.c_0
            )));
        }
        if self.branches.is_empty() {
            return Err(Error::InvalidParameter(
                "model needs at least one motional branch".into(),
            ));
        }
        for b in &self.branches {
            b.validate()?;
        }
        // branch resonances must be pairwise distinct
        for i in 0..self.branches.len() {
            for j in (i + 1)..self.branches.len() {
                let fi = self.branches[i].series_resonance_hz();
                let fj = self.branches[j].series_resonance_hz();
                if (fi - fj).abs() <= 1e-6 * fi.max(fj) {
                    return Err(Error::InvalidParameter(format!(
                        "branches {i} and {j} resonate at indistinct frequencies ({fi} and {fj} Hz)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The main-tone branch.
    pub fn main_branch(&self) -> &MotionalBranch {
        &self.branches[0]
    }

    /// Evaluates Y(omega) on the grid. The response carries `z_ref` for any
    /// reflection view derived later.
    ///
    /// Exactly singular points (a lossless branch whose reactance cancels
    /// bit-exactly, or an exact lossless antiresonance) yield non-finite
    /// samples flagged through [`OnePortResponse::non_finite_points`] instead
    /// of aborting the sweep.
    pub fn admittance(&self, grid: &FrequencyGrid, z_ref: f64) -> Result<OnePortResponse> {
        self.validate()?;
        let y: Vec<Complex64> = grid
            .omegas()
            .map(|omega| self.admittance_at_omega(omega))
            .collect();
        OnePortResponse::new(grid.clone(), y, z_ref)
    }

    /// Single-frequency evaluation used by the sweep and by the fitter.
    pub fn admittance_at_omega(&self, omega: f64) -> Complex64 {
        let mut y_par = static_branch_admittance(self.r_0, self.c_0, omega);
        for b in &self.branches {
            let den = Complex64::new(b.r_m, omega * b.l_m - 1.0 / (omega * b.c_m));
            if den == Complex64::new(0.0, 0.0) {
                // perfect short: the whole parallel section collapses
                return if self.r_s > 0.0 {
                    Complex64::new(1.0 / self.r_s, 0.0)
                } else {
                    Complex64::new(f64::INFINITY, 0.0)
                };
            }
            y_par += den.inv();
        }
        if y_par == Complex64::new(0.0, 0.0) {
            // exact antiresonance of the lossless parallel section
            return Complex64::new(f64::NAN, f64::NAN);
        }
        (Complex64::new(self.r_s, 0.0) + y_par.inv()).inv()
    }

    /// Figures of merit of the main branch. The parallel resonance is the
    /// first zero of the lossless susceptance above f_s, refined to 1e-12
    /// relative; q is infinite when r_m = 0.
    pub fn figures(&self) -> ResonatorFigures {
        let main = self.main_branch();
        let f_s = main.series_resonance_hz();
        let f_p = self.lossless_parallel_resonance_hz(f_s);
        ResonatorFigures {
            f_s,
            f_p,
            q: main.q(),
            k2: PI * PI / 8.0 * (main.c_m / self.c_0),
            c_0: self.c_0,
        }
    }

    /// Returns a model whose main series resonance is `f_target`, obtained by
    /// scaling every motional inductance by (f_s_main/f_target)^2. Couplings
    /// (c_m/c_0 ratios) are untouched; each branch q picks up a factor
    /// f_s_main/f_target through the inductance change.
    pub fn scale_to_frequency(&self, f_target: f64) -> Result<Self> {
        if !(f_target.is_finite() && f_target > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target frequency {f_target} must be > 0"
            )));
        }
        let ratio = self.main_branch().series_resonance_hz() / f_target;
        let factor = ratio * ratio;
        let mut out = self.clone();
        for b in &mut out.branches {
            b.l_m *= factor;
        }
        Ok(out)
    }

    /// Impedance-scales the model to a new static capacitance at fixed f_s,
    /// f_p, q and k2: with rho = c0_target/c_0, capacitances scale by rho and
    /// all resistances and inductances by 1/rho. Admittance scales by rho at
    /// every frequency.
    pub fn scale_c0(&self, c0_target: f64) -> Result<Self> {
        if !(c0_target.is_finite() && c0_target > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target capacitance {c0_target} must be > 0"
            )));
        }
        let rho = c0_target / self.c_0;
        let mut out = self.clone();
        out.c_0 = c0_target;
        out.r_s /= rho;
        out.r_0 /= rho;
        for b in &mut out.branches {
            b.c_m *= rho;
            b.l_m /= rho;
            b.r_m /= rho;
        }
        Ok(out)
    }

    /// First zero of the lossless susceptance above the main series
    /// resonance. The susceptance of the zeroed-resistance model is strictly
    /// increasing between its poles (the branch resonances), so the zero is
    /// bracketed between f_s and the next pole and bisection cannot miss it.
    fn lossless_parallel_resonance_hz(&self, f_s_main: f64) -> f64 {
        let susceptance = |f: f64| -> f64 {
            let omega = TAU * f;
            let mut b = omega * self.c_0;
            for br in &self.branches {
                b -= 1.0 / (omega * br.l_m - 1.0 / (omega * br.c_m));
            }
            b
        };

        // next pole above the main resonance, if any
        let next_pole = self
            .branches
            .iter()
            .map(|b| b.series_resonance_hz())
            .filter(|&f| f > f_s_main * (1.0 + 1e-12))
            .fold(f64::INFINITY, f64::min);

        // lower edge: just above the main pole, where susceptance -> -inf
        let mut lo = f_s_main * (1.0 + 1e-9);
        let mut eps = 1e-9;
        while susceptance(lo) >= 0.0 && eps > 1e-15 {
            eps /= 16.0;
            lo = f_s_main * (1.0 + eps);
        }

        // upper edge: just below the next pole (susceptance -> +inf), or
        // expand upward until the susceptance turns positive
        let mut hi = if next_pole.is_finite() {
            let mut h = next_pole * (1.0 - 1e-9);
            let mut e = 1e-9;
            while susceptance(h) <= 0.0 && e > 1e-15 {
                e /= 16.0;
                h = next_pole * (1.0 - e);
            }
            h
        } else {
            let main = self.main_branch();
            let mut h = f_s_main * (1.0 + main.c_m / self.c_0).sqrt() * 2.0;
            while susceptance(h) <= 0.0 {
                h *= 2.0;
            }
            h
        };

        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo) <= 1e-14 * mid {
                break;
            }
            if susceptance(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn static_branch_admittance(r_0: f64, c_0: f64, omega: f64) -> Complex64 {
    // denominator r_0 - j/(omega*c_0) never vanishes for omega > 0
    Complex64::new(r_0, -1.0 / (omega * c_0)).inv()
}

/// Figures of merit of a resonator's main tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorFigures {
    /// Series resonance frequency in Hz.
    pub f_s: f64,
    /// Parallel resonance frequency in Hz (lossless definition).
    pub f_p: f64,
    /// Motional quality factor; `f64::INFINITY` for a lossless branch.
    pub q: f64,
    /// Electromechanical coupling (pi^2/8)*(c_m/c_0).
    pub k2: f64,
    /// Static capacitance in farad.
    pub c_0: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{make_grid, GridSpacing};
    use approx::assert_relative_eq;

    fn demo_model() -> MbvdModel {
        MbvdModel::new(
            2.0,
            0.0,
            500e-15,
            vec![MotionalBranch::new(1.0, 80e-9, 17e-15).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn low_frequency_limit_is_the_parallel_capacitance() {
        // far below resonance the motional branch is just its capacitance,
        // so the whole model collapses to c_0 + c_m
        let m = demo_model();
        let f_s = m.main_branch().series_resonance_hz();
        let grid = make_grid(f_s / 4000.0, f_s / 1000.0, 16, GridSpacing::Log).unwrap();
        let resp = m.admittance(&grid, 50.0).unwrap();
        for (i, y) in resp.admittances().iter().enumerate() {
            let expected = grid.omega(i) * (m.c_0 + m.branches[0].c_m);
            assert_relative_eq!(y.norm(), expected, max_relative = 1e-3);
        }
    }

    #[test]
    fn lossless_series_resonance_is_flagged_not_a_crash() {
        // constants chosen so the reactance cancels bit-exactly on the grid:
        // f = 2^31 Hz, l = 2^-30 H, c picked so 1/(omega*c) == omega*l.
        let f_res = 2.0_f64.powi(31);
        let l = 2.0_f64.powi(-30);
        let c = 5.897669100804358e-12;
        let omega = TAU * f_res;
        assert_eq!(omega * l - 1.0 / (omega * c), 0.0);

        let m = MbvdModel::new(
            0.0,
            0.0,
            1e-12,
            vec![MotionalBranch::new(0.0, l, c).unwrap()],
        )
        .unwrap();
        let grid = FrequencyGrid::from_points(vec![f_res / 2.0, f_res, f_res * 2.0]).unwrap();
        let resp = m.admittance(&grid, 50.0).unwrap();
        let flagged = resp.non_finite_points();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0], (1, f_res));
        assert!(resp.admittances()[1].norm() > 1e300 || resp.admittances()[1].re.is_infinite());
        // closed form agrees with the constructed resonance
        assert_relative_eq!(
            m.main_branch().series_resonance_hz(),
            f_res,
            max_relative = 1e-12
        );
    }

    #[test]
    fn admittance_peak_matches_closed_form() {
        let m = demo_model();
        let f_s = m.main_branch().series_resonance_hz();
        assert_relative_eq!(f_s, 4315694333.628378, max_relative = 1e-12);
        let grid = make_grid(f_s * 0.99, f_s * 1.01, 100_001, GridSpacing::Linear).unwrap();
        let resp = m.admittance(&grid, 50.0).unwrap();
        let (idx, _) = resp
            .admittances()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        // loss and the static branch pull the |Y| maximum slightly off the
        // motional resonance, but well under a 0.05% shift at this Q
        assert!((grid.points()[idx] - f_s).abs() <= 5e-4 * f_s);
    }

    #[test]
    fn figures_closed_forms() {
        let c_0 = 500e-15;
        let c_m = 0.034 * c_0;
        let l_m = 80e-9;
        let m = MbvdModel::new(
            0.0,
            0.0,
            c_0,
            vec![MotionalBranch::new(0.5, l_m, c_m).unwrap()],
        )
        .unwrap();
        let fig = m.figures();
        assert_relative_eq!(
            fig.f_s,
            1.0 / (TAU * (l_m * c_m).sqrt()),
            max_relative = 1e-15
        );
        // single-branch parallel resonance has the closed form f_s*sqrt(1 + c_m/c_0)
        assert_relative_eq!(fig.f_p / fig.f_s, 1.0168579055108928, max_relative = 1e-9);
        assert_relative_eq!(fig.k2, 0.041945818704629774, max_relative = 1e-12);
    }

    #[test]
    fn q_formula_inverts_to_target() {
        let l_m = 80e-9_f64;
        let c_m = 17e-15_f64;
        let r_m = (l_m / c_m).sqrt() / 1522.0;
        assert_relative_eq!(r_m, 1.425298671607465, max_relative = 1e-12);
        let m = MbvdModel::new(
            0.0,
            0.0,
            500e-15,
            vec![MotionalBranch::new(r_m, l_m, c_m).unwrap()],
        )
        .unwrap();
        assert_relative_eq!(m.figures().q, 1522.0, max_relative = 1e-12);
    }

    #[test]
    fn lossless_branch_reports_infinite_q() {
        let m = MbvdModel::new(
            0.0,
            0.0,
            500e-15,
            vec![MotionalBranch::new(0.0, 80e-9, 17e-15).unwrap()],
        )
        .unwrap();
        assert!(m.figures().q.is_infinite());
    }

    #[test]
    fn from_figures_round_trips() {
        let m = MbvdModel::single_branch_from_figures(4.3e9, 893.0, 0.045, 7.4e-13).unwrap();
        let fig = m.figures();
        assert_relative_eq!(fig.f_s, 4.3e9, max_relative = 1e-12);
        assert_relative_eq!(fig.q, 893.0, max_relative = 1e-12);
        assert_relative_eq!(fig.k2, 0.045, max_relative = 1e-12);
        assert_eq!(fig.c_0, 7.4e-13);
    }

    #[test]
    fn scale_to_frequency_identity_and_square_law() {
        let m = demo_model();
        let f_s = m.main_branch().series_resonance_hz();
        let same = m.scale_to_frequency(f_s).unwrap();
        assert_eq!(same, m);
        let halved = m.scale_to_frequency(f_s / 2.0).unwrap();
        assert_relative_eq!(
            halved.branches[0].l_m,
            4.0 * m.branches[0].l_m,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            halved.main_branch().series_resonance_hz(),
            f_s / 2.0,
            max_relative = 1e-12
        );
        // coupling depends only on c_m/c_0 and is untouched
        assert_relative_eq!(halved.figures().k2, m.figures().k2, max_relative = 1e-12);
    }

    #[test]
    fn scale_c0_doubles_admittance_and_preserves_figures() {
        let m = demo_model();
        let grid = make_grid(4.2e9, 4.45e9, 101, GridSpacing::Linear).unwrap();
        let base = m.admittance(&grid, 50.0).unwrap();

        let identity = m.scale_c0(m.c_0).unwrap();
        assert_eq!(identity, m);

        let doubled = m.scale_c0(2.0 * m.c_0).unwrap();
        let resp = doubled.admittance(&grid, 50.0).unwrap();
        for (y2, y1) in resp.admittances().iter().zip(base.admittances()) {
            assert_relative_eq!(y2.re, 2.0 * y1.re, max_relative = 1e-12);
            assert_relative_eq!(y2.im, 2.0 * y1.im, max_relative = 1e-12);
        }

        let f0 = m.figures();
        for rho in [0.1, 0.5, 2.0, 10.0] {
            let fig = m.scale_c0(rho * m.c_0).unwrap().figures();
            assert_relative_eq!(fig.f_s, f0.f_s, max_relative = 1e-12);
            assert_relative_eq!(fig.f_p, f0.f_p, max_relative = 1e-12);
            assert_relative_eq!(fig.q, f0.q, max_relative = 1e-12);
            assert_relative_eq!(fig.k2, f0.k2, max_relative = 1e-12);
        }

        let back = doubled.scale_c0(m.c_0).unwrap();
        assert_relative_eq!(back.r_s, m.r_s, max_relative = 1e-12);
        assert_relative_eq!(
            back.branches[0].l_m,
            m.branches[0].l_m,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            back.branches[0].c_m,
            m.branches[0].c_m,
            max_relative = 1e-12
        );
    }

    #[test]
    fn multi_branch_admittance_is_compositional() {
        let m = MbvdModel::new(
            1.5,
            0.3,
            600e-15,
            vec![
                MotionalBranch::new(1.0, 80e-9, 17e-15).unwrap(),
                MotionalBranch::new(4.0, 60e-9, 20e-15).unwrap(),
            ],
        )
        .unwrap();
        let grid = make_grid(4.0e9, 5.0e9, 257, GridSpacing::Linear).unwrap();
        let resp = m.admittance(&grid, 50.0).unwrap();
        for (i, y) in resp.admittances().iter().enumerate() {
            let omega = grid.omega(i);
            let mut y_par = static_branch_admittance(m.r_0, m.c_0, omega);
            for b in &m.branches {
                y_par += Complex64::new(b.r_m, omega * b.l_m - 1.0 / (omega * b.c_m)).inv();
            }
            let expected = (Complex64::new(m.r_s, 0.0) + y_par.inv()).inv();
            assert_relative_eq!(y.re, expected.re, max_relative = 1e-12);
            assert_relative_eq!(y.im, expected.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn spur_branch_moves_the_first_antiresonance_down() {
        let main = MotionalBranch::new(1.0, 80e-9, 17e-15).unwrap();
        let single = MbvdModel::new(0.0, 0.0, 500e-15, vec![main]).unwrap();
        let f_p_single = single.figures().f_p;
        // spur between f_s and the single-branch f_p pulls the zero below it
        let f_s = main.series_resonance_hz();
        let spur_f = f_s * 1.008;
        let spur_c = 0.5e-15;
        let spur_l = 1.0 / ((TAU * spur_f).powi(2) * spur_c);
        let two = MbvdModel::new(
            0.0,
            0.0,
            500e-15,
            vec![main, MotionalBranch::new(2.0, spur_l, spur_c).unwrap()],
        )
        .unwrap();
        let fig = two.figures();
        assert!(fig.f_s < fig.f_p);
        assert!(fig.f_p < f_p_single);
        assert!(fig.f_p < spur_f);
    }

    #[test]
    fn rejects_indistinct_branches() {
        let b = MotionalBranch::new(1.0, 80e-9, 17e-15).unwrap();
        let err = MbvdModel::new(0.0, 0.0, 500e-15, vec![b, b]);
        assert!(err.is_err());
    }
}
