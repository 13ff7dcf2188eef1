//! Parameter extraction: Bode-Q curves from one-port reflection data,
//! series/parallel resonance markers, and mBVD model fitting.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::mbvd::{MbvdModel, MotionalBranch};
use crate::netcore::{FrequencyGrid, OnePortResponse};
use crate::optim;

/// Per-frequency Bode Q. Points where |S11| reaches unity (a lossless
/// reflection, where the estimator blows up) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BodeQCurve {
    grid: FrequencyGrid,
    q: Vec<Option<f64>>,
}

impl BodeQCurve {
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.q
    }

    /// Highest valid Q with frequency inside `[f_lo, f_hi]`, as
    /// `(frequency, q)`. `None` when the band holds no valid point.
    pub fn peak_in_band(&self, f_lo: f64, f_hi: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (i, q) in self.q.iter().enumerate() {
            let f = self.grid.points()[i];
            if f < f_lo || f > f_hi {
                continue;
            }
            if let Some(q) = *q {
                if best.is_none_or(|(_, bq)| q > bq) {
                    best = Some((f, q));
                }
            }
        }
        best
    }
}

/// Computes the Bode Q curve Q(ω) = ω·|dS11/dω|/(1 − |S11|²) from one-port
/// admittance data, with S11 = (1 − z_ref·Y)/(1 + z_ref·Y).
///
/// The derivative is the complex derivative of S11 along ω: three-point
/// Lagrange stencils, central on interior points and one-sided second-order
/// at the two endpoints, valid on non-uniform grids. Points with
/// |S11| ≥ 1 − 1e-12, or polluted by a non-finite neighbor, come back `None`.
pub fn bode_q(r: &OnePortResponse) -> Result<BodeQCurve> {
    let n = r.grid().len();
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "Bode Q needs at least 3 grid points, got {n}"
        )));
    }
    let z = r.z_ref();
    let s11: Vec<Complex64> = r
        .admittances()
        .iter()
        .map(|y| {
            let zy = z * y;
            if zy.re.is_finite() && zy.im.is_finite() {
                (Complex64::new(1.0, 0.0) - zy) / (Complex64::new(1.0, 0.0) + zy)
            } else {
                Complex64::new(f64::NAN, f64::NAN)
            }
        })
        .collect();
    let omegas: Vec<f64> = r.grid().omegas().collect();

    let q = (0..n)
        .map(|i| {
            // stencil nodes: one-sided at the ends, centered inside
            let (i0, i1, i2) = if i == 0 {
                (0, 1, 2)
            } else if i == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (i - 1, i, i + 1)
            };
            let ds = lagrange3_derivative(
                omegas[i0], omegas[i1], omegas[i2], s11[i0], s11[i1], s11[i2], omegas[i],
            );
            let mag = s11[i].norm();
            let denom = 1.0 - mag * mag;
            if !(mag < 1.0 - 1e-12) {
                return None;
            }
            let q = omegas[i] * ds.norm() / denom;
            if q.is_finite() {
                Some(q)
            } else {
                None
            }
        })
        .collect();

    Ok(BodeQCurve {
        grid: r.grid().clone(),
        q,
    })
}

/// Derivative at `at` of the quadratic through three (x, y) samples.
fn lagrange3_derivative(
    x0: f64,
    x1: f64,
    x2: f64,
    y0: Complex64,
    y1: Complex64,
    y2: Complex64,
    at: f64,
) -> Complex64 {
    let w0 = (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2));
    let w1 = (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2));
    let w2 = (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1));
    y0 * w0 + y1 * w1 + y2 * w2
}

/// Series and parallel resonance frequencies read off an admittance sweep:
/// f_s at the |Y| maximum, f_p at the |Y| minimum above it, each refined by
/// three-point parabolic interpolation on log|Y|. Errors with "span too
/// narrow" when either extremum sits on the grid boundary.
pub fn resonance_markers(data: &OnePortResponse) -> Result<(f64, f64)> {
    let n = data.grid().len();
    if n < 50 {
        return Err(Error::InvalidGrid(format!(
            "resonance markers need at least 50 grid points, got {n}"
        )));
    }
    if let Some(&(_, f)) = data.non_finite_points().first() {
        return Err(Error::InvalidParameter(format!(
            "non-finite admittance sample at {f} Hz"
        )));
    }
    let f = data.grid().points();
    let log_mag: Vec<f64> = data.admittances().iter().map(|y| y.norm().ln()).collect();

    let i_max = argmax(&log_mag);
    if i_max == 0 || i_max == n - 1 {
        return Err(Error::SpanTooNarrow);
    }
    let f_s = parabolic_vertex(
        f[i_max - 1],
        f[i_max],
        f[i_max + 1],
        log_mag[i_max - 1],
        log_mag[i_max],
        log_mag[i_max + 1],
    );

    let i_min = (i_max + 1..n)
        .min_by(|&a, &b| log_mag[a].total_cmp(&log_mag[b]))
        .expect("non-empty range above the maximum");
    if i_min == n - 1 {
        return Err(Error::SpanTooNarrow);
    }
    let f_p = parabolic_vertex(
        f[i_min - 1],
        f[i_min],
        f[i_min + 1],
        log_mag[i_min - 1],
        log_mag[i_min],
        log_mag[i_min + 1],
    );

    Ok((f_s, f_p))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Vertex abscissa of the parabola through three samples; returns the center
/// abscissa when the three are collinear.
fn parabolic_vertex(x1: f64, x2: f64, x3: f64, y1: f64, y2: f64, y3: f64) -> f64 {
    let num = (x2 - x1).powi(2) * (y2 - y3) - (x2 - x3).powi(2) * (y2 - y1);
    let den = (x2 - x1) * (y2 - y3) - (x2 - x3) * (y2 - y1);
    if den == 0.0 {
        return x2;
    }
    x2 - 0.5 * num / den
}

/// Outcome of an mBVD fit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitReport {
    pub model: MbvdModel,
    /// Root-mean-square relative error of the complex admittance.
    pub residual: f64,
    /// Full passes over all parameter blocks.
    pub n_iterations: usize,
    /// True when the block cycle stalled below the cost tolerance; false when
    /// the iteration budget ran out first.
    pub converged: bool,
}

// Termination thresholds for the block-cycled fit: stop when a full pass
// over the blocks improves the cost by less than the relative tolerance,
// or after the pass budget.
const FIT_COST_REL_TOL: f64 = 1e-10;
const FIT_MAX_CYCLES: usize = 2000;

/// Fits an `n_branches`-branch mBVD model to admittance data by weighted
/// nonlinear least squares, minimizing Σ|Y_model − Y_data|²/|Y_data|².
///
/// Parameters live in log space so every R/L/C stays strictly positive. The
/// optimizer cycles a derivative-free simplex over parameter blocks (static
/// elements, then each branch), restarts once from the best point, and stops
/// when a full pass improves the cost by less than 1e-10 relative or the
/// pass budget (2000) runs out. `seed` jitters the initial simplex scales;
/// the whole procedure is deterministic for fixed data and seed.
pub fn fit_mbvd(data: &OnePortResponse, n_branches: usize, seed: u64) -> Result<FitReport> {
    let n = data.grid().len();
    if n < 50 {
        return Err(Error::InvalidGrid(format!(
            "fit needs at least 50 grid points, got {n}"
        )));
    }
    if n_branches < 1 {
        return Err(Error::InvalidParameter(
            "fit needs at least one motional branch".into(),
        ));
    }
    if let Some(&(_, f)) = data.non_finite_points().first() {
        return Err(Error::InvalidParameter(format!(
            "non-finite admittance sample at {f} Hz"
        )));
    }

    let init = initial_guess(data, n_branches)?;
    let mut x: Vec<f64> = encode(&init);
    let freqs: Vec<f64> = data.grid().points().to_vec();
    let ys: Vec<Complex64> = data.admittances().to_vec();

    let cost = |x: &[f64]| -> f64 {
        let m = decode(x, n_branches);
        if !branches_distinct(&m) {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for (f, y_data) in freqs.iter().zip(&ys) {
            let w = y_data.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let y_model = m.admittance_at_omega(TAU * f);
            acc += (y_model - y_data).norm_sqr() / w;
        }
        if acc.is_finite() {
            acc
        } else {
            f64::INFINITY
        }
    };

    // parameter blocks: static (r_s, r_0, c_0), one per branch, then the
    // full vector so jointly-coupled directions are not left to zigzag
    let mut blocks: Vec<Vec<usize>> = vec![vec![0, 1, 2]];
    for b in 0..n_branches {
        blocks.push(vec![3 + 3 * b, 4 + 3 * b, 5 + 3 * b]);
    }
    blocks.push((0..x.len()).collect());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_cost = cost(&x);
    let mut cycles = 0usize;
    // None marks "no reference pass yet" (start and just-restarted)
    let mut prev_cycle_cost: Option<f64> = None;
    let mut restarted = false;
    let mut converged = false;
    // fresh simplexes start wide and tighten as the cycles settle
    let mut simplex_scale = 0.2;

    while cycles < FIT_MAX_CYCLES {
        cycles += 1;
        for block in &blocks {
            let x_full = x.clone();
            let block_cost = |xb: &[f64]| -> f64 {
                let mut full = x_full.clone();
                for (slot, &v) in block.iter().zip(xb) {
                    full[*slot] = v;
                }
                cost(&full)
            };
            let xb0: Vec<f64> = block.iter().map(|&i| x[i]).collect();
            let steps: Vec<f64> = block
                .iter()
                .map(|_| simplex_scale * rng.random_range(0.5..1.5))
                .collect();
            let r = optim::minimize(
                block_cost,
                &xb0,
                &optim::Options {
                    max_iterations: 200,
                    cost_tolerance: 1e-13,
                    initial_steps: steps,
                },
            );
            if r.cost < best_cost {
                best_cost = r.cost;
                for (slot, v) in block.iter().zip(r.x) {
                    x[*slot] = v;
                }
            }
        }
        simplex_scale = (simplex_scale * 0.6).max(1e-5);

        if best_cost == 0.0 {
            converged = true;
            break;
        }
        let Some(prev) = prev_cycle_cost else {
            prev_cycle_cost = Some(best_cost);
            continue;
        };
        let improvement = prev - best_cost;
        if improvement <= FIT_COST_REL_TOL * prev.abs().max(1e-300) {
            if restarted {
                converged = true;
                break;
            }
            // one restart from the best point with a fresh, wider simplex
            restarted = true;
            simplex_scale = 0.05;
            prev_cycle_cost = None;
            continue;
        }
        prev_cycle_cost = Some(best_cost);
    }

    let model = finalize_model(decode(&x, n_branches))?;
    let used = freqs
        .iter()
        .zip(&ys)
        .filter(|(_, y)| y.norm_sqr() > 0.0)
        .count();
    let residual = if used > 0 {
        (best_cost / used as f64).sqrt()
    } else {
        0.0
    };
    Ok(FitReport {
        model,
        residual,
        n_iterations: cycles,
        converged,
    })
}

fn encode(m: &MbvdModel) -> Vec<f64> {
    let mut x = vec![m.r_s.ln(), m.r_0.ln(), m.c_0.ln()];
    for b in &m.branches {
        x.push(b.r_m.ln());
        x.push(b.l_m.ln());
        x.push(b.c_m.ln());
    }
    x
}

fn decode(x: &[f64], n_branches: usize) -> MbvdModel {
    let e = |v: f64| v.clamp(-300.0, 300.0).exp();
    let mut branches = Vec::with_capacity(n_branches);
    for b in 0..n_branches {
        branches.push(MotionalBranch {
            r_m: e(x[3 + 3 * b]),
            l_m: e(x[4 + 3 * b]),
            c_m: e(x[5 + 3 * b]),
        });
    }
    MbvdModel {
        r_s: e(x[0]),
        r_0: e(x[1]),
        c_0: e(x[2]),
        branches,
    }
}

fn branches_distinct(m: &MbvdModel) -> bool {
    for i in 0..m.branches.len() {
        for j in (i + 1)..m.branches.len() {
            let fi = m.branches[i].series_resonance_hz();
            let fj = m.branches[j].series_resonance_hz();
            if (fi - fj).abs() <= 1e-6 * fi.max(fj) {
                return false;
            }
        }
    }
    true
}

/// Orders branches by descending conductance contribution (the main tone
/// first) and re-validates.
fn finalize_model(mut m: MbvdModel) -> Result<MbvdModel> {
    m.branches.sort_by(|a, b| {
        let ga = if a.r_m > 0.0 {
            1.0 / a.r_m
        } else {
            f64::INFINITY
        };
        let gb = if b.r_m > 0.0 {
            1.0 / b.r_m
        } else {
            f64::INFINITY
        };
        gb.total_cmp(&ga)
    });
    m.validate()?;
    Ok(m)
}

/// Heuristic starting model: c_0 from the low-frequency susceptance slope,
/// branch seeds from the largest conductance peaks (position, height, 3-dB
/// width), r_s from the high-frequency series resistance.
fn initial_guess(data: &OnePortResponse, n_branches: usize) -> Result<MbvdModel> {
    let f = data.grid().points();
    let y = data.admittances();
    let n = f.len();
    let tail = (n / 10).max(3);

    // static capacitance: median of Im(Y)/omega over the low-frequency tail
    let mut caps: Vec<f64> = (0..tail).map(|i| y[i].im / (TAU * f[i])).collect();
    let c_0 = positive_median(&mut caps).unwrap_or(1e-13);

    // series resistance: median of Re(1/Y) over the high-frequency tail
    let mut res: Vec<f64> = (n - tail..n).map(|i| (1.0 / y[i]).re).collect();
    let r_total = positive_median(&mut res).unwrap_or(1e-3);
    let r_s = (0.5 * r_total).max(1e-4);
    let r_0 = (0.1 * r_total).max(1e-4);

    // conductance peaks, largest first, separated by at least 0.5% in f
    let g: Vec<f64> = y.iter().map(|y| y.re).collect();
    let mut peaks: Vec<usize> = (1..n - 1)
        .filter(|&i| g[i] > g[i - 1] && g[i] >= g[i + 1])
        .collect();
    peaks.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    let mut picked: Vec<usize> = Vec::new();
    for i in peaks {
        if picked.iter().all(|&j| (f[i] - f[j]).abs() > 0.005 * f[j]) {
            picked.push(i);
        }
        if picked.len() == n_branches {
            break;
        }
    }
    if picked.is_empty() || g[picked[0]] <= 0.0 {
        return Err(Error::NoResonance);
    }

    let mut branches = Vec::with_capacity(n_branches);
    for k in 0..n_branches {
        let (f_peak, g_peak, width) = if k < picked.len() {
            let i = picked[k];
            (f[i], g[i], half_height_width(f, &g, i))
        } else {
            // more branches requested than visible peaks: park the extras
            // just above the strongest one with weak coupling
            let i = picked[0];
            (
                f[i] * (1.0 + 0.03 * (k - picked.len() + 1) as f64),
                g[i] * 1e-3,
                None,
            )
        };
        let q = width
            .map(|w| (f_peak / w).clamp(10.0, 1e6))
            .unwrap_or(500.0);
        let r_m = (1.0 / g_peak).max(1e-4);
        let omega = TAU * f_peak;
        branches.push(MotionalBranch {
            r_m,
            l_m: q * r_m / omega,
            c_m: 1.0 / (q * r_m * omega),
        });
    }

    Ok(MbvdModel {
        r_s,
        r_0,
        c_0,
        branches,
    })
}

/// Median of the positive entries, if any.
fn positive_median(v: &mut Vec<f64>) -> Option<f64> {
    v.retain(|x| x.is_finite() && *x > 0.0);
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    Some(v[v.len() / 2])
}

/// Full width of the conductance peak at half its height, interpolated
/// linearly on each flank; `None` when a flank never falls below half.
fn half_height_width(f: &[f64], g: &[f64], i_peak: usize) -> Option<f64> {
    let half = 0.5 * g[i_peak];
    let mut left = None;
    for i in (0..i_peak).rev() {
        if g[i] < half {
            let t = (half - g[i]) / (g[i + 1] - g[i]);
            left = Some(f[i] + t * (f[i + 1] - f[i]));
            break;
        }
    }
    let mut right = None;
    for i in i_peak + 1..f.len() {
        if g[i] < half {
            let t = (half - g[i - 1]) / (g[i] - g[i - 1]);
            right = Some(f[i - 1] + t * (f[i] - f[i - 1]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) if r > l => Some(r - l),
        _ => None,
    }
}
