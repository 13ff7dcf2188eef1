//! Frequency grids and two-port network algebra.
//!
//! Chain (ABCD) matrices are the internal composition representation:
//! cascading is an exact per-frequency matrix product. Scattering parameters
//! are a view of an ABCD response at a stated real reference impedance.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Complex sample used throughout the crate.
pub type Complex = Complex64;

/// Grid point spacing for [`make_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    Linear,
    Log,
}

/// Ordered set of frequencies in Hz. Strictly increasing, all positive,
/// at least two points. Angular frequency is derived, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    /// Builds a grid from explicit points, validating the invariants.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, &f) in points.iter().enumerate() {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "point {i} is {f}, must be finite and > 0"
                )));
            }
            if i > 0 && f <= points[i - 1] {
                return Err(Error::InvalidGrid(format!(
                    "points must be strictly increasing ({} then {f} at index {i})",
                    points[i - 1]
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least two points
    }

    /// Angular frequency 2*pi*f at index `i`.
    pub fn omega(&self, i: usize) -> f64 {
        TAU * self.points[i]
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|&f| TAU * f)
    }
}

/// One 2x2 chain matrix: [[A, B], [C, D]]. A and D dimensionless,
/// B in ohm, C in siemens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcdPoint {
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
}

impl AbcdPoint {
    pub fn identity() -> Self {
        Self {
            a: Complex::new(1.0, 0.0),
            b: Complex::new(0.0, 0.0),
            c: Complex::new(0.0, 0.0),
            d: Complex::new(1.0, 0.0),
        }
    }

    /// Matrix product self * rhs (port-1-to-port-2 order).
    pub fn mul(&self, rhs: &AbcdPoint) -> AbcdPoint {
        AbcdPoint {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn det(&self) -> Complex {
        self.a * self.d - self.b * self.c
    }
}

/// Per-frequency chain matrices on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcdResponse {
    grid: FrequencyGrid,
    matrices: Vec<AbcdPoint>,
}

impl AbcdResponse {
    pub fn new(grid: FrequencyGrid, matrices: Vec<AbcdPoint>) -> Result<Self> {
        if matrices.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} matrices for {} grid points",
                matrices.len(),
                grid.len()
            )));
        }
        for (i, m) in matrices.iter().enumerate() {
            let finite = [m.a, m.b, m.c, m.d]
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite());
            if !finite {
                return Err(Error::SingularAtFrequency {
                    f_hz: grid.points()[i],
                    context: "non-finite chain matrix entry",
                });
            }
        }
        Ok(Self { grid, matrices })
    }

    /// Through connection on the given grid.
    pub fn identity(grid: FrequencyGrid) -> Self {
        let matrices = vec![AbcdPoint::identity(); grid.len()];
        Self { grid, matrices }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn matrices(&self) -> &[AbcdPoint] {
        &self.matrices
    }
}

/// One 2x2 scattering matrix sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SPoint {
    pub s11: Complex,
    pub s12: Complex,
    pub s21: Complex,
    pub s22: Complex,
}

/// Per-frequency scattering matrices at a real reference impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortResponse {
    grid: FrequencyGrid,
    s: Vec<SPoint>,
    z_ref: f64,
}

impl TwoPortResponse {
    pub fn new(grid: FrequencyGrid, s: Vec<SPoint>, z_ref: f64) -> Result<Self> {
        if !(z_ref.is_finite() && z_ref > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference impedance {z_ref} must be real and > 0"
            )));
        }
        if s.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} scattering samples for {} grid points",
                s.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, s, z_ref })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[SPoint] {
        &self.s
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }
}

/// Per-frequency complex admittance of a one-port, with the reference
/// impedance used when a reflection view is derived from it.
///
/// Samples may be non-finite where an evaluation hit an exactly singular
/// point (a lossless resonance on the grid); [`OnePortResponse::non_finite_points`]
/// reports them. Operations that require finite data reject such points by
/// naming the frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePortResponse {
    grid: FrequencyGrid,
    y: Vec<Complex>,
    z_ref: f64,
}

impl OnePortResponse {
    pub fn new(grid: FrequencyGrid, y: Vec<Complex>, z_ref: f64) -> Result<Self> {
        if !(z_ref.is_finite() && z_ref > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference impedance {z_ref} must be real and > 0"
            )));
        }
        if y.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} admittance samples for {} grid points",
                y.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, y, z_ref })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn admittances(&self) -> &[Complex] {
        &self.y
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    /// Indices and frequencies of samples flagged singular (non-finite).
    pub fn non_finite_points(&self) -> Vec<(usize, f64)> {
        self.y
            .iter()
            .enumerate()
            .filter(|(_, y)| !(y.re.is_finite() && y.im.is_finite()))
            .map(|(i, _)| (i, self.grid.points()[i]))
            .collect()
    }
}

/// Builds a frequency grid with exact endpoints.
pub fn make_grid(
    f_start: f64,
    f_stop: f64,
    n: usize,
    spacing: GridSpacing,
) -> Result<FrequencyGrid> {
    if !(f_start.is_finite() && f_stop.is_finite()) || f_start <= 0.0 {
        return Err(Error::InvalidGrid(format!(
            "bounds must be finite and positive, got [{f_start}, {f_stop}]"
        )));
    }
    if f_stop <= f_start {
        return Err(Error::InvalidGrid(format!(
            "f_stop {f_stop} must exceed f_start {f_start}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 points, got {n}"
        )));
    }
    let mut points = Vec::with_capacity(n);
    let last = (n - 1) as f64;
    for i in 0..n {
        let t = i as f64 / last;
        let f = match spacing {
            GridSpacing::Linear => f_start + (f_stop - f_start) * t,
            GridSpacing::Log => f_start * (f_stop / f_start).powf(t),
        };
        points.push(f);
    }
    // Pin the endpoints so they are bit-exact regardless of rounding.
    points[0] = f_start;
    points[n - 1] = f_stop;
    FrequencyGrid::from_points(points)
}

/// Embeds a one-port admittance as a series element: [[1, 1/Y], [0, 1]].
pub fn abcd_of_series_admittance(y: &OnePortResponse) -> Result<AbcdResponse> {
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let mut matrices = Vec::with_capacity(y.grid().len());
    for (i, &yi) in y.admittances().iter().enumerate() {
        if !(yi.re.is_finite() && yi.im.is_finite()) {
            return Err(Error::SingularAtFrequency {
                f_hz: y.grid().points()[i],
                context: "non-finite admittance in series embedding",
            });
        }
        if yi == zero {
            return Err(Error::SingularAtFrequency {
                f_hz: y.grid().points()[i],
                context: "zero admittance gives infinite series impedance",
            });
        }
        matrices.push(AbcdPoint {
            a: one,
            b: one / yi,
            c: zero,
            d: one,
        });
    }
    AbcdResponse::new(y.grid().clone(), matrices)
}

/// Embeds a one-port admittance as a shunt element: [[1, 0], [Y, 1]].
pub fn abcd_of_shunt_admittance(y: &OnePortResponse) -> Result<AbcdResponse> {
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let mut matrices = Vec::with_capacity(y.grid().len());
    for (i, &yi) in y.admittances().iter().enumerate() {
        if !(yi.re.is_finite() && yi.im.is_finite()) {
            return Err(Error::SingularAtFrequency {
                f_hz: y.grid().points()[i],
                context: "non-finite admittance in shunt embedding",
            });
        }
        matrices.push(AbcdPoint {
            a: one,
            b: zero,
            c: yi,
            d: one,
        });
    }
    AbcdResponse::new(y.grid().clone(), matrices)
}

/// Per-frequency matrix product a*b, in port-1-to-port-2 order.
pub fn cascade(a: &AbcdResponse, b: &AbcdResponse) -> Result<AbcdResponse> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let matrices = a
        .matrices()
        .iter()
        .zip(b.matrices())
        .map(|(ma, mb)| ma.mul(mb))
        .collect();
    AbcdResponse::new(a.grid().clone(), matrices)
}

/// Converts a chain-matrix response to scattering parameters at a real
/// reference impedance.
pub fn abcd_to_s(a: &AbcdResponse, z_ref: f64) -> Result<TwoPortResponse> {
    if !(z_ref.is_finite() && z_ref > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reference impedance {z_ref} must be real and > 0"
        )));
    }
    let z0 = Complex::new(z_ref, 0.0);
    let two = Complex::new(2.0, 0.0);
    let mut s = Vec::with_capacity(a.grid().len());
    for (i, m) in a.matrices().iter().enumerate() {
        let den = m.a + m.b / z0 + m.c * z0 + m.d;
        if den.norm() == 0.0 {
            return Err(Error::SingularAtFrequency {
                f_hz: a.grid().points()[i],
                context: "singular ABCD-to-S denominator",
            });
        }
        s.push(SPoint {
            s11: (m.a + m.b / z0 - m.c * z0 - m.d) / den,
            s12: two * m.det() / den,
            s21: two / den,
            s22: (-m.a + m.b / z0 - m.c * z0 + m.d) / den,
        });
    }
    TwoPortResponse::new(a.grid().clone(), s, z_ref)
}

/// Converts scattering parameters back to chain matrices at the response's
/// own reference impedance. Exact inverse of [`abcd_to_s`].
pub fn s_to_abcd(t: &TwoPortResponse) -> Result<AbcdResponse> {
    let one = Complex::new(1.0, 0.0);
    let two = Complex::new(2.0, 0.0);
    let z0 = Complex::new(t.z_ref(), 0.0);
    let mut matrices = Vec::with_capacity(t.grid().len());
    for (i, p) in t.samples().iter().enumerate() {
        if p.s21.norm() == 0.0 {
            return Err(Error::SingularAtFrequency {
                f_hz: t.grid().points()[i],
                context: "no transmission (S21 = 0)",
            });
        }
        let den = two * p.s21;
        matrices.push(AbcdPoint {
            a: ((one + p.s11) * (one - p.s22) + p.s12 * p.s21) / den,
            b: z0 * ((one + p.s11) * (one + p.s22) - p.s12 * p.s21) / den,
            c: ((one - p.s11) * (one - p.s22) - p.s12 * p.s21) / (den * z0),
            d: ((one - p.s11) * (one + p.s22) + p.s12 * p.s21) / den,
        });
    }
    AbcdResponse::new(t.grid().clone(), matrices)
}
