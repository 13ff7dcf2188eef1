//! Error type shared by all modules of the crate.

use std::fmt;

/// Errors produced by grid construction, network algebra, model evaluation,
/// extraction and dimensioning.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Frequency grid construction or validation failed.
    InvalidGrid(String),
    /// A model or parameter violates its invariants.
    InvalidParameter(String),
    /// Two responses that must share a grid do not.
    GridMismatch,
    /// A per-frequency operation hit a singular value at the named frequency.
    SingularAtFrequency { f_hz: f64, context: &'static str },
    /// No conductance peak could be located in the data.
    NoResonance,
    /// An extremum sits on the grid boundary; the sweep does not bracket it.
    SpanTooNarrow,
    /// The 3-dB band is not bracketed by the grid.
    BandNotBracketed,
    /// A declared stopband contains no grid point.
    StopbandNotCovered { f_lo_hz: f64, f_hi_hz: f64 },
    /// The starting topology has no passband; optimization cannot begin.
    Infeasible(String),
    /// A lookup fell outside the tabulated range.
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// No integer electrode count reaches the capacitance target within
    /// tolerance; carries the closest achievable value.
    DimensionOutOfReach { target_c0: f64, nearest_c0: f64 },
    /// Window evaluated outside the electrode extent.
    WindowDomain { x: f64, a: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid frequency grid: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::GridMismatch => write!(f, "frequency grids do not match"),
            Error::SingularAtFrequency { f_hz, context } => {
                write!(f, "{context} at {f_hz} Hz")
            }
            Error::NoResonance => write!(f, "no resonance found"),
            Error::SpanTooNarrow => write!(f, "span too narrow"),
            Error::BandNotBracketed => write!(f, "band not bracketed"),
            Error::StopbandNotCovered { f_lo_hz, f_hi_hz } => {
                write!(f, "stopband [{f_lo_hz}, {f_hi_hz}] Hz contains no grid point")
            }
            Error::Infeasible(msg) => write!(f, "infeasible starting point: {msg}"),
            Error::OutOfRange { what, value, lo, hi } => {
                write!(f, "{what} {value} outside tabulated range [{lo}, {hi}]")
            }
            Error::DimensionOutOfReach { target_c0, nearest_c0 } => write!(
                f,
                "no integer electrode count reaches C0 = {target_c0} F within 2% (nearest achievable {nearest_c0} F)"
            ),
            Error::WindowDomain { x, a } => {
                write!(f, "position {x} outside electrode extent [-{a}, {a}]")
            }
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
