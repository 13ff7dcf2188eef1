//! Circuit-level design library for surface-acoustic-wave ladder filters:
//! two-port network algebra on frequency grids, multi-branch mBVD resonator
//! models, Bode-Q and mBVD parameter extraction, third-order ladder
//! synthesis with reference-matched optimization, and IDT dimensioning with
//! apodization-aware electrode scaling.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN, which must fail every bound it meets.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extraction;
pub mod ladder;
pub mod layout;
pub mod mbvd;
pub mod netcore;
mod optim;

pub use error::{Error, Result};
pub use extraction::{bode_q, fit_mbvd, resonance_markers, BodeQCurve, FitReport};
pub use ladder::{
    canonical_ladder, init_design, metrics, optimize, simulate, DesignTargets, FilterMetrics,
    LadderTopology, StageRole,
};
pub use layout::{
    dimension_from_c0, mean_overlap, scale_fingers, select_period, window_value, ApodizationWindow,
    CapacitanceModel, DispersionRow, DispersionTable, ResonatorLayout,
};
pub use mbvd::{MbvdModel, MotionalBranch, ResonatorFigures};
pub use netcore::{
    abcd_of_series_admittance, abcd_of_shunt_admittance, abcd_to_s, cascade, make_grid, s_to_abcd,
    AbcdPoint, AbcdResponse, Complex, FrequencyGrid, GridSpacing, OnePortResponse, SPoint,
    TwoPortResponse,
};
