//! Numerical tolerances shared across the crate.
//!
//! Every fixed threshold used by the constructions and their validators is
//! defined here so property tests and acceptance checks tune a single table.

use std::f64::consts::PI;

/// Coincidence threshold for points and unit-vector checks.
pub const GEOM_EPS: f64 = 1e-12;

/// Threshold for comparing polygon areas produced by different plane orders.
pub const AREA_TOL: f64 = 1e-10;

/// Normals closer than this (radians) are merged before clipping.
pub const PARALLEL_EPS: f64 = 1e-9;

/// Number of sampled angles used when validating a weight.
pub const VALIDATION_SAMPLES: usize = 4096;

/// Minimizing-class weights must stay above this on every sampled angle.
pub const MIN_POSITIVITY: f64 = 1e-9;

/// Evenness check tolerance, relative to `max(1, |tau|)`.
pub const EVENNESS_TOL: f64 = 1e-12;

/// Angular offset from the quarter-arc ends used by the decay check.
pub const DECAY_PROBE: f64 = 1e-3;

/// Largest value a maximizing-class weight may take at the decay probes.
pub const DECAY_CEILING: f64 = 0.2;

/// Fraction of the quarter arc, at each end, over which values must decrease
/// toward the boundary.
pub const DECAY_BAND: f64 = 0.01;

/// Step of the central finite difference used for tabulated derivatives.
pub const FD_STEP: f64 = 1e-6;

/// Power-law tails whose exponent does not exceed `1 + POWER_TAIL_MARGIN`
/// are reported as divergent.
pub const POWER_TAIL_MARGIN: f64 = 0.05;

/// Sampling grid used by `sup_distance`.
pub const SUP_GRID: usize = 2048;

/// Per-edge samples used by the Hausdorff distance.
pub const HAUSDORFF_EDGE_SAMPLES: usize = 16;

/// Smallest accepted angular resolution for both constructions.
pub const MIN_RESOLUTION: usize = 16;

/// Relative area accuracy demanded of Wulff normalization.
pub const WULFF_NORMALIZATION_TOL: f64 = 1e-9;

/// Relative volume accuracy demanded of maximizer normalization.
pub const MAX_NORMALIZATION_TOL: f64 = 1e-6;

/// Margin allowed to a harness competitor against the Wulff shape:
/// `10 (pi/m)^2 (max tau / min tau)`.
pub fn wulff_discretization_tolerance(m: usize, max_over_min: f64) -> f64 {
    10.0 * (PI / m as f64).powi(2) * max_over_min
}

/// Margin allowed to a harness competitor against the maximizer:
/// `10 (pi/2m)^2 max(1, v)`, with `v` the maximizer's functional value.
pub fn max_discretization_tolerance(m: usize, value: f64) -> f64 {
    10.0 * (PI / (2.0 * m as f64)).powi(2) * value.max(1.0)
}
