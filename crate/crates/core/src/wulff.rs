//! Wulff construction: the convex body `{x : (x, n) <= lambda tau(n)}` over
//! a uniform fan of normals, its unit-area normalization, and a randomized
//! check that volume-normalized perturbations never lower the surface energy.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::direction::{Direction, DirectionWeight, ProblemClass, WeightError};
use crate::geom::{
    functional_on_closed, functional_on_polygon, intersect_halfplanes_labeled, signed_area,
    ConvexPolygon, EdgeSource, GeomError, HalfPlane, Point, Rect,
};
use crate::rng::trial_rng;
use crate::tolerances::{wulff_discretization_tolerance, MIN_RESOLUTION, WULFF_NORMALIZATION_TOL};

#[derive(Debug, Error)]
pub enum WulffError {
    #[error("surface tension must be a minimizing-class weight")]
    WrongClass,
    #[error("invalid surface tension: {0}")]
    InvalidWeight(String),
    #[error("resolution {0} is below the minimum of {MIN_RESOLUTION}")]
    Resolution(usize),
    #[error("scale and target area must be positive and finite")]
    NonPositive,
    #[error("body at unit scale has zero area")]
    Degenerate,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

#[derive(Clone, Debug, Serialize)]
pub struct WulffResult {
    pub lambda: f64,
    pub area: f64,
    pub functional_value: f64,
    pub resolution: usize,
    pub polygon: ConvexPolygon,
}

fn check_inputs(tau: &DirectionWeight, m: usize) -> Result<(), WulffError> {
    if tau.class() != ProblemClass::Minimizing {
        return Err(WulffError::WrongClass);
    }
    if m < MIN_RESOLUTION {
        return Err(WulffError::Resolution(m));
    }
    let report = tau.validate();
    if !report.is_valid() {
        return Err(WulffError::InvalidWeight(report.to_string()));
    }
    Ok(())
}

fn build(tau: &DirectionWeight, lambda: f64, m: usize) -> Result<ConvexPolygon, WulffError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(WulffError::NonPositive);
    }
    let mut planes = Vec::with_capacity(m);
    let mut reach: f64 = 0.0;
    for k in 0..m {
        let n = Direction::from_angle(TAU * k as f64 / m as f64);
        let offset = lambda * tau.evaluate(n)?;
        reach = reach.max(offset);
        planes.push(HalfPlane::at_most(n, offset));
    }
    let mut half = 2.0 * reach;
    loop {
        let poly = intersect_halfplanes_labeled(&planes, Rect::centered(half))?;
        if !poly.sources.iter().any(|s| matches!(s, EdgeSource::Box(_))) {
            return Ok(ConvexPolygon::new(poly.vertices)?);
        }
        half *= 4.0;
    }
}

/// Circumscribed discretization of the Wulff body at scale `lambda` with
/// normals at `2 pi k / m`.
pub fn wulff_body(tau: &DirectionWeight, lambda: f64, m: usize) -> Result<ConvexPolygon, WulffError> {
    check_inputs(tau, m)?;
    build(tau, lambda, m)
}

fn result_at(tau: &DirectionWeight, lambda: f64, m: usize) -> Result<WulffResult, WulffError> {
    let polygon = build(tau, lambda, m)?;
    Ok(WulffResult {
        lambda,
        area: polygon.area(),
        functional_value: functional_on_polygon(tau, &polygon)?,
        resolution: m,
        polygon,
    })
}

pub fn wulff_result(tau: &DirectionWeight, lambda: f64, m: usize) -> Result<WulffResult, WulffError> {
    check_inputs(tau, m)?;
    result_at(tau, lambda, m)
}

/// Scale at which the body has area `target`, found by homothety from the
/// unit-scale body and confirmed by rebuilding at that scale.
pub fn normalize_lambda(
    tau: &DirectionWeight,
    target: f64,
    m: usize,
) -> Result<(f64, WulffResult), WulffError> {
    check_inputs(tau, m)?;
    if !(target.is_finite() && target > 0.0) {
        return Err(WulffError::NonPositive);
    }
    let unit_area = build(tau, 1.0, m)?.area();
    if !(unit_area > 0.0) {
        return Err(WulffError::Degenerate);
    }
    let mut lambda = (target / unit_area).sqrt();
    let mut result = result_at(tau, lambda, m)?;
    if (result.area - target).abs() > WULFF_NORMALIZATION_TOL * target {
        // Bisection on the rebuilt area.
        let (mut lo, mut hi) = (0.5 * lambda, 2.0 * lambda);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let r = result_at(tau, mid, m)?;
            if r.area < target {
                lo = mid;
            } else {
                hi = mid;
            }
            let done = (r.area - target).abs() <= WULFF_NORMALIZATION_TOL * target;
            lambda = mid;
            result = r;
            if done {
                break;
            }
        }
    }
    Ok((lambda, result))
}

/// Surface energy of a closed counterclockwise polyline after rescaling it to
/// unit area.
pub fn unit_area_functional(tau: &DirectionWeight, loop_points: &[Point]) -> Result<f64, WulffError> {
    let area = signed_area(loop_points);
    if !(area > 0.0) {
        return Err(WulffError::Degenerate);
    }
    Ok(functional_on_closed(tau, loop_points)? / area.sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimalityReport {
    pub trials: usize,
    pub seed: u64,
    pub resolution: usize,
    /// Energy of the unit-area Wulff polygon.
    pub reference_value: f64,
    /// Smallest competitor energy minus `reference_value`.
    pub min_margin: f64,
    pub tolerance: f64,
    /// Trials whose margin fell below `-tolerance`.
    pub failures: Vec<usize>,
    /// Perturbed shapes (amplitude at least 5%) whose energy came within
    /// `tolerance` of the reference.
    pub near_ties: usize,
    pub passed: bool,
}

/// Radially perturbs the vertices of the Wulff polygon by a random
/// trigonometric polynomial of degree at most 8 and compares energies after
/// rescaling every shape to unit area.
pub fn minimality_harness(
    tau: &DirectionWeight,
    trials: usize,
    seed: u64,
    m: usize,
) -> Result<MinimalityReport, WulffError> {
    let (_, wulff) = normalize_lambda(tau, 1.0, m)?;
    let base = wulff.polygon.vertices().to_vec();
    let reference_value = unit_area_functional(tau, &base)?;
    let tolerance = wulff_discretization_tolerance(m, tau.sampled_max() / tau.sampled_min());

    let outcomes: Vec<Result<(f64, f64), WulffError>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let amplitude: f64 = rng.gen_range(0.0..=1.0);
            let shape = radial_perturbation(&base, amplitude, &mut rng);
            Ok((amplitude, unit_area_functional(tau, &shape)? - reference_value))
        })
        .collect();

    let mut min_margin = f64::INFINITY;
    let mut failures = Vec::new();
    let mut near_ties = 0;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        let (amplitude, margin) = outcome?;
        min_margin = min_margin.min(margin);
        if margin < -tolerance {
            failures.push(trial);
        } else if margin <= tolerance && amplitude >= 0.05 {
            near_ties += 1;
        }
    }
    Ok(MinimalityReport {
        trials,
        seed,
        resolution: m,
        reference_value,
        min_margin: if trials == 0 { 0.0 } else { min_margin },
        tolerance,
        passed: failures.is_empty(),
        failures,
        near_ties,
    })
}

/// `v (1 + g(theta_v))` with `g` a degree-8 trigonometric polynomial,
/// coefficients uniform in `[-0.2/k, 0.2/k]`, scaled so that
/// `max |g| = 0.2 amplitude` over the vertices.
pub fn radial_perturbation<R: Rng>(vertices: &[Point], amplitude: f64, rng: &mut R) -> Vec<Point> {
    const DEGREE: usize = 8;
    let coeffs: Vec<(f64, f64)> = (1..=DEGREE)
        .map(|k| {
            let bound = 0.2 / k as f64;
            (rng.gen_range(-bound..=bound), rng.gen_range(-bound..=bound))
        })
        .collect();
    let g = |theta: f64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let k = (i + 1) as f64;
                a * (k * theta).cos() + b * (k * theta).sin()
            })
            .sum()
    };
    let values: Vec<f64> = vertices.iter().map(|v| g(v.y.atan2(v.x))).collect();
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { 0.2 * amplitude / peak } else { 0.0 };
    vertices
        .iter()
        .zip(&values)
        .map(|(v, g)| v.scale(1.0 + scale * g))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn iso() -> DirectionWeight {
        DirectionWeight::constant(1.0, ProblemClass::Minimizing)
    }

    #[test]
    fn isotropic_body_is_polygonal_disk() {
        let m = 4096;
        let p = wulff_body(&iso(), 1.0, m).unwrap();
        assert!((p.area() - m as f64 * (PI / m as f64).tan()).abs() < 1e-9);
        assert!((p.area() - PI).abs() < 1e-4);
        let p2 = wulff_body(&iso(), 2.0, m).unwrap();
        assert!((p2.area() - 4.0 * PI).abs() < 4e-4);
    }

    #[test]
    fn l1_body_is_square() {
        let tau = DirectionWeight::l1_norm(ProblemClass::Minimizing);
        let p = wulff_body(&tau, 1.0, 256).unwrap();
        assert!((p.area() - 4.0).abs() < 1e-9);
        for v in p.vertices() {
            assert!(v.x.abs() <= 1.0 + 1e-12 && v.y.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn normalization_examples() {
        let (lambda, r) = normalize_lambda(&iso(), 1.0, 4096).unwrap();
        assert!((lambda - 1.0 / PI.sqrt()).abs() < 1e-4);
        assert!((r.area - 1.0).abs() <= 1e-9);
        let (lambda4, _) = normalize_lambda(&iso(), 4.0, 4096).unwrap();
        assert!((lambda4 - 2.0 * lambda).abs() < 1e-12);
        let l1 = DirectionWeight::l1_norm(ProblemClass::Minimizing);
        let (lambda, _) = normalize_lambda(&l1, 1.0, 64).unwrap();
        assert!((lambda - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(wulff_body(&iso(), 1.0, 15), Err(WulffError::Resolution(15))));
        let zero = DirectionWeight::constant(0.0, ProblemClass::Minimizing);
        assert!(matches!(wulff_body(&zero, 1.0, 64), Err(WulffError::InvalidWeight(_))));
        assert!(matches!(
            wulff_body(&DirectionWeight::entropy(), 1.0, 64),
            Err(WulffError::WrongClass)
        ));
    }

    #[test]
    fn rotated_square_costs_more_under_l1() {
        let l1 = DirectionWeight::l1_norm(ProblemClass::Minimizing);
        let h = 0.5 * SQRT_2;
        let diamond = [
            Point::new(h, 0.0),
            Point::new(0.0, h),
            Point::new(-h, 0.0),
            Point::new(0.0, -h),
        ];
        let w = unit_area_functional(&l1, &diamond).unwrap();
        assert!((w - 4.0 * SQRT_2).abs() < 1e-12);
        assert!(w > 4.0);
    }

    #[test]
    fn zero_amplitude_gives_zero_margin() {
        let (_, r) = normalize_lambda(&iso(), 1.0, 256).unwrap();
        let base = r.polygon.vertices().to_vec();
        let mut rng = trial_rng(0, 0);
        let same = radial_perturbation(&base, 0.0, &mut rng);
        let a = unit_area_functional(&iso(), &base).unwrap();
        let b = unit_area_functional(&iso(), &same).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }
}
