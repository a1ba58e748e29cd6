//! Reflection duality between the maximizing weight `eta` and the
//! minimizing weight `T_N(n) = N (|n1| + |n2|) - eta(|n1|, |n2|)`.
//!
//! Along any monotone path the two functionals add up segment by segment to
//! `N` times the L1 length of the segment, so their sum depends only on the
//! endpoints. Maximizing one is the same as minimizing the other.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::direction::{Direction, DirectionWeight, ProblemClass, WeightError, WeightKind};
use crate::geom::{
    curve_volume, functional_on_curve, functional_on_polyline, GeomError, MonotoneCurve, Point,
};
use crate::maxshape::{normalize_lambda_max, MaxShapeError};
use crate::rng::trial_rng;
use crate::tolerances::{max_discretization_tolerance, VALIDATION_SAMPLES};

#[derive(Debug, Error)]
pub enum DualityError {
    #[error("endpoints must satisfy 0 < coordinates < N with p1 left of and above p2")]
    Endpoints,
    #[error("box size N = {box_size} too small: T_N = {value} at theta = {theta}")]
    BoxTooSmall { box_size: f64, theta: f64, value: f64 },
    #[error("curve {index} does not run from p1 to p2")]
    EndpointMismatch { index: usize },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    MaxShape(#[from] MaxShapeError),
}

#[derive(Clone, Debug)]
pub struct DualityInstance {
    pub eta: DirectionWeight,
    pub box_size: f64,
    pub p1: Point,
    pub p2: Point,
}

impl DualityInstance {
    pub fn new(eta: DirectionWeight, box_size: f64, p1: Point, p2: Point) -> Result<Self, DualityError> {
        let inside = |p: Point| p.x > 0.0 && p.y > 0.0 && p.x < box_size && p.y < box_size;
        if !(box_size.is_finite() && inside(p1) && inside(p2) && p1.x < p2.x && p1.y > p2.y) {
            return Err(DualityError::Endpoints);
        }
        Ok(Self {
            eta,
            box_size,
            p1,
            p2,
        })
    }

    /// `N (|dx| + |dy|)` between the endpoints.
    pub fn constant(&self) -> f64 {
        self.box_size * ((self.p2.x - self.p1.x).abs() + (self.p2.y - self.p1.y).abs())
    }
}

/// The reflected weight, after checking it is positive on a uniform grid of
/// normals.
pub fn t_n_weight(inst: &DualityInstance) -> Result<DirectionWeight, DualityError> {
    let w = DirectionWeight::new(
        WeightKind::DualReflection {
            eta: Arc::new(inst.eta.clone()),
            box_size: inst.box_size,
        },
        ProblemClass::Minimizing,
    );
    for k in 0..VALIDATION_SAMPLES {
        let theta = std::f64::consts::TAU * (k as f64 + 0.5) / VALIDATION_SAMPLES as f64;
        let value = w.evaluate(Direction::from_angle(theta))?;
        if !(value > 0.0) {
            return Err(DualityError::BoxTooSmall {
                box_size: inst.box_size,
                theta,
                value,
            });
        }
    }
    Ok(w)
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    #[serde(rename = "N")]
    pub box_size: f64,
    pub endpoints: [Point; 2],
    /// `N` times the L1 distance between the endpoints.
    pub constant: f64,
    pub sums: Vec<f64>,
    pub max_relative_deviation: f64,
    pub trials: usize,
    pub disagreements: usize,
}

fn endpoints_match(c: &MonotoneCurve, inst: &DualityInstance) -> bool {
    let close = |a: Point, b: Point| a.dist(b) <= 1e-12 * inst.box_size;
    close(c.first(), inst.p1) && close(c.last(), inst.p2)
}

/// `V_eta(H) + W_{T_N}(H)` on each curve, with `W` taken over the reversed
/// normals, against the endpoint constant.
pub fn duality_identity_check(
    inst: &DualityInstance,
    curves: &[MonotoneCurve],
) -> Result<DualityReport, DualityError> {
    let t = t_n_weight(inst)?;
    let constant = inst.constant();
    let mut sums = Vec::with_capacity(curves.len());
    for (index, c) in curves.iter().enumerate() {
        if !endpoints_match(c, inst) {
            return Err(DualityError::EndpointMismatch { index });
        }
        let v = functional_on_polyline(&inst.eta, c.points(), false)?;
        let w = functional_on_polyline(&t, c.points(), true)?;
        sums.push(v + w);
    }
    let max_relative_deviation = sums
        .iter()
        .map(|s| (s - constant).abs() / constant)
        .fold(0.0, f64::max);
    Ok(DualityReport {
        box_size: inst.box_size,
        endpoints: [inst.p1, inst.p2],
        constant,
        sums,
        max_relative_deviation,
        trials: curves.len(),
        disagreements: 0,
    })
}

/// Random monotone polyline from `p1` to `p2` with `interior` free vertices;
/// with probability one half each step is split into an axis-parallel pair.
pub fn random_monotone_path<R: Rng + ?Sized>(
    p1: Point,
    p2: Point,
    interior: usize,
    rng: &mut R,
) -> Result<MonotoneCurve, DualityError> {
    let mut xs: Vec<f64> = (0..interior).map(|_| rng.gen_range(p1.x..p2.x)).collect();
    let mut ys: Vec<f64> = (0..interior).map(|_| rng.gen_range(p2.y..p1.y)).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(|a, b| b.total_cmp(a));
    let mut pts = vec![p1];
    for (&x, &y) in xs.iter().zip(&ys) {
        if rng.gen_bool(0.5) {
            let prev = *pts.last().unwrap();
            pts.push(Point::new(x, prev.y));
        }
        pts.push(Point::new(x, y));
    }
    pts.push(p2);
    pts.dedup_by(|a, b| a.dist(*b) <= 1e-12);
    Ok(MonotoneCurve::new(pts)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxReport {
    #[serde(rename = "N")]
    pub box_size: f64,
    pub endpoints: [Point; 2],
    pub constant: f64,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub arc_value: f64,
    pub arc_dual_value: f64,
    /// Smallest `V(arc) - V(competitor)`.
    pub min_value_margin: f64,
    /// Smallest `W(competitor) - W(arc)`.
    pub min_dual_margin: f64,
    /// Competitors ranked differently relative to the arc by the two
    /// functionals.
    pub disagreements: usize,
    pub violations: usize,
    /// Unit-volume value lost by replacing the arc with its chord.
    pub chord_margin: f64,
    pub max_relative_deviation: f64,
    pub passed: bool,
}

fn sin2_bump(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        0.0
    } else {
        (std::f64::consts::PI * (x - a) / (b - a)).sin().powi(2)
    }
}

/// Area under the polyline per unit shift of each vertex ordinate.
fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
            let right = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// The arc plus `eps (b_1 - kappa b_2)` for two compact bumps, `kappa`
/// chosen so that the area under the polyline is unchanged; `eps` is halved
/// until the result is monotone.
fn bump_competitor<R: Rng + ?Sized>(arc: &[Point], rng: &mut R) -> Option<MonotoneCurve> {
    let xs: Vec<f64> = arc.iter().map(|p| p.x).collect();
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let span = x1 - x0;
    let interval = |rng: &mut R| {
        let width = rng.gen_range(0.1..=0.5) * span;
        let start = rng.gen_range(x0..=x1 - width);
        (start, start + width)
    };
    let (a1, b1) = interval(rng);
    let (a2, b2) = interval(rng);
    let weights = trapezoid_weights(&xs);
    let mass = |a: f64, b: f64| -> f64 {
        xs.iter().zip(&weights).map(|(&x, &w)| w * sin2_bump(x, a, b)).sum()
    };
    let (m1, m2) = (mass(a1, b1), mass(a2, b2));
    if m1 <= 0.0 || m2 <= 0.0 {
        return None;
    }
    let kappa = m1 / m2;
    let mut eps = rng.gen_range(0.02..=0.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    for _ in 0..12 {
        let pts: Vec<Point> = arc
            .iter()
            .map(|p| {
                let d = sin2_bump(p.x, a1, b1) - kappa * sin2_bump(p.x, a2, b2);
                Point::new(p.x, p.y + eps * d)
            })
            .collect();
        if pts.windows(2).all(|w| w[1].y <= w[0].y) {
            return MonotoneCurve::new(pts).ok();
        }
        eps *= 0.5;
    }
    None
}

/// Takes the arc of the unit-volume maximizer over `x in [arc.0, arc.1]` and
/// compares it with `trials` equal-area competitors sharing its endpoints,
/// by `V_eta` and by `W_{T_N}`.
pub fn minimax_transfer_check(
    eta: &DirectionWeight,
    box_size: f64,
    arc: (f64, f64),
    trials: usize,
    seed: u64,
    m: usize,
) -> Result<MinimaxReport, DualityError> {
    let (_, maximizer) = normalize_lambda_max(eta, 1.0, m)?;
    let full = maximizer.curve;
    let pts: Vec<Point> = full
        .points()
        .iter()
        .copied()
        .filter(|p| p.x >= arc.0 && p.x <= arc.1)
        .collect();
    if pts.len() < 8 {
        return Err(DualityError::Domain("arc contains too few vertices".into()));
    }
    let inst = DualityInstance::new(eta.clone(), box_size, pts[0], pts[pts.len() - 1])?;
    let t = t_n_weight(&inst)?;
    let constant = inst.constant();
    let arc_value = functional_on_polyline(eta, &pts, false)?;
    let arc_dual_value = functional_on_polyline(&t, &pts, true)?;
    let tolerance = max_discretization_tolerance(m, arc_value);

    let outcomes: Vec<Option<(f64, f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let c = bump_competitor(&pts, &mut rng)?;
            let v = functional_on_polyline(eta, c.points(), false).ok()?;
            let w = functional_on_polyline(&t, c.points(), true).ok()?;
            Some((arc_value - v, w - arc_dual_value, ((v + w) - constant).abs() / constant))
        })
        .collect();

    let mut min_value_margin = f64::INFINITY;
    let mut min_dual_margin = f64::INFINITY;
    let mut disagreements = 0;
    let mut violations = 0;
    let mut max_relative_deviation = ((arc_value + arc_dual_value) - constant).abs() / constant;
    let tie = 1e-12 * constant;
    for (dv, dw, dev) in outcomes.into_iter().flatten() {
        min_value_margin = min_value_margin.min(dv);
        min_dual_margin = min_dual_margin.min(dw);
        max_relative_deviation = max_relative_deviation.max(dev);
        let sign = |x: f64| if x > tie { 1 } else if x < -tie { -1 } else { 0 };
        if sign(dv) != sign(dw) {
            disagreements += 1;
        }
        if dv < -tolerance || dw < -tolerance {
            violations += 1;
        }
    }

    // Replace the arc by its chord in the full curve and renormalize.
    let mut chord_pts: Vec<Point> = full.points().iter().copied().filter(|p| p.x < arc.0).collect();
    chord_pts.push(pts[0]);
    chord_pts.push(pts[pts.len() - 1]);
    chord_pts.extend(full.points().iter().copied().filter(|p| p.x > arc.1));
    let chord = MonotoneCurve::with_tails(chord_pts, full.tails())?;
    let unit_value = |c: &MonotoneCurve| -> Result<f64, DualityError> {
        let vol = curve_volume(c)
            .finite()
            .ok_or_else(|| DualityError::Domain("competitor volume diverges".into()))?;
        Ok(functional_on_curve(eta, c)? / vol.sqrt())
    };
    let chord_margin = unit_value(&full)? - unit_value(&chord)?;
    let passed = disagreements == 0
        && violations == 0
        && chord_margin > max_discretization_tolerance(m, arc_value)
        && max_relative_deviation <= 1e-9;
    Ok(MinimaxReport {
        box_size,
        endpoints: [inst.p1, inst.p2],
        constant,
        trials,
        seed,
        tolerance,
        arc_value,
        arc_dual_value,
        min_value_margin: if min_value_margin.is_finite() { min_value_margin } else { 0.0 },
        min_dual_margin: if min_dual_margin.is_finite() { min_dual_margin } else { 0.0 },
        disagreements,
        violations,
        chord_margin,
        max_relative_deviation,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2, SQRT_2};

    fn instance(eta: DirectionWeight) -> DualityInstance {
        DualityInstance::new(eta, 10.0, Point::new(1.0, 5.0), Point::new(5.0, 1.0)).unwrap()
    }

    #[test]
    fn reflected_weight_values() {
        let t = t_n_weight(&instance(DirectionWeight::entropy())).unwrap();
        let d = Direction::from_components(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2).unwrap();
        let v = t.evaluate(d).unwrap();
        assert!((v - (10.0 * SQRT_2 - SQRT_2 * LN_2)).abs() < 1e-12);
        assert!((v - 13.161877).abs() < 1e-6);
        let zero = t_n_weight(&instance(DirectionWeight::constant(0.0, ProblemClass::Maximizing))).unwrap();
        let v = zero.evaluate(Direction::from_components(-1.0, 0.0).unwrap()).unwrap();
        assert!((v - 10.0).abs() < 1e-15);
    }

    #[test]
    fn reflected_weight_is_reflection_symmetric() {
        let t = t_n_weight(&instance(DirectionWeight::entropy())).unwrap();
        let mut rng = trial_rng(11, 0);
        for _ in 0..256 {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let d = Direction::from_angle(theta);
            let mirror = Direction::from_components(-d.n1(), d.n2()).unwrap();
            assert!((t.evaluate(d).unwrap() - t.evaluate(mirror).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn small_box_is_rejected() {
        let inst = DualityInstance::new(
            DirectionWeight::entropy(),
            0.6,
            Point::new(0.1, 0.5),
            Point::new(0.5, 0.1),
        )
        .unwrap();
        assert!(matches!(t_n_weight(&inst), Err(DualityError::BoxTooSmall { .. })));
        assert!(DualityInstance::new(DirectionWeight::entropy(), 10.0, Point::new(5.0, 1.0), Point::new(1.0, 5.0)).is_err());
    }

    #[test]
    fn segment_and_corner_give_the_constant() {
        for eta in [
            DirectionWeight::entropy(),
            DirectionWeight::sqrt_product(ProblemClass::Maximizing),
        ] {
            let inst = instance(eta);
            let seg = MonotoneCurve::new(vec![inst.p1, inst.p2]).unwrap();
            let corner = MonotoneCurve::new(vec![inst.p1, Point::new(5.0, 5.0), inst.p2]).unwrap();
            let r = duality_identity_check(&inst, &[seg, corner]).unwrap();
            assert_eq!(r.constant, 80.0);
            assert!(r.max_relative_deviation <= 1e-12, "{}", r.max_relative_deviation);
        }
    }

    #[test]
    fn mismatched_endpoints_are_rejected() {
        let inst = instance(DirectionWeight::entropy());
        let c = MonotoneCurve::new(vec![Point::new(1.0, 4.0), inst.p2]).unwrap();
        assert!(matches!(
            duality_identity_check(&inst, &[c]),
            Err(DualityError::EndpointMismatch { index: 0 })
        ));
    }

    #[test]
    fn arc_itself_has_zero_margins() {
        let eta = DirectionWeight::entropy();
        let (_, max) = normalize_lambda_max(&eta, 1.0, 512).unwrap();
        let pts: Vec<Point> = max.curve.points().iter().copied().filter(|p| p.x >= 0.5 && p.x <= 1.5).collect();
        let inst = DualityInstance::new(eta.clone(), 10.0, pts[0], pts[pts.len() - 1]).unwrap();
        let t = t_n_weight(&inst).unwrap();
        let same = MonotoneCurve::new(pts.clone()).unwrap();
        let dv = functional_on_polyline(&eta, &pts, false).unwrap()
            - functional_on_polyline(&eta, same.points(), false).unwrap();
        let dw = functional_on_polyline(&t, same.points(), true).unwrap()
            - functional_on_polyline(&t, &pts, true).unwrap();
        assert!(dv.abs() <= 1e-12 && dw.abs() <= 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn identity_holds_on_random_paths(seed in proptest::prelude::any::<u64>(), k in 0usize..40) {
            let inst = instance(DirectionWeight::entropy());
            let c = random_monotone_path(inst.p1, inst.p2, k, &mut trial_rng(seed, 0)).unwrap();
            let r = duality_identity_check(&inst, &[c]).unwrap();
            proptest::prop_assert!(r.max_relative_deviation <= 1e-12);
        }
    }
}
