//! The maximizing construction: the body `{x : (x, n) >= lambda eta(n)}`
//! over first-quadrant normals, whose lower-left boundary is the monotone
//! curve maximizing the weighted length `V_eta` at fixed enclosed area.
//!
//! The body is built by reflecting every constraint to `<=` form and
//! clipping a square window, then the boundary chain between the two axes is
//! read off the edge labels. The chain ends are replaced by analytic tails
//! fitted to the last vertices.
//!
//! Divergence of the enclosed area is decided by an independent
//! upper-envelope computation over a much wider set of normals reaching
//! `1e-30` rad from the axes, integrated over windows `[0, 2^k]`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::direction::{Direction, DirectionWeight, ProblemClass, WeightError};
use crate::geom::{
    curve_volume, functional_on_curve, functional_on_polyline, intersect_halfplanes_labeled,
    simpson, sup_distance, sup_distance_to_fn, BoxSide, CurveTails, Decay, EdgeSource, GeomError,
    HalfPlane, MonotoneCurve, Point, Rect, Volume,
};
use crate::limit_curve;
use crate::rng::trial_rng;
use crate::tolerances::{max_discretization_tolerance, MAX_NORMALIZATION_TOL, MIN_RESOLUTION};

#[derive(Debug, Error)]
pub enum MaxShapeError {
    #[error("weight must be a maximizing-class weight")]
    WrongClass,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("resolution {0} is below the minimum of {MIN_RESOLUTION}")]
    Resolution(usize),
    #[error("scale, window and target must be positive and finite")]
    NonPositive,
    #[error("boundary does not close inside the window of size {window}")]
    WindowTooSmall { window: f64 },
    #[error("enclosed volume diverges: {0}")]
    Divergent(Box<DivergenceVerdict>),
    #[error("enclosed volume is finite; a divergence witness needs a divergent weight")]
    NotDivergent,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

fn serialize_volume<S: Serializer>(v: &Volume, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Volume::Finite(x) => s.serialize_f64(*x),
        Volume::Divergent => s.serialize_str("divergent"),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxShapeResult {
    pub lambda: f64,
    #[serde(serialize_with = "serialize_volume")]
    pub volume: Volume,
    pub functional_value: f64,
    pub resolution: usize,
    pub curve: MonotoneCurve,
    pub tail: CurveTails,
}

/// Raw boundary chain of the clipped body, from its hit on the `x = 0` side
/// to its hit on the `y = 0` side.
#[derive(Clone, Debug)]
pub struct MaxChain {
    pub vertices: Vec<Point>,
    /// Angle of the normal of the plane carrying segment `i`.
    pub segment_thetas: Vec<f64>,
    pub lambda: f64,
    pub window: f64,
}

fn check_weight(eta: &DirectionWeight) -> Result<(), MaxShapeError> {
    if eta.class() != ProblemClass::Maximizing {
        return Err(MaxShapeError::WrongClass);
    }
    let report = eta.validate();
    if !report.is_valid() {
        return Err(MaxShapeError::InvalidWeight(report.to_string()));
    }
    Ok(())
}

fn check_inputs(eta: &DirectionWeight, m: usize) -> Result<(), MaxShapeError> {
    check_weight(eta)?;
    if m < MIN_RESOLUTION {
        return Err(MaxShapeError::Resolution(m));
    }
    Ok(())
}

fn positive(v: f64) -> Result<f64, MaxShapeError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(MaxShapeError::NonPositive)
    }
}

/// Midpoint angles `(k + 1/2) (pi/2) / m`.
pub fn midpoint_angles(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| FRAC_PI_2 * (k as f64 + 0.5) / m as f64)
        .collect()
}

fn chain_unchecked(
    eta: &DirectionWeight,
    lambda: f64,
    m: usize,
    window: f64,
) -> Result<MaxChain, MaxShapeError> {
    let thetas = midpoint_angles(m);
    let planes = thetas
        .iter()
        .map(|&t| {
            let n = Direction::from_angle(t);
            Ok(HalfPlane::at_least(n, lambda * eta.evaluate(n)?))
        })
        .collect::<Result<Vec<_>, WeightError>>()?;
    let poly = intersect_halfplanes_labeled(&planes, Rect::new(0.0, window, 0.0, window))?;
    let too_small = MaxShapeError::WindowTooSmall { window };
    let n = poly.vertices.len();
    if n == 0 {
        return Err(too_small);
    }
    let is_plane = |i: usize| matches!(poly.sources[i % n], EdgeSource::Plane(_));
    let start = (0..n)
        .find(|&i| is_plane(i) && !is_plane(i + n - 1))
        .ok_or(MaxShapeError::WindowTooSmall { window })?;
    if poly.sources[(start + n - 1) % n] != EdgeSource::Box(BoxSide::Left) {
        return Err(too_small);
    }
    let mut vertices = vec![poly.vertices[start]];
    let mut segment_thetas = Vec::new();
    let mut i = start;
    while let EdgeSource::Plane(k) = poly.sources[i % n] {
        segment_thetas.push(thetas[k]);
        i += 1;
        vertices.push(poly.vertices[i % n]);
        if i - start > n {
            return Err(too_small);
        }
    }
    if poly.sources[i % n] != EdgeSource::Box(BoxSide::Bottom) {
        return Err(too_small);
    }
    Ok(MaxChain {
        vertices,
        segment_thetas,
        lambda,
        window,
    })
}

/// Boundary chain of the body at scale `lambda` clipped to `[0, window]^2`.
pub fn max_chain(
    eta: &DirectionWeight,
    lambda: f64,
    m: usize,
    window: f64,
) -> Result<MaxChain, MaxShapeError> {
    check_inputs(eta, m)?;
    chain_unchecked(eta, positive(lambda)?, m, positive(window)?)
}

/// Default window `16 lambda max(eta)`, doubled until the chain closes.
pub fn max_chain_auto(
    eta: &DirectionWeight,
    lambda: f64,
    m: usize,
) -> Result<MaxChain, MaxShapeError> {
    check_inputs(eta, m)?;
    let lambda = positive(lambda)?;
    let mut window = positive(16.0 * lambda * eta.sampled_max())?;
    let mut last = None;
    for _ in 0..24 {
        match chain_unchecked(eta, lambda, m, window) {
            Ok(chain) => return Ok(chain),
            Err(e @ MaxShapeError::WindowTooSmall { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
        window *= 2.0;
    }
    Err(last.unwrap())
}

/// Fits `v(t)` through anchor `a` and the inner points `b`, `c` (ordered away
/// from the tail) as exponential or power decay, whichever is more
/// consistent across the two point pairs.
fn fit_tail(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<Decay> {
    let (ta, va) = a;
    let (tb, vb) = b;
    let (tc, vc) = c;
    if !(va > 0.0 && vb > va && vc > vb && ta > tb && tb > tc && tc > 0.0) {
        return None;
    }
    let r1 = (vb / va).ln() / (ta - tb);
    let r2 = (vc / va).ln() / (ta - tc);
    let p1 = (vb / va).ln() / (ta / tb).ln();
    let p2 = (vc / va).ln() / (ta / tc).ln();
    let exp_gap = ((r1 - r2) / r1).abs();
    let pow_gap = ((p1 - p2) / p1).abs();
    let candidate = if exp_gap <= pow_gap {
        Decay::Exponential { rate: r1 }
    } else {
        Decay::Power { exponent: p1 }
    };
    let ok = match candidate {
        Decay::Exponential { rate } => rate.is_finite() && rate > 0.0,
        Decay::Power { exponent } => exponent.is_finite() && exponent > 0.0,
    };
    ok.then_some(candidate)
}

/// Drops the axis-touching ends of the chain and continues it with fitted
/// tails.
pub fn curve_from_chain(chain: &MaxChain) -> Result<MonotoneCurve, MaxShapeError> {
    let v = &chain.vertices;
    let k = v.len();
    let offset = (k / 512).max(2);
    let clamp = |p: &Point| Point::new(p.x.max(0.0), p.y.max(0.0));
    if k < 4 * offset + 3 {
        return Ok(MonotoneCurve::new(v.iter().map(clamp).collect())?);
    }
    let right = fit_tail(
        (v[k - 1 - offset].x, v[k - 1 - offset].y),
        (v[k - 1 - 2 * offset].x, v[k - 1 - 2 * offset].y),
        (v[k - 1 - 4 * offset].x, v[k - 1 - 4 * offset].y),
    );
    let top = fit_tail(
        (v[offset].y, v[offset].x),
        (v[2 * offset].y, v[2 * offset].x),
        (v[4 * offset].y, v[4 * offset].x),
    );
    let lo = if top.is_some() { offset } else { 0 };
    let hi = if right.is_some() { k - 1 - offset } else { k - 1 };
    Ok(MonotoneCurve::with_tails(
        v[lo..=hi].iter().map(clamp).collect(),
        CurveTails { right, top },
    )?)
}

/// The maximizing curve at scale `lambda` from `m` midpoint normals, clipped
/// to `[0, window]^2`.
pub fn max_body(
    eta: &DirectionWeight,
    lambda: f64,
    m: usize,
    window: f64,
) -> Result<MonotoneCurve, MaxShapeError> {
    curve_from_chain(&max_chain(eta, lambda, m, window)?)
}

/// As [`max_body`] with the default window and automatic enlargement.
pub fn max_body_auto(eta: &DirectionWeight, lambda: f64, m: usize) -> Result<MonotoneCurve, MaxShapeError> {
    curve_from_chain(&max_chain_auto(eta, lambda, m)?)
}

pub fn max_shape(eta: &DirectionWeight, lambda: f64, m: usize) -> Result<MaxShapeResult, MaxShapeError> {
    let curve = max_body_auto(eta, lambda, m)?;
    Ok(MaxShapeResult {
        lambda,
        volume: curve_volume(&curve),
        functional_value: functional_on_curve(eta, &curve)?,
        resolution: m,
        tail: curve.tails(),
        curve,
    })
}

/// Point of tangency of the support line `(x, n) = lambda eta(n)` with the
/// envelope of all support lines.
pub fn envelope_point(eta: &DirectionWeight, theta: f64, lambda: f64) -> Result<Point, MaxShapeError> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(MaxShapeError::Domain(format!(
            "theta = {theta} is not inside the open quarter arc"
        )));
    }
    let d = Direction::from_angle(theta);
    let value = eta.evaluate(d)?;
    let slope = eta.derivative(d)?;
    let (s, c) = theta.sin_cos();
    Ok(Point::new(
        lambda * (value * c - slope * s),
        lambda * (value * s + slope * c),
    ))
}

/// Scale at which the construction encloses `target`, by homothety from
/// scale one and confirmed by rebuilding.
pub fn normalize_lambda_max(
    eta: &DirectionWeight,
    target: f64,
    m: usize,
) -> Result<(f64, MaxShapeResult), MaxShapeError> {
    check_inputs(eta, m)?;
    let target = positive(target)?;
    let verdict = detect_divergence(eta)?;
    if !verdict.is_finite() {
        return Err(MaxShapeError::Divergent(Box::new(verdict)));
    }
    let unit = max_shape(eta, 1.0, m)?;
    let Volume::Finite(unit_volume) = unit.volume else {
        return Err(MaxShapeError::Divergent(Box::new(verdict)));
    };
    let mut lambda = (target / unit_volume).sqrt();
    let mut result = max_shape(eta, lambda, m)?;
    for _ in 0..8 {
        let Volume::Finite(v) = result.volume else {
            return Err(MaxShapeError::Divergent(Box::new(verdict)));
        };
        if (v - target).abs() <= MAX_NORMALIZATION_TOL * target {
            break;
        }
        lambda *= (target / v).sqrt();
        result = max_shape(eta, lambda, m)?;
    }
    Ok((lambda, result))
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub resolution: usize,
    pub sup_distance: f64,
    pub window: (f64, f64),
    pub lambda1: f64,
    pub volume: f64,
    pub v_eta: f64,
}

/// Builds the unit-area entropy maximizer and measures its distance to the
/// closed-form limit curve on `[0.05, 5]`.
pub fn verify_corollary(m: usize) -> Result<CorollaryReport, MaxShapeError> {
    let eta = DirectionWeight::entropy();
    let (lambda1, result) = normalize_lambda_max(&eta, 1.0, m)?;
    let window = (0.05, 5.0);
    let sup = sup_distance_to_fn(&result.curve, limit_curve::height, window)?;
    Ok(CorollaryReport {
        resolution: m,
        sup_distance: sup,
        window,
        lambda1,
        volume: result.volume.finite().unwrap_or(f64::INFINITY),
        v_eta: result.functional_value,
    })
}

#[derive(Clone, Copy, Debug)]
pub enum ArcRange {
    /// Segments whose normal angle lies in `[lo, hi]`.
    Angles(f64, f64),
    /// Tangency points with abscissa in `[lo, hi]`.
    Abscissa(f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct TriangleIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
    pub points: usize,
}

/// Compares the area of the fan from the origin over an arc with
/// `lambda / 2` times its weighted length, on the polyline inscribed through
/// the tangency points of the construction's support lines.
pub fn triangle_identity_check(
    eta: &DirectionWeight,
    lambda: f64,
    arc: ArcRange,
    m: usize,
) -> Result<TriangleIdentity, MaxShapeError> {
    let chain = max_chain_auto(eta, lambda, m)?;
    let mut points = Vec::new();
    for &theta in &chain.segment_thetas {
        let inside = match arc {
            ArcRange::Angles(lo, hi) => theta >= lo && theta <= hi,
            ArcRange::Abscissa(..) => true,
        };
        if !inside {
            continue;
        }
        let p = envelope_point(eta, theta, lambda)?;
        if let ArcRange::Abscissa(lo, hi) = arc {
            if p.x < lo || p.x > hi {
                continue;
            }
        }
        points.push(p);
    }
    if points.len() < 2 {
        return Err(MaxShapeError::Domain(
            "arc contains fewer than two support segments of the curve".into(),
        ));
    }
    // Chain order runs with increasing x.
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    let lhs: f64 = points.windows(2).map(|w| 0.5 * w[0].cross(w[1]).abs()).sum();
    let rhs = 0.5 * lambda * functional_on_polyline(eta, &points, false)?;
    Ok(TriangleIdentity {
        lhs,
        rhs,
        deviation: (lhs - rhs).abs() / rhs,
        points: points.len(),
    })
}

// Divergence detection.

/// Upper envelope `f(x) = max_n (lambda eta(n) - n1 x) / n2` over `x >= 0`.
#[derive(Clone, Debug)]
struct Envelope {
    /// `(intercept, slope)` of the active lines, slopes increasing.
    lines: Vec<(f64, f64)>,
    /// `breaks[i]` is where line `i` hands over to line `i + 1`.
    breaks: Vec<f64>,
    near_x: Vec<Direction>,
    near_y: Vec<Direction>,
}

const DEEPEST_ANGLE: f64 = 1e-30;

fn envelope_normals(uniform: usize, ratio: f64) -> (Vec<Direction>, Vec<Direction>, Vec<Direction>) {
    let mids: Vec<Direction> = midpoint_angles(uniform)
        .into_iter()
        .map(Direction::from_angle)
        .collect();
    let mut phis = Vec::new();
    let mut phi = FRAC_PI_2 * 0.5 / uniform as f64 / ratio;
    while phi >= DEEPEST_ANGLE {
        phis.push(phi);
        phi /= ratio;
    }
    let near_x = phis.iter().map(|&p| Direction::near_x_axis(p)).collect();
    let near_y = phis.iter().map(|&p| Direction::near_y_axis(p)).collect();
    (mids, near_x, near_y)
}

impl Envelope {
    fn build(eta: &DirectionWeight, lambda: f64) -> Result<Self, WeightError> {
        let (mids, near_x, near_y) = envelope_normals(4096, 1.01);
        let mut dirs: Vec<Direction> = Vec::with_capacity(mids.len() + near_x.len() + near_y.len());
        // Increasing theta gives increasing slope -n1/n2.
        dirs.extend(near_x.iter().rev());
        dirs.extend(mids.iter());
        dirs.extend(near_y.iter());
        let mut lines: Vec<(f64, f64)> = Vec::with_capacity(dirs.len());
        for d in &dirs {
            let a = lambda * eta.evaluate(*d)? / d.n2();
            let b = -d.n1() / d.n2();
            if let Some(&(la, lb)) = lines.last() {
                if b <= lb {
                    if a > la {
                        lines.pop();
                    } else {
                        continue;
                    }
                }
            }
            while lines.len() >= 2 {
                let (a1, b1) = lines[lines.len() - 2];
                let (a2, b2) = lines[lines.len() - 1];
                // Line 2 is hidden when line 3 overtakes line 1 no later than
                // line 2 does.
                let x13 = (a1 - a) / (b - b1);
                let x12 = (a1 - a2) / (b2 - b1);
                if x13 <= x12 {
                    lines.pop();
                } else {
                    break;
                }
            }
            lines.push((a, b));
        }
        let mut breaks: Vec<f64> = lines
            .windows(2)
            .map(|w| (w[0].0 - w[1].0) / (w[1].1 - w[0].1))
            .collect();
        let drop = breaks.iter().take_while(|&&x| x <= 0.0).count();
        lines.drain(..drop);
        breaks.drain(..drop);
        Ok(Self {
            lines,
            breaks,
            near_x,
            near_y,
        })
    }

    /// Vertices `(x, f(x))` at the break points.
    fn vertices(&self) -> Vec<Point> {
        self.breaks
            .iter()
            .zip(&self.lines)
            .map(|(&x, &(a, b))| Point::new(x, a + b * x))
            .collect()
    }

    /// `int_0^w min(w, max(f, 0)) dx`.
    fn clipped_area(&self, w: f64) -> f64 {
        let mut total = 0.0;
        let mut x0 = 0.0;
        for (i, &(a, b)) in self.lines.iter().enumerate() {
            let x1 = self.breaks.get(i).copied().unwrap_or(f64::INFINITY).min(w);
            if x1 > x0 {
                total += clamped_linear_integral(a + b * x0, b, x1 - x0, w);
            }
            if x1 >= w {
                break;
            }
            x0 = x1;
        }
        total
    }
}

/// `int_0^len clamp(y0 + slope t, 0, cap) dt`.
fn clamped_linear_integral(y0: f64, slope: f64, len: f64, cap: f64) -> f64 {
    if slope == 0.0 {
        return y0.clamp(0.0, cap) * len;
    }
    // Breakpoints where the line crosses 0 and cap.
    let mut cuts = vec![0.0, len];
    for level in [0.0, cap] {
        let t = (level - y0) / slope;
        if t > 0.0 && t < len {
            cuts.push(t);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|c| {
            let mid = y0 + slope * 0.5 * (c[0] + c[1]);
            let (ya, yb) = (y0 + slope * c[0], y0 + slope * c[1]);
            if mid <= 0.0 {
                0.0
            } else if mid >= cap {
                cap * (c[1] - c[0])
            } else {
                0.5 * (ya.clamp(0.0, cap) + yb.clamp(0.0, cap)) * (c[1] - c[0])
            }
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Divergent,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceVerdict {
    pub verdict: Verdict,
    pub windows: Vec<f64>,
    pub volumes: Vec<f64>,
    /// Ratios of consecutive volume increments.
    pub increment_ratios: Vec<f64>,
    pub extrapolated_volume: Option<f64>,
}

impl DivergenceVerdict {
    pub fn is_finite(&self) -> bool {
        self.verdict == Verdict::Finite
    }
}

impl std::fmt::Display for DivergenceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let last = self.volumes.last().copied().unwrap_or(0.0);
        let ratio = self.increment_ratios.last().copied().unwrap_or(f64::NAN);
        write!(
            f,
            "{:?} (volume in [0, {}]^2 = {last}, last increment ratio {ratio})",
            self.verdict,
            self.windows.last().copied().unwrap_or(0.0)
        )
    }
}

const DIVERGENCE_MAX_POWER: i32 = 24;
const GEOMETRIC_RATIO: f64 = 0.9;

/// Integrates the scale-one construction over windows `[0, 2^k]^2`,
/// `k = 0..=24`, and classifies the increments.
pub fn detect_divergence(eta: &DirectionWeight) -> Result<DivergenceVerdict, MaxShapeError> {
    check_weight(eta)?;
    let env = Envelope::build(eta, 1.0)?;
    let windows: Vec<f64> = (0..=DIVERGENCE_MAX_POWER).map(|k| 2f64.powi(k)).collect();
    let volumes: Vec<f64> = windows.iter().map(|&w| env.clipped_area(w)).collect();
    let increments: Vec<f64> = volumes.windows(2).map(|v| v[1] - v[0]).collect();
    let increment_ratios: Vec<f64> = increments
        .windows(2)
        .map(|d| if d[0] > 0.0 { d[1] / d[0] } else { 0.0 })
        .collect();
    let last_volume = *volumes.last().unwrap();
    let last_increment = *increments.last().unwrap();
    let settled = last_increment <= 1e-12 * last_volume;
    let geometric = increment_ratios
        .iter()
        .rev()
        .take(4)
        .all(|&r| r <= GEOMETRIC_RATIO);
    let (verdict, extrapolated_volume) = if settled {
        (Verdict::Finite, Some(last_volume))
    } else if geometric {
        let r = *increment_ratios.last().unwrap();
        (Verdict::Finite, Some(last_volume + last_increment * r / (1.0 - r)))
    } else {
        (Verdict::Divergent, None)
    };
    Ok(DivergenceVerdict {
        verdict,
        windows,
        volumes,
        increment_ratios,
        extrapolated_volume,
    })
}

/// Truncation of a divergent construction to a square box of unit enclosed
/// area.
///
/// The witness is the part of `curve` inside `[0, N]^2`, `N = exp(log_box_size)`,
/// closed by the box sides `y = N` and `x = N` (axis-parallel, so they carry
/// no weight). `N` is usually far beyond `f64` range, so only its logarithm
/// is stored and the tail integrals are evaluated in log coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceWitness {
    pub gamma: f64,
    pub log_box_size: f64,
    pub curve: MonotoneCurve,
    pub volume: f64,
    pub value: f64,
    pub bound: f64,
    pub exceeds_bound: bool,
}

/// `int_0^s e^{e u} du` without overflow for moderate arguments.
fn exp_integral(e: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let es = e * s;
    if es.abs() < 1e-8 {
        s * (1.0 + 0.5 * es)
    } else {
        es.exp_m1() / e
    }
}

/// Power-law model `eta ~ eta_ref (phi / phi_ref)^q` of the weight near an
/// axis, fitted at the two deepest sampled normals.
#[derive(Clone, Copy, Debug)]
struct BoundaryModel {
    q: f64,
    phi_ref: f64,
    eta_ref: f64,
}

impl BoundaryModel {
    fn fit(eta: &DirectionWeight, dirs: &[Direction], near_x: bool) -> Result<Self, MaxShapeError> {
        let (d1, d2) = (dirs[dirs.len() - 2], dirs[dirs.len() - 1]);
        let small = |d: Direction| if near_x { d.n2() } else { d.n1() };
        let eta_ref = eta.evaluate(d2)?;
        let q = (eta.evaluate(d1)? / eta_ref).ln() / (small(d1) / small(d2)).ln();
        if !(q > 0.0 && q < 1.0) {
            return Err(MaxShapeError::Domain(format!(
                "boundary growth exponent {q} does not produce power-law tails"
            )));
        }
        Ok(Self {
            q,
            phi_ref: small(d2),
            eta_ref,
        })
    }

    /// Tail exponent `p` of `v ~ t^-p`.
    fn exponent(&self) -> f64 {
        self.q / (1.0 - self.q)
    }
}

struct WitnessModel<'a> {
    eta: &'a DirectionWeight,
    core: Vec<Point>,
    core_area: f64,
    /// Governs `y(x)` past the last vertex.
    right: BoundaryModel,
    /// Governs `x(y)` above the first vertex.
    top: BoundaryModel,
}

impl<'a> WitnessModel<'a> {
    fn new(eta: &'a DirectionWeight) -> Result<Self, MaxShapeError> {
        let env = Envelope::build(eta, 1.0)?;
        let core = env.vertices();
        if core.len() < 3 {
            return Err(MaxShapeError::Domain("construction has too few vertices".into()));
        }
        let right = BoundaryModel::fit(eta, &env.near_y, false)?;
        let top = BoundaryModel::fit(eta, &env.near_x, true)?;
        let core_area = core
            .windows(2)
            .map(|w| 0.5 * (w[1].x - w[0].x) * (w[0].y + w[1].y))
            .sum::<f64>()
            + core[0].x * core[0].y;
        Ok(Self {
            eta,
            core,
            core_area,
            right,
            top,
        })
    }

    fn first(&self) -> Point {
        self.core[0]
    }

    fn last(&self) -> Point {
        self.core[self.core.len() - 1]
    }

    /// Area under the scale-one curve inside `[0, e^log_m]^2`.
    fn area(&self, log_m: f64) -> f64 {
        let (first, last) = (self.first(), self.last());
        if log_m >= first.y.ln().max(last.x.ln()) {
            let right = last.y * last.x * exp_integral(1.0 - self.right.exponent(), log_m - last.x.ln());
            let top = first.x * first.y * exp_integral(1.0 - self.top.exponent(), log_m - first.y.ln());
            return self.core_area + right + top;
        }
        // Box inside the core: clip the polyline directly.
        let m = log_m.exp();
        let mut total = first.x.min(m) * first.y.min(m);
        for w in self.core.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.x >= m {
                break;
            }
            let x1 = b.x.min(m);
            let slope = (b.y - a.y) / (b.x - a.x);
            total += clamped_linear_integral(a.y, slope, x1 - a.x, m);
        }
        total
    }

    /// Weighted length of the scale-one curve inside `[0, e^log_m]^2`.
    fn value(&self, log_m: f64) -> Result<f64, MaxShapeError> {
        let (first, last) = (self.first(), self.last());
        let m = log_m.exp();
        let clipped: Vec<Point> = self
            .core
            .iter()
            .filter(|p| p.x <= m && p.y <= m)
            .copied()
            .collect();
        let mut total = if clipped.len() >= 2 {
            functional_on_polyline(self.eta, &clipped, false)?
        } else {
            0.0
        };
        if log_m > last.x.ln() {
            total += self.tail_value(self.right, last.x, last.y, log_m - last.x.ln(), false)?;
        }
        if log_m > first.y.ln() {
            total += self.tail_value(self.top, first.y, first.x, log_m - first.y.ln(), true)?;
        }
        Ok(total)
    }

    /// Weighted length of `v = v_e (t / t_e)^-p` for `t` in `[t_e, t_e e^s_max]`,
    /// in the log coordinate `s = ln(t / t_e)`.
    fn tail_value(
        &self,
        model: BoundaryModel,
        t_e: f64,
        v_e: f64,
        s_max: f64,
        swap: bool,
    ) -> Result<f64, MaxShapeError> {
        let p = model.exponent();
        let log_scale = (p * v_e / t_e).ln();
        let eval = |s: f64| -> f64 {
            // |dv/dt| = e^log_slope; the integrand is the homogeneous weight
            // of the normal (|dv/dt|, 1) times dt/ds.
            let log_slope = log_scale - (p + 1.0) * s;
            let log_weight = if log_slope >= model.phi_ref.ln() {
                let slope = log_slope.exp();
                let (a, b) = if swap { (1.0, slope) } else { (slope, 1.0) };
                match Direction::from_components(a, b).map(|d| self.eta.evaluate(d)) {
                    Some(Ok(w)) => a.hypot(b).ln() + w.ln(),
                    _ => return f64::NAN,
                }
            } else {
                model.eta_ref.ln() + model.q * (log_slope - model.phi_ref.ln())
            };
            (log_weight + t_e.ln() + s).exp()
        };
        let panels = ((s_max * 16.0).ceil() as usize).clamp(64, 400_000);
        let v = simpson(eval, 0.0, s_max, panels);
        if v.is_nan() {
            return Err(MaxShapeError::Domain("weight not evaluable along a tail".into()));
        }
        Ok(v)
    }
}

/// Truncates the divergent construction at scale `gamma` to the square box
/// in which it encloses unit area; its weighted length must exceed
/// `2 / (3 gamma)`.
pub fn divergence_witness(eta: &DirectionWeight, gamma: f64) -> Result<DivergenceWitness, MaxShapeError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(MaxShapeError::Domain(format!("gamma = {gamma} must lie in (0, 1]")));
    }
    if detect_divergence(eta)?.is_finite() {
        return Err(MaxShapeError::NotDivergent);
    }
    let model = WitnessModel::new(eta)?;
    // Scale gamma maps the box [0, M]^2 of the scale-one curve to [0, gamma M]^2.
    let target = 1.0 / (gamma * gamma);
    let (mut lo, mut hi) = (-50.0f64, 1.0f64);
    while model.area(hi) < target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(MaxShapeError::Domain(
                "truncated area stays below the unit-volume target".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.area(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let log_m = 0.5 * (lo + hi);
    let volume = gamma * gamma * model.area(log_m);
    let value = gamma * model.value(log_m)?;
    let bound = 2.0 / (3.0 * gamma);
    let curve = MonotoneCurve::with_tails(
        model.core.iter().map(|p| p.scale(gamma)).collect(),
        CurveTails {
            right: Some(Decay::Power {
                exponent: model.right.exponent(),
            }),
            top: Some(Decay::Power {
                exponent: model.top.exponent(),
            }),
        },
    )?;
    Ok(DivergenceWitness {
        gamma,
        log_box_size: log_m + gamma.ln(),
        curve,
        volume,
        value,
        bound,
        exceeds_bound: value > bound,
    })
}

// Maximality harness.

#[derive(Clone, Debug, Serialize)]
pub struct MaximalityReport {
    pub trials: usize,
    pub seed: u64,
    pub resolution: usize,
    pub reference_value: f64,
    /// Largest competitor value minus `reference_value`.
    pub max_excess: f64,
    pub tolerance: f64,
    pub violations: Vec<usize>,
    /// Competitors at sup-distance at least 0.05 from the maximizer whose
    /// value came within `tolerance` of it.
    pub near_ties: usize,
    pub passed: bool,
}

/// Weighted length of the curve after homothetic rescaling to unit volume.
pub fn unit_volume_functional(eta: &DirectionWeight, c: &MonotoneCurve) -> Result<f64, MaxShapeError> {
    let volume = match curve_volume(c) {
        Volume::Finite(v) if v > 0.0 => v,
        _ => return Err(MaxShapeError::Domain("curve volume is not positive and finite".into())),
    };
    Ok(functional_on_curve(eta, c)? / volume.sqrt())
}

/// Pool-adjacent-violators projection onto non-increasing sequences.
fn project_non_increasing(y: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y.iter() {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (b_mean, b_len) = blocks[blocks.len() - 1];
            let (a_mean, a_len) = blocks[blocks.len() - 2];
            if a_mean >= b_mean {
                break;
            }
            let len = a_len + b_len;
            let mean = (a_mean * a_len as f64 + b_mean * b_len as f64) / len as f64;
            blocks.pop();
            *blocks.last_mut().unwrap() = (mean, len);
        }
    }
    let mut i = 0;
    for (mean, len) in blocks {
        for v in &mut y[i..i + len] {
            *v = mean.max(0.0);
        }
        i += len;
    }
}

#[derive(Clone, Copy, Debug)]
enum Perturbation {
    AreaExchange,
    SmoothBump,
}

fn perturb<R: Rng>(base: &MonotoneCurve, kind: Perturbation, rng: &mut R) -> Option<MonotoneCurve> {
    let pts = base.points();
    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let mut ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
    let (x_lo, x_hi) = (xs[0].max(0.05), xs[xs.len() - 1].min(4.0));
    let magnitude = rng.gen_range(0.02..=0.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    match kind {
        Perturbation::AreaExchange => {
            let interval = |rng: &mut R| {
                let width = rng.gen_range(0.05..=0.5);
                let start = rng.gen_range(x_lo..=(x_hi - width).max(x_lo));
                (start, start + width)
            };
            let (a0, a1) = interval(rng);
            let (mut b0, mut b1) = interval(rng);
            if b0 < a1 && a0 < b1 {
                // Overlap: move the second interval past the first.
                let width = b1 - b0;
                b0 = a1;
                b1 = (a1 + width).min(xs[xs.len() - 1]);
            }
            let weight = |lo: f64, hi: f64| -> f64 {
                (0..xs.len())
                    .filter(|&i| xs[i] >= lo && xs[i] <= hi)
                    .map(|i| {
                        let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
                        let right = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { 0.0 };
                        0.5 * (left + right)
                    })
                    .sum()
            };
            let (wa, wb) = (weight(a0, a1), weight(b0, b1));
            if wa <= 0.0 || wb <= 0.0 {
                return None;
            }
            let mid = 0.5 * (a0 + a1);
            let level = base.y_at(mid).unwrap_or(1.0);
            let shift_a = magnitude * level;
            let shift_b = -shift_a * wa / wb;
            for i in 0..xs.len() {
                if xs[i] >= a0 && xs[i] <= a1 {
                    ys[i] += shift_a;
                } else if xs[i] >= b0 && xs[i] <= b1 {
                    ys[i] += shift_b;
                }
            }
        }
        Perturbation::SmoothBump => {
            let center = rng.gen_range(x_lo..=x_hi);
            let width = rng.gen_range(0.05..=1.0);
            for i in 0..xs.len() {
                let z = (xs[i] - center) / width;
                ys[i] *= 1.0 + magnitude * (-z * z).exp();
            }
        }
    }
    project_non_increasing(&mut ys);
    let points: Vec<Point> = xs.iter().zip(&ys).map(|(&x, &y)| Point::new(x, y)).collect();
    let tails = base.tails();
    let first = points[0];
    let last = points[points.len() - 1];
    let tails = CurveTails {
        right: tails.right.filter(|_| last.y > 0.0),
        top: tails.top.filter(|_| first.y > 0.0 && first.x > 0.0),
    };
    MonotoneCurve::with_tails(points, tails).ok()
}

/// Random admissible competitors around the unit-volume maximizer, each
/// rescaled to unit volume, must not exceed its weighted length by more than
/// the discretization tolerance.
pub fn maximality_harness(
    eta: &DirectionWeight,
    trials: usize,
    seed: u64,
    m: usize,
) -> Result<MaximalityReport, MaxShapeError> {
    let (_, maximizer) = normalize_lambda_max(eta, 1.0, m)?;
    let base = maximizer.curve;
    let reference_value = unit_volume_functional(eta, &base)?;
    let tolerance = max_discretization_tolerance(m, reference_value);
    let window = (0.2, 2.5);

    let outcomes: Vec<Option<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let kind = if trial % 2 == 0 {
                Perturbation::AreaExchange
            } else {
                Perturbation::SmoothBump
            };
            let competitor = perturb(&base, kind, &mut rng)?;
            let volume = curve_volume(&competitor).finite()?;
            let value = functional_on_curve(eta, &competitor).ok()? / volume.sqrt();
            let rescaled = competitor.scaled(1.0 / volume.sqrt());
            let distance = sup_distance(&rescaled, &base, window).ok()?;
            Some((value - reference_value, distance))
        })
        .collect();

    let mut max_excess = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut near_ties = 0;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        let Some((excess, distance)) = outcome else { continue };
        max_excess = max_excess.max(excess);
        if excess > tolerance {
            violations.push(trial);
        } else if excess >= -tolerance && distance >= 0.05 {
            near_ties += 1;
        }
    }
    Ok(MaximalityReport {
        trials,
        seed,
        resolution: m,
        reference_value,
        max_excess: if max_excess.is_finite() { max_excess } else { 0.0 },
        tolerance,
        passed: violations.is_empty() && near_ties == 0,
        violations,
        near_ties,
    })
}
