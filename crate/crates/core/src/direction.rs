//! Unit directions in the plane and the direction-dependent weights evaluated
//! on them.
//!
//! A [`DirectionWeight`] is either a surface tension `tau` on the whole unit
//! circle (minimizing class) or a boundary-decaying weight `eta` on the
//! closed first-quadrant arc (maximizing class). Closed-form kinds are
//! evaluated from the unit-vector components, so directions built close to
//! the quadrant boundary keep full relative precision in the small component.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::tolerances::{
    DECAY_BAND, DECAY_CEILING, DECAY_PROBE, EVENNESS_TOL, FD_STEP, GEOM_EPS, MIN_POSITIVITY,
    VALIDATION_SAMPLES,
};

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("direction at theta = {theta} is outside the weight's domain")]
    OutOfDomain { theta: f64 },
    #[error("weight is not differentiable at theta = {theta}")]
    NotDifferentiable { theta: f64 },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Unit vector `(cos theta, sin theta)`.
///
/// The angle is canonical; the components are stored alongside so that
/// constructors from components (or from small offsets off an axis) do not
/// lose precision through `cos`/`sin` near the axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    theta: f64,
    n1: f64,
    n2: f64,
}

impl Direction {
    pub fn from_angle(theta: f64) -> Self {
        let (n2, n1) = theta.sin_cos();
        Self { theta, n1, n2 }
    }

    /// Normalizes `(n1, n2)`; returns `None` for a zero or non-finite vector.
    pub fn from_components(n1: f64, n2: f64) -> Option<Self> {
        let norm = n1.hypot(n2);
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        let (n1, n2) = (n1 / norm, n2 / norm);
        Some(Self {
            theta: n2.atan2(n1),
            n1,
            n2,
        })
    }

    /// Direction at angle `phi` above the positive x-axis, `(cos phi, sin phi)`,
    /// with `sin phi` exact for tiny `phi`.
    pub fn near_x_axis(phi: f64) -> Self {
        Self {
            theta: phi,
            n1: phi.cos(),
            n2: phi.sin(),
        }
    }

    /// Direction at angle `phi` short of the positive y-axis, `(sin phi, cos phi)`.
    pub fn near_y_axis(phi: f64) -> Self {
        Self {
            theta: FRAC_PI_2 - phi,
            n1: phi.sin(),
            n2: phi.cos(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn n2(&self) -> f64 {
        self.n2
    }

    pub fn opposite(&self) -> Self {
        Self {
            theta: self.theta + PI,
            n1: -self.n1,
            n2: -self.n2,
        }
    }

    /// True when both components are non-negative up to `GEOM_EPS`.
    pub fn in_closed_quadrant(&self) -> bool {
        self.n1 >= -GEOM_EPS && self.n2 >= -GEOM_EPS
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemClass {
    /// Surface tension on the full circle.
    Minimizing,
    /// Weight on the closed first-quadrant arc, vanishing at its ends.
    Maximizing,
}

#[derive(Clone, Debug)]
pub enum WeightKind {
    Constant(f64),
    /// `|n1| + |n2|`.
    L1Norm,
    /// Lattice-staircase entropy `(n1 + n2) H(n1 / (n1 + n2))`, `H` in nats.
    Entropy,
    /// `H(n1 / (n1 + n2))` without the `(n1 + n2)` factor.
    BareEntropy,
    /// `2 sqrt(|n1 n2|)`.
    SqrtProduct,
    Tabulated(TabulatedWeight),
    /// `N (|n1| + |n2|) - eta(|n1|, |n2|)`: the reflected weight attached to a
    /// box of side `N`.
    DualReflection {
        eta: Arc<DirectionWeight>,
        box_size: f64,
    },
}

#[derive(Clone, Debug)]
pub struct DirectionWeight {
    kind: WeightKind,
    class: ProblemClass,
}

fn xlogx_ratio(small: f64, big: f64) -> f64 {
    // small * ln((small + big) / small) + big * ln(1 + small / big)
    if small <= 0.0 {
        return 0.0;
    }
    small * ((small + big) / small).ln() + big * (small / big).ln_1p()
}

/// `(n1 + n2) H(alpha)` with `alpha = n1 / (n1 + n2)`, using the absolute
/// values of the components; zero on the axes.
pub fn entropy_weight(d: Direction) -> f64 {
    let (a, b) = (d.n1.abs(), d.n2.abs());
    let (small, big) = if a <= b { (a, b) } else { (b, a) };
    xlogx_ratio(small, big)
}

/// Binary entropy in nats of `alpha = |n1| / (|n1| + |n2|)`.
pub fn bare_entropy(d: Direction) -> f64 {
    let (a, b) = (d.n1.abs(), d.n2.abs());
    let (small, big) = if a <= b { (a, b) } else { (b, a) };
    if small <= 0.0 {
        return 0.0;
    }
    let t = small / (small + big);
    -t * t.ln() - (1.0 - t) * (-t).ln_1p()
}

impl DirectionWeight {
    pub fn new(kind: WeightKind, class: ProblemClass) -> Self {
        Self { kind, class }
    }

    pub fn constant(c: f64, class: ProblemClass) -> Self {
        Self::new(WeightKind::Constant(c), class)
    }

    pub fn l1_norm(class: ProblemClass) -> Self {
        Self::new(WeightKind::L1Norm, class)
    }

    pub fn entropy() -> Self {
        Self::new(WeightKind::Entropy, ProblemClass::Maximizing)
    }

    pub fn bare_entropy() -> Self {
        Self::new(WeightKind::BareEntropy, ProblemClass::Maximizing)
    }

    pub fn sqrt_product(class: ProblemClass) -> Self {
        Self::new(WeightKind::SqrtProduct, class)
    }

    pub fn tabulated(table: TabulatedWeight, class: ProblemClass) -> Self {
        Self::new(WeightKind::Tabulated(table), class)
    }

    /// Samples `source` at `thetas` and wraps the samples as a tabulated weight.
    pub fn tabulate(
        source: &DirectionWeight,
        thetas: &[f64],
        class: ProblemClass,
    ) -> Result<Self, WeightError> {
        let values = thetas
            .iter()
            .map(|&t| source.evaluate(Direction::from_angle(t)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::tabulated(
            TabulatedWeight::new(thetas.to_vec(), values)?,
            class,
        ))
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn class(&self) -> ProblemClass {
        self.class
    }

    fn check_domain(&self, d: Direction) -> Result<(), WeightError> {
        match self.class {
            ProblemClass::Minimizing => Ok(()),
            ProblemClass::Maximizing if d.in_closed_quadrant() => Ok(()),
            ProblemClass::Maximizing => Err(WeightError::OutOfDomain { theta: d.theta }),
        }
    }

    fn table_angle(&self, theta: f64) -> f64 {
        match self.class {
            ProblemClass::Minimizing => theta.rem_euclid(TAU),
            ProblemClass::Maximizing => theta,
        }
    }

    pub fn evaluate(&self, d: Direction) -> Result<f64, WeightError> {
        self.check_domain(d)?;
        Ok(match &self.kind {
            WeightKind::Constant(c) => *c,
            WeightKind::L1Norm => d.n1.abs() + d.n2.abs(),
            WeightKind::Entropy => entropy_weight(d),
            WeightKind::BareEntropy => bare_entropy(d),
            WeightKind::SqrtProduct => 2.0 * (d.n1 * d.n2).abs().sqrt(),
            WeightKind::Tabulated(t) => t.value(self.table_angle(d.theta))?,
            WeightKind::DualReflection { eta, box_size } => {
                let (a, b) = (d.n1.abs(), d.n2.abs());
                let folded = Direction {
                    theta: b.atan2(a),
                    n1: a,
                    n2: b,
                };
                box_size * (a + b) - eta.evaluate(folded)?
            }
        })
    }

    /// Angular derivative `dw/dtheta`.
    pub fn derivative(&self, d: Direction) -> Result<f64, WeightError> {
        self.check_domain(d)?;
        let (n1, n2) = (d.n1, d.n2);
        let interior = n1 > 0.0 && n2 > 0.0;
        match &self.kind {
            WeightKind::Constant(_) => Ok(0.0),
            WeightKind::L1Norm => {
                if n1 == 0.0 || n2 == 0.0 {
                    return Err(WeightError::NotDifferentiable { theta: d.theta });
                }
                Ok(-n1.signum() * n2 + n2.signum() * n1)
            }
            WeightKind::SqrtProduct => {
                let p = n1 * n2;
                if p == 0.0 {
                    return Err(WeightError::NotDifferentiable { theta: d.theta });
                }
                Ok(p.signum() * (n1 * n1 - n2 * n2) / p.abs().sqrt())
            }
            WeightKind::Entropy if interior => {
                // n2 ln(alpha) - n1 ln(1 - alpha)
                let ln_alpha = -(n2 / n1).ln_1p();
                let ln_beta = -(n1 / n2).ln_1p();
                Ok(n2 * ln_alpha - n1 * ln_beta)
            }
            WeightKind::BareEntropy if interior => {
                let s = n1 + n2;
                Ok(-(n2 / n1).ln() / (s * s))
            }
            WeightKind::Entropy | WeightKind::BareEntropy => {
                Err(WeightError::NotDifferentiable { theta: d.theta })
            }
            WeightKind::Tabulated(t) => {
                let theta = self.table_angle(d.theta);
                let (lo, hi) = t.range();
                if theta - FD_STEP < lo || theta + FD_STEP > hi {
                    return Err(WeightError::OutOfDomain { theta: d.theta });
                }
                Ok((t.value(theta + FD_STEP)? - t.value(theta - FD_STEP)?) / (2.0 * FD_STEP))
            }
            WeightKind::DualReflection { .. } => {
                let plus = self.evaluate(Direction::from_angle(d.theta + FD_STEP))?;
                let minus = self.evaluate(Direction::from_angle(d.theta - FD_STEP))?;
                Ok((plus - minus) / (2.0 * FD_STEP))
            }
        }
    }

    /// Largest value over the validation grid of the weight's domain.
    pub fn sampled_max(&self) -> f64 {
        self.sample_grid()
            .filter_map(|t| self.evaluate(Direction::from_angle(t)).ok())
            .fold(0.0, f64::max)
    }

    /// Smallest value over the validation grid of the weight's domain.
    pub fn sampled_min(&self) -> f64 {
        self.sample_grid()
            .filter_map(|t| self.evaluate(Direction::from_angle(t)).ok())
            .fold(f64::INFINITY, f64::min)
    }

    fn sample_grid(&self) -> impl Iterator<Item = f64> {
        let class = self.class;
        (0..VALIDATION_SAMPLES).map(move |k| match class {
            ProblemClass::Minimizing => TAU * k as f64 / VALIDATION_SAMPLES as f64,
            ProblemClass::Maximizing => {
                FRAC_PI_2 * (k as f64 + 0.5) / VALIDATION_SAMPLES as f64
            }
        })
    }

    /// Checks the class requirements on sampled angles. Never fails; the
    /// returned report lists every violation found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        match self.class {
            ProblemClass::Minimizing => self.validate_minimizing(&mut violations),
            ProblemClass::Maximizing => self.validate_maximizing(&mut violations),
        }
        ValidationReport {
            class: self.class,
            violations,
        }
    }

    fn validate_minimizing(&self, out: &mut Vec<Violation>) {
        for theta in self.sample_grid() {
            let value = match self.evaluate(Direction::from_angle(theta)) {
                Ok(v) => v,
                Err(e) => {
                    out.push(Violation::Unevaluable {
                        theta,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            if !(value >= MIN_POSITIVITY) {
                out.push(Violation::NotPositive { theta, value });
            }
            if let Ok(opposite) = self.evaluate(Direction::from_angle(theta + PI)) {
                let gap = (value - opposite).abs();
                if gap > EVENNESS_TOL * value.abs().max(1.0) {
                    out.push(Violation::NotEven { theta, gap });
                }
            }
        }
    }

    fn validate_maximizing(&self, out: &mut Vec<Violation>) {
        for theta in self.sample_grid() {
            match self.evaluate(Direction::from_angle(theta)) {
                Ok(v) if v >= 0.0 && v.is_finite() => {}
                Ok(value) => out.push(Violation::Negative { theta, value }),
                Err(e) => out.push(Violation::Unevaluable {
                    theta,
                    reason: e.to_string(),
                }),
            }
        }
        let probes = [
            Direction::near_x_axis(DECAY_PROBE),
            Direction::near_y_axis(DECAY_PROBE),
        ];
        for d in probes {
            match self.evaluate(d) {
                Ok(value) if value <= DECAY_CEILING => {}
                Ok(value) => out.push(Violation::NoBoundaryDecay {
                    theta: d.theta,
                    value,
                }),
                Err(e) => out.push(Violation::Unevaluable {
                    theta: d.theta,
                    reason: e.to_string(),
                }),
            }
        }
        // Values must not increase toward either end over the outer bands.
        let band = DECAY_BAND * FRAC_PI_2;
        const STEPS: usize = 64;
        for near_y in [false, true] {
            let mut previous: Option<f64> = None;
            for i in 1..=STEPS {
                let phi = band * i as f64 / STEPS as f64;
                let d = if near_y {
                    Direction::near_y_axis(phi)
                } else {
                    Direction::near_x_axis(phi)
                };
                let Ok(v) = self.evaluate(d) else { continue };
                if let Some(p) = previous {
                    if v < p - 1e-12 * p.abs().max(1.0) {
                        out.push(Violation::NonMonotoneDecay { theta: d.theta });
                        break;
                    }
                }
                previous = Some(v);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NotPositive { theta: f64, value: f64 },
    NotEven { theta: f64, gap: f64 },
    Negative { theta: f64, value: f64 },
    NoBoundaryDecay { theta: f64, value: f64 },
    NonMonotoneDecay { theta: f64 },
    Unevaluable { theta: f64, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotPositive { theta, value } => {
                write!(f, "value {value} below positivity floor at theta = {theta}")
            }
            Violation::NotEven { theta, gap } => {
                write!(f, "tau(theta) and tau(theta + pi) differ by {gap} at theta = {theta}")
            }
            Violation::Negative { theta, value } => {
                write!(f, "negative or non-finite value {value} at theta = {theta}")
            }
            Violation::NoBoundaryDecay { theta, value } => {
                write!(f, "value {value} near the arc end theta = {theta} exceeds the decay ceiling")
            }
            Violation::NonMonotoneDecay { theta } => {
                write!(f, "values increase toward the arc end near theta = {theta}")
            }
            Violation::Unevaluable { theta, reason } => {
                write!(f, "cannot evaluate at theta = {theta}: {reason}")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub class: ProblemClass,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid {:?}-class weight", self.class);
        }
        writeln!(f, "{} violation(s) for {:?}-class weight:", self.violations.len(), self.class)?;
        for v in self.violations.iter().take(8) {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Weight given by samples on a strictly increasing angle grid, interpolated
/// by a shape-preserving (monotone) cubic; linear for fewer than four points.
#[derive(Clone, Debug)]
pub struct TabulatedWeight {
    thetas: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedWeight {
    pub fn new(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self, WeightError> {
        if thetas.len() != values.len() {
            return Err(WeightError::InvalidTable("column lengths differ".into()));
        }
        if thetas.len() < 2 {
            return Err(WeightError::InvalidTable("need at least two rows".into()));
        }
        if thetas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WeightError::InvalidTable(
                "angles must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(WeightError::InvalidTable(
                "values must be finite and non-negative".into(),
            ));
        }
        let slopes = if thetas.len() < 4 {
            Vec::new()
        } else {
            pchip_slopes(&thetas, &values)
        };
        Ok(Self {
            thetas,
            values,
            slopes,
        })
    }

    /// Reads `theta_radians,value` rows after a mandatory header row.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, WeightError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() != 2 || header.iter().all(|h| h.parse::<f64>().is_ok()) {
            return Err(WeightError::InvalidTable(
                "expected a 'theta_radians,value' header row".into(),
            ));
        }
        let mut thetas = Vec::new();
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64, WeightError> {
                record
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| WeightError::InvalidTable(format!("bad row {record:?}")))
            };
            thetas.push(parse(0)?);
            values.push(parse(1)?);
        }
        Self::new(thetas, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, WeightError> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.thetas[0], *self.thetas.last().unwrap())
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, theta: f64) -> Result<f64, WeightError> {
        let (lo, hi) = self.range();
        if !(theta >= lo && theta <= hi) {
            return Err(WeightError::OutOfDomain { theta });
        }
        let i = self
            .thetas
            .partition_point(|&t| t <= theta)
            .saturating_sub(1)
            .min(self.thetas.len() - 2);
        let (t0, t1) = (self.thetas[i], self.thetas[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let h = t1 - t0;
        let s = (theta - t0) / h;
        if self.slopes.is_empty() {
            return Ok(y0 + s * (y1 - y0));
        }
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = pchip_end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, LN_2, SQRT_2};

    fn binary_entropy(a: f64) -> f64 {
        -a * a.ln() - (1.0 - a) * (1.0 - a).ln()
    }

    #[test]
    fn closed_form_values() {
        let d = Direction::from_angle(FRAC_PI_4);
        let one = DirectionWeight::constant(1.0, ProblemClass::Minimizing);
        assert_eq!(one.evaluate(Direction::from_angle(2.3)).unwrap(), 1.0);
        let l1 = DirectionWeight::l1_norm(ProblemClass::Minimizing);
        assert!((l1.evaluate(d).unwrap() - SQRT_2).abs() < 1e-15);
        let sp = DirectionWeight::sqrt_product(ProblemClass::Maximizing);
        assert!((sp.evaluate(d).unwrap() - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        let h = entropy_weight(Direction::from_angle(FRAC_PI_4));
        assert!((h - SQRT_2 * LN_2).abs() < 1e-15);
        assert!((h - 0.980258).abs() < 1e-6);
        let d = Direction::from_components(0.6, 0.8).unwrap();
        let expected = 1.4 * binary_entropy(3.0 / 7.0);
        assert!((entropy_weight(d) - expected).abs() < 1e-15);
        assert!((entropy_weight(d) - 0.956071).abs() < 1e-6);
        assert_eq!(entropy_weight(Direction::from_angle(0.0)), 0.0);
        assert!(entropy_weight(Direction::near_x_axis(1e-12)) < 1e-10);
    }

    #[test]
    fn entropy_keeps_precision_near_axis() {
        // h ~ phi (1 - ln phi) for small phi
        let phi: f64 = 1e-30;
        let h = entropy_weight(Direction::near_y_axis(phi));
        let approx = phi * (1.0 - phi.ln());
        assert!((h / approx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_vanish_at_symmetric_point() {
        let d = Direction::from_angle(FRAC_PI_4);
        for w in [
            DirectionWeight::entropy(),
            DirectionWeight::sqrt_product(ProblemClass::Maximizing),
            DirectionWeight::constant(3.0, ProblemClass::Maximizing),
            DirectionWeight::bare_entropy(),
        ] {
            assert!(w.derivative(d).unwrap().abs() < 1e-14, "{:?}", w.kind());
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let weights = [
            DirectionWeight::entropy(),
            DirectionWeight::bare_entropy(),
            DirectionWeight::sqrt_product(ProblemClass::Maximizing),
            DirectionWeight::l1_norm(ProblemClass::Maximizing),
        ];
        let h = 1e-6;
        for w in &weights {
            for k in 1..40 {
                let theta = FRAC_PI_2 * k as f64 / 40.0;
                let analytic = w.derivative(Direction::from_angle(theta)).unwrap();
                let fd = (w.evaluate(Direction::from_angle(theta + h)).unwrap()
                    - w.evaluate(Direction::from_angle(theta - h)).unwrap())
                    / (2.0 * h);
                assert!((analytic - fd).abs() < 1e-6, "{:?} at {theta}", w.kind());
            }
        }
    }

    #[test]
    fn maximizing_domain_is_closed_quadrant() {
        let w = DirectionWeight::entropy();
        assert!(w.evaluate(Direction::from_angle(0.0)).is_ok());
        assert!(w.evaluate(Direction::from_angle(FRAC_PI_2)).is_ok());
        assert!(matches!(
            w.evaluate(Direction::from_angle(2.0)),
            Err(WeightError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn validation_examples() {
        assert!(DirectionWeight::constant(1.0, ProblemClass::Minimizing)
            .validate()
            .is_valid());
        let bad = DirectionWeight::constant(1.0, ProblemClass::Maximizing).validate();
        assert!(!bad.is_valid());
        assert!(bad
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NoBoundaryDecay { .. })));
        assert!(DirectionWeight::entropy().validate().is_valid());
        assert!(DirectionWeight::sqrt_product(ProblemClass::Maximizing)
            .validate()
            .is_valid());
        assert!(DirectionWeight::l1_norm(ProblemClass::Minimizing)
            .validate()
            .is_valid());
        assert!(!DirectionWeight::constant(0.0, ProblemClass::Minimizing)
            .validate()
            .is_valid());
    }

    #[test]
    fn dual_reflection_values() {
        let w = DirectionWeight::new(
            WeightKind::DualReflection {
                eta: Arc::new(DirectionWeight::entropy()),
                box_size: 10.0,
            },
            ProblemClass::Minimizing,
        );
        let d = Direction::from_angle(FRAC_PI_4).opposite();
        let v = w.evaluate(d).unwrap();
        assert!((v - (10.0 * SQRT_2 - SQRT_2 * LN_2)).abs() < 1e-12);
        assert!((v - 13.161877).abs() < 1e-6);
    }

    #[test]
    fn tabulated_linear_fallback_and_domain() {
        let t = TabulatedWeight::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert!((t.value(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(t.value(2.5).is_err());
        assert!(TabulatedWeight::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedWeight::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn pchip_does_not_overshoot() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let t = TabulatedWeight::new(x, y).unwrap();
        for i in 0..900 {
            let v = t.value(i as f64 / 100.0).unwrap();
            assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        }
    }

    #[test]
    fn csv_requires_header() {
        let good = "theta_radians,value\n0.0,1.0\n1.0,2.0\n";
        assert!(TabulatedWeight::from_reader(good.as_bytes()).is_ok());
        let bad = "0.0,1.0\n1.0,2.0\n2.0,3.0\n";
        assert!(TabulatedWeight::from_reader(bad.as_bytes()).is_err());
        let decreasing = "theta,value\n1.0,1.0\n0.5,2.0\n";
        assert!(TabulatedWeight::from_reader(decreasing.as_bytes()).is_err());
    }

    #[test]
    fn tabulated_derivative_rejects_grid_ends() {
        let grid: Vec<f64> = (0..=64).map(|i| FRAC_PI_2 * i as f64 / 64.0).collect();
        let w =
            DirectionWeight::tabulate(&DirectionWeight::entropy(), &grid, ProblemClass::Maximizing)
                .unwrap();
        assert!(w.derivative(Direction::from_angle(0.0)).is_err());
        assert!(w.derivative(Direction::from_angle(FRAC_PI_4)).unwrap().abs() < 1e-3);
    }
}
