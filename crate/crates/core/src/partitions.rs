//! Integer partitions: exact counts, exactly uniform and Boltzmann samplers,
//! Young-diagram profiles, lattice staircase counts, and the statistics that
//! tie random diagrams to the entropy limit curve.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_integer::binomial;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direction::{entropy_weight, Direction};
use crate::geom::{simpson, sup_distance_to_fn, Decay, GeomError, MonotoneCurve, Point};
use crate::limit_curve;
use crate::rng::trial_rng;
use crate::tolerances::GEOM_EPS;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("parts must be positive and non-increasing")]
    InvalidParts,
    #[error("enumeration is limited to n <= {ENUMERATE_MAX}, got {0}")]
    EnumerationTooLarge(u64),
    #[error("exact sampling table is limited to n <= {EXACT_MAX}, got {0}; use sample_boltzmann")]
    ExactTooLarge(u64),
    #[error("Boltzmann sampling needs n >= {BOLTZMANN_MIN}, got {0}")]
    BoltzmannTooSmall(u64),
    #[error("no partition of {n} accepted after {attempts} attempts")]
    RejectionBudget { n: u64, attempts: u64 },
    #[error("staircase endpoints must satisfy a1 <= b1 and a2 >= b2")]
    Orientation,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub const ENUMERATE_MAX: u64 = 30;
pub const EXACT_MAX: u64 = 2000;
pub const BOLTZMANN_MIN: u64 = 100;
pub const REJECTION_BUDGET: u64 = 1_000_000;
/// Smallest size accepted by [`limit_shape_experiment`].
pub const EXPERIMENT_MIN: u64 = 100;

/// Parts in non-increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition(Vec<u64>);

impl Partition {
    pub fn new(parts: Vec<u64>) -> Result<Self, PartitionError> {
        if parts.contains(&0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(PartitionError::InvalidParts);
        }
        Ok(Self(parts))
    }

    /// From multiplicities `r[k - 1] = #{parts equal to k}`.
    pub fn from_multiplicities(r: &[u64]) -> Self {
        let mut parts = Vec::new();
        for (k, &count) in r.iter().enumerate().rev() {
            parts.extend(std::iter::repeat_n(k as u64 + 1, count as usize));
        }
        Self(parts)
    }

    pub fn parts(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn largest(&self) -> u64 {
        self.0.first().copied().unwrap_or(0)
    }

    /// `r[k - 1] = #{i : n_i = k}` for `k = 1..=largest`.
    pub fn multiplicities(&self) -> Vec<u64> {
        let mut r = vec![0; self.largest() as usize];
        for &p in &self.0 {
            r[p as usize - 1] += 1;
        }
        r
    }

    pub fn profile(&self) -> DiagramProfile {
        // Parts are non-increasing, so #{parts >= k} is a partition_point.
        let heights = (1..=self.largest())
            .map(|k| self.0.partition_point(|&p| p >= k) as u64)
            .collect();
        DiagramProfile { heights }
    }
}

/// Step function `phi(y) = #{parts >= ceil(y)}`; `heights[k - 1]` is its
/// value on `(k - 1, k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramProfile {
    heights: Vec<u64>,
}

impl DiagramProfile {
    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    pub fn value(&self, y: f64) -> u64 {
        if y <= 0.0 {
            return self.heights.first().copied().unwrap_or(0);
        }
        let k = y.ceil() as usize;
        self.heights.get(k - 1).copied().unwrap_or(0)
    }

    pub fn area(&self) -> u64 {
        self.heights.iter().sum()
    }

    /// Staircase polyline `(0, c_1), (1, c_1), (1, c_2), ...` with corners only
    /// where the height changes, ending on the axis.
    pub fn staircase(&self) -> Vec<Point> {
        let mut pts = Vec::new();
        let Some(&first) = self.heights.first() else {
            return pts;
        };
        pts.push(Point::new(0.0, first as f64));
        for (i, w) in self.heights.windows(2).enumerate() {
            if w[0] != w[1] {
                let x = (i + 1) as f64;
                pts.push(Point::new(x, w[0] as f64));
                pts.push(Point::new(x, w[1] as f64));
            }
        }
        let x = self.heights.len() as f64;
        pts.push(Point::new(x, *self.heights.last().unwrap() as f64));
        pts.push(Point::new(x, 0.0));
        pts
    }

    /// Staircase with both axes divided by `sqrt(N)`; encloses unit area.
    pub fn scaled(&self) -> Result<MonotoneCurve, PartitionError> {
        let s = 1.0 / (self.area() as f64).sqrt();
        let pts = self.staircase().into_iter().map(|p| p.scale(s)).collect();
        Ok(MonotoneCurve::new(pts)?)
    }
}

// Counting.

/// `p(0), ..., p(n)` by the pentagonal-number recurrence.
pub fn partition_counts(n: u64) -> Vec<BigUint> {
    let n = n as usize;
    let mut p: Vec<BigUint> = Vec::with_capacity(n + 1);
    p.push(BigUint::from(1u32));
    for m in 1..=n {
        let mut plus = BigUint::default();
        let mut minus = BigUint::default();
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > m {
                break;
            }
            let g2 = k * (3 * k + 1) / 2;
            let acc = if k % 2 == 1 { &mut plus } else { &mut minus };
            *acc += &p[m - g1];
            if g2 <= m {
                *acc += &p[m - g2];
            }
        }
        p.push(plus - minus);
    }
    p
}

pub fn partition_count(n: u64) -> BigUint {
    partition_counts(n).pop().unwrap()
}

/// All partitions of `n`, in decreasing lexicographic order.
pub fn enumerate(n: u64) -> Result<Vec<Partition>, PartitionError> {
    if n > ENUMERATE_MAX {
        return Err(PartitionError::EnumerationTooLarge(n));
    }
    fn rec(rest: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        for k in (1..=max.min(rest)).rev() {
            cur.push(k);
            rec(rest - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Lattice staircases from `a` to `b` moving right or down.
pub fn staircase_count(a: (i64, i64), b: (i64, i64)) -> Result<BigUint, PartitionError> {
    if a.0 > b.0 || a.1 < b.1 {
        return Err(PartitionError::Orientation);
    }
    let dx = (b.0 - a.0) as u64;
    let dy = (a.1 - b.1) as u64;
    Ok(binomial(BigUint::from(dx + dy), BigUint::from(dx)))
}

/// Natural logarithm of a positive big integer.
pub fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return (v.iter_u64_digits().next().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).iter_u64_digits().next().unwrap();
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

// Exact uniform sampling.

/// Table of `p(j, <= k)`, the partitions of `j` with largest part at most
/// `k`, for `0 <= k <= j <= n`, stored as fixed-width little-endian limbs.
pub struct UniformSampler {
    n: usize,
    width: usize,
    limbs: Vec<u64>,
}

fn add_into(dst: &mut [u64], a: &[u64], b: &[u64]) {
    let mut carry = 0u64;
    for i in 0..dst.len() {
        let (s1, c1) = a[i].overflowing_add(b[i]);
        let (s2, c2) = s1.overflowing_add(carry);
        dst[i] = s2;
        carry = (c1 | c2) as u64;
    }
    debug_assert_eq!(carry, 0);
}

fn cmp_limbs(a: &[u64], b: &[u64]) -> Ordering {
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl UniformSampler {
    pub fn new(n: u64) -> Result<Self, PartitionError> {
        if n > EXACT_MAX {
            return Err(PartitionError::ExactTooLarge(n));
        }
        let width = (partition_count(n).bits() as usize).div_ceil(64).max(1);
        let n = n as usize;
        let rows = (n + 1) * (n + 2) / 2;
        let mut limbs = vec![0u64; rows * width];
        let mut s = Self { n, width, limbs: Vec::new() };
        limbs[0] = 1;
        let mut tmp = vec![0u64; width];
        for j in 1..=n {
            for k in 1..=j {
                let left = s.offset(j, k - 1);
                let right = s.offset(j - k, k.min(j - k));
                add_into(
                    &mut tmp,
                    &limbs[left..left + width],
                    &limbs[right..right + width],
                );
                let at = s.offset(j, k);
                limbs[at..at + width].copy_from_slice(&tmp);
            }
        }
        s.limbs = limbs;
        Ok(s)
    }

    fn offset(&self, j: usize, k: usize) -> usize {
        (j * (j + 1) / 2 + k) * self.width
    }

    fn entry(&self, j: usize, k: usize) -> &[u64] {
        let at = self.offset(j, k);
        &self.limbs[at..at + self.width]
    }

    pub fn n(&self) -> u64 {
        self.n as u64
    }

    /// `p(j, <= k)` as a big integer.
    pub fn count(&self, j: u64, k: u64) -> BigUint {
        let (j, k) = (j as usize, (k as usize).min(j as usize));
        let mut bytes = Vec::with_capacity(self.width * 8);
        for limb in self.entry(j, k) {
            bytes.extend_from_slice(&limb.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }

    fn below<R: Rng + ?Sized>(&self, bound: &[u64], rng: &mut R) -> Vec<u64> {
        let top = bound.iter().rposition(|&l| l != 0).expect("positive bound");
        let mask = u64::MAX >> bound[top].leading_zeros();
        loop {
            let mut v = vec![0u64; self.width];
            for l in v.iter_mut().take(top) {
                *l = rng.gen();
            }
            v[top] = rng.gen::<u64>() & mask;
            if cmp_limbs(&v, bound) == Ordering::Less {
                return v;
            }
        }
    }

    /// An exactly uniform partition of `n`: the largest part is chosen first
    /// by inverting the cumulative row `p(rest, <= k)` with one uniform draw,
    /// then the remainder is sampled with that part as its bound.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Partition {
        let mut parts = Vec::new();
        let mut rest = self.n;
        let mut bound = self.n;
        while rest > 0 {
            let kmax = bound.min(rest);
            let u = self.below(self.entry(rest, kmax), rng);
            // Smallest k with p(rest, <= k) > u; the largest part is then k.
            let (mut lo, mut hi) = (1usize, kmax);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if cmp_limbs(self.entry(rest, mid), &u) == Ordering::Greater {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            parts.push(lo as u64);
            rest -= lo;
            bound = lo;
        }
        Partition(parts)
    }
}

pub fn sample_uniform_exact<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<Partition, PartitionError> {
    Ok(UniformSampler::new(n)?.sample(rng))
}

// Boltzmann sampling.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoltzmannStrategy {
    /// Multiplicities of parts `k >= 2` are drawn freely and the count of
    /// ones is then forced to complete `n`, accepted with the probability
    /// ratio of that geometric value.
    #[default]
    DivideAndConquer,
    /// All multiplicities drawn freely; accepted only when they sum to `n`.
    Rejection,
}

#[derive(Clone, Debug)]
pub struct BoltzmannDraw {
    pub partition: Partition,
    pub attempts: u64,
}

/// `floor(ln U / (k ln x))`: geometric with success probability `1 - x^k`.
fn geometric<R: Rng + ?Sized>(k: u64, ln_x: f64, rng: &mut R) -> u64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    (u.ln() / (k as f64 * ln_x)).floor() as u64
}

/// A uniform partition of `n` from independent geometric multiplicities at
/// `x = exp(-pi / sqrt(6 n))`, conditioned on total `n` by rejection.
pub fn sample_boltzmann_with<R: Rng + ?Sized>(
    n: u64,
    strategy: BoltzmannStrategy,
    rng: &mut R,
) -> Result<BoltzmannDraw, PartitionError> {
    if n < BOLTZMANN_MIN {
        return Err(PartitionError::BoltzmannTooSmall(n));
    }
    let ln_x = -std::f64::consts::PI / (6.0 * n as f64).sqrt();
    let mut r = vec![0u64; n as usize];
    for attempt in 1..=REJECTION_BUDGET {
        let mut total = 0u64;
        let first = match strategy {
            BoltzmannStrategy::DivideAndConquer => 2,
            BoltzmannStrategy::Rejection => 1,
        };
        let mut ok = true;
        for k in first..=n {
            let rk = geometric(k, ln_x, rng);
            r[k as usize - 1] = rk;
            total += k * rk;
            if total > n {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        match strategy {
            BoltzmannStrategy::DivideAndConquer => {
                let ones = n - total;
                if rng.gen::<f64>() >= (ones as f64 * ln_x).exp() {
                    continue;
                }
                r[0] = ones;
            }
            BoltzmannStrategy::Rejection => {
                if total != n {
                    continue;
                }
            }
        }
        return Ok(BoltzmannDraw {
            partition: Partition::from_multiplicities(&r),
            attempts: attempt,
        });
    }
    Err(PartitionError::RejectionBudget {
        n,
        attempts: REJECTION_BUDGET,
    })
}

pub fn sample_boltzmann<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<Partition, PartitionError> {
    Ok(sample_boltzmann_with(n, BoltzmannStrategy::default(), rng)?.partition)
}

// Entropy checks.

#[derive(Clone, Debug, Serialize)]
pub struct EntropyLimit {
    pub empirical: f64,
    pub limit: f64,
    pub gap: f64,
}

/// `ln #((0, L q), (L r, 0)) / (L sqrt(q^2 + r^2))` against the entropy
/// weight at the chord's normal.
pub fn entropy_limit_check(q: u64, r: u64, scale: u64) -> Result<EntropyLimit, PartitionError> {
    if q == 0 || r == 0 || scale == 0 {
        return Err(PartitionError::Domain("slope and scale must be positive".into()));
    }
    let count = staircase_count((0, (scale * q) as i64), ((scale * r) as i64, 0))?;
    let len = scale as f64 * (q as f64).hypot(r as f64);
    let empirical = ln_biguint(&count) / len;
    let normal = Direction::from_components(q as f64, r as f64).unwrap();
    let limit = entropy_weight(normal);
    Ok(EntropyLimit {
        empirical,
        limit,
        gap: (empirical - limit).abs(),
    })
}

/// `H(a / (a + b)) (a + b)`, the graph-form integrand for a step `(a, -b)`.
fn graph_entropy(dx: f64, drop: f64) -> f64 {
    let s = dx + drop;
    if dx <= 0.0 || drop <= 0.0 {
        return 0.0;
    }
    let (small, big) = if dx < drop { (dx, drop) } else { (drop, dx) };
    small * (s / small).ln() + big * (small / big).ln_1p()
}

fn graph_tail(decay: Decay, t_e: f64, v_e: f64) -> f64 {
    let integrand = |s: f64| match decay {
        Decay::Exponential { rate } => graph_entropy(1.0, rate * v_e * (-s).exp()) / rate,
        Decay::Power { exponent } => {
            let slope = exponent * (v_e / t_e) * (-(exponent + 1.0) * s).exp();
            graph_entropy(1.0, slope) * t_e * s.exp()
        }
    };
    let mut total = 0.0;
    let mut s = 0.0;
    while s < 400.0 {
        let part = simpson(integrand, s, s + 2.0, 64);
        total += part;
        s += 2.0;
        if part <= 1e-17 * total.max(f64::MIN_POSITIVE) {
            return total;
        }
    }
    f64::INFINITY
}

/// `int H(alpha(x)) (1 - c'(x)) dx` in graph coordinates, tails included.
pub fn graph_entropy_integral(c: &MonotoneCurve) -> f64 {
    let pts = c.points();
    let mut total: f64 = pts
        .windows(2)
        .map(|w| graph_entropy(w[1].x - w[0].x, w[0].y - w[1].y))
        .sum();
    let tails = c.tails();
    if let Some(right) = tails.right {
        total += graph_tail(right, c.last().x, c.last().y);
    }
    if let Some(top) = tails.top {
        total += graph_tail(top, c.first().y, c.first().x);
    }
    total
}

#[derive(Clone, Debug, Serialize)]
pub struct HardyRamanujan {
    pub n: u64,
    pub ln_p: f64,
    pub asymptotic: f64,
    pub gap: f64,
}

/// Exact `ln p(n)` against `pi sqrt(2n/3) - ln(4 sqrt(3) n)`.
pub fn hardy_ramanujan_check(n: u64) -> HardyRamanujan {
    hardy_ramanujan_from(n, &partition_count(n))
}

fn hardy_ramanujan_from(n: u64, p: &BigUint) -> HardyRamanujan {
    let x = n as f64;
    let ln_p = ln_biguint(p);
    let asymptotic = std::f64::consts::PI * (2.0 * x / 3.0).sqrt() - (4.0 * 3f64.sqrt() * x).ln();
    HardyRamanujan {
        n,
        ln_p,
        asymptotic,
        gap: (ln_p - asymptotic).abs(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub checks: Vec<HardyRamanujan>,
    /// Least-squares slope of `ln p(n)` against `sqrt(n)`.
    pub slope: f64,
    /// Same with `ln(4 sqrt(3) n)` added back to `ln p(n)`.
    pub corrected_slope: f64,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn growth_fit(ns: &[u64]) -> GrowthFit {
    let max = ns.iter().copied().max().unwrap_or(0);
    let counts = partition_counts(max);
    let checks: Vec<HardyRamanujan> = ns
        .iter()
        .map(|&n| hardy_ramanujan_from(n, &counts[n as usize]))
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).sqrt()).collect();
    let raw: Vec<f64> = checks.iter().map(|c| c.ln_p).collect();
    let corrected: Vec<f64> = checks
        .iter()
        .map(|c| c.ln_p + (4.0 * 3f64.sqrt() * c.n as f64).ln())
        .collect();
    GrowthFit {
        slope: ls_slope(&x, &raw),
        corrected_slope: ls_slope(&x, &corrected),
        checks,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChordSum {
    pub n: u64,
    pub chords: usize,
    pub log_count: f64,
    pub target: f64,
    pub relative_gap: f64,
}

/// Sums `ln #(A, B)` over lattice chords inscribed in the limit curve scaled
/// to area `n` and compares with `sqrt(n) v_eta`. Chord ends are the lattice
/// points nearest to curve points equally spaced in `x - y` over
/// `[-reach, reach]`, closed by axis-parallel runs.
pub fn chord_sum_check(n: u64, chords: usize, reach: f64) -> Result<ChordSum, PartitionError> {
    if chords == 0 || !(reach > 0.0) {
        return Err(PartitionError::Domain("need at least one chord and a positive reach".into()));
    }
    let scale = (n as f64).sqrt();
    let solve = |u: f64| {
        let (mut lo, mut hi) = (1e-12f64, reach + 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - limit_curve::height(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let lattice: Vec<(i64, i64)> = (0..=chords)
        .map(|i| {
            let u = -reach + 2.0 * reach * i as f64 / chords as f64;
            let x = solve(u);
            ((scale * x).round() as i64, (scale * limit_curve::height(x)).round() as i64)
        })
        .collect();
    let mut log_count = 0.0;
    for w in lattice.windows(2) {
        log_count += ln_biguint(&staircase_count(w[0], w[1])?);
    }
    let target = scale * limit_curve::max_entropy_value();
    Ok(ChordSum {
        n,
        chords,
        log_count,
        target,
        relative_gap: (log_count - target).abs() / target,
    })
}

// Limit-shape experiment.

/// Staircase through `(0, h_1), (1, h_1), (1, h_2), ...` for heights on
/// unit steps, scaled by `unit`, continued along the axis up to `x_min`.
fn step_curve(heights: &[f64], unit: f64, x_min: f64) -> Result<MonotoneCurve, PartitionError> {
    let Some(&first) = heights.first() else {
        return Err(PartitionError::Domain("empty profile".into()));
    };
    let mut pts = vec![Point::new(0.0, first * unit)];
    for (i, w) in heights.windows(2).enumerate() {
        if w[0] != w[1] {
            let x = (i + 1) as f64 * unit;
            pts.push(Point::new(x, w[0] * unit));
            pts.push(Point::new(x, w[1] * unit));
        }
    }
    let x = heights.len() as f64 * unit;
    pts.push(Point::new(x, heights[heights.len() - 1] * unit));
    pts.push(Point::new(x, 0.0));
    if x < x_min {
        pts.push(Point::new(x_min, 0.0));
    }
    // Zero trailing heights repeat the closing corner.
    pts.dedup_by(|b, a| a.dist(*b) <= GEOM_EPS);
    Ok(MonotoneCurve::new(pts)?)
}

/// Sup-distance of a unit-step profile, scaled by `unit`, to the limit curve
/// on `window`.
pub fn profile_distance(heights: &[f64], unit: f64, window: (f64, f64)) -> Result<f64, PartitionError> {
    let curve = step_curve(heights, unit, window.1)?;
    Ok(sup_distance_to_fn(&curve, limit_curve::height, window)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Exact,
    Boltzmann,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitShapeReport {
    pub n: u64,
    pub samples: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub metric: String,
    pub window: (f64, f64),
    pub mean_sup_distance: f64,
    pub distances: Vec<f64>,
    /// Mean of `#{parts >= k}` for `k = 1, 2, ...` (unscaled).
    #[serde(skip)]
    pub mean_heights: Vec<f64>,
}

impl LimitShapeReport {
    pub fn fraction_within(&self, eps: f64) -> f64 {
        if self.distances.is_empty() {
            return 0.0;
        }
        self.distances.iter().filter(|&&d| d <= eps).count() as f64 / self.distances.len() as f64
    }

    /// Mean profile scaled to unit area as a staircase curve.
    pub fn mean_profile(&self) -> Result<MonotoneCurve, PartitionError> {
        step_curve(&self.mean_heights, 1.0 / (self.n as f64).sqrt(), 0.0)
    }

    /// Smallest `eps` with at least the fraction `q` of samples within it.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut d = self.distances.clone();
        d.sort_by(f64::total_cmp);
        let i = ((q * d.len() as f64).ceil() as usize).clamp(1, d.len().max(1)) - 1;
        d.get(i).copied().unwrap_or(f64::NAN)
    }
}

pub const EXPERIMENT_WINDOW: (f64, f64) = (0.2, 2.5);

/// Draws `samples` uniform partitions of `n` (exact table up to 2000,
/// Boltzmann above), and measures each scaled profile and the mean profile
/// against the limit curve in sup-distance on `[0.2, 2.5]`.
pub fn limit_shape_experiment(n: u64, samples: usize, seed: u64) -> Result<LimitShapeReport, PartitionError> {
    if n < EXPERIMENT_MIN {
        return Err(PartitionError::Domain(format!(
            "limit-shape experiment needs n >= {EXPERIMENT_MIN}, got {n}"
        )));
    }
    if samples == 0 {
        return Err(PartitionError::Domain("need at least one sample".into()));
    }
    let exact = if n <= EXACT_MAX {
        Some(UniformSampler::new(n)?)
    } else {
        None
    };
    let draws: Vec<Partition> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            match &exact {
                Some(s) => Ok(s.sample(&mut rng)),
                None => sample_boltzmann(n, &mut rng),
            }
        })
        .collect::<Result<_, _>>()?;
    let unit = 1.0 / (n as f64).sqrt();
    let window = EXPERIMENT_WINDOW;
    let mut sums: Vec<f64> = Vec::new();
    let mut distances = Vec::with_capacity(samples);
    for p in &draws {
        let heights: Vec<f64> = p.profile().heights().iter().map(|&h| h as f64).collect();
        distances.push(profile_distance(&heights, unit, window)?);
        if sums.len() < heights.len() {
            sums.resize(heights.len(), 0.0);
        }
        for (s, h) in sums.iter_mut().zip(&heights) {
            *s += h;
        }
    }
    let mean_heights: Vec<f64> = sums.iter().map(|s| s / samples as f64).collect();
    let mean_sup_distance = profile_distance(&mean_heights, unit, window)?;
    Ok(LimitShapeReport {
        n,
        samples,
        seed,
        sampler: if exact.is_some() {
            SamplerKind::Exact
        } else {
            SamplerKind::Boltzmann
        },
        metric: "sup_distance".into(),
        window,
        mean_sup_distance,
        distances,
        mean_heights,
    })
}
