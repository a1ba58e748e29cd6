//! The limit curve of uniformly random Young diagrams,
//! `e^{-c x} + e^{-c y} = 1` with `c = pi / sqrt(6)`, and the constants tied
//! to it.

use std::f64::consts::PI;

use crate::geom::{CurveTails, Decay, MonotoneCurve, Point};

/// `c = pi / sqrt(6)`.
pub fn decay_rate() -> f64 {
    PI / 6f64.sqrt()
}

/// Scale at which the entropy construction encloses unit area, `sqrt(6) / pi`.
pub fn unit_area_lambda() -> f64 {
    6f64.sqrt() / PI
}

/// Maximal entropy functional at unit area, `pi sqrt(2/3)`.
pub fn max_entropy_value() -> f64 {
    PI * (2.0f64 / 3.0).sqrt()
}

/// Area enclosed by the entropy construction at scale one, `pi^2 / 6`.
pub fn unit_scale_volume() -> f64 {
    PI * PI / 6.0
}

/// Height of the limit curve, `-(1/c) ln(1 - e^{-c x})`, for `x > 0`.
pub fn height(x: f64) -> f64 {
    let c = decay_rate();
    -(-(-c * x).exp_m1()).ln() / c
}

/// Polyline through `n` points of the limit curve, evenly spaced in `x` over
/// `[x_lo, x_hi]`, continued by the curve's exponential tails.
pub fn sampled(n: usize, x_lo: f64, x_hi: f64) -> MonotoneCurve {
    assert!(n >= 2 && x_lo > 0.0 && x_hi > x_lo);
    let points = (0..n)
        .map(|i| {
            let x = x_lo + (x_hi - x_lo) * i as f64 / (n - 1) as f64;
            Point::new(x, height(x))
        })
        .collect();
    // Each end first-order equals e^{-c t} / c; the tails continue with the
    // local logarithmic decay rate so that they join continuously.
    let c = decay_rate();
    let right_rate = local_rate(x_hi, c);
    let top_rate = local_rate(height(x_lo), c);
    MonotoneCurve::with_tails(
        points,
        CurveTails {
            right: Some(Decay::Exponential { rate: right_rate }),
            top: Some(Decay::Exponential { rate: top_rate }),
        },
    )
    .expect("limit curve samples are monotone")
}

/// `-d ln y / dx` of the limit curve at `x`.
fn local_rate(x: f64, c: f64) -> f64 {
    // y' = -e^{-cx} / (1 - e^{-cx}), so -y'/y = e^{-cx} / ((1 - e^{-cx}) y).
    let e = (-c * x).exp();
    e / (-(-c * x).exp_m1() * height(x))
}
