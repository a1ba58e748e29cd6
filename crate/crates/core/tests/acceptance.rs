//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use limit_shapes::duality::{
    duality_identity_check, minimax_transfer_check, random_monotone_path, DualityInstance,
};
use limit_shapes::geom::{
    curve_volume, functional_on_curve, sup_distance_to_fn, CurveTails, Decay, MonotoneCurve, Point,
};
use limit_shapes::limit_curve;
use limit_shapes::maxshape::{
    detect_divergence, divergence_witness, max_body_auto, max_shape, maximality_harness,
    normalize_lambda_max, triangle_identity_check, ArcRange,
};
use limit_shapes::partitions::{
    entropy_limit_check, enumerate, graph_entropy_integral, growth_fit, hardy_ramanujan_check,
    limit_shape_experiment, partition_count, sample_boltzmann, UniformSampler,
};
use limit_shapes::rng::trial_rng;
use limit_shapes::wulff::{minimality_harness, normalize_lambda, wulff_result};
use limit_shapes::{DirectionWeight, ProblemClass};
use num_bigint::BigUint;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `int_0^inf g(u) du` through `u = e^t`, which removes the logarithmic
/// singularity at the origin.
fn log_substituted(g: impl Fn(f64) -> f64) -> f64 {
    simpson(|t| g(t.exp()) * t.exp(), -60.0, 6.0, 200_000)
}

fn criterion_1() -> Outcome {
    let curve = max_body_auto(&DirectionWeight::entropy(), limit_curve::unit_area_lambda(), 4096).unwrap();
    let reference = |x: f64| -(6f64.sqrt() / PI) * (-(-PI * x / 6f64.sqrt()).exp_m1()).ln();
    let d = sup_distance_to_fn(&curve, reference, (0.05, 5.0)).unwrap();
    outcome(d <= 1e-3, format!("sup distance on [0.05, 5] = {d:.3e} (<= 1e-3)"))
}

fn criterion_2() -> Outcome {
    let oracle = log_substituted(|u| -(-(-u).exp_m1()).ln());
    let c = limit_curve::decay_rate();
    let area = log_substituted(limit_curve::height);
    let oracle_ok = (oracle - PI * PI / 6.0).abs() <= 1e-9;
    let ok = (area - 1.0).abs() <= 1e-6 && oracle_ok && (area - oracle / (c * c)).abs() <= 1e-9;
    outcome(
        ok,
        format!("area = {area:.12}, oracle int -ln(1-e^-u) = {oracle:.12} vs pi^2/6 = {:.12}", PI * PI / 6.0),
    )
}

fn criterion_3() -> Outcome {
    let (lambda, result) = normalize_lambda_max(&DirectionWeight::entropy(), 1.0, 4096).unwrap();
    let v = result.functional_value;
    let l_ok = (lambda - 6f64.sqrt() / PI).abs() <= 1e-4;
    let v_ok = (v - 2.565100).abs() <= 1e-3 && (v - PI * (2.0f64 / 3.0).sqrt()).abs() <= 1e-3;
    outcome(
        l_ok && v_ok,
        format!("lambda1 = {lambda:.6} (sqrt6/pi = {:.6}), v_eta = {v:.6} (2.565100)", 6f64.sqrt() / PI),
    )
}

fn criterion_4() -> Outcome {
    let gaps: Vec<(u64, f64)> = [5000u64, 10_000]
        .iter()
        .map(|&n| (n, hardy_ramanujan_check(n).gap))
        .collect();
    let gaps_ok = gaps.iter().all(|&(_, g)| g <= 2.0);
    let fit = growth_fit(&[2500, 5000, 10_000]);
    let slope_ok = (fit.slope - 2.565).abs() <= 0.01;
    outcome(
        gaps_ok && slope_ok,
        format!(
            "gaps {:?}; raw slope of ln p vs sqrt n = {:.4} (2.565 +- 0.01); \
             slope after adding ln(4 sqrt3 n) = {:.4}",
            gaps.iter().map(|(n, g)| format!("n={n}: {g:.4}")).collect::<Vec<_>>(),
            fit.slope,
            fit.corrected_slope
        ),
    )
}

fn criterion_5() -> Outcome {
    let iso = DirectionWeight::constant(1.0, ProblemClass::Minimizing);
    let (lambda, unit) = normalize_lambda(&iso, 1.0, 4096).unwrap();
    let l_ok = (lambda - 1.0 / PI.sqrt()).abs() <= 1e-4;
    let w_ok = (unit.functional_value - 2.0 * PI.sqrt()).abs() <= 1e-3;
    let mut sq_ok = true;
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 1.0, 1.7] {
        let r = wulff_result(&DirectionWeight::l1_norm(ProblemClass::Minimizing), lambda, 4096).unwrap();
        let err = (r.area - 4.0 * lambda * lambda).abs();
        worst = worst.max(err);
        sq_ok &= err <= 1e-9;
    }
    outcome(
        l_ok && w_ok && sq_ok,
        format!(
            "lambda1 = {lambda:.6} (1/sqrt pi = {:.6}), W = {:.6} (2 sqrt pi = {:.6}), L1 square area error {worst:.1e}",
            1.0 / PI.sqrt(),
            unit.functional_value,
            2.0 * PI.sqrt()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let tau = DirectionWeight::constant(1.0, ProblemClass::Minimizing);
    let base = wulff_result(&tau, 1.0, 4096).unwrap();
    let eta = DirectionWeight::entropy();
    let mbase = max_shape(&eta, 1.0, 4096).unwrap();
    let mvol = mbase.volume.finite().unwrap();
    for s in [0.37, 2.9] {
        let w = wulff_result(&tau, s, 4096).unwrap();
        worst = worst.max((w.area / base.area - s * s).abs() / (s * s));
        worst = worst.max((w.functional_value / base.functional_value - s).abs() / s);
        let m = max_shape(&eta, s, 4096).unwrap();
        worst = worst.max((m.volume.finite().unwrap() / mvol - s * s).abs() / (s * s));
        worst = worst.max((m.functional_value / mbase.functional_value - s).abs() / s);
    }
    outcome(worst <= 1e-10, format!("max relative homothety error = {worst:.2e} (<= 1e-10)"))
}

fn criterion_7() -> Outcome {
    let eta = DirectionWeight::entropy();
    let lambda = limit_curve::unit_area_lambda();
    let devs: Vec<f64> = [256, 1024, 4096]
        .iter()
        .map(|&m| triangle_identity_check(&eta, lambda, ArcRange::Abscissa(0.2, 2.5), m).unwrap().deviation)
        .collect();
    let r1 = devs[0] / devs[1];
    let r2 = devs[1] / devs[2];
    let in_band = |r: f64| (8.0..=24.0).contains(&r);
    outcome(
        devs[2] <= 1e-4 && in_band(r1) && in_band(r2),
        format!(
            "deviation at m = 256, 1024, 4096: {:.2e}, {:.2e}, {:.2e}; ratios {r1:.2}, {r2:.2} (16 +- 50%)",
            devs[0], devs[1], devs[2]
        ),
    )
}

fn criterion_8() -> Outcome {
    let inst = DualityInstance::new(
        DirectionWeight::entropy(),
        10.0,
        Point::new(1.0, 5.0),
        Point::new(5.0, 1.0),
    )
    .unwrap();
    let mut rng = trial_rng(8, 0);
    let curves: Vec<MonotoneCurve> = (0..100)
        .map(|i| random_monotone_path(inst.p1, inst.p2, 1 + i % 40, &mut rng).unwrap())
        .collect();
    let report = duality_identity_check(&inst, &curves).unwrap();
    let oracle = 10.0 * ((5.0f64 - 1.0).abs() + (1.0f64 - 5.0).abs());
    let identity_ok = report.max_relative_deviation <= 1e-9 && report.constant == oracle;
    let mm = minimax_transfer_check(&DirectionWeight::entropy(), 10.0, (0.5, 1.5), 500, 8, 4096).unwrap();
    outcome(
        identity_ok && mm.disagreements == 0,
        format!(
            "constant = {} (N L1 = {oracle}), max relative deviation = {:.1e}; minimax: {} trials, {} disagreements",
            report.constant, report.max_relative_deviation, mm.trials, mm.disagreements
        ),
    )
}

fn criterion_9() -> Outcome {
    let w = minimality_harness(&DirectionWeight::constant(1.0, ProblemClass::Minimizing), 1000, 9, 4096).unwrap();
    let m = maximality_harness(&DirectionWeight::entropy(), 1000, 9, 4096).unwrap();
    let ok = w.min_margin >= -w.tolerance && m.max_excess <= m.tolerance;
    outcome(
        ok,
        format!(
            "Wulff min margin {:.2e} (>= -{:.2e}); maximizer max excess {:.2e} (<= {:.2e})",
            w.min_margin, w.tolerance, m.max_excess, m.tolerance
        ),
    )
}

fn criterion_10() -> Outcome {
    let eta = DirectionWeight::sqrt_product(ProblemClass::Maximizing);
    let verdict = detect_divergence(&eta).unwrap();
    let mut ok = !verdict.is_finite();
    let mut parts = vec![format!("verdict {:?}", verdict.verdict)];
    for gamma in [0.1, 0.01] {
        let w = divergence_witness(&eta, gamma).unwrap();
        // The exact truncated hyperbola has V = (2/gamma)(1 - gamma^2).
        let hyperbola = 2.0 / gamma * (1.0 - gamma * gamma);
        ok &= (w.volume - 1.0).abs() <= 1e-6 && w.value > 2.0 / (3.0 * gamma);
        parts.push(format!(
            "gamma {gamma}: volume {:.9}, V {:.4} (> {:.4}; hyperbola {:.4})",
            w.volume,
            w.value,
            2.0 / (3.0 * gamma),
            hyperbola
        ));
    }
    outcome(ok, parts.join("; "))
}

/// Kolmogorov distribution tail `P(K > x)`.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_two_sample(a: &mut [u64], b: &mut [u64]) -> (f64, f64) {
    a.sort_unstable();
    b.sort_unstable();
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] == v {
            i += 1;
        }
        while j < m && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let x = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_tail(x))
}

/// `p(n, <= k)` by the textbook two-index recursion.
fn dp_count(n: usize) -> BigUint {
    let mut t = vec![vec![BigUint::default(); n + 1]; n + 1];
    for row in t.iter_mut() {
        row[0] = BigUint::default();
    }
    t[0] = vec![BigUint::from(1u32); n + 1];
    for j in 1..=n {
        for k in 1..=n {
            let mut v = t[j][k - 1].clone();
            if k <= j {
                v += &t[j - k][k];
            }
            t[j][k] = v;
        }
    }
    t[n][n].clone()
}

fn criterion_11() -> Outcome {
    let table = UniformSampler::new(8).unwrap();
    let all = enumerate(8).unwrap();
    let mut counts: HashMap<Vec<u64>, u64> = all.iter().map(|p| (p.parts().to_vec(), 0)).collect();
    let mut rng = trial_rng(11, 0);
    for _ in 0..22_000 {
        *counts.get_mut(table.sample(&mut rng).parts()).unwrap() += 1;
    }
    let chi2: f64 = counts.values().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
    let p_chi = 1.0 - ChiSquared::new(21.0).unwrap().cdf(chi2);

    let exact = UniformSampler::new(500).unwrap();
    let mut rng = trial_rng(11, 1);
    let mut a: Vec<u64> = (0..5000).map(|_| exact.sample(&mut rng).largest()).collect();
    let mut b: Vec<u64> = (0..5000)
        .map(|i| sample_boltzmann(500, &mut trial_rng(11, 2 + i)).unwrap().largest())
        .collect();
    let (d, p_ks) = ks_two_sample(&mut a, &mut b);

    let p8 = partition_count(8);
    let p50 = partition_count(50);
    let counts_ok = p8 == BigUint::from(all.len() as u64)
        && p8 == BigUint::from(22u32)
        && p50 == dp_count(50)
        && p50 == BigUint::from(204_226u32);
    outcome(
        p_chi > 0.001 && p_ks > 0.001 && counts_ok,
        format!(
            "chi-square {chi2:.2} (df 21, p = {p_chi:.3}); KS D = {d:.4} (p = {p_ks:.3}); p(8) = {p8}, p(50) = {p50}"
        ),
    )
}

fn criterion_12() -> Outcome {
    let t = Instant::now();
    let big = limit_shape_experiment(10_000, 200, 12).unwrap();
    let small = limit_shape_experiment(1000, 200, 12).unwrap();
    let frac = small.fraction_within(0.15);
    let ok = big.mean_sup_distance <= 0.05 && frac >= 0.9 && t.elapsed().as_secs() <= 300;
    outcome(
        ok,
        format!(
            "n = 10^4 mean-profile distance {:.4} (<= 0.05); n = 1000 fraction within 0.15 = {frac:.3} (>= 0.9); \
             per-sample distance median/90% quantile: n = 1000 {:.3}/{:.3}, n = 10^4 {:.3}/{:.3}",
            big.mean_sup_distance,
            small.quantile(0.5),
            small.quantile(0.9),
            big.quantile(0.5),
            big.quantile(0.9)
        ),
    )
}

fn random_curve<R: Rng>(rng: &mut R) -> MonotoneCurve {
    let k = rng.gen_range(2..60);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..3.0)).collect();
    let mut ys: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..3.0)).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(|a, b| b.total_cmp(a));
    let pts: Vec<Point> = xs.iter().zip(&ys).map(|(&x, &y)| Point::new(x, y)).collect();
    let tails = if rng.gen_bool(0.5) {
        CurveTails {
            right: Some(Decay::Exponential { rate: rng.gen_range(0.5..3.0) }),
            top: Some(Decay::Exponential { rate: rng.gen_range(0.5..3.0) }),
        }
    } else {
        CurveTails::default()
    };
    MonotoneCurve::with_tails(pts, tails).unwrap()
}

fn criterion_13() -> Outcome {
    let one = entropy_limit_check(1, 1, 1000).unwrap();
    let three = entropy_limit_check(3, 4, 1000).unwrap();
    let limits_ok = one.gap <= 0.01
        && three.gap <= 0.01
        && (one.limit - SQRT_2 * std::f64::consts::LN_2).abs() < 1e-12;
    let eta = DirectionWeight::entropy();
    let mut rng = trial_rng(13, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = random_curve(&mut rng);
        let v = functional_on_curve(&eta, &c).unwrap();
        let g = graph_entropy_integral(&c);
        worst = worst.max((v - g).abs() / v.abs().max(1.0));
        debug_assert!(curve_volume(&c).finite().is_some());
    }
    outcome(
        limits_ok && worst <= 1e-9,
        format!(
            "gaps: slope 1/1 {:.5}, slope 3/4 {:.5} (<= 0.01); graph integral vs V_entropy max deviation {worst:.1e} (<= 1e-9)",
            one.gap, three.gap
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("corollary reproduction", criterion_1),
        ("unit area of the reference curve", criterion_2),
        ("normalization constants", criterion_3),
        ("Hardy-Ramanujan cross-check", criterion_4),
        ("Wulff isotropic and L1 cases", criterion_5),
        ("homothety laws", criterion_6),
        ("triangle identity", criterion_7),
        ("duality identity", criterion_8),
        ("optimality harnesses", criterion_9),
        ("divergence dichotomy", criterion_10),
        ("sampler exactness", criterion_11),
        ("limit-shape experiment", criterion_12),
        ("entropy normalization consistency", criterion_13),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let status = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failed += 1;
        }
        println!("criterion {:>2} {status} {name} [{:.1}s]: {}", i + 1, t.elapsed().as_secs_f64(), o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
