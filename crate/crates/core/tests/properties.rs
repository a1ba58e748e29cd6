use limit_shapes::direction::TabulatedWeight;
use limit_shapes::geom::{curve_volume, functional_on_polyline, intersect_halfplanes, Rect};
use limit_shapes::io::format_f64;
use limit_shapes::maxshape::max_shape;
use limit_shapes::rng::derive_seed;
use limit_shapes::wulff::wulff_result;
use limit_shapes::{Direction, DirectionWeight, HalfPlane, MonotoneCurve, Point, ProblemClass};
use proptest::prelude::*;

fn monotone_points() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 1..12).prop_map(|steps| {
        let mut p = Point::new(0.0, steps.iter().map(|s| s.1).sum());
        let mut out = vec![p];
        for (dx, dy) in steps {
            p = Point::new(p.x + dx, (p.y - dy).max(0.0));
            out.push(p);
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn halfplane_intersection_is_convex_and_feasible(
        planes in prop::collection::vec((0.0f64..std::f64::consts::TAU, 0.1f64..3.0), 3..20)
    ) {
        let hs: Vec<_> = planes.iter().map(|&(t, c)| HalfPlane::at_most(Direction::from_angle(t), c)).collect();
        let poly = intersect_halfplanes(&hs, Rect::centered(10.0)).unwrap();
        prop_assert!(!poly.is_empty());
        prop_assert!(poly.is_convex());
        for v in poly.vertices() {
            for h in &hs {
                let n = h.normal;
                prop_assert!(n.n1() * v.x + n.n2() * v.y <= h.offset + 1e-9);
            }
        }
    }

    #[test]
    fn wulff_functional_is_twice_area_over_scale(c in 0.2f64..5.0, lambda in 0.1f64..10.0, l1 in any::<bool>()) {
        let tau = if l1 {
            DirectionWeight::l1_norm(ProblemClass::Minimizing)
        } else {
            DirectionWeight::constant(c, ProblemClass::Minimizing)
        };
        let r = wulff_result(&tau, lambda, 64).unwrap();
        let unit = wulff_result(&tau, 1.0, 64).unwrap();
        prop_assert!(r.polygon.is_convex());
        prop_assert!((r.functional_value - 2.0 * r.area / lambda).abs() <= 1e-9 * r.functional_value);
        prop_assert!((r.area - lambda * lambda * unit.area).abs() <= 1e-9 * r.area);
    }

    #[test]
    fn polyline_functional_is_homogeneous_and_translation_invariant(
        pts in monotone_points(), s in 0.1f64..10.0, dx in -5.0f64..5.0, dy in -5.0f64..5.0
    ) {
        let eta = DirectionWeight::entropy();
        let base = functional_on_polyline(&eta, &pts, false).unwrap();
        let scaled: Vec<_> = pts.iter().map(|p| p.scale(s)).collect();
        let moved: Vec<_> = pts.iter().map(|p| p.add(Point::new(dx, dy))).collect();
        prop_assert!((functional_on_polyline(&eta, &scaled, false).unwrap() - s * base).abs() <= 1e-9 * s * base);
        prop_assert!((functional_on_polyline(&eta, &moved, false).unwrap() - base).abs() <= 1e-9 * base);
    }

    #[test]
    fn curve_volume_scales_quadratically(pts in monotone_points(), s in 0.1f64..10.0) {
        let c = MonotoneCurve::new(pts).unwrap();
        let v = curve_volume(&c).finite().unwrap();
        let vs = curve_volume(&c.scaled(s)).finite().unwrap();
        prop_assert!((vs - s * s * v).abs() <= 1e-9 * vs.max(1e-12));
    }

    #[test]
    fn flat_table_matches_constant(c in 0.1f64..10.0, theta in 0.0f64..std::f64::consts::FRAC_PI_2) {
        let thetas: Vec<f64> = (0..=16).map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / 16.0).collect();
        let table = TabulatedWeight::new(thetas, vec![c; 17]).unwrap();
        prop_assert!((table.value(theta).unwrap() - c).abs() <= 1e-12 * c);
    }

    #[test]
    fn formatted_floats_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn derived_seeds_separate_streams(base in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(base, a), derive_seed(base, b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn entropy_maximizer_is_convex_and_homogeneous(lambda in 0.2f64..5.0) {
        let eta = DirectionWeight::entropy();
        let r = max_shape(&eta, lambda, 256).unwrap();
        let unit = max_shape(&eta, 1.0, 256).unwrap();
        let pts = r.curve.points();
        for w in pts.windows(3) {
            let turn = w[1].sub(w[0]).cross(w[2].sub(w[1]));
            prop_assert!(turn >= -1e-9 * w[1].norm().max(1.0).powi(2));
        }
        for w in pts.windows(2) {
            prop_assert!(w[1].x >= w[0].x && w[1].y <= w[0].y);
        }
        let (v, v1) = (r.volume.finite().unwrap(), unit.volume.finite().unwrap());
        prop_assert!((v - lambda * lambda * v1).abs() <= 1e-6 * v);
    }
}
