use chainrec::chains::{
    build_semicircle_tcr_chain, build_translation_exp_chain, compact_modulus, transfer_radius,
    verify_chain,
};
use chainrec::geometry::{circle_angle, embed_line_to_circle};
use chainrec::systems::{builtin, displacement, semicircle_time_one, Rotation, TranslationExp};
use chainrec::{Chain, ChainNotion, Disk, DynSystem, Metric, Point, RadiusField, Region, Window};
use proptest::prelude::*;

fn plane_point(r: f64) -> impl Strategy<Value = Point<f64>> {
    (-r..r, -r..r).prop_map(|(x, y)| Point::plane(x, y))
}

fn random_chain(sys: &dyn DynSystem, pts: Vec<Point<f64>>) -> Chain {
    Chain::new(sys, Metric::Euclidean, pts).unwrap()
}

/// Follows the orbit from `start`, nudging by `nudges[i]` (scaled to below `eps`)
/// only where the image lies in `region`.
fn restricted_walk(
    sys: &dyn DynSystem,
    start: Point<f64>,
    region: &Region<f64>,
    eps: f64,
    nudges: &[(f64, f64)],
) -> Chain {
    let mut pts = vec![start];
    let mut p = start;
    for &(a, s) in nudges {
        let q = sys.eval(p);
        p = if region.contains(&q) {
            q + Point::plane(a.cos(), a.sin()) * (s * eps * 0.99)
        } else {
            q
        };
        pts.push(p);
    }
    random_chain(sys, pts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distance_to_self_is_zero(p in plane_point(50.0), t in -1e6f64..1e6) {
        prop_assert_eq!(Metric::Euclidean.dist(&p, &p), 0.0);
        prop_assert_eq!(Metric::Bounded.dist(&p, &p), 0.0);
        let l = Point::line(t);
        prop_assert_eq!(Metric::CircleInduced.dist(&l, &l), 0.0);
    }

    #[test]
    fn bounded_is_min_of_euclidean_and_one(p in plane_point(3.0), q in plane_point(3.0)) {
        let e: f64 = Metric::Euclidean.dist(&p, &q);
        prop_assert_eq!(Metric::Bounded.dist(&p, &q), e.min(1.0));
    }

    #[test]
    fn circle_distance_is_dominated_by_twice_the_angle(s in -1e3f64..1e3, t in -1e3f64..1e3) {
        let d: f64 = Metric::CircleInduced.dist(&Point::line(s), &Point::line(t));
        prop_assert!(d <= 2.0 * (circle_angle(s) - circle_angle(t)).abs() + 1e-15);
        if s != t {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn embedding_is_monotone_in_angle(s in -1e4f64..1e4, gap in 1e-6f64..10.0) {
        let t = s + gap;
        prop_assert!(circle_angle(s) < circle_angle(t));
        prop_assert!(embed_line_to_circle(s) != embed_line_to_circle(t));
    }

    #[test]
    fn semicircle_flow_stays_on_its_circle(x in -10.0f64..10.0, y in 0.1f64..10.0) {
        prop_assume!(x.hypot(y) <= 10.0);
        let f = |p: Point<f64>| p.x() / (p.x() * p.x() + p.y() * p.y());
        let p = Point::plane(x, y);
        let q = semicircle_time_one(p);
        prop_assert!((f(q) - f(p)).abs() < 1e-5, "F moved from {} to {}", f(p), f(q));
    }

    #[test]
    fn semicircle_is_identity_below_the_axis(x in -1e3f64..1e3, y in -1e3f64..=0.0) {
        let p = Point::plane(x, y);
        let q = semicircle_time_one(p);
        prop_assert_eq!(q.x().to_bits(), p.x().to_bits());
        prop_assert_eq!(q.y().to_bits(), p.y().to_bits());
    }

    #[test]
    fn builtin_planar_systems_preserve_orientation(p in plane_point(4.0), a in 0.0f64..std::f64::consts::TAU) {
        let h = 1e-3;
        let u = Point::plane(a.cos(), a.sin()) * h;
        let v = Point::plane(-a.sin(), a.cos()) * h;
        for name in ["identity", "translation_exp", "contraction_half", "semicircle", "rotation:5",
                     "rotation:3", "translation:1,-2", "scaling:2"] {
            let sys = builtin::<f64>(name).unwrap();
            let (fa, fb, fc) = (sys.eval(p), sys.eval(p + u), sys.eval(p + v));
            let area = (fb - fa).cross(&(fc - fa));
            prop_assert!(area > 0.0, "{name} reverses orientation at {p}");
        }
    }

    #[test]
    fn eps_and_constant_radius_agree(
        pts in prop::collection::vec(plane_point(2.0), 2..12),
        eps in 0.01f64..3.0,
        k in 3u32..9,
    ) {
        let sys = Rotation::<f64>::by_fraction(k);
        let c = random_chain(&sys, pts);
        let a = verify_chain(&sys, Metric::Euclidean, &c, &ChainNotion::Eps(eps)).valid;
        let b = verify_chain(&sys, Metric::Euclidean, &c, &ChainNotion::Radius(RadiusField::constant(eps))).valid;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn strong_chains_are_eps_chains(
        start in plane_point(2.0),
        nudges in prop::collection::vec((-0.05f64..0.05, -0.05f64..0.05), 1..20),
        eps in 0.01f64..1.0,
    ) {
        let sys = TranslationExp;
        let mut pts = vec![start];
        for (dx, dy) in nudges {
            let q = sys.eval(*pts.last().unwrap());
            pts.push(q + Point::plane(dx, dy));
        }
        let c = random_chain(&sys, pts);
        if verify_chain(&sys, Metric::Euclidean, &c, &ChainNotion::Strong(eps)).valid {
            prop_assert!(verify_chain(&sys, Metric::Euclidean, &c, &ChainNotion::Eps(eps)).valid);
        }
    }

    #[test]
    fn jump_costs_are_recomputable(pts in prop::collection::vec(plane_point(3.0), 2..10)) {
        let sys = TranslationExp;
        let c = random_chain(&sys, pts);
        for (w, cost) in c.points().windows(2).zip(c.jump_costs()) {
            prop_assert_eq!(*cost, sys.eval(w[0]).euclid(&w[1]));
        }
    }

    #[test]
    fn restricted_chains_transfer_to_radius_chains(
        start in plane_point(1.5),
        nudges in prop::collection::vec((0.0f64..std::f64::consts::TAU, 0.0f64..1.0), 1..40),
        scale in 0.05f64..2.0,
        use_rotation in any::<bool>(),
    ) {
        let r = RadiusField::inverse_square(scale);
        let (sys, region): (Box<dyn DynSystem>, Region<f64>) = if use_rotation {
            (Box::new(Rotation::<f64>::by_fraction(7)), Region::Disk(Disk::new(Point::plane(0.0, 0.0), 1.2)))
        } else {
            (Box::new(TranslationExp), Region::Window(Window::plane(-1.0, 1.0, -1.0, 1.0).unwrap()))
        };
        let delta = transfer_radius(&region, &r);
        let c = restricted_walk(sys.as_ref(), start, &region, delta, &nudges);
        let restricted = ChainNotion::Restricted { region, eps: delta };
        prop_assert!(verify_chain(sys.as_ref(), Metric::Euclidean, &c, &restricted).valid);
        prop_assert!(verify_chain(sys.as_ref(), Metric::Euclidean, &c, &ChainNotion::Radius(r)).valid);
    }

    #[test]
    fn translation_exp_builder_round_trips(start in plane_point(2.0), eps in 0.05f64..1.0) {
        let c = build_translation_exp_chain(start, eps).unwrap();
        prop_assert!(c.is_closed());
        prop_assert_eq!(c.first(), start);
        let report = verify_chain(&TranslationExp, Metric::Euclidean, &c, &ChainNotion::Eps(eps));
        prop_assert!(report.valid, "first violation at {:?}", report.first_violation);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semicircle_builder_round_trips(h in 0.3f64..3.0, c in 0.05f64..0.5, invsq in any::<bool>()) {
        let r = if invsq { RadiusField::inverse_square(c * 4.0) } else { RadiusField::constant(c) };
        let start = Point::plane(0.0, h);
        let chain = build_semicircle_tcr_chain(start, &r).unwrap();
        prop_assert!(chain.is_closed());
        let sys = builtin::<f64>("semicircle").unwrap();
        let report = verify_chain(sys.as_ref(), Metric::Euclidean, &chain, &ChainNotion::Radius(r));
        prop_assert!(report.valid, "first violation at {:?}", report.first_violation);
    }
}

fn lattice(w: &Window<f64>, n: usize) -> Vec<Point<f64>> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let s = i as f64 / n as f64;
            let t = j as f64 / n as f64;
            out.push(Point::plane(
                w.lo().x() + s * w.width(),
                w.lo().y() + t * w.height(),
            ));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euclidean_chains_in_a_compact_are_bounded_metric_chains(
        pts in prop::collection::vec(plane_point(1.5), 2..15),
        eps2 in 0.05f64..1.5,
        euclid_to_bounded in any::<bool>(),
    ) {
        let k = Window::plane(-2.0, 2.0, -2.0, 2.0).unwrap();
        let samples = lattice(&k, 24);
        let (from, to) = if euclid_to_bounded {
            (Metric::Euclidean, Metric::Bounded)
        } else {
            (Metric::Bounded, Metric::Euclidean)
        };
        let eps1 = compact_modulus(from, to, &samples, eps2);
        prop_assert!(eps1 > 0.0);
        // a contraction keeps every point and image inside K
        let sys = builtin::<f64>("contraction_half").unwrap();
        let c = Chain::new(sys.as_ref(), from, pts.clone()).unwrap();
        if verify_chain(sys.as_ref(), from, &c, &ChainNotion::Eps(eps1)).valid {
            let c2 = Chain::new(sys.as_ref(), to, pts).unwrap();
            prop_assert!(verify_chain(sys.as_ref(), to, &c2, &ChainNotion::Eps(eps2)).valid);
        }
    }
}

#[test]
fn translation_exp_displacement_is_bounded_below_on_a_window() {
    let n = 512;
    let mut least = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let x = -5.0 + 10.0 * i as f64 / (n - 1) as f64;
            let y = -5.0 + 10.0 * j as f64 / (n - 1) as f64;
            least = least.min(displacement(&TranslationExp, Metric::Euclidean, Point::plane(x, y)));
        }
    }
    assert!(least >= (-5.0f64).exp() - 1e-12, "least displacement {least}");
}
