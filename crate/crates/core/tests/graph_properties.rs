use std::sync::OnceLock;

use chainrec::chains::verify_chain;
use chainrec::gridgraph::{
    build_grid, build_transition_graph, classify_on_graph, default_radius_ladder, find_chain,
};
use chainrec::systems::builtin;
use chainrec::{
    ChainNotion, Disk, GraphMode, Metric, Point, RadiusField, Region, TransitionGraph, Window,
};
use proptest::prelude::*;

const PLANAR: [&str; 5] = ["rotation:5", "translation_exp", "contraction_half", "identity", "semicircle"];

fn planar_graphs() -> &'static Vec<TransitionGraph> {
    static GRAPHS: OnceLock<Vec<TransitionGraph>> = OnceLock::new();
    GRAPHS.get_or_init(|| {
        PLANAR
            .iter()
            .map(|name| {
                let f = builtin::<f64>(name).unwrap();
                let grid = build_grid(Window::plane(-2.0, 2.0, -2.0, 2.0).unwrap(), 32, 32).unwrap();
                build_transition_graph(f, Metric::Euclidean, grid, 9, GraphMode::Sampled).unwrap()
            })
            .collect()
    })
}

fn inflated_graphs() -> &'static (TransitionGraph, TransitionGraph) {
    static GRAPHS: OnceLock<(TransitionGraph, TransitionGraph)> = OnceLock::new();
    GRAPHS.get_or_init(|| {
        let line = build_transition_graph(
            builtin::<f64>("line_translation").unwrap(),
            Metric::Euclidean,
            build_grid(Window::line(-6.0, 6.0).unwrap(), 600, 0).unwrap(),
            9,
            GraphMode::LipschitzInflated,
        )
        .unwrap();
        let contraction = build_transition_graph(
            builtin::<f64>("contraction_half").unwrap(),
            Metric::Euclidean,
            build_grid(Window::plane(-1.5, 1.5, -1.5, 1.5).unwrap(), 60, 60).unwrap(),
            9,
            GraphMode::LipschitzInflated,
        )
        .unwrap();
        (line, contraction)
    })
}

fn point_in(r: f64) -> impl Strategy<Value = Point<f64>> {
    (-r..r, -r..r).prop_map(|(x, y)| Point::plane(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_yes_carries_a_verified_witness(
        which in 0..PLANAR.len(),
        p in point_in(1.9),
        eps in 0.02f64..0.8,
        strong in any::<bool>(),
    ) {
        let g = &planar_graphs()[which];
        let notion = if strong { ChainNotion::Strong(eps) } else { ChainNotion::Eps(eps) };
        let v = classify_on_graph(g, p, &notion).unwrap();
        if let Some(c) = v.witness() {
            prop_assert_eq!(c.first(), p);
            prop_assert_eq!(c.last(), p);
            prop_assert!(verify_chain(g.system().as_ref(), Metric::Euclidean, c, &notion).valid);
        }
    }

    #[test]
    fn eps_success_is_monotone(
        which in 0..PLANAR.len(),
        p in point_in(1.9),
        e1 in 0.02f64..0.5,
        grow in 1.0f64..4.0,
    ) {
        let g = &planar_graphs()[which];
        if find_chain(g, p, p, &ChainNotion::Eps(e1)).is_some() {
            prop_assert!(find_chain(g, p, p, &ChainNotion::Eps(e1 * grow)).is_some());
        }
    }

    #[test]
    fn eps_and_constant_radius_searches_agree(
        which in 0..PLANAR.len(),
        p in point_in(1.9),
        eps in 0.02f64..0.8,
    ) {
        let g = &planar_graphs()[which];
        let a = find_chain(g, p, p, &ChainNotion::Eps(eps)).is_some();
        let b = find_chain(g, p, p, &ChainNotion::Radius(RadiusField::constant(eps))).is_some();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn certified_no_survives_smaller_eps(
        t in -4.0f64..4.0,
        p in point_in(1.4),
        eps in 0.05f64..0.95,
        shrink in 0.05f64..1.0,
    ) {
        let (line, contraction) = inflated_graphs();
        let cases = [
            (line, Point::line(t), ChainNotion::Eps(eps), ChainNotion::Eps(eps * shrink)),
            (contraction, p, ChainNotion::Strong(eps), ChainNotion::Strong(eps * shrink)),
        ];
        for (g, q, coarse, fine) in cases {
            if classify_on_graph(g, q, &coarse).unwrap().is_certified_no() {
                prop_assert!(classify_on_graph(g, q, &fine).unwrap().is_certified_no());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn restricted_recurrence_implies_radius_recurrence(
        rho in 0.3f64..1.2,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let g = &planar_graphs()[0];
        let p = Point::plane(rho * angle.cos(), rho * angle.sin());
        let region = Region::Disk(Disk::new(Point::plane(0.0, 0.0), 1.5));
        let all_restricted = [0.5, 0.2, 0.1].iter().all(|&eps| {
            classify_on_graph(g, p, &ChainNotion::Restricted { region, eps }).unwrap().is_yes()
        });
        if all_restricted {
            for r in default_radius_ladder::<f64>() {
                let v = classify_on_graph(g, p, &ChainNotion::Radius(r.clone())).unwrap();
                prop_assert!(v.is_yes(), "{} at {p}: {v}", r);
            }
        }
    }
}

#[test]
fn rotation_restricted_recurrence_is_not_vacuous() {
    let g = &planar_graphs()[0];
    let region = Region::Disk(Disk::new(Point::plane(0.0, 0.0), 1.5));
    let p = Point::plane(0.8, 0.3);
    for eps in [0.5, 0.2, 0.1] {
        assert!(classify_on_graph(g, p, &ChainNotion::Restricted { region, eps }).unwrap().is_yes());
    }
}

#[test]
fn inflated_graphs_certify_the_expected_absences() {
    let (line, contraction) = inflated_graphs();
    let v = classify_on_graph(line, Point::line(0.0), &ChainNotion::Eps(0.5)).unwrap();
    assert!(v.is_certified_no(), "{v}: {}", v.notes);
    let v = classify_on_graph(contraction, Point::plane(1.0, 0.0), &ChainNotion::Strong(0.4)).unwrap();
    assert!(v.is_certified_no(), "{v}: {}", v.notes);
    assert_eq!(v.to_string(), "CertifiedNo (window-relative)");
}
