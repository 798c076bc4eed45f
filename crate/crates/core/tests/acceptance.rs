//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits
//! non-zero if any failed.

use std::sync::Arc;
use std::time::{Duration, Instant};

use chainrec::chains::{build_semicircle_tcr_chain, build_translation_exp_chain, transfer_radius, verify_chain};
use chainrec::diskchain::{
    build_disk_chain, check_disjointness, find_fixed_point, fixed_point_free_radius, pasch_hausdorff,
    verify_disk_chain, winding_number, FreeDomain,
};
use chainrec::gridgraph::{build_grid, build_transition_graph, classify_on_graph, classify_recurrence, find_chain};
use chainrec::systems::{builtin, Rotation, SemicircleFlow, TranslationExp};
use chainrec::{
    Chain, ChainNotion, Disk, DynSystem, GraphMode, GridField, Metric, Point, RadiusField, Region,
    SharedSystem, Verdict, VerdictLabel, Window,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Everything the soundness audit needs to see again.
#[derive(Default)]
struct Audit {
    yes: Vec<(String, SharedSystem, Metric, ChainNotion, Chain)>,
    no: Vec<(String, Verdict)>,
}

impl Audit {
    fn record(&mut self, what: &str, system: &SharedSystem, metric: Metric, notion: &ChainNotion, v: &Verdict) {
        match &v.label {
            VerdictLabel::CertifiedYes(c) => {
                self.yes.push((what.to_string(), system.clone(), metric, notion.clone(), c.clone()))
            }
            VerdictLabel::CertifiedNo { .. } => self.no.push((what.to_string(), v.clone())),
            _ => {}
        }
    }
}

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    check(t < limit, format!("{what} took {t:.2?}, limit {limit:?}"))
}

fn criterion_1() -> Outcome {
    let f = TranslationExp;
    let mut lens = Vec::new();
    for eps in [0.5, 0.1] {
        let t = Instant::now();
        let chain = build_translation_exp_chain(Point::plane(0.0, 0.0), eps).map_err(|e| e.to_string())?;
        let rep = verify_chain(&f, Metric::Euclidean, &chain, &ChainNotion::Eps(eps));
        within(t, Duration::from_secs(1), &format!("eps {eps}"))?;
        check(rep.valid, format!("eps {eps}: violation at {:?}", rep.first_violation))?;
        check(rep.max_jump < eps, format!("eps {eps}: max jump {}", rep.max_jump))?;
        check(chain.first() == chain.last() && chain.first() == Point::plane(0.0, 0.0), "chain not closed at origin")?;
        lens.push(format!("eps {eps}: {} steps, max jump {:.4}", chain.steps(), rep.max_jump));
    }
    Ok(lens.join("; "))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let f = TranslationExp;
    let w = Window::plane(-5.0, 5.0, -5.0, 5.0).unwrap();
    let fp = find_fixed_point(&f, &w, (256, 256), 1e-6);
    check(fp.is_none(), format!("unexpected fixed point {fp:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..20 {
        let c = Point::plane(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let n = rng.gen_range(3..12);
        let pts: Vec<Point> = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                let rad = rng.gen_range(0.2..1.0);
                c + Point::plane(a.cos(), a.sin()) * rad
            })
            .collect();
        let wn = winding_number(&f, &pts).map_err(|e| format!("loop {k}: {e}"))?;
        check(wn == 0, format!("loop {k}: winding {wn}"))?;
    }
    within(t, Duration::from_secs(10), "criterion")?;
    Ok(format!("no fixed point at 256x256, 20 loops of winding 0, {:.2?}", t.elapsed()))
}

fn criterion_3(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let f = builtin::<f64>("line_translation").map_err(|e| e.to_string())?;
    let w = Window::line(-50.0, 50.0).unwrap();
    let notion = ChainNotion::Eps(0.5);
    let p = Point::line(0.0);
    let euclid = classify_recurrence(f.clone(), Metric::Euclidean, p, &notion, w, (4096, 1), GraphMode::LipschitzInflated)
        .map_err(|e| e.to_string())?;
    audit.record("c3 euclidean", &f, Metric::Euclidean, &notion, &euclid);
    check(euclid.is_certified_no(), format!("euclidean verdict {euclid}"))?;
    let circle = classify_recurrence(f.clone(), Metric::CircleInduced, p, &notion, w, (4096, 1), GraphMode::Sampled)
        .map_err(|e| e.to_string())?;
    audit.record("c3 circle", &f, Metric::CircleInduced, &notion, &circle);
    let chain = circle.witness().ok_or(format!("circle verdict {circle}"))?;
    check(
        verify_chain(f.as_ref(), Metric::CircleInduced, chain, &notion).valid,
        "circle witness fails verification",
    )?;
    within(t, Duration::from_secs(5), "criterion")?;
    Ok(format!(
        "euclidean {euclid}, circle {circle} ({} steps), {:.2?}",
        chain.steps(),
        t.elapsed()
    ))
}

fn criterion_4(audit: &mut Audit) -> Outcome {
    let f = SemicircleFlow::default();
    let start = Point::plane(0.0, 1.0);
    let mut notes = Vec::new();
    let fields = [
        RadiusField::constant(0.2),
        RadiusField::constant(0.05),
        RadiusField::inverse_square(0.1),
    ];
    for r in fields {
        let t = Instant::now();
        let chain = build_semicircle_tcr_chain(start, &r).map_err(|e| format!("{r}: {e}"))?;
        let rep = verify_chain(&f, Metric::Euclidean, &chain, &ChainNotion::Radius(r.clone()));
        check(rep.valid, format!("{r}: violation at {:?}", rep.first_violation))?;
        within(t, Duration::from_secs(60), &format!("{r}"))?;
        notes.push(format!("{r}: {} steps in {:.2?}", chain.steps(), t.elapsed()));
    }
    let t = Instant::now();
    let system: SharedSystem = Arc::new(f);
    let notion = ChainNotion::Restricted {
        region: Region::Disk(Disk::new(Point::plane(0.0, 0.0), 2.0)),
        eps: 0.01,
    };
    let w = Window::plane(-6.0, 6.0, -1.0, 6.0).unwrap();
    let v = classify_recurrence(system.clone(), Metric::Euclidean, start, &notion, w, (240, 140), GraphMode::LipschitzInflated)
        .map_err(|e| e.to_string())?;
    audit.record("c4 restricted", &system, Metric::Euclidean, &notion, &v);
    check(v.is_certified_no(), format!("restricted verdict {v} ({})", v.notes))?;
    within(t, Duration::from_secs(60), "restricted classification")?;
    notes.push(format!("restricted: {v} in {:.2?}", t.elapsed()));
    Ok(notes.join("; "))
}

fn rotation_orbit(f: &Rotation, p: Point, n: usize) -> Chain {
    let mut pts = vec![p];
    for _ in 1..n {
        pts.push(f.eval(*pts.last().unwrap()));
    }
    pts.push(p);
    Chain::new(f, Metric::Euclidean, pts).unwrap()
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let f = Rotation::by_fraction(5);
    let chain = rotation_orbit(&f, Point::plane(1.0, 0.0), 5);
    let domain = FreeDomain::annulus(
        Window::plane(-2.0, 2.0, -2.0, 2.0).unwrap(),
        Disk::new(Point::plane(0.0, 0.0), 0.5),
    );
    let r = fixed_point_free_radius(&f, Metric::Euclidean, &domain, (64, 64), 1.0 / 3.0).map_err(|e| e.to_string())?;
    let dis = check_disjointness(&f, Metric::Euclidean, &r, chain.points());
    check(dis.ok && dis.worst_margin > 0.0, format!("disjointness margin {}", dis.worst_margin))?;
    let build = build_disk_chain(&f, &chain, &r).map_err(|e| e.to_string())?;
    let rep = verify_disk_chain(&f, &build.certificate);
    check(rep.pass, format!("certificate: {}", rep.summary()))?;
    check(build.certificate.links().iter().all(|l| l.iterate == 1), "iterate other than 1")?;
    let shrink = build_disk_chain(&f, &chain, &RadiusField::constant(0.65)).map_err(|e| e.to_string())?;
    check(shrink.shrink_fired(), "shrink case did not fire at r = 0.65")?;
    let rep2 = verify_disk_chain(&f, &shrink.certificate);
    check(rep2.pass, format!("shrunk certificate: {}", rep2.summary()))?;
    within(t, Duration::from_secs(5), "criterion")?;
    Ok(format!(
        "margin {:.4}, {} disks {}, shrink case {} disks {}, {:.2?}",
        dis.worst_margin,
        build.certificate.len(),
        rep.summary(),
        shrink.certificate.len(),
        rep2.summary(),
        t.elapsed()
    ))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let nx = rng.gen_range(2..24);
        let ny = rng.gen_range(2..24);
        let w = Window::plane(-1.0, rng.gen_range(0.0..3.0), -2.0, rng.gen_range(-1.0..2.0)).unwrap();
        let mut values: Vec<f64> = (0..(nx + 1) * (ny + 1)).map(|_| rng.gen_range(0.0..2.0)).collect();
        if k % 5 == 0 {
            let at = rng.gen_range(0..values.len());
            values[at] = 0.0;
        }
        let h = GridField::new(w, nx, ny, values).unwrap();
        let d = pasch_hausdorff(&h, Metric::Euclidean).map_err(|e| e.to_string())?;
        let n = d.node_count();
        for a in 0..n {
            check(d.values()[a] <= h.values()[a], format!("field {k}: not dominated at node {a}"))?;
            for b in 0..n {
                let gap = (d.values()[a] - d.values()[b]).abs() - d.node(a).euclid(&d.node(b));
                worst = worst.max(gap);
                check(gap <= 1e-12, format!("field {k}: Lipschitz gap {gap} at nodes {a}, {b}"))?;
            }
        }
        let again = pasch_hausdorff(&d, Metric::Euclidean).map_err(|e| e.to_string())?;
        let drift = again
            .values()
            .iter()
            .zip(d.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        check(drift <= 1e-12, format!("field {k}: not idempotent, drift {drift}"))?;
    }
    within(t, Duration::from_secs(10), "criterion")?;
    Ok(format!("50 fields, worst Lipschitz excess {worst:e}, {:.2?}", t.elapsed()))
}

fn criterion_7(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let specs = ["translation_exp", "rotation:5", "contraction_half", "identity", "semicircle"];
    let w = Window::plane(-2.0, 2.0, -2.0, 2.0).unwrap();
    let graphs: Vec<_> = specs
        .iter()
        .map(|s| {
            let f = builtin::<f64>(s).unwrap();
            let g = build_grid(w, 40, 40).unwrap();
            (f.clone(), build_transition_graph(f, Metric::Euclidean, g, 9, GraphMode::Sampled).unwrap())
        })
        .collect();
    let mut agree = 0;
    let mut strong_found = 0;
    for k in 0..100 {
        let (f, g) = &graphs[k % graphs.len()];
        let p = Point::plane(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let eps = rng.gen_range(0.02..0.6);
        let e = classify_on_graph(g, p, &ChainNotion::Eps(eps)).map_err(|e| e.to_string())?;
        let rn = ChainNotion::Radius(RadiusField::constant(eps));
        let r = classify_on_graph(g, p, &rn).map_err(|e| e.to_string())?;
        audit.record("c7 eps", f, Metric::Euclidean, &ChainNotion::Eps(eps), &e);
        audit.record("c7 radius", f, Metric::Euclidean, &rn, &r);
        check(e.name() == r.name(), format!("{} at {p} eps {eps}: Eps {e} vs Radius {r}", f.name()))?;
        agree += 1;
        let strong = ChainNotion::Strong(eps);
        if let Some(c) = find_chain(g, p, p, &strong) {
            strong_found += 1;
            check(verify_chain(f.as_ref(), Metric::Euclidean, &c, &strong).valid, "strong chain fails")?;
            check(
                verify_chain(f.as_ref(), Metric::Euclidean, &c, &ChainNotion::Eps(eps)).valid,
                format!("{}: strong chain not an eps chain", f.name()),
            )?;
        }
    }
    check(strong_found > 0, "no strong chains found")?;

    // restricted chains with jumps below min r over the 1-neighborhood of W are N-chains
    let mut transfers = 0;
    let region = Region::Window(Window::plane(-20.0, 20.0, -6.0, 2.0).unwrap());
    let texp = TranslationExp;
    for r in [RadiusField::constant(0.5), RadiusField::constant(0.1), RadiusField::inverse_square(40.0)] {
        let delta = transfer_radius(&region, &r);
        let chain = build_translation_exp_chain(Point::plane(0.0, 0.0), delta).map_err(|e| e.to_string())?;
        let restricted = ChainNotion::Restricted { region, eps: delta };
        check(
            verify_chain(&texp, Metric::Euclidean, &chain, &restricted).valid,
            format!("translation_exp chain for {r} is not restricted-valid"),
        )?;
        check(
            verify_chain(&texp, Metric::Euclidean, &chain, &ChainNotion::Radius(r.clone())).valid,
            format!("translation_exp transfer fails for {r}"),
        )?;
        transfers += 1;
    }
    let rot: SharedSystem = Arc::new(Rotation::by_fraction(5));
    let rw = Window::plane(-2.0, 2.0, -2.0, 2.0).unwrap();
    let rg = build_transition_graph(rot.clone(), Metric::Euclidean, build_grid(rw, 40, 40).unwrap(), 9, GraphMode::Sampled)
        .map_err(|e| e.to_string())?;
    let rregion = Region::Disk(Disk::new(Point::plane(0.0, 0.0), 1.2));
    for r in [RadiusField::constant(0.3), RadiusField::inverse_square(0.5)] {
        let delta = transfer_radius(&rregion, &r);
        let restricted = ChainNotion::Restricted { region: rregion, eps: delta };
        for p in [Point::plane(1.0, 0.0), Point::plane(0.3, -0.7), Point::plane(-0.5, 0.5)] {
            let c = find_chain(&rg, p, p, &restricted).ok_or(format!("no restricted rotation chain at {p}"))?;
            check(
                verify_chain(rot.as_ref(), Metric::Euclidean, &c, &ChainNotion::Radius(r.clone())).valid,
                format!("rotation transfer fails for {r} at {p}"),
            )?;
            transfers += 1;
        }
    }
    within(t, Duration::from_secs(30), "criterion")?;
    Ok(format!(
        "{agree}/100 Eps/Radius agreements, {strong_found} strong chains, {transfers} transfers, {:.2?}",
        t.elapsed()
    ))
}

fn criterion_8(audit: &Audit, extra_yes: &[(String, Chain, ChainNotion)]) -> Outcome {
    for (what, f, metric, notion, chain) in &audit.yes {
        check(
            verify_chain(f.as_ref(), *metric, chain, notion).valid,
            format!("{what}: witness fails re-verification"),
        )?;
    }
    for (what, chain, notion) in extra_yes {
        check(
            verify_chain(&TranslationExp, Metric::Euclidean, chain, notion).valid,
            format!("{what}: witness fails re-verification"),
        )?;
    }
    for (what, v) in &audit.no {
        let VerdictLabel::CertifiedNo { mode, .. } = v.label else {
            unreachable!()
        };
        check(mode == GraphMode::LipschitzInflated, format!("{what}: CertifiedNo in {mode} mode"))?;
        check(v.to_string().contains("window-relative"), format!("{what}: missing qualifier"))?;
    }
    check(!audit.no.is_empty(), "no CertifiedNo verdicts were audited")?;
    Ok(format!(
        "{} witnesses re-verified, {} CertifiedNo verdicts checked",
        audit.yes.len() + extra_yes.len(),
        audit.no.len()
    ))
}

fn main() {
    let mut audit = Audit::default();
    let mut results: Vec<(usize, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3(&mut audit)),
        (4, criterion_4(&mut audit)),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7(&mut audit)),
    ];

    // the translation_exp example from the classification table also feeds the audit
    let texp: SharedSystem = Arc::new(TranslationExp);
    let window = Window::plane(-1.0, 3.0, -2.0, 1.0).unwrap();
    let notion = ChainNotion::Eps(0.5);
    let mut extra = Vec::new();
    match classify_recurrence(texp.clone(), Metric::Euclidean, Point::plane(0.0, 0.0), &notion, window, (200, 150), GraphMode::Sampled) {
        Ok(v) => {
            audit.record("translation_exp classify", &texp, Metric::Euclidean, &notion, &v);
            if let Some(c) = v.witness() {
                extra.push(("translation_exp classify".to_string(), c.clone(), notion.clone()));
            }
        }
        Err(e) => eprintln!("translation_exp classification failed: {e}"),
    }
    results.push((8, criterion_8(&audit, &extra)));

    let mut failed = 0;
    for (k, r) in &results {
        match r {
            Ok(msg) => println!("criterion {k}: PASS ({msg})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {k}: FAIL ({msg})");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
