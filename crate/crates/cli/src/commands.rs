use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use chainrec::chains::{build_semicircle_tcr_chain, build_translation_exp_chain, parse_points, verify_chain};
use chainrec::diskchain::{build_disk_chain, find_fixed_point, verify_disk_chain, winding_number, Resolution};
use chainrec::gridgraph::{build_grid, build_transition_graph, classify_on_graph, find_chain, VerdictLabel};
use chainrec::systems::{iterate, DynSystem};
use chainrec::{Chain, ChainNotion, DiskChainCertificate, Point, RadiusField, TransitionGraph, Window};

use crate::config::{parse_point, resolve, Settings};
use crate::report::{finite, Record, Reporter};
use crate::svg::{ChainDrawing, Scene};
use crate::{exit, CliError, CommonArgs};

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn analysis(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Analysis(e.into())
}

fn settings(args: &CommonArgs) -> Result<Settings, CliError> {
    let s = resolve(args).map_err(usage)?;
    if let Some(n) = s.workers {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(s)
}

fn graph(s: &Settings) -> Result<TransitionGraph, CliError> {
    let grid = build_grid(s.window, s.grid.0, s.grid.1).map_err(usage)?;
    build_transition_graph(s.system.clone(), s.metric, grid, s.samples_per_box, s.mode).map_err(usage)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).map_err(usage)?;
    }
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(usage)
}

fn load_chain(system: &dyn DynSystem, s: &Settings, path: &Path) -> Result<Chain, CliError> {
    let pts = parse_points::<f64>(&read(path)?)
        .with_context(|| format!("in {}", path.display()))
        .map_err(usage)?;
    Chain::new(system, s.metric, pts)
        .with_context(|| format!("in {}", path.display()))
        .map_err(usage)
}

fn chain_file_text(system: &str, notion: &str, chain: &Chain) -> String {
    format!("# {system}, {notion}, {} steps\n{}", chain.steps(), chain.to_text())
}

fn chain_record(source: &str, chain: &Chain, file: Option<&Path>) -> Record {
    Record::Chain {
        source: source.to_string(),
        points: chain.len(),
        closed: chain.is_closed(),
        max_jump: finite(chain.max_jump()),
        total_jump: finite(chain.total_jump()),
        file: file.map(|p| p.display().to_string()),
    }
}

fn first_notion(s: &Settings) -> Result<&ChainNotion, CliError> {
    s.notions
        .first()
        .ok_or_else(|| usage(anyhow!("no chain notion given (use --eps, --strong, --radius-field or `notions`)")))
}

pub fn classify(args: &CommonArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let s = settings(args)?;
    if s.points.is_empty() {
        return Err(usage(anyhow!("no query points (use --point or `points`)")));
    }
    first_notion(&s)?;
    let g = graph(&s)?;
    let mut rep = Reporter::new(out, args.format);
    let mut code = exit::OK;
    for (pi, p) in s.points.iter().enumerate() {
        for (ni, notion) in s.notions.iter().enumerate() {
            let v = classify_on_graph(&g, *p, notion).map_err(usage)?;
            let mut witness_file = None;
            if let (Some(c), Some(dir)) = (v.witness(), &s.out) {
                let path = dir.join(format!("witness_{pi}_{ni}.chain"));
                write(&path, &chain_file_text(s.system.name(), &notion.label(), c))?;
                witness_file = Some(path.display().to_string());
            }
            if matches!(v.label, VerdictLabel::Unknown) {
                code = exit::INCONCLUSIVE;
            }
            rep.emit(&Record::Verdict {
                point: p.coords(),
                notion: notion.label(),
                verdict: v.name().to_string(),
                window_relative: v.is_certified_no(),
                steps: v.witness().map(|c| c.steps()),
                witness_file,
                notes: v.notes.clone(),
            })?;
        }
    }
    Ok(code)
}

pub fn chain_find(args: &CommonArgs, from: &str, to: Option<&str>, out: &mut dyn Write) -> Result<u8, CliError> {
    let s = settings(args)?;
    let notion = first_notion(&s)?;
    let from = parse_point(from).map_err(usage)?;
    let to = match to {
        Some(t) => parse_point(t).map_err(usage)?,
        None => from,
    };
    let g = graph(&s)?;
    let chain = find_chain(&g, from, to, notion)
        .ok_or_else(|| analysis(anyhow!("no {} chain from ({from}) to ({to}) in the graph", notion.label())))?;
    emit_chain(&s, "find", &notion.label(), &chain, args, out)?;
    Ok(exit::OK)
}

fn emit_chain(s: &Settings, source: &str, notion: &str, chain: &Chain, args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = &s.out {
        write(path, &chain_file_text(s.system.name(), notion, chain))?;
    }
    let mut rep = Reporter::new(out, args.format);
    rep.emit(&chain_record(source, chain, s.out.as_deref()))?;
    if s.out.is_none() {
        rep.note(&chain.to_text())?;
    }
    Ok(())
}

pub fn chain_verify(args: &CommonArgs, path: &Path, out: &mut dyn Write) -> Result<u8, CliError> {
    let s = settings(args)?;
    first_notion(&s)?;
    let chain = load_chain(s.system.as_ref(), &s, path)?;
    let mut rep = Reporter::new(out, args.format);
    let mut code = exit::OK;
    for notion in &s.notions {
        let r = verify_chain(s.system.as_ref(), s.metric, &chain, notion);
        if !r.valid {
            code = exit::INCONCLUSIVE;
        }
        rep.emit(&Record::ChainCheck {
            notion: notion.label(),
            valid: r.valid,
            first_violation: r.first_violation,
            max_jump: finite(r.max_jump),
            total_jump: finite(r.total_jump),
        })?;
    }
    Ok(code)
}

pub fn chain_build_example(args: &CommonArgs, example: &str, start: &str, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut args = args.clone();
    let name = match example {
        "translation_exp" => "translation_exp",
        "semicircle" => "semicircle",
        other => return Err(usage(anyhow!("unknown example `{other}` (translation_exp|semicircle)"))),
    };
    args.system = Some(name.to_string());
    let s = settings(&args)?;
    let start = parse_point(start).map_err(usage)?;
    let notion = first_notion(&s)?.clone();
    let chain = match (name, &notion) {
        ("translation_exp", ChainNotion::Eps(e)) => build_translation_exp_chain(start, *e),
        ("semicircle", ChainNotion::Radius(r)) => build_semicircle_tcr_chain(start, r),
        ("translation_exp", _) => return Err(usage(anyhow!("the translation_exp chain needs --eps"))),
        _ => return Err(usage(anyhow!("the semicircle chain needs --radius-field"))),
    }
    .map_err(analysis)?;
    let report = verify_chain(s.system.as_ref(), s.metric, &chain, &notion);
    if !report.valid {
        return Err(analysis(anyhow!("built chain fails at step {:?}", report.first_violation)));
    }
    emit_chain(&s, name, &notion.label(), &chain, &args, out)?;
    Ok(exit::OK)
}

fn describe(r: &Resolution) -> String {
    match r {
        Resolution::Shrink { i, j, factor } => format!("shrink disks {i},{j} by {factor}"),
        Resolution::Splice { i, j } => format!("splice out points {i}..{j}"),
        Resolution::Subcycle { i, j } => format!("keep disks {i}..{j}"),
        Resolution::Repair { i, factor } => format!("shrink disk {i} by {factor}"),
    }
}

fn report_certificate(
    system: &dyn DynSystem,
    cert: &DiskChainCertificate,
    resolutions: Vec<String>,
    file: Option<&Path>,
    rep: &mut Reporter,
) -> Result<u8, CliError> {
    let r = verify_disk_chain(system, cert);
    let conds = [
        (1u8, "image misses disk", &r.own_image),
        (2, "distinct disks disjoint", &r.pairwise),
        (3, "witness links", &r.links),
    ];
    for (index, name, c) in conds {
        rep.emit(&Record::Condition {
            index,
            name: name.to_string(),
            ok: c.ok,
            worst_margin: finite(c.worst_margin),
            worst_disk: c.worst_index,
        })?;
    }
    rep.emit(&Record::Certificate {
        disks: cert.len(),
        summary: r.summary(),
        resolutions,
        file: file.map(|p| p.display().to_string()),
    })?;
    Ok(if r.pass { exit::OK } else { exit::INCONCLUSIVE })
}

pub fn certify(
    args: &CommonArgs,
    chain: Option<PathBuf>,
    certificate: Option<PathBuf>,
    verify_only: bool,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let s = settings(args)?;
    let mut rep = Reporter::new(out, args.format);
    if verify_only {
        let path = certificate
            .or_else(|| s.certificate.clone())
            .ok_or_else(|| usage(anyhow!("--verify-only needs --certificate")))?;
        let cert = DiskChainCertificate::<f64>::from_text(&read(&path)?)
            .with_context(|| format!("in {}", path.display()))
            .map_err(usage)?;
        return report_certificate(s.system.as_ref(), &cert, Vec::new(), Some(&path), &mut rep);
    }
    let path = chain
        .or_else(|| s.chain.clone())
        .ok_or_else(|| usage(anyhow!("certify needs --chain (or --verify-only --certificate)")))?;
    let r: RadiusField = match s.notions.first() {
        Some(ChainNotion::Radius(r)) => r.clone(),
        Some(ChainNotion::Eps(e)) => RadiusField::constant(*e),
        _ => return Err(usage(anyhow!("certify needs --radius-field"))),
    };
    let chain = load_chain(s.system.as_ref(), &s, &path)?;
    let build = build_disk_chain(s.system.as_ref(), &chain, &r).map_err(analysis)?;
    if let Some(file) = &s.out {
        write(file, &build.certificate.to_text())?;
    }
    let log = build.log.iter().map(describe).collect();
    report_certificate(s.system.as_ref(), &build.certificate, log, s.out.as_deref(), &mut rep)
}

pub fn fixedpoint(args: &CommonArgs, tol: Option<f64>, out: &mut dyn Write) -> Result<u8, CliError> {
    let s = settings(args)?;
    let tol = tol.or(s.tol).unwrap_or(1e-6);
    if !(tol > 0.0) {
        return Err(usage(anyhow!("tolerance must be positive")));
    }
    let found = find_fixed_point(s.system.as_ref(), &s.window, s.grid, tol);
    let boundary_winding = match s.window.dim() {
        chainrec::Dim::Two => winding_number(s.system.as_ref(), &s.window.corners()).ok(),
        chainrec::Dim::One => None,
    };
    let mut rep = Reporter::new(out, args.format);
    rep.emit(&Record::FixedPoint {
        found: found.is_some(),
        point: found.map(|p| p.coords()),
        boundary_winding,
    })?;
    Ok(exit::OK)
}

pub struct PlotArgs {
    pub seed: Vec<String>,
    pub iterates: Option<usize>,
    pub chains: Vec<PathBuf>,
    pub certificates: Vec<PathBuf>,
    pub fixed_boxes: bool,
    pub width: Option<u32>,
}

/// Boxes with a sampled displacement below `1e-9`.
fn fixed_boxes(s: &Settings) -> Result<Vec<Window>, CliError> {
    let grid = build_grid(s.window, s.grid.0, s.grid.1).map_err(usage)?;
    Ok((0..grid.len())
        .filter(|&k| {
            grid.sample_lattice(k, s.samples_per_box)
                .iter()
                .any(|p| s.system.eval(*p).euclid(p) < 1e-9)
        })
        .map(|k| grid.box_window(k))
        .collect())
}

pub fn plot(args: &CommonArgs, extra: &PlotArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut args = args.clone();
    let has_system = args.system.is_some()
        || match &args.config {
            Some(p) => crate::config::RunConfig::load(p).map_err(usage)?.system.is_some(),
            None => false,
        };
    if !has_system {
        // nothing is iterated; the identity keeps the scene empty
        args.system = Some(match args.window.as_deref().map(|w| w.split(',').count()) {
            Some(2) => "identity_line".into(),
            _ => "identity".into(),
        });
    }
    let s = settings(&args)?;
    let spec = &s.plot;
    let view = match s.window.dim() {
        chainrec::Dim::Two => s.window,
        chainrec::Dim::One => {
            let (t0, t1) = (s.window.lo().x(), s.window.hi().x());
            let h = (t1 - t0) / 10.0;
            Window::plane(t0, t1, -h, h).map_err(|e| usage(anyhow!("{e}")))?
        }
    };
    let mut scene = Scene::new(view, extra.width.or(spec.width).unwrap_or(800));

    let seeds: Vec<Point> = if extra.seed.is_empty() {
        spec.seeds.iter().map(|v| crate::config::point_from(v)).collect::<anyhow::Result<_>>().map_err(usage)?
    } else {
        extra.seed.iter().map(|t| parse_point(t)).collect::<anyhow::Result<_>>().map_err(usage)?
    };
    let n = extra.iterates.or(spec.iterates).unwrap_or(50);
    for p in seeds {
        if p.dim() != s.dim() {
            return Err(usage(anyhow!("seed ({p}) does not match the system's dimension")));
        }
        let orbit: Vec<Point> = (0..=n).map(|k| iterate(s.system.as_ref(), p, k)).collect();
        scene.orbits.push(orbit);
    }
    for path in extra.chains.iter().chain(&spec.chains) {
        let chain = load_chain(s.system.as_ref(), &s, path)?;
        let steps = chain
            .points()
            .windows(2)
            .map(|w| (w[0], s.system.eval(w[0]), w[1]))
            .collect();
        scene.chains.push(ChainDrawing { steps });
    }
    for path in extra.certificates.iter().chain(&spec.certificates) {
        let cert = DiskChainCertificate::<f64>::from_text(&read(path)?)
            .with_context(|| format!("in {}", path.display()))
            .map_err(usage)?;
        scene.disks.extend(cert.disks().copied());
    }
    if extra.fixed_boxes || spec.fixed_boxes {
        scene.fixed_boxes = fixed_boxes(&s)?;
    }

    let svg = scene.render();
    match &s.out {
        Some(path) => {
            write(path, &svg)?;
            Reporter::new(out, args.format).emit(&Record::Plot {
                file: path.display().to_string(),
                bytes: svg.len(),
            })?;
        }
        None => out.write_all(svg.as_bytes())?,
    }
    Ok(exit::OK)
}
