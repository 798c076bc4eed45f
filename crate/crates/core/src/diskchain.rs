//! Periodic disk chains.
//!
//! Starting from a radius field `r` with `N(p) ∩ f(N(p)) = ∅` (where
//! `N(p) = B(p, r(p))`) and a closed `Radius(r)`-chain, [`build_disk_chain`] produces
//! a cyclic list of disks that are pairwise equal or disjoint, each disjoint from its
//! own image, and linked by forward iterates. [`verify_disk_chain`] re-checks all
//! three conditions independently.
//!
//! Also: the Pasch–Hausdorff envelope used to make radius fields 1-Lipschitz, and
//! a winding-number based fixed point locator.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::chains::{verify_chain, Chain, ChainNotion};
use crate::geometry::{Dim, Disk, Metric, Point, Window};
use crate::radius::{GridField, RadiusField};
use crate::scalar::Scalar;
use crate::systems::{displacement, iterate, DynSystem};

/// Margins at or below this count as failures.
pub const MARGIN_TOLERANCE: f64 = 1e-9;

/// Displacements below this are treated as zero.
pub const ZERO_DISPLACEMENT: f64 = 1e-9;

/// Boundary samples per disk in the disjointness test.
pub const BOUNDARY_SAMPLES: usize = 64;

/// Shrink factors tried, largest first.
pub const SHRINK_LADDER: [f64; 9] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];

const MAX_SAFETY_HALVINGS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiskChainError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("not fixed-point-free: displacement {displacement} at ({at})")]
    NotFixedPointFree { at: String, displacement: f64 },
    #[error("radius field fails the disjointness test at ({at}), margin {margin}")]
    Disjointness { at: String, margin: f64 },
    #[error("chain does not return to its first point")]
    NotClosed,
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("construction failed for disks {i} and {j}: {msg}")]
    ConstructionFailed { i: usize, j: usize, msg: String },
    #[error("winding number inconclusive: {0}")]
    Inconclusive(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// `δ(p) = min_q h(q) + d(p, q)` over the grid nodes `q`, evaluated at every node.
///
/// Nodes with `h = +∞` take part only as evaluation points. The result is
/// 1-Lipschitz on nodes and bounded above by `h`.
pub fn pasch_hausdorff<S: Scalar>(h: &GridField<S>, metric: Metric) -> Result<GridField<S>, DiskChainError> {
    let values = h.values();
    if let Some(v) = values.iter().find(|v| v.is_nan() || **v < S::zero()) {
        return Err(DiskChainError::Degenerate(format!("h has value {v}")));
    }
    if !values.iter().any(|v| *v > S::zero() && v.is_finite()) {
        return Err(DiskChainError::Degenerate(
            "h is not positive and finite at any node".into(),
        ));
    }
    let nodes: Vec<Point<S>> = (0..h.node_count()).map(|k| h.node(k)).collect();
    let mut order: Vec<usize> = (0..nodes.len()).filter(|&k| values[k].is_finite()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let delta: Vec<S> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let p = nodes[k];
            let mut best = values[k];
            for &q in &order {
                // every later node has h(q) ≥ best, so h(q) + d(p, q) ≥ best
                if values[q] >= best {
                    break;
                }
                best = best.min(values[q] + metric.dist(&p, &nodes[q]));
            }
            best
        })
        .collect();
    Ok(h.with_values(delta))
}

/// The region a fixed-point-free radius is built on: a window, optionally minus an
/// open disk (an annulus when the disk surrounds a fixed point).
#[derive(Debug, Clone, PartialEq)]
pub struct FreeDomain<S = f64> {
    pub window: Window<S>,
    pub hole: Option<Disk<S>>,
}

impl<S: Scalar> FreeDomain<S> {
    pub fn window(window: Window<S>) -> Self {
        FreeDomain { window, hole: None }
    }

    pub fn annulus(window: Window<S>, hole: Disk<S>) -> Self {
        FreeDomain {
            window,
            hole: Some(hole),
        }
    }

    pub fn contains(&self, p: &Point<S>) -> bool {
        self.window.contains(p)
            && self
                .hole
                .is_none_or(|d| p.euclid(&d.center) >= d.radius)
    }
}

fn lipschitz_at<S: Scalar>(system: &dyn DynSystem<S>, p: Point<S>, radius: S) -> S {
    if let Some(l) = system.local_lipschitz(p, radius) {
        return l;
    }
    // difference quotients in 8 directions, padded by a quarter
    let fp = system.eval(p);
    let mut l = S::zero();
    let dirs = if p.dim() == Dim::One { 2 } else { 8 };
    for k in 0..dirs {
        let a = S::TAU() * S::from_usize_lossy(k) / S::from_usize_lossy(dirs);
        let u = Point::plane(a.cos(), a.sin()).with_dim(p.dim());
        let q = p + u * radius;
        l = l.max(system.eval(q).euclid(&fp) / radius);
    }
    l * S::lit(1.25)
}

/// `r = δ` for `h₀(p) = safety · d(f(p), p) / (1 + L(p))`, validated with
/// [`check_disjointness`]; on failure `safety` is halved, up to five times.
pub fn fixed_point_free_radius<S: Scalar>(
    system: &dyn DynSystem<S>,
    metric: Metric,
    domain: &FreeDomain<S>,
    resolution: (usize, usize),
    safety: S,
) -> Result<RadiusField<S>, DiskChainError> {
    if !(safety > S::zero() && safety < S::one()) {
        return Err(DiskChainError::Degenerate(format!(
            "safety must lie in (0, 1), got {safety}"
        )));
    }
    let (nx, ny) = resolution;
    let ny = if domain.window.dim() == Dim::One { 0 } else { ny.max(1) };
    let probe = GridField::from_fn(domain.window, nx.max(1), ny, |_| S::one());
    let nodes: Vec<Point<S>> = (0..probe.node_count()).map(|k| probe.node(k)).collect();
    let inside: Vec<bool> = nodes.iter().map(|p| domain.contains(p)).collect();
    let disp: Vec<S> = nodes
        .par_iter()
        .map(|p| displacement(system, metric, *p))
        .collect();
    let zero = S::lit(ZERO_DISPLACEMENT);
    if let Some(k) = (0..nodes.len()).find(|&k| inside[k] && !(disp[k] >= zero)) {
        return Err(DiskChainError::NotFixedPointFree {
            at: nodes[k].to_string(),
            displacement: disp[k].to_f64_lossy(),
        });
    }
    let mut samples: Vec<Point<S>> = nodes
        .iter()
        .zip(&inside)
        .filter(|(_, i)| **i)
        .map(|(p, _)| *p)
        .collect();
    samples.extend(cell_centres(&probe).into_iter().filter(|p| domain.contains(p)));

    let mut safety = safety;
    let mut last = None;
    for _ in 0..=MAX_SAFETY_HALVINGS {
        let h0: Vec<S> = (0..nodes.len())
            .into_par_iter()
            .map(|k| {
                if !inside[k] {
                    return S::infinity();
                }
                let reach = safety * disp[k];
                safety * disp[k] / (S::one() + lipschitz_at(system, nodes[k], reach))
            })
            .collect();
        let field = RadiusField::Grid(pasch_hausdorff(&probe.with_values(h0), metric)?);
        let report = check_disjointness(system, metric, &field, &samples);
        if report.ok {
            return Ok(field);
        }
        last = Some(report);
        safety = safety * S::lit(0.5);
    }
    let report = last.expect("at least one attempt");
    Err(DiskChainError::Disjointness {
        at: report.worst_at.map(|p| p.to_string()).unwrap_or_default(),
        margin: report.worst_margin.to_f64_lossy(),
    })
}

fn cell_centres<S: Scalar>(g: &GridField<S>) -> Vec<Point<S>> {
    let (nx, ny) = g.shape();
    let w = g.window();
    let (lo, dx) = (w.lo(), w.width() / S::from_usize_lossy(nx));
    let half = S::lit(0.5);
    if w.dim() == Dim::One {
        return (0..nx)
            .map(|i| Point::line(lo.x() + dx * (S::from_usize_lossy(i) + half)))
            .collect();
    }
    let dy = w.height() / S::from_usize_lossy(ny);
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(Point::plane(
                lo.x() + dx * (S::from_usize_lossy(i) + half),
                lo.y() + dy * (S::from_usize_lossy(j) + half),
            ));
        }
    }
    out
}

/// Points of the closed ball `B(c, r)`: `BOUNDARY_SAMPLES` on the boundary, three
/// interior rings and the centre.
fn ball_samples<S: Scalar>(c: Point<S>, r: S) -> Vec<Point<S>> {
    if c.dim() == Dim::One {
        return (0..=16)
            .map(|k| {
                let s = S::from_usize_lossy(k) / S::lit(8.0) - S::one();
                Point::line(c.x() + r * s)
            })
            .collect();
    }
    let mut out = Vec::with_capacity(BOUNDARY_SAMPLES + 49);
    out.push(c);
    let ring = |out: &mut Vec<Point<S>>, rad: S, count: usize| {
        for k in 0..count {
            let a = S::TAU() * S::from_usize_lossy(k) / S::from_usize_lossy(count);
            out.push(c + Point::plane(a.cos(), a.sin()) * rad);
        }
    };
    ring(&mut out, r, BOUNDARY_SAMPLES);
    for q in 1..=3 {
        ring(&mut out, r * S::from_usize_lossy(q) / S::lit(4.0), 16);
    }
    out
}

/// `d(f(c), c) − r − sup_a d(f(a), f(c))` over samples `a` of `B(c, r)`: a positive
/// value means `f(B(c, r))` misses `B(c, r)`.
pub fn disjointness_margin<S: Scalar>(system: &dyn DynSystem<S>, metric: Metric, c: Point<S>, r: S) -> S {
    let fc = system.eval(c);
    let spread = ball_samples(c, r)
        .into_iter()
        .map(|a| metric.dist(&system.eval(a), &fc))
        .fold(S::zero(), S::max);
    metric.dist(&fc, &c) - r - spread
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisjointnessReport<S = f64> {
    pub ok: bool,
    pub worst_margin: S,
    pub worst_at: Option<Point<S>>,
}

/// Runs [`disjointness_margin`] with `r(p)` at every sample `p`.
pub fn check_disjointness<S: Scalar>(
    system: &dyn DynSystem<S>,
    metric: Metric,
    r: &RadiusField<S>,
    samples: &[Point<S>],
) -> DisjointnessReport<S> {
    let margins: Vec<S> = samples
        .par_iter()
        .map(|p| {
            let rad = r.eval(p);
            if !(rad > S::zero()) {
                return S::neg_infinity();
            }
            let m = disjointness_margin(system, metric, *p, rad);
            if m.is_nan() {
                S::neg_infinity()
            } else {
                m
            }
        })
        .collect();
    let mut worst = S::infinity();
    let mut worst_at = None;
    for (p, m) in samples.iter().zip(margins) {
        if m < worst {
            worst = m;
            worst_at = Some(*p);
        }
    }
    DisjointnessReport {
        ok: !samples.is_empty() && worst > S::lit(MARGIN_TOLERANCE),
        worst_margin: worst,
        worst_at,
    }
}

/// One disk of a certificate with its link to the next disk: `witness ∈ disk`
/// and `f^iterate(witness)` lies in the following disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskLink<S = f64> {
    pub disk: Disk<S>,
    pub iterate: usize,
    pub witness: Point<S>,
}

/// A periodic disk chain `U_0, …, U_{n-1}` (and implicitly `U_n = U_0`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiskChainCertificate<S = f64> {
    links: Vec<DiskLink<S>>,
}

impl<S: Scalar> DiskChainCertificate<S> {
    pub fn new(links: Vec<DiskLink<S>>) -> Self {
        DiskChainCertificate { links }
    }

    pub fn links(&self) -> &[DiskLink<S>] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn disks(&self) -> impl Iterator<Item = &Disk<S>> {
        self.links.iter().map(|l| &l.disk)
    }

    /// Header `diskchain n`, then `cx cy r m wx wy` per disk.
    pub fn to_text(&self) -> String {
        let mut out = format!("diskchain {}\n", self.links.len());
        for l in &self.links {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                l.disk.center.x(),
                l.disk.center.y(),
                l.disk.radius,
                l.iterate,
                l.witness.x(),
                l.witness.y()
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DiskChainError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line, msg: &str| DiskChainError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| err(1, "empty certificate"))?;
        let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["diskchain", n] => n.parse().map_err(|_| err(hl, "bad disk count"))?,
            _ => return Err(err(hl, "expected `diskchain n`")),
        };
        let mut links = Vec::with_capacity(n);
        for (line, body) in lines {
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.len() != 6 {
                return Err(err(line, "expected `cx cy r m wx wy`"));
            }
            let num = |t: &str| t.parse::<S>().map_err(|_| err(line, &format!("not a number: `{t}`")));
            let m: usize = toks[3]
                .parse()
                .map_err(|_| err(line, "iterate count must be a positive integer"))?;
            links.push(DiskLink {
                disk: Disk::new(Point::plane(num(toks[0])?, num(toks[1])?), num(toks[2])?),
                iterate: m,
                witness: Point::plane(num(toks[4])?, num(toks[5])?),
            });
        }
        if links.len() != n {
            return Err(err(hl, &format!("header says {n} disks, found {}", links.len())));
        }
        Ok(DiskChainCertificate { links })
    }
}

/// A step taken while resolving intersections.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolution<S = f64> {
    /// Case (a): both radii of the pair multiplied by `factor`.
    Shrink { i: usize, j: usize, factor: S },
    /// Case (b): chain points `i..j` removed.
    Splice { i: usize, j: usize },
    /// Case (c): only disks `i..j` kept.
    Subcycle { i: usize, j: usize },
    /// A disk shrunk afterwards to restore `f(U) ∩ U = ∅`.
    Repair { i: usize, factor: S },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskChainBuild<S = f64> {
    pub certificate: DiskChainCertificate<S>,
    pub log: Vec<Resolution<S>>,
}

impl<S: Scalar> DiskChainBuild<S> {
    pub fn shrink_fired(&self) -> bool {
        self.log.iter().any(|r| matches!(r, Resolution::Shrink { .. }))
    }

    pub fn splice_fired(&self) -> bool {
        self.log.iter().any(|r| matches!(r, Resolution::Splice { .. }))
    }

    pub fn subcycle_fired(&self) -> bool {
        self.log.iter().any(|r| matches!(r, Resolution::Subcycle { .. }))
    }
}

#[derive(Debug, Clone, Copy)]
struct Item<S> {
    center: Point<S>,
    radius: S,
    witness: Point<S>,
}

impl<S: Scalar> Item<S> {
    fn same_disk(&self, other: &Self) -> bool {
        self.center == other.center && self.radius == other.radius
    }

    fn holds(&self, p: &Point<S>) -> bool {
        p.euclid(&self.center) < self.radius
    }
}

const MAX_RESOLUTION_STEPS: usize = 1_000_000;

/// Turns a closed `Radius(r)`-chain into a periodic disk chain with all iterates 1.
///
/// Disk `U_i = B(f(p_{i-1}), r(f(p_{i-1})))` carries the witness `p_i`. Intersecting
/// distinct disks `U_i`, `U_j` (`i < j`) are resolved by splicing out `p_i … p_{j-1}`
/// when `p_j ∈ U_i`, by shrinking both on [`SHRINK_LADDER`] when neither `p_j` nor
/// the centre of `U_j` lies in `U_i`, and, once only the third kind is left, by
/// keeping the subcycle `U_i … U_{j-1}` for the largest such `i` and then the
/// smallest `j`.
pub fn build_disk_chain<S: Scalar>(
    system: &dyn DynSystem<S>,
    chain: &Chain<S>,
    r: &RadiusField<S>,
) -> Result<DiskChainBuild<S>, DiskChainError> {
    if !chain.is_closed() {
        return Err(DiskChainError::NotClosed);
    }
    if system.dim() != Dim::Two {
        return Err(DiskChainError::InvalidChain("disk chains live in the plane".into()));
    }
    let metric = Metric::Euclidean;
    let report = verify_chain(system, metric, chain, &ChainNotion::Radius(r.clone()));
    if !report.valid {
        return Err(DiskChainError::InvalidChain(format!(
            "not a Radius chain for {r}: step {} fails",
            report.first_violation.unwrap_or(0)
        )));
    }
    let pts = chain.points();
    let n = pts.len() - 1;
    let mut items: Vec<Item<S>> = (1..=n)
        .map(|i| {
            let c = system.eval(pts[i - 1]);
            Item {
                center: c,
                radius: r.eval(&c),
                witness: pts[i],
            }
        })
        .collect();
    let zero = S::lit(ZERO_DISPLACEMENT);
    for it in &items {
        let d = displacement(system, metric, it.center);
        if !(d >= zero) {
            return Err(DiskChainError::NotFixedPointFree {
                at: it.center.to_string(),
                displacement: d.to_f64_lossy(),
            });
        }
    }

    let mut log = Vec::new();
    let mut steps = 0;
    'resolve: loop {
        steps += 1;
        if steps > MAX_RESOLUTION_STEPS {
            return Err(DiskChainError::ConstructionFailed {
                i: 0,
                j: 0,
                msg: "resolution did not terminate".into(),
            });
        }
        let mut deferred: Vec<(usize, usize)> = Vec::new();
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let (a, b) = (items[i], items[j]);
                if a.same_disk(&b) || a.center.euclid(&b.center) >= a.radius + b.radius {
                    continue;
                }
                if a.holds(&b.witness) {
                    items[i].witness = b.witness;
                    items.drain(i + 1..=j);
                    log.push(Resolution::Splice { i, j });
                    continue 'resolve;
                }
                if a.holds(&b.center) {
                    deferred.push((i, j));
                    continue;
                }
                let d = a.center.euclid(&b.center);
                let factor = SHRINK_LADDER.iter().map(|&f| S::lit(f)).find(|&f| {
                    d >= f * (a.radius + b.radius)
                        && a.witness.euclid(&a.center) < f * a.radius
                        && b.witness.euclid(&b.center) < f * b.radius
                });
                let Some(f) = factor else {
                    return Err(DiskChainError::ConstructionFailed {
                        i,
                        j,
                        msg: format!(
                            "no shrink factor separates centres {} and {} (radii {}, {}) and keeps the witnesses",
                            a.center, b.center, a.radius, b.radius
                        ),
                    });
                };
                items[i].radius = a.radius * f;
                items[j].radius = b.radius * f;
                log.push(Resolution::Shrink { i, j, factor: f });
                continue 'resolve;
            }
        }
        let Some(&(i, _)) = deferred.iter().max_by_key(|(i, _)| *i) else {
            break;
        };
        let j = deferred
            .iter()
            .filter(|(a, _)| *a == i)
            .map(|(_, b)| *b)
            .min()
            .expect("pair with the chosen i");
        // the centre of U_j is f(p_{j-1}) and lies in U_i, so U_{j-1} links back to U_i
        items.truncate(j);
        items.drain(..i);
        log.push(Resolution::Subcycle { i, j });
    }

    for (k, it) in items.iter_mut().enumerate() {
        if disjointness_margin(system, metric, it.center, it.radius) > S::lit(MARGIN_TOLERANCE) {
            continue;
        }
        let d = it.witness.euclid(&it.center);
        let factor = SHRINK_LADDER.iter().map(|&f| S::lit(f)).find(|&f| {
            d < f * it.radius
                && disjointness_margin(system, metric, it.center, f * it.radius) > S::lit(MARGIN_TOLERANCE)
        });
        let Some(f) = factor else {
            return Err(DiskChainError::Disjointness {
                at: it.center.to_string(),
                margin: disjointness_margin(system, metric, it.center, it.radius).to_f64_lossy(),
            });
        };
        it.radius = it.radius * f;
        log.push(Resolution::Repair { i: k, factor: f });
    }

    let links = items
        .into_iter()
        .map(|it| DiskLink {
            disk: Disk::new(it.center, it.radius),
            iterate: 1,
            witness: it.witness,
        })
        .collect();
    Ok(DiskChainBuild {
        certificate: DiskChainCertificate { links },
        log,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<S = f64> {
    pub ok: bool,
    /// Smallest margin found; positive is good.
    pub worst_margin: S,
    /// Disk index (or first index of the pair) attaining it.
    pub worst_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskChainReport<S = f64> {
    pub pass: bool,
    /// `f(U_i) ∩ U_i = ∅`.
    pub own_image: ConditionReport<S>,
    /// Distinct disks are disjoint.
    pub pairwise: ConditionReport<S>,
    /// `a_i ∈ U_i` and `f^{m_i}(a_i) ∈ U_{i+1}`.
    pub links: ConditionReport<S>,
}

impl<S: Scalar> DiskChainReport<S> {
    /// `PASS (1)(2)(3)` or e.g. `FAIL (2)`.
    pub fn summary(&self) -> String {
        let conds = [&self.own_image, &self.pairwise, &self.links];
        if self.pass {
            return "PASS (1)(2)(3)".into();
        }
        let failed: String = conds
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.ok)
            .map(|(k, _)| format!("({})", k + 1))
            .collect();
        format!("FAIL {failed}")
    }
}

impl<S: Scalar> fmt::Display for DiskChainReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary())?;
        for (k, c) in [&self.own_image, &self.pairwise, &self.links].iter().enumerate() {
            writeln!(
                f,
                "({}) {} worst margin {} at {}",
                k + 1,
                if c.ok { "ok" } else { "FAIL" },
                c.worst_margin,
                c.worst_index.map_or("-".to_string(), |i| i.to_string())
            )?;
        }
        Ok(())
    }
}

fn condition<S: Scalar>(margins: impl Iterator<Item = (usize, S)>, ok: impl Fn(S) -> bool) -> ConditionReport<S> {
    let mut worst = S::infinity();
    let mut at = None;
    let mut all = true;
    for (k, m) in margins {
        let m = if m.is_nan() { S::neg_infinity() } else { m };
        all &= ok(m);
        if m < worst {
            worst = m;
            at = Some(k);
        }
    }
    ConditionReport {
        ok: all,
        worst_margin: worst,
        worst_index: at,
    }
}

/// Checks the three disk-chain conditions. Condition (2) is exact; condition (1)
/// uses the sampled margin of [`disjointness_margin`].
pub fn verify_disk_chain<S: Scalar>(system: &dyn DynSystem<S>, cert: &DiskChainCertificate<S>) -> DiskChainReport<S> {
    let links = cert.links();
    let n = links.len();
    let metric = Metric::Euclidean;
    let own = condition(
        links
            .iter()
            .enumerate()
            .map(|(k, l)| (k, disjointness_margin(system, metric, l.disk.center, l.disk.radius))),
        |m| m > S::lit(MARGIN_TOLERANCE),
    );
    let mut pair_margins = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&links[i].disk, &links[j].disk);
            if a == b {
                continue;
            }
            pair_margins.push((i, a.center.euclid(&b.center) - (a.radius + b.radius)));
        }
    }
    let pairwise = condition(pair_margins.into_iter(), |m| m >= S::zero());
    let link = condition(
        links.iter().enumerate().map(|(k, l)| {
            let next = &links[(k + 1) % n].disk;
            let inside = l.disk.radius - l.witness.euclid(&l.disk.center);
            let landed = iterate(system, l.witness, l.iterate.max(1));
            let reach = next.radius - landed.euclid(&next.center);
            let valid = if l.iterate >= 1 && l.disk.radius > S::zero() {
                S::infinity()
            } else {
                S::neg_infinity()
            };
            (k, inside.min(reach).min(valid))
        }),
        |m| m > S::zero(),
    );
    let nonempty = n > 0;
    DiskChainReport {
        pass: nonempty && own.ok && pairwise.ok && link.ok,
        own_image: ConditionReport {
            ok: own.ok && nonempty,
            ..own
        },
        pairwise,
        links: ConditionReport {
            ok: link.ok && nonempty,
            ..link
        },
    }
}

fn wrap_angle<S: Scalar>(a: S) -> S {
    let tau = S::TAU();
    let mut a = a % tau;
    if a > S::PI() {
        a = a - tau;
    } else if a <= -S::PI() {
        a = a + tau;
    }
    a
}

const MAX_EDGE_DEPTH: usize = 40;

/// Angle swept by `f(p) − p` along the segment `a → b`, refined until each piece
/// turns by less than a quarter turn.
fn edge_sweep<S: Scalar>(system: &dyn DynSystem<S>, a: Point<S>, b: Point<S>, va: Point<S>, vb: Point<S>, depth: usize) -> Result<S, DiskChainError> {
    let turn = wrap_angle(vb.y().atan2(vb.x()) - va.y().atan2(va.x()));
    if turn.abs() < S::FRAC_PI_2() {
        return Ok(turn);
    }
    if depth >= MAX_EDGE_DEPTH {
        return Err(DiskChainError::Inconclusive(format!(
            "displacement turns too fast between ({a}) and ({b})"
        )));
    }
    let m = (a + b) * S::lit(0.5);
    let vm = field_at(system, m)?;
    Ok(edge_sweep(system, a, m, va, vm, depth + 1)? + edge_sweep(system, m, b, vm, vb, depth + 1)?)
}

fn field_at<S: Scalar>(system: &dyn DynSystem<S>, p: Point<S>) -> Result<Point<S>, DiskChainError> {
    let v = system.eval(p) - p;
    if !(v.norm() >= S::lit(ZERO_DISPLACEMENT)) {
        return Err(DiskChainError::Inconclusive(format!(
            "displacement {} at ({p})",
            v.norm()
        )));
    }
    Ok(v)
}

/// Degree of `p ↦ f(p) − p` around the closed polygon `loop_pts` (closed
/// implicitly if the last vertex differs from the first).
pub fn winding_number<S: Scalar>(system: &dyn DynSystem<S>, loop_pts: &[Point<S>]) -> Result<i64, DiskChainError> {
    if system.dim() != Dim::Two || loop_pts.iter().any(|p| p.dim() != Dim::Two) {
        return Err(DiskChainError::Inconclusive("winding needs a planar map and loop".into()));
    }
    if loop_pts.len() < 2 {
        return Err(DiskChainError::Inconclusive("loop needs at least two vertices".into()));
    }
    let mut pts = loop_pts.to_vec();
    if pts.first() != pts.last() {
        pts.push(pts[0]);
    }
    let fields = pts
        .iter()
        .map(|p| field_at(system, *p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = S::zero();
    for k in 0..pts.len() - 1 {
        total = total + edge_sweep(system, pts[k], pts[k + 1], fields[k], fields[k + 1], 0)?;
    }
    Ok((total / S::TAU()).round().to_i64().unwrap_or(0))
}

fn box_loop<S: Scalar>(w: &Window<S>) -> Vec<Point<S>> {
    w.corners()
}

fn quarter<S: Scalar>(w: &Window<S>) -> [Window<S>; 4] {
    let (lo, hi, c) = (w.lo(), w.hi(), w.center());
    [
        Window { lo, hi: c },
        Window {
            lo: Point::plane(c.x(), lo.y()),
            hi: Point::plane(hi.x(), c.y()),
        },
        Window {
            lo: Point::plane(lo.x(), c.y()),
            hi: Point::plane(c.x(), hi.y()),
        },
        Window { lo: c, hi },
    ]
}

const MAX_BISECTION_DEPTH: usize = 80;

/// Looks for a point of `window` with `|f(p) − p| < tol`.
///
/// Planar maps: the window is cut into `nx × ny` boxes and boxes whose boundary
/// winding number is nonzero are bisected; if none qualifies, the boxes of least
/// displacement are refined by pattern search. Line maps: sign changes of
/// `f(t) − t` are bisected. `None` only says nothing was found in the window.
pub fn find_fixed_point<S: Scalar>(
    system: &dyn DynSystem<S>,
    window: &Window<S>,
    resolution: (usize, usize),
    tol: S,
) -> Option<Point<S>> {
    if system.dim() != window.dim() {
        return None;
    }
    let (nx, ny) = (resolution.0.max(1), resolution.1.max(1));
    let disp = |p: &Point<S>| (system.eval(*p) - *p).norm();
    if window.dim() == Dim::One {
        return fixed_point_on_line(system, window, nx, tol);
    }
    let grid = GridField::from_fn(*window, nx, ny, |_| S::zero());
    let corners: Vec<Point<S>> = (0..grid.node_count()).map(|k| grid.node(k)).collect();
    let corner_disp: Vec<S> = corners.par_iter().map(disp).collect();
    if let Some(k) = (0..corners.len()).filter(|&k| corner_disp[k] < tol).min_by(|&a, &b| {
        corner_disp[a].partial_cmp(&corner_disp[b]).unwrap()
    }) {
        return Some(corners[k]);
    }
    let (dx, dy) = (window.width() / S::from_usize_lossy(nx), window.height() / S::from_usize_lossy(ny));
    let lo = window.lo();
    let boxes: Vec<Window<S>> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let p0 = Point::plane(lo.x() + dx * S::from_usize_lossy(i), lo.y() + dy * S::from_usize_lossy(j));
            Window {
                lo: p0,
                hi: p0 + Point::plane(dx, dy),
            }
        })
        .collect();
    let flagged: Vec<bool> = boxes
        .par_iter()
        .map(|b| !matches!(winding_number(system, &box_loop(b)), Ok(0)))
        .collect();
    for (b, f) in boxes.iter().zip(&flagged) {
        if *f {
            if let Some(p) = bisect_box(system, b, tol, 0) {
                return Some(p);
            }
        }
    }
    // no box certified a fixed point: polish the most promising centres
    let mut order: Vec<(S, usize)> = boxes.iter().enumerate().map(|(k, b)| (disp(&b.center()), k)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, k) in order.iter().take(4) {
        let p = pattern_search(&disp, window, boxes[k].center(), dx.max(dy));
        if disp(&p) < tol {
            return Some(p);
        }
    }
    None
}

fn bisect_box<S: Scalar>(system: &dyn DynSystem<S>, b: &Window<S>, tol: S, depth: usize) -> Option<Point<S>> {
    let c = b.center();
    if (system.eval(c) - c).norm() < tol {
        return Some(c);
    }
    if depth >= MAX_BISECTION_DEPTH || b.width() <= S::epsilon() * (S::one() + c.x().abs()) {
        return None;
    }
    for q in quarter(b) {
        match winding_number(system, &box_loop(&q)) {
            Ok(0) => continue,
            _ => {
                if let Some(p) = bisect_box(system, &q, tol, depth + 1) {
                    return Some(p);
                }
            }
        }
    }
    None
}

fn pattern_search<S: Scalar>(disp: &dyn Fn(&Point<S>) -> S, window: &Window<S>, start: Point<S>, step: S) -> Point<S> {
    let mut p = start;
    let mut best = disp(&p);
    let mut h = step;
    let floor = S::epsilon() * (S::one() + window.diameter());
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    while h > floor {
        let mut moved = false;
        for (ax, ay) in dirs {
            let q = window.clamp(&(p + Point::plane(S::lit(ax), S::lit(ay)) * h));
            let v = disp(&q);
            if v < best {
                best = v;
                p = q;
                moved = true;
            }
        }
        if !moved {
            h = h * S::lit(0.5);
        }
    }
    p
}

fn fixed_point_on_line<S: Scalar>(system: &dyn DynSystem<S>, window: &Window<S>, n: usize, tol: S) -> Option<Point<S>> {
    let g = |t: S| system.eval(Point::line(t)).x() - t;
    let (a, w) = (window.lo().x(), window.width());
    let ts: Vec<S> = (0..=n)
        .map(|k| a + w * S::from_usize_lossy(k) / S::from_usize_lossy(n))
        .collect();
    let gs: Vec<S> = ts.iter().map(|&t| g(t)).collect();
    if let Some(k) = (0..ts.len()).find(|&k| gs[k].abs() < tol) {
        return Some(Point::line(ts[k]));
    }
    for k in 0..n {
        if gs[k].signum() != gs[k + 1].signum() {
            let (mut lo, mut hi, glo) = (ts[k], ts[k + 1], gs[k]);
            for _ in 0..200 {
                let mid = (lo + hi) * S::lit(0.5);
                let gm = g(mid);
                if gm.abs() < tol {
                    return Some(Point::line(mid));
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if mid <= lo && mid >= hi {
                    break;
                }
            }
        }
    }
    None
}
