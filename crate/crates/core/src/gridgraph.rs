//! Box discretizations, transition graphs and recurrence verdicts.
//!
//! A [`TransitionGraph`] stores, for every box of a [`BoxGrid`], the images of a
//! small sample lattice. Edge weights `w(B, B′)` are computed on demand from those
//! images: in [`GraphMode::LipschitzInflated`] they are lower bounds on
//! `inf { d(f(a), b) : a ∈ B, b ∈ B′ }`, which is what makes a negative answer
//! certifiable; in [`GraphMode::Sampled`] they are plain sampled minima.
//!
//! Positive answers never rely on the graph: a witness chain is built from actual
//! points and re-verified on the map before it is reported.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::chains::{verify_chain, Chain, ChainNotion, ZERO_JUMP_SLACK};
use crate::geometry::{Dim, GeometryError, Metric, Point, Region, Window};
use crate::radius::RadiusField;
use crate::scalar::Scalar;
use crate::systems::SharedSystem;

/// Samples per box used when the caller has no preference.
pub const DEFAULT_SAMPLES_PER_BOX: usize = 9;

/// Longest exact orbit segment the searches will follow before giving up.
const MAX_ORBIT_RUN: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("box counts must be positive, got {0}x{1}")]
    ZeroCount(usize, usize),
    #[error("samples per box must be positive")]
    ZeroSamples,
    #[error("lipschitz mode needs a local Lipschitz bound, and `{0}` provides none")]
    MissingLipschitz(String),
    #[error("lipschitz mode is not available for the {0} metric")]
    UnsupportedMetric(Metric),
    #[error("metric {0} cannot be used in dimension {1}")]
    MetricDimension(Metric, usize),
    #[error("system `{system}` acts in dimension {got}, the window has dimension {expected}")]
    Dimension {
        system: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid notion: {0}")]
    Notion(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Half-open partition of a window into `nx × ny` equal boxes (`nx` on the line).
///
/// Box `(i, j)` has index `i + nx·j`. Points on the window's upper edges belong to
/// the last box of their row or column.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid<S = f64> {
    window: Window<S>,
    nx: usize,
    ny: usize,
}

/// Partitions `window` into boxes; `ny` is ignored for a line window.
pub fn build_grid<S: Scalar>(window: Window<S>, nx: usize, ny: usize) -> Result<BoxGrid<S>, GridError> {
    BoxGrid::new(window, nx, ny)
}

impl<S: Scalar> BoxGrid<S> {
    pub fn new(window: Window<S>, nx: usize, ny: usize) -> Result<Self, GridError> {
        let ny = if window.dim() == Dim::One { 1 } else { ny };
        if nx == 0 || ny == 0 {
            return Err(GridError::ZeroCount(nx, ny));
        }
        // re-validate: windows built from raw parts could be degenerate
        let window = Window::new(window.lo(), window.hi())?;
        Ok(BoxGrid { window, nx, ny })
    }

    pub fn window(&self) -> &Window<S> {
        &self.window
    }

    pub fn dim(&self) -> Dim {
        self.window.dim()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// `None` on the line.
    pub fn ny(&self) -> Option<usize> {
        match self.dim() {
            Dim::One => None,
            Dim::Two => Some(self.ny),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Box side lengths (`dy = 0` on the line).
    pub fn side(&self) -> (S, S) {
        let dx = self.window.width() / S::from_usize_lossy(self.nx);
        match self.dim() {
            Dim::One => (dx, S::zero()),
            Dim::Two => (dx, self.window.height() / S::from_usize_lossy(self.ny)),
        }
    }

    /// Euclidean diameter of one box.
    pub fn box_diameter(&self) -> S {
        let (dx, dy) = self.side();
        dx.hypot(dy)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn cell(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    fn axis_index(v: S, lo: S, step: S, n: usize) -> usize {
        let k = ((v - lo) / step).floor();
        if k <= S::zero() {
            0
        } else {
            k.to_usize().unwrap_or(n - 1).min(n - 1)
        }
    }

    /// The box containing `p`, or `None` outside the window.
    pub fn box_of(&self, p: &Point<S>) -> Option<usize> {
        if p.dim() != self.dim() || !self.window.contains(p) {
            return None;
        }
        let (dx, dy) = self.side();
        let lo = self.window.lo();
        let i = Self::axis_index(p.x(), lo.x(), dx, self.nx);
        let j = match self.dim() {
            Dim::One => 0,
            Dim::Two => Self::axis_index(p.y(), lo.y(), dy, self.ny),
        };
        Some(self.index(i, j))
    }

    pub fn box_window(&self, k: usize) -> Window<S> {
        let (i, j) = self.cell(k);
        let (dx, dy) = self.side();
        let lo = self.window.lo();
        let x0 = lo.x() + dx * S::from_usize_lossy(i);
        let x1 = if i + 1 == self.nx {
            self.window.hi().x()
        } else {
            lo.x() + dx * S::from_usize_lossy(i + 1)
        };
        match self.dim() {
            Dim::One => Window {
                lo: Point::line(x0),
                hi: Point::line(x1),
            },
            Dim::Two => {
                let y0 = lo.y() + dy * S::from_usize_lossy(j);
                let y1 = if j + 1 == self.ny {
                    self.window.hi().y()
                } else {
                    lo.y() + dy * S::from_usize_lossy(j + 1)
                };
                Window {
                    lo: Point::plane(x0, y0),
                    hi: Point::plane(x1, y1),
                }
            }
        }
    }

    pub fn center(&self, k: usize) -> Point<S> {
        self.box_window(k).center()
    }

    /// Indices of all boxes that may meet the axis-aligned rectangle `[lo, hi]`
    /// (one box of slack on every side).
    pub fn boxes_meeting(&self, lo: Point<S>, hi: Point<S>) -> Vec<usize> {
        let (wlo, whi) = (self.window.lo(), self.window.hi());
        if hi.x() < wlo.x() || lo.x() > whi.x() {
            return Vec::new();
        }
        let (dx, dy) = self.side();
        let span = |a: S, b: S, o: S, step: S, n: usize| {
            let i0 = Self::axis_index(a, o, step, n).saturating_sub(1);
            let i1 = (Self::axis_index(b, o, step, n) + 1).min(n - 1);
            (i0, i1)
        };
        let (i0, i1) = span(lo.x(), hi.x(), wlo.x(), dx, self.nx);
        let (j0, j1) = match self.dim() {
            Dim::One => (0, 0),
            Dim::Two => {
                if hi.y() < wlo.y() || lo.y() > whi.y() {
                    return Vec::new();
                }
                span(lo.y(), hi.y(), wlo.y(), dy, self.ny)
            }
        };
        let mut out = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.push(self.index(i, j));
            }
        }
        out
    }

    /// `⌈√samples⌉` points per axis, corners included (the centre when that is 1).
    pub fn sample_lattice(&self, k: usize, samples: usize) -> Vec<Point<S>> {
        let b = self.box_window(k);
        let m = lattice_side(samples);
        let coord = |lo: S, hi: S, a: usize| {
            if m == 1 {
                (lo + hi) * S::lit(0.5)
            } else {
                lo + (hi - lo) * S::from_usize_lossy(a) / S::from_usize_lossy(m - 1)
            }
        };
        let (lo, hi) = (b.lo(), b.hi());
        match self.dim() {
            Dim::One => (0..m).map(|a| Point::line(coord(lo.x(), hi.x(), a))).collect(),
            Dim::Two => (0..m)
                .flat_map(|bj| {
                    (0..m).map(move |ai| {
                        Point::plane(coord(lo.x(), hi.x(), ai), coord(lo.y(), hi.y(), bj))
                    })
                })
                .collect(),
        }
    }

    /// Largest distance from a point of a box to its nearest lattice sample.
    pub fn covering_radius(&self, samples: usize) -> S {
        let m = lattice_side(samples);
        let half = self.box_diameter() * S::lit(0.5);
        if m == 1 {
            half
        } else {
            half / S::from_usize_lossy(m - 1)
        }
    }
}

fn lattice_side(samples: usize) -> usize {
    let mut m = 1;
    while m * m < samples {
        m += 1;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphMode {
    /// Weights are sampled minima; negative answers are only indicative.
    Sampled,
    /// Weights are certified lower bounds.
    LipschitzInflated,
}

impl fmt::Display for GraphMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphMode::Sampled => "sampled",
            GraphMode::LipschitzInflated => "lipschitz",
        })
    }
}

impl FromStr for GraphMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sampled" => Ok(GraphMode::Sampled),
            "lipschitz" | "lipschitz_inflated" | "inflated" => Ok(GraphMode::LipschitzInflated),
            other => Err(format!("unknown graph mode `{other}` (sampled|lipschitz)")),
        }
    }
}

/// Per-box sample images of a map over a grid, with lazily evaluated edges.
pub struct TransitionGraph<S: Scalar = f64> {
    grid: BoxGrid<S>,
    system: SharedSystem<S>,
    metric: Metric,
    mode: GraphMode,
    per_box: usize,
    images: Vec<Point<S>>,
    center_images: Vec<Point<S>>,
    inflation: Vec<S>,
}

impl<S: Scalar> fmt::Debug for TransitionGraph<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionGraph")
            .field("system", &self.system.name())
            .field("grid", &self.grid)
            .field("metric", &self.metric)
            .field("mode", &self.mode)
            .field("samples", &self.per_box)
            .finish()
    }
}

/// Samples `system` on every box. Boxes are processed in parallel and stored in
/// index order, so the result does not depend on the thread count.
///
/// In [`GraphMode::LipschitzInflated`] each box `B` gets the inflation
/// `ι_B = L_B · ρ`, with `L_B` the system's Lipschitz bound on a ball containing `B`
/// and `ρ` the lattice covering radius; every image `f(a)`, `a ∈ B`, then lies
/// within `ι_B` of some sample image.
pub fn build_transition_graph<S: Scalar>(
    system: SharedSystem<S>,
    metric: Metric,
    grid: BoxGrid<S>,
    samples_per_box: usize,
    mode: GraphMode,
) -> Result<TransitionGraph<S>, GridError> {
    if samples_per_box == 0 {
        return Err(GridError::ZeroSamples);
    }
    if system.dim() != grid.dim() {
        return Err(GridError::Dimension {
            system: system.name().to_string(),
            expected: grid.dim().count(),
            got: system.dim().count(),
        });
    }
    if !metric.supports(grid.dim()) {
        return Err(GridError::MetricDimension(metric, grid.dim().count()));
    }
    if mode == GraphMode::LipschitzInflated {
        if metric == Metric::CircleInduced {
            return Err(GridError::UnsupportedMetric(metric));
        }
        let c = grid.center(0);
        if system.local_lipschitz(c, grid.box_diameter()).is_none() {
            return Err(GridError::MissingLipschitz(system.name().to_string()));
        }
    }
    let rho = grid.covering_radius(samples_per_box);
    let half_diam = grid.box_diameter() * S::lit(0.5);
    let per_box = lattice_side(samples_per_box).pow(grid.dim().count() as u32);
    let rows: Vec<(Vec<Point<S>>, Point<S>, S)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let images = grid
                .sample_lattice(k, samples_per_box)
                .into_iter()
                .map(|s| system.eval(s))
                .collect();
            let c = grid.center(k);
            let inflation = match mode {
                GraphMode::Sampled => S::zero(),
                GraphMode::LipschitzInflated => {
                    let l = system.local_lipschitz(c, half_diam).unwrap_or(S::infinity());
                    l * rho
                }
            };
            (images, system.eval(c), inflation)
        })
        .collect();
    let mut images = Vec::with_capacity(grid.len() * per_box);
    let mut center_images = Vec::with_capacity(grid.len());
    let mut inflation = Vec::with_capacity(grid.len());
    for (imgs, c, i) in rows {
        images.extend(imgs);
        center_images.push(c);
        inflation.push(i);
    }
    Ok(TransitionGraph {
        grid,
        system,
        metric,
        mode,
        per_box,
        images,
        center_images,
        inflation,
    })
}

impl<S: Scalar> TransitionGraph<S> {
    pub fn grid(&self) -> &BoxGrid<S> {
        &self.grid
    }

    pub fn system(&self) -> &SharedSystem<S> {
        &self.system
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    /// Images of box `k`'s sample lattice.
    pub fn sample_images(&self, k: usize) -> &[Point<S>] {
        &self.images[k * self.per_box..(k + 1) * self.per_box]
    }

    pub fn center_image(&self, k: usize) -> Point<S> {
        self.center_images[k]
    }

    /// `ι_B` (zero in sampled mode).
    pub fn inflation(&self, k: usize) -> S {
        self.inflation[k]
    }

    /// `w(B, B′) = max(0, min_s d(f(s), B′) − ι_B)`.
    pub fn weight(&self, from: usize, to: usize) -> S {
        let target = self.grid.box_window(to);
        let raw = self
            .sample_images(from)
            .iter()
            .map(|y| self.metric.dist_to_window(y, &target))
            .fold(S::infinity(), S::min);
        (raw - self.inflation[from]).max(S::zero())
    }

    /// Lower bound on `d(f(a), p)` over `a` in box `k`.
    pub fn weight_to_point(&self, from: usize, p: &Point<S>) -> S {
        let raw = self
            .sample_images(from)
            .iter()
            .map(|y| self.metric.dist(y, p))
            .fold(S::infinity(), S::min);
        (raw - self.inflation[from]).max(S::zero())
    }

    /// Whether `f(B)` can meet `region` (always judged with the inflated blob).
    pub fn image_may_meet(&self, from: usize, region: &Region<S>) -> bool {
        let i = self.inflation[from];
        self.sample_images(from)
            .iter()
            .any(|y| region.euclid_to(y) <= i)
    }

    /// Boxes within metric distance `radius` of `p` (a superset).
    fn boxes_near_point(&self, p: &Point<S>, radius: S) -> Vec<usize> {
        self.boxes_near_rect(*p, *p, radius)
    }

    fn boxes_near_rect(&self, lo: Point<S>, hi: Point<S>, radius: S) -> Vec<usize> {
        let euclidean_ball = match self.metric {
            Metric::Euclidean => true,
            Metric::Bounded => radius < S::one(),
            Metric::CircleInduced => false,
        };
        if !euclidean_ball || !radius.is_finite() {
            return (0..self.grid.len()).collect();
        }
        let m = Point::plane(radius, radius).with_dim(self.grid.dim());
        self.grid.boxes_meeting(lo - m, hi + m)
    }

    /// Outgoing edges of box `k` with weight `< cutoff`, in target index order.
    pub fn edges_from(&self, k: usize, cutoff: S) -> Vec<(usize, S)> {
        let imgs = self.sample_images(k);
        let mut lo = imgs[0];
        let mut hi = imgs[0];
        for y in imgs {
            lo = Point::plane(lo.x().min(y.x()), lo.y().min(y.y())).with_dim(y.dim());
            hi = Point::plane(hi.x().max(y.x()), hi.y().max(y.y())).with_dim(y.dim());
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Vec::new();
        }
        self.boxes_near_rect(lo, hi, cutoff + self.inflation[k])
            .into_iter()
            .filter_map(|t| {
                let w = self.weight(k, t);
                (w < cutoff).then_some((t, w))
            })
            .collect()
    }

    /// Every edge with weight `< cutoff`, ordered by source then target.
    pub fn edge_list(&self, cutoff: S) -> Vec<(usize, usize, S)> {
        let per: Vec<Vec<(usize, S)>> = (0..self.grid.len())
            .into_par_iter()
            .map(|k| self.edges_from(k, cutoff))
            .collect();
        per.into_iter()
            .enumerate()
            .flat_map(|(k, es)| es.into_iter().map(move |(t, w)| (k, t, w)))
            .collect()
    }

    /// Text edge list, one `src dst weight` line per edge.
    pub fn export_edges(&self, cutoff: S) -> String {
        let mut out = String::new();
        for (a, b, w) in self.edge_list(cutoff) {
            out.push_str(&format!("{a} {b} {w}\n"));
        }
        out
    }
}

/// Min-heap entry.
#[derive(Debug, Clone, Copy)]
struct Entry<S>(S, usize);

impl<S: Scalar> PartialEq for Entry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Entry<S> {}

impl<S: Scalar> PartialOrd for Entry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Entry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

const UNSEEN: usize = usize::MAX;

/// Looks for a chain from `from` to `to` admissible for `notion`, using box centres
/// (and, for restricted chains, exact orbit segments) as chain points. The result
/// has been checked with [`verify_chain`] on the real map.
pub fn find_chain<S: Scalar>(
    graph: &TransitionGraph<S>,
    from: Point<S>,
    to: Point<S>,
    notion: &ChainNotion<S>,
) -> Option<Chain<S>> {
    notion.validate().ok()?;
    let dim = graph.grid.dim();
    if from.dim() != dim || to.dim() != dim {
        return None;
    }
    let system = graph.system.as_ref();
    let metric = graph.metric;
    let accept = |pts: Vec<Point<S>>| -> Option<Chain<S>> {
        let chain = Chain::new(system, metric, pts).ok()?;
        verify_chain(system, metric, &chain, notion)
            .valid
            .then_some(chain)
    };
    if let Some(c) = accept(vec![from, to]) {
        return Some(c);
    }
    match notion {
        ChainNotion::Restricted { region, eps } => restricted_search(graph, from, to, region, *eps)
            .and_then(accept),
        ChainNotion::Strong(eps) => {
            orbit_closure(graph, from, to, notion).and_then(accept).or_else(|| {
                strong_search(graph, from, to, *eps).and_then(accept)
            })
        }
        _ => orbit_closure(graph, from, to, notion)
            .and_then(accept)
            .or_else(|| bfs_search(graph, from, to, notion).and_then(accept)),
    }
}

/// Largest admissible jump at image point `y`.
fn jump_bound<S: Scalar>(notion: &ChainNotion<S>, y: &Point<S>) -> S {
    match notion {
        ChainNotion::Eps(e) | ChainNotion::Strong(e) => *e,
        ChainNotion::Radius(r) => r.eval(y),
        ChainNotion::Restricted { eps, .. } => *eps,
    }
}

/// `(from, f(from), …, f^{k-1}(from), to)` for the first `k` whose image lands
/// close enough to `to`.
fn orbit_closure<S: Scalar>(
    graph: &TransitionGraph<S>,
    from: Point<S>,
    to: Point<S>,
    notion: &ChainNotion<S>,
) -> Option<Vec<Point<S>>> {
    let limit = graph.grid.len().clamp(16, 4096);
    let mut pts = vec![from];
    let mut p = from;
    for _ in 0..limit {
        let y = graph.system.eval(p);
        if !y.is_finite() {
            return None;
        }
        if graph.metric.dist(&y, &to) < jump_bound(notion, &y) {
            pts.push(to);
            return Some(pts);
        }
        pts.push(y);
        p = y;
    }
    None
}

fn path_to(parent: &[usize], start: usize, mut u: usize) -> Vec<usize> {
    let mut path = vec![u];
    while u != start {
        u = parent[u];
        path.push(u);
    }
    path.reverse();
    path
}

fn bfs_search<S: Scalar>(
    graph: &TransitionGraph<S>,
    from: Point<S>,
    to: Point<S>,
    notion: &ChainNotion<S>,
) -> Option<Vec<Point<S>>> {
    let grid = &graph.grid;
    let n = grid.len();
    let start = n;
    let mut parent = vec![UNSEEN; n + 1];
    parent[start] = start;
    let mut queue = VecDeque::from([start]);
    let start_image = graph.system.eval(from);
    while let Some(u) = queue.pop_front() {
        let y = if u == start { start_image } else { graph.center_images[u] };
        let bound = jump_bound(notion, &y);
        if !(bound > S::zero()) || !y.is_finite() {
            continue;
        }
        if graph.metric.dist(&y, &to) < bound {
            let mut pts: Vec<Point<S>> = path_to(&parent, start, u)
                .into_iter()
                .map(|k| if k == start { from } else { grid.center(k) })
                .collect();
            pts.push(to);
            return Some(pts);
        }
        for v in graph.boxes_near_point(&y, bound) {
            if parent[v] == UNSEEN && graph.metric.dist(&y, &grid.center(v)) < bound {
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

fn strong_search<S: Scalar>(
    graph: &TransitionGraph<S>,
    from: Point<S>,
    to: Point<S>,
    eps: S,
) -> Option<Vec<Point<S>>> {
    let grid = &graph.grid;
    let n = grid.len();
    let start = n;
    let mut dist = vec![S::infinity(); n + 1];
    let mut parent = vec![UNSEEN; n + 1];
    dist[start] = S::zero();
    parent[start] = start;
    let mut heap = BinaryHeap::from([Entry(S::zero(), start)]);
    let start_image = graph.system.eval(from);
    let mut best: Option<(S, usize)> = None;
    while let Some(Entry(c, u)) = heap.pop() {
        if c > dist[u] {
            continue;
        }
        let limit = best.map_or(eps, |(b, _)| b.min(eps));
        if c >= limit {
            break;
        }
        let y = if u == start { start_image } else { graph.center_images[u] };
        if !y.is_finite() {
            continue;
        }
        let close = c + graph.metric.dist(&y, &to);
        if close < limit {
            best = Some((close, u));
        }
        for v in graph.boxes_near_point(&y, limit - c) {
            let nc = c + graph.metric.dist(&y, &grid.center(v));
            if nc < dist[v] && nc < limit {
                dist[v] = nc;
                parent[v] = u;
                heap.push(Entry(nc, v));
            }
        }
    }
    let (_, u) = best?;
    let mut pts: Vec<Point<S>> = path_to(&parent, start, u)
        .into_iter()
        .map(|k| if k == start { from } else { grid.center(k) })
        .collect();
    pts.push(to);
    Some(pts)
}

/// Restricted search: from each node follow the exact orbit; wherever the image lies
/// in `W`, branch to every box centre within `eps` (or close onto `to`).
fn restricted_search<S: Scalar>(
    graph: &TransitionGraph<S>,
    from: Point<S>,
    to: Point<S>,
    region: &Region<S>,
    eps: S,
) -> Option<Vec<Point<S>>> {
    let grid = &graph.grid;
    let slack = S::lit(ZERO_JUMP_SLACK);
    let n = grid.len();
    let start = n;
    let run_limit = n.clamp(64, MAX_ORBIT_RUN);
    let mut parent = vec![UNSEEN; n + 1];
    // how many points of the parent's run precede the jump into this node
    let mut cut = vec![0; n + 1];
    let mut runs: Vec<Vec<Point<S>>> = vec![Vec::new(); n + 1];
    parent[start] = start;
    let mut queue = VecDeque::from([start]);
    let rep = |k: usize| if k == start { from } else { grid.center(k) };
    while let Some(u) = queue.pop_front() {
        let mut p = rep(u);
        let mut run = Vec::new();
        let mut closed = false;
        for _ in 0..run_limit {
            let y = graph.system.eval(p);
            if !y.is_finite() {
                break;
            }
            let d_to = graph.metric.dist(&y, &to);
            let inside = region.contains(&y);
            if d_to <= slack || (inside && d_to < eps) {
                closed = true;
                break;
            }
            if inside {
                for v in graph.boxes_near_point(&y, eps) {
                    if parent[v] == UNSEEN && graph.metric.dist(&y, &grid.center(v)) < eps {
                        parent[v] = u;
                        cut[v] = run.len();
                        queue.push_back(v);
                    }
                }
            }
            if y == p || !grid.window().contains(&y) {
                break;
            }
            run.push(y);
            p = y;
        }
        if closed {
            let path = path_to(&parent, start, u);
            let mut pts = Vec::new();
            for (k, &node) in path.iter().enumerate() {
                pts.push(rep(node));
                let upto = match path.get(k + 1) {
                    Some(&next) => cut[next],
                    None => run.len(),
                };
                let seg = if node == u { &run } else { &runs[node] };
                pts.extend_from_slice(&seg[..upto]);
            }
            pts.push(to);
            return Some(pts);
        }
        runs[u] = run;
    }
    None
}

/// How a search over certified lower-bound weights combines edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Combine {
    Max,
    Sum,
    Reach,
}

struct Exclusion<S> {
    /// Some closed path of admissible lower-bound edges returns to the point.
    path: bool,
    /// Eps: bottleneck of the best lower-bound cycle; Strong: its total.
    best: Option<S>,
}

/// Searches the lower-bound graph for a cycle through `p` admissible for `notion`,
/// staying inside the grid window. `radius_sup` bounds the radius field over a box's
/// image blob.
fn exclusion_search<S: Scalar>(
    graph: &TransitionGraph<S>,
    p: Point<S>,
    notion: &ChainNotion<S>,
    radius_sup: &dyn Fn(usize) -> S,
) -> Exclusion<S> {
    let grid = &graph.grid;
    let slack = S::lit(ZERO_JUMP_SLACK);
    let n = grid.len();
    let (combine, cap) = match notion {
        ChainNotion::Eps(e) => (Combine::Max, *e * S::lit(2.0)),
        ChainNotion::Strong(e) => (Combine::Sum, *e),
        ChainNotion::Radius(_) => (Combine::Reach, S::infinity()),
        ChainNotion::Restricted { eps, .. } => (Combine::Reach, *eps),
    };
    let y0 = graph.system.eval(p);
    // admissible weight bound out of a node, given the node's context
    let edge_limit = |u: Option<usize>| -> S {
        match notion {
            ChainNotion::Radius(r) => match u {
                None => r.eval(&y0),
                Some(k) => radius_sup(k),
            },
            ChainNotion::Restricted { region, eps } => {
                let meets = match u {
                    None => region.contains(&y0),
                    Some(k) => graph.image_may_meet(k, region),
                };
                if meets {
                    *eps
                } else {
                    slack
                }
            }
            _ => cap,
        }
    };
    let admissible = |w: S, limit: S| -> bool {
        match notion {
            ChainNotion::Restricted { .. } => w <= slack || w < limit,
            _ => w < limit,
        }
    };
    let join = |c: S, w: S| match combine {
        Combine::Max => c.max(w),
        Combine::Sum => c + w,
        Combine::Reach => S::zero(),
    };

    let mut cost = vec![S::infinity(); n];
    let mut heap = BinaryHeap::new();
    let mut best = S::infinity();

    let limit0 = edge_limit(None);
    let w_close0 = graph.metric.dist(&y0, &p);
    if admissible(w_close0, limit0) {
        best = best.min(join(S::zero(), w_close0));
    }
    if y0.is_finite() {
        let reach = if limit0.is_finite() { limit0 } else { S::infinity() };
        for v in graph.boxes_near_point(&y0, reach) {
            let w = graph.metric.dist_to_window(&y0, &grid.box_window(v));
            if admissible(w, limit0) {
                let c = join(S::zero(), w);
                if c < cost[v] && c < cap {
                    cost[v] = c;
                    heap.push(Entry(c, v));
                }
            }
        }
    }
    while let Some(Entry(c, u)) = heap.pop() {
        if c > cost[u] {
            continue;
        }
        if c >= best || (combine == Combine::Reach && best.is_finite()) {
            break;
        }
        let limit = edge_limit(Some(u));
        if !(limit > S::zero()) {
            continue;
        }
        let w_close = graph.weight_to_point(u, &p);
        if admissible(w_close, limit) {
            best = best.min(join(c, w_close));
        }
        let cutoff = match combine {
            Combine::Sum => (cap - c).min(limit),
            _ => limit,
        };
        let cutoff = if cutoff <= slack { slack * S::lit(2.0) } else { cutoff };
        for (v, w) in graph.edges_from(u, cutoff) {
            if !admissible(w, limit) {
                continue;
            }
            let nc = join(c, w);
            if nc < cost[v] && nc < cap && nc < best {
                cost[v] = nc;
                heap.push(Entry(nc, v));
            }
        }
    }
    Exclusion {
        path: match notion {
            ChainNotion::Eps(e) | ChainNotion::Strong(e) => best < *e,
            _ => best.is_finite(),
        },
        best: best.is_finite().then_some(best),
    }
}

/// Outcome of a recurrence query.
#[derive(Debug, Clone, PartialEq)]
pub enum VerdictLabel<S = f64> {
    /// A chain from the point back to itself, verified on the map.
    CertifiedYes(Chain<S>),
    /// No admissible chain from the point back to itself stays inside the window.
    /// For `Eps` and `Strong` the statement holds for every `ε ≤ threshold`.
    CertifiedNo { threshold: Option<S>, mode: GraphMode },
    /// No path in the sampled graph; not a proof.
    LikelyNo,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<S = f64> {
    pub label: VerdictLabel<S>,
    pub notes: String,
}

impl<S: Scalar> Verdict<S> {
    pub fn name(&self) -> &'static str {
        match self.label {
            VerdictLabel::CertifiedYes(_) => "CertifiedYes",
            VerdictLabel::CertifiedNo { .. } => "CertifiedNo",
            VerdictLabel::LikelyNo => "LikelyNo",
            VerdictLabel::Unknown => "Unknown",
        }
    }

    pub fn is_yes(&self) -> bool {
        matches!(self.label, VerdictLabel::CertifiedYes(_))
    }

    pub fn is_certified_no(&self) -> bool {
        matches!(self.label, VerdictLabel::CertifiedNo { .. })
    }

    pub fn witness(&self) -> Option<&Chain<S>> {
        match &self.label {
            VerdictLabel::CertifiedYes(c) => Some(c),
            _ => None,
        }
    }
}

impl<S: Scalar> fmt::Display for Verdict<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            VerdictLabel::CertifiedNo { .. } => f.write_str("CertifiedNo (window-relative)"),
            _ => f.write_str(self.name()),
        }
    }
}

/// Builds a graph of `window` at `resolution` and classifies `point`.
pub fn classify_recurrence<S: Scalar>(
    system: SharedSystem<S>,
    metric: Metric,
    point: Point<S>,
    notion: &ChainNotion<S>,
    window: Window<S>,
    resolution: (usize, usize),
    mode: GraphMode,
) -> Result<Verdict<S>, GridError> {
    let grid = build_grid(window, resolution.0, resolution.1)?;
    let graph = build_transition_graph(system, metric, grid, DEFAULT_SAMPLES_PER_BOX, mode)?;
    classify_on_graph(&graph, point, notion)
}

/// Classifies `point` on an existing graph.
pub fn classify_on_graph<S: Scalar>(
    graph: &TransitionGraph<S>,
    point: Point<S>,
    notion: &ChainNotion<S>,
) -> Result<Verdict<S>, GridError> {
    notion
        .validate()
        .map_err(|e| GridError::Notion(e.to_string()))?;
    if point.dim() != graph.grid.dim() {
        return Err(GridError::Dimension {
            system: graph.system.name().to_string(),
            expected: graph.grid.dim().count(),
            got: point.dim().count(),
        });
    }
    if let Some(chain) = find_chain(graph, point, point, notion) {
        return Ok(Verdict {
            notes: format!("witness with {} steps", chain.steps()),
            label: VerdictLabel::CertifiedYes(chain),
        });
    }
    if !graph.grid.window().contains(&point) {
        return Ok(Verdict {
            label: VerdictLabel::Unknown,
            notes: "point outside the window".into(),
        });
    }
    let inflated = graph.mode == GraphMode::LipschitzInflated;
    let mut notes = Vec::new();
    let mut certifiable = inflated;
    let radius_sup: Box<dyn Fn(usize) -> S + '_> = match notion {
        ChainNotion::Radius(r) => {
            let lip = r.lipschitz_bound();
            if lip.is_none() && inflated {
                certifiable = false;
                notes.push("radius field has no Lipschitz bound".to_string());
            }
            let lip = lip.unwrap_or(S::zero());
            let r = r.clone();
            Box::new(move |k| {
                let top = graph
                    .sample_images(k)
                    .iter()
                    .map(|y| r.eval(y))
                    .fold(S::zero(), S::max);
                top + lip * graph.inflation(k)
            })
        }
        _ => Box::new(|_| S::zero()),
    };
    let ex = exclusion_search(graph, point, notion, radius_sup.as_ref());
    let label = if ex.path {
        notes.push("lower-bound graph has a cycle but no witness was found".into());
        VerdictLabel::Unknown
    } else if certifiable {
        let threshold = match notion {
            ChainNotion::Eps(e) => Some(ex.best.map_or(*e * S::lit(2.0), |b| b.min(*e * S::lit(2.0)))),
            ChainNotion::Strong(e) => Some(*e),
            ChainNotion::Restricted { eps, .. } => Some(*eps),
            ChainNotion::Radius(_) => None,
        };
        notes.push("window-relative".into());
        VerdictLabel::CertifiedNo {
            threshold,
            mode: graph.mode,
        }
    } else {
        VerdictLabel::LikelyNo
    };
    Ok(Verdict {
        label,
        notes: notes.join("; "),
    })
}

/// The radius fields tried when a query asks about every neighborhood of the
/// diagonal: constants 0.5, 0.1, 0.02 and `c/(1 + |p|²)` for `c ∈ {0.5, 0.1}`.
pub fn default_radius_ladder<S: Scalar>() -> Vec<RadiusField<S>> {
    vec![
        RadiusField::constant(S::lit(0.5)),
        RadiusField::constant(S::lit(0.1)),
        RadiusField::constant(S::lit(0.02)),
        RadiusField::inverse_square(S::lit(0.5)),
        RadiusField::inverse_square(S::lit(0.1)),
    ]
}
