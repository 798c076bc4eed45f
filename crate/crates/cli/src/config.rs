//! Run configuration: a TOML file merged with command-line flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use chainrec::systems::{builtin, ExprSystem};
use chainrec::{ChainNotion, Dim, Disk, GraphMode, Metric, Point, RadiusField, Region, SharedSystem, Window};

use crate::CommonArgs;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemSpec>,
    pub metric: Option<String>,
    /// `[x0, x1, y0, y1]`, or `[t0, t1]` on the line.
    pub window: Option<Vec<f64>>,
    pub grid: Option<Vec<usize>>,
    pub mode: Option<String>,
    pub samples_per_box: Option<usize>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub notions: Vec<NotionSpec>,
    pub chain: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub plot: Option<PlotSpec>,
}

/// A built-in name such as `"rotation:5"`, or coordinate expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Builtin(String),
    Inline(InlineSystem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    pub name: Option<String>,
    pub fx: String,
    /// Omitted for maps of the line.
    pub fy: Option<String>,
    /// Bound on the Lipschitz constant over `B((x, y), r)`.
    pub lipschitz: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NotionSpec {
    Eps { value: f64 },
    Strong { value: f64 },
    Radius { field: String },
    Restricted { eps: f64, region: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    #[serde(default)]
    pub seeds: Vec<Vec<f64>>,
    pub iterates: Option<usize>,
    #[serde(default)]
    pub chains: Vec<PathBuf>,
    #[serde(default)]
    pub certificates: Vec<PathBuf>,
    #[serde(default)]
    pub fixed_boxes: bool,
    pub width: Option<u32>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Everything a command needs, with defaults filled in.
pub struct Settings {
    pub system: SharedSystem,
    pub metric: Metric,
    pub window: Window,
    pub grid: (usize, usize),
    pub mode: GraphMode,
    pub samples_per_box: usize,
    pub points: Vec<Point>,
    pub notions: Vec<ChainNotion>,
    pub chain: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub plot: PlotSpec,
}

impl Settings {
    pub fn dim(&self) -> Dim {
        self.system.dim()
    }
}

pub fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("not a number: `{}`", t.trim()))
        })
        .collect()
}

pub fn point_from(coords: &[f64]) -> Result<Point> {
    Point::from_coords(coords).map_err(|e| anyhow!("{e}"))
}

pub fn parse_point(s: &str) -> Result<Point> {
    point_from(&parse_numbers(s)?)
}

pub fn window_from(v: &[f64]) -> Result<Window> {
    let w = match v {
        [t0, t1] => Window::line(*t0, *t1),
        [x0, x1, y0, y1] => Window::plane(*x0, *x1, *y0, *y1),
        _ => bail!("a window takes 2 (line) or 4 (plane) numbers, got {}", v.len()),
    };
    w.map_err(|e| anyhow!("{e}"))
}

pub fn grid_from(v: &[usize]) -> Result<(usize, usize)> {
    match v {
        [n] => Ok((*n, 0)),
        [nx, ny] => Ok((*nx, *ny)),
        _ => bail!("a grid takes 1 or 2 box counts, got {}", v.len()),
    }
}

/// `disk:cx,cy,R` or `box:x0,x1,y0,y1`.
pub fn parse_region(s: &str) -> Result<Region> {
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("region `{s}` should look like disk:cx,cy,R or box:x0,x1,y0,y1"))?;
    let v = parse_numbers(args)?;
    match (kind.trim(), v.as_slice()) {
        ("disk", [cx, cy, r]) if *r > 0.0 => Ok(Region::Disk(Disk::new(Point::plane(*cx, *cy), *r))),
        ("box", [_, _, _, _]) => Ok(Region::Window(window_from(&v)?)),
        _ => bail!("bad region `{s}`"),
    }
}

pub fn parse_radius(s: &str) -> Result<RadiusField> {
    s.parse::<RadiusField>().map_err(|e| anyhow!("radius field `{s}`: {e}"))
}

fn resolve_system(spec: &SystemSpec) -> Result<SharedSystem> {
    match spec {
        SystemSpec::Builtin(name) => builtin::<f64>(name).map_err(|e| anyhow!("{e}")),
        SystemSpec::Inline(s) => {
            let dim = if s.fy.is_some() { Dim::Two } else { Dim::One };
            let name = s.name.as_deref().unwrap_or("inline");
            let sys = ExprSystem::new(name, dim, &s.fx, s.fy.as_deref(), s.lipschitz.as_deref())
                .map_err(|e| anyhow!("{e}"))?;
            Ok(Arc::new(sys))
        }
    }
}

fn notion_from(spec: &NotionSpec) -> Result<ChainNotion> {
    let n = match spec {
        NotionSpec::Eps { value } => ChainNotion::Eps(*value),
        NotionSpec::Strong { value } => ChainNotion::Strong(*value),
        NotionSpec::Radius { field } => ChainNotion::Radius(parse_radius(field)?),
        NotionSpec::Restricted { eps, region } => ChainNotion::Restricted {
            region: parse_region(region)?,
            eps: *eps,
        },
    };
    n.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(n)
}

/// Flags override the file; notion flags replace the file's notion list.
pub fn resolve(args: &CommonArgs) -> Result<Settings> {
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let system_spec = match (&args.system, &cfg.system) {
        (Some(s), _) => SystemSpec::Builtin(s.clone()),
        (None, Some(s)) => s.clone(),
        (None, None) => bail!("no system given (use --system or `system` in the config)"),
    };
    let system = resolve_system(&system_spec)?;
    let dim = system.dim();

    let metric = match args.metric.as_ref().or(cfg.metric.as_ref()) {
        Some(m) => m.parse::<Metric>().map_err(|e| anyhow!("{e}"))?,
        None => Metric::Euclidean,
    };
    let window = match (&args.window, &cfg.window) {
        (Some(s), _) => window_from(&parse_numbers(s)?)?,
        (None, Some(v)) => window_from(v)?,
        (None, None) => match dim {
            Dim::One => Window::line(-10.0, 10.0).unwrap(),
            Dim::Two => Window::plane(-2.0, 2.0, -2.0, 2.0).unwrap(),
        },
    };
    if window.dim() != dim {
        bail!(
            "system `{}` acts in dimension {}, the window has dimension {}",
            system.name(),
            dim.count(),
            window.dim().count()
        );
    }
    let grid = match (&args.grid, &cfg.grid) {
        (Some(s), _) => {
            let v = s
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| anyhow!("bad box count `{t}`")))
                .collect::<Result<Vec<_>>>()?;
            grid_from(&v)?
        }
        (None, Some(v)) => grid_from(v)?,
        (None, None) => match dim {
            Dim::One => (1000, 0),
            Dim::Two => (100, 100),
        },
    };
    let mode = match args.mode.as_ref().or(cfg.mode.as_ref()) {
        Some(m) => m.parse::<GraphMode>().map_err(|e| anyhow!("{e}"))?,
        None => GraphMode::Sampled,
    };
    let samples_per_box = args
        .samples_per_box
        .or(cfg.samples_per_box)
        .unwrap_or(chainrec::gridgraph::DEFAULT_SAMPLES_PER_BOX);

    let points = if args.point.is_empty() {
        cfg.points.iter().map(|v| point_from(v)).collect::<Result<Vec<_>>>()?
    } else {
        args.point.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?
    };
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        bail!("point ({p}) does not match the system's dimension {}", dim.count());
    }

    let flag_notions = !(args.eps.is_empty() && args.strong.is_empty() && args.radius_field.is_empty());
    let notions = if flag_notions {
        let mut specs = Vec::new();
        for &e in &args.eps {
            specs.push(match &args.restrict {
                Some(r) => NotionSpec::Restricted { eps: e, region: r.clone() },
                None => NotionSpec::Eps { value: e },
            });
        }
        specs.extend(args.strong.iter().map(|&e| NotionSpec::Strong { value: e }));
        specs.extend(args.radius_field.iter().map(|f| NotionSpec::Radius { field: f.clone() }));
        specs
    } else {
        if args.restrict.is_some() {
            bail!("--restrict needs --eps");
        }
        cfg.notions.clone()
    };
    let notions = notions.iter().map(notion_from).collect::<Result<Vec<_>>>()?;

    Ok(Settings {
        system,
        metric,
        window,
        grid,
        mode,
        samples_per_box,
        points,
        notions,
        chain: cfg.chain,
        certificate: cfg.certificate,
        tol: cfg.tol,
        out: args.out.clone().or(cfg.out),
        workers: args.workers.or(cfg.workers),
        plot: cfg.plot.unwrap_or_default(),
    })
}
