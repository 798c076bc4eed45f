//! Hand-written SVG 1.1. Output depends only on the scene, so equal scenes give
//! byte-identical files.

use std::fmt::Write;

use chainrec::{Disk, Point, Window};

/// Drawn steps per chain; longer chains are thinned evenly.
const MAX_CHAIN_STEPS: usize = 20_000;
const MAX_ORBIT_POINTS: usize = 20_000;

/// A chain as `(p_{i-1}, f(p_{i-1}), p_i)` triples.
#[derive(Debug, Clone, Default)]
pub struct ChainDrawing {
    pub steps: Vec<(Point, Point, Point)>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    /// Planar view; line data is drawn on the horizontal axis.
    pub view: Window,
    pub width: u32,
    pub fixed_boxes: Vec<Window>,
    pub disks: Vec<Disk>,
    pub orbits: Vec<Vec<Point>>,
    pub chains: Vec<ChainDrawing>,
}

impl Scene {
    pub fn new(view: Window, width: u32) -> Self {
        Scene {
            view,
            width: width.max(16),
            fixed_boxes: Vec::new(),
            disks: Vec::new(),
            orbits: Vec::new(),
            chains: Vec::new(),
        }
    }

    fn height(&self) -> u32 {
        let h = f64::from(self.width) * self.view.height() / self.view.width();
        (h.round() as u32).clamp(16, 8 * self.width)
    }

    fn scale(&self) -> f64 {
        f64::from(self.width) / self.view.width()
    }

    fn to_px(&self, p: &Point) -> (f64, f64) {
        let s = self.scale();
        let (lo, hi) = (self.view.lo(), self.view.hi());
        let y = if p.dim() == chainrec::Dim::One { 0.0 } else { p.y() };
        ((p.x() - lo.x()) * s, (hi.y() - y) * f64::from(self.height()) / self.view.height())
    }

    pub fn render(&self) -> String {
        let (w, h) = (self.width, self.height());
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
        self.axes(&mut s);

        if !self.fixed_boxes.is_empty() {
            s.push_str("<g id=\"fixed-boxes\" fill=\"#c8c8c8\" stroke=\"none\">\n");
            for b in &self.fixed_boxes {
                let (x0, y1) = self.to_px(&b.lo());
                let (x1, y0) = self.to_px(&b.hi());
                let _ = writeln!(
                    s,
                    "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\"/>",
                    x1 - x0,
                    y1 - y0
                );
            }
            s.push_str("</g>\n");
        }
        if !self.disks.is_empty() {
            s.push_str("<g id=\"disks\" fill=\"#1f77b4\" fill-opacity=\"0.15\" stroke=\"#1f77b4\" stroke-width=\"1\">\n");
            for d in &self.disks {
                let (cx, cy) = self.to_px(&d.center);
                let _ = writeln!(s, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\"/>", d.radius * self.scale());
            }
            s.push_str("</g>\n");
        }
        if !self.orbits.is_empty() {
            s.push_str("<g id=\"orbits\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1\">\n");
            for orbit in &self.orbits {
                let stride = orbit.len().div_ceil(MAX_ORBIT_POINTS).max(1);
                let pts: Vec<String> = orbit
                    .iter()
                    .step_by(stride)
                    .map(|p| {
                        let (x, y) = self.to_px(p);
                        format!("{x:.2},{y:.2}")
                    })
                    .collect();
                let _ = writeln!(s, "<polyline points=\"{}\"/>", pts.join(" "));
            }
            s.push_str("</g>\n");
        }
        if !self.chains.is_empty() {
            s.push_str("<g id=\"chains\" fill=\"none\" stroke-width=\"1\">\n");
            for chain in &self.chains {
                let stride = chain.steps.len().div_ceil(MAX_CHAIN_STEPS).max(1);
                let mut moves = String::new();
                let mut jumps = String::new();
                for (p, fp, q) in chain.steps.iter().step_by(stride) {
                    let (a, b, c) = (self.to_px(p), self.to_px(fp), self.to_px(q));
                    let _ = write!(moves, "M{:.2} {:.2}L{:.2} {:.2}", a.0, a.1, b.0, b.1);
                    if fp != q {
                        let _ = write!(jumps, "M{:.2} {:.2}L{:.2} {:.2}", b.0, b.1, c.0, c.1);
                    }
                }
                if !moves.is_empty() {
                    let _ = writeln!(s, "<path d=\"{moves}\" stroke=\"#2ca02c\"/>");
                }
                if !jumps.is_empty() {
                    let _ = writeln!(s, "<path d=\"{jumps}\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>");
                }
            }
            s.push_str("</g>\n");
        }
        s.push_str("</svg>\n");
        s
    }

    fn axes(&self, s: &mut String) {
        let (lo, hi) = (self.view.lo(), self.view.hi());
        let mut lines = String::new();
        if lo.y() <= 0.0 && 0.0 <= hi.y() {
            let (x0, y) = self.to_px(&Point::plane(lo.x(), 0.0));
            let (x1, _) = self.to_px(&Point::plane(hi.x(), 0.0));
            let _ = writeln!(lines, "<line x1=\"{x0:.2}\" y1=\"{y:.2}\" x2=\"{x1:.2}\" y2=\"{y:.2}\"/>");
        }
        if lo.x() <= 0.0 && 0.0 <= hi.x() {
            let (x, y0) = self.to_px(&Point::plane(0.0, hi.y()));
            let (_, y1) = self.to_px(&Point::plane(0.0, lo.y()));
            let _ = writeln!(lines, "<line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{y1:.2}\"/>");
        }
        if !lines.is_empty() {
            s.push_str("<g id=\"axes\" stroke=\"#999999\" stroke-width=\"0.5\">\n");
            s.push_str(&lines);
            s.push_str("</g>\n");
        }
    }
}
