//! Standalone SVG for phase portraits and two-parameter diagrams.
//!
//! Plot coordinates have `y` up. The first line after the XML prolog is a
//! version comment; everything else depends only on the input data.

use std::fmt::Write as _;

use crate::continuation::{Branch, BranchKind, Tag};
use crate::dynamics::PhasePortrait;
use crate::equilibria::EquilibriumKind;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 56.0;

pub const FOLD_COLOR: &str = "#000000";
pub const HOPF_COLOR: &str = "#1a9641";
pub const LPC_COLOR: &str = "#d7191c";
pub const HOM_COLOR: &str = "#7b3294";

/// Data window `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Frame {
    /// Bounding box of `pts` padded by 5% on each side.
    pub fn fit(pts: impl IntoIterator<Item = (f64, f64)>) -> Frame {
        let (mut x, mut y) = ([f64::INFINITY, f64::NEG_INFINITY], [f64::INFINITY, f64::NEG_INFINITY]);
        for (a, b) in pts {
            if a.is_finite() && b.is_finite() {
                x = [x[0].min(a), x[1].max(a)];
                y = [y[0].min(b), y[1].max(b)];
            }
        }
        if !x[0].is_finite() {
            return Frame {
                x: [0.0, 1.0],
                y: [0.0, 1.0],
            };
        }
        let pad = |r: [f64; 2]| {
            let d = if r[1] > r[0] {
                0.05 * (r[1] - r[0])
            } else {
                0.05 * r[0].abs().max(1.0)
            };
            [r[0] - d, r[1] + d]
        };
        Frame { x: pad(x), y: pad(y) }
    }

    fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.x[0] && p.0 <= self.x[1] && p.1 >= self.y[0] && p.1 <= self.y[1]
    }

    fn map(&self, p: (f64, f64)) -> (f64, f64) {
        let u = (p.0 - self.x[0]) / (self.x[1] - self.x[0]);
        let v = (p.1 - self.y[0]) / (self.y[1] - self.y[0]);
        (
            MARGIN + u * (WIDTH - 2.0 * MARGIN),
            HEIGHT - MARGIN - v * (HEIGHT - 2.0 * MARGIN),
        )
    }
}

struct Doc {
    frame: Frame,
    out: String,
}

impl Doc {
    fn new(frame: Frame, title: &str, xlabel: &str, ylabel: &str) -> Doc {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(out, "<!-- delisi {} -->", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(out, "<title>{}</title>", escape(title));
        let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
        let mut d = Doc { frame, out };
        d.axes(xlabel, ylabel);
        d
    }

    fn axes(&mut self, xlabel: &str, ylabel: &str) {
        let f = self.frame;
        let (x0, y0) = f.map((f.x[0], f.y[0]));
        let (x1, y1) = f.map((f.x[1], f.y[1]));
        let _ = writeln!(
            self.out,
            "<g id=\"axes\" stroke=\"#444\" fill=\"none\" font-family=\"sans-serif\" font-size=\"11\">\n<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\"/>",
            x1 - x0,
            y0 - y1
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let xv = f.x[0] + t * (f.x[1] - f.x[0]);
            let yv = f.y[0] + t * (f.y[1] - f.y[0]);
            let (px, _) = f.map((xv, f.y[0]));
            let (_, py) = f.map((f.x[0], yv));
            let _ = writeln!(
                self.out,
                "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#444\" stroke=\"none\">{}</text>",
                y0 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                self.out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#444\" stroke=\"none\">{}</text>",
                x0 - 4.0,
                py + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            self.out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#000\" stroke=\"none\">{}</text>",
            0.5 * (x0 + x1),
            HEIGHT - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.out,
            "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#000\" stroke=\"none\" transform=\"rotate(-90 14 {:.2})\">{}</text>\n</g>",
            0.5 * (y0 + y1),
            0.5 * (y0 + y1),
            escape(ylabel)
        );
    }

    fn open(&mut self, id: &str, attrs: &str) {
        let _ = writeln!(self.out, "<g id=\"{id}\" {attrs}>");
    }

    fn close(&mut self) {
        self.out.push_str("</g>\n");
    }

    /// Polylines through `pts`, broken wherever a point leaves the frame.
    fn polyline(&mut self, pts: &[(f64, f64)], attrs: &str) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
            if run.len() >= 2 {
                out.push_str("<polyline points=\"");
                for (i, p) in run.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{:.2},{:.2}", p.0, p.1);
                }
                let _ = writeln!(out, "\" {attrs}/>");
            }
            run.clear();
        };
        for &p in pts {
            if self.frame.contains(p) {
                let q = self.frame.map(p);
                if run
                    .last()
                    .map_or(true, |l| (l.0 - q.0).abs() + (l.1 - q.1).abs() >= 0.25)
                {
                    run.push(q);
                }
            } else {
                flush(&mut run, &mut self.out);
            }
        }
        flush(&mut run, &mut self.out);
    }

    fn marker(&mut self, p: (f64, f64), shape: Marker, fill: &str, label: Option<&str>) {
        if !self.frame.contains(p) {
            return;
        }
        let (x, y) = self.frame.map(p);
        match shape {
            Marker::Circle => {
                let _ = writeln!(
                    self.out,
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{fill}\" stroke=\"#000\"/>"
                );
            }
            Marker::Square => {
                let _ = writeln!(
                    self.out,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"{fill}\" stroke=\"#000\"/>",
                    x - 4.0,
                    y - 4.0
                );
            }
            Marker::Diamond => {
                let _ = writeln!(
                    self.out,
                    "<polygon points=\"{x:.2},{:.2} {:.2},{y:.2} {x:.2},{:.2} {:.2},{y:.2}\" fill=\"{fill}\" stroke=\"#000\"/>",
                    y - 5.0,
                    x + 5.0,
                    y + 5.0,
                    x - 5.0
                );
            }
        }
        if let Some(l) = label {
            let _ = writeln!(
                self.out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                x + 7.0,
                y - 7.0,
                escape(l)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

#[derive(Clone, Copy)]
enum Marker {
    Circle,
    Square,
    Diamond,
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn glyph(kind: EquilibriumKind) -> (Marker, &'static str) {
    match kind {
        EquilibriumKind::TrivialSaddle | EquilibriumKind::Saddle => (Marker::Square, "#ffffff"),
        EquilibriumKind::StableNode | EquilibriumKind::StableFocus => (Marker::Circle, "#000000"),
        EquilibriumKind::UnstableNode | EquilibriumKind::UnstableFocus => (Marker::Circle, "#ffffff"),
        EquilibriumKind::CenterCandidate | EquilibriumKind::Degenerate => (Marker::Diamond, "#ffbf00"),
    }
}

/// Without an explicit frame the view fits the equilibria, cycles and
/// seeds; trajectories are clipped to it.
///
/// Layers: trajectories, threshold curve, cycles (stable solid, unstable
/// dashed), equilibria glyphs by kind, chart equilibria at infinity on the
/// top frame edge.
pub fn portrait_svg(pp: &PhasePortrait, frame: Option<Frame>) -> String {
    let frame = frame.unwrap_or_else(|| {
        let mut pts: Vec<(f64, f64)> = pp.equilibria.iter().map(|e| (e.state.x, e.state.y)).collect();
        pts.extend(pp.trajectories.iter().map(|t| (t.states[0].x, t.states[0].y)));
        for c in &pp.cycles {
            pts.extend(c.samples.iter().map(|s| (s.x, s.y)));
        }
        Frame::fit(pts)
    });
    let p = &pp.params;
    let title = format!(
        "phase portrait lambda1={} lambda2={} alpha1={} alpha2={} xc={}",
        p.lambda1, p.lambda2, p.alpha1, p.alpha2, p.xc
    );
    let mut d = Doc::new(frame, &title, "x", "y");
    d.open("trajectories", "fill=\"none\" stroke=\"#3b6ea5\" stroke-width=\"1\"");
    for t in &pp.trajectories {
        let pts: Vec<_> = t.states.iter().map(|s| (s.x, s.y)).collect();
        d.polyline(&pts, "");
    }
    d.close();
    if let Some(h) = &pp.threshold {
        d.open("threshold", "fill=\"none\" stroke=\"#e66101\" stroke-width=\"2\"");
        d.polyline(&h.samples, "");
        d.close();
    }
    d.open("cycles", "fill=\"none\" stroke-width=\"2\"");
    for c in &pp.cycles {
        let mut pts: Vec<_> = c.samples.iter().map(|s| (s.x, s.y)).collect();
        if let Some(&f) = pts.first() {
            pts.push(f);
        }
        let attrs = if c.stable {
            format!("stroke=\"{LPC_COLOR}\"")
        } else {
            format!("stroke=\"{LPC_COLOR}\" stroke-dasharray=\"6 4\"")
        };
        d.polyline(&pts, &attrs);
    }
    d.close();
    d.open("equilibria", "");
    for e in &pp.equilibria {
        let (m, fill) = glyph(e.kind);
        d.marker((e.state.x, e.state.y), m, fill, None);
    }
    d.close();
    d.open("infinity", "");
    for m in &pp.infinity {
        let fill = if m.attracting { "#000000" } else { "#ffffff" };
        let x = m.x.clamp(frame.x[0], frame.x[1]);
        d.marker(
            (x, frame.y[1]),
            Marker::Diamond,
            fill,
            Some(if m.attracting { "inf (attracting)" } else { "inf" }),
        );
    }
    d.close();
    d.finish()
}

/// A branch to draw in the `(lambda1, lambda2)` plane.
pub struct DiagramLayer<'a> {
    pub name: &'a str,
    pub branch: &'a Branch,
}

fn color_of(kind: BranchKind) -> &'static str {
    match kind {
        BranchKind::FoldCurve => FOLD_COLOR,
        BranchKind::HopfCurve => HOPF_COLOR,
        BranchKind::LpcCurve | BranchKind::CycleFamily => LPC_COLOR,
        BranchKind::HomoclinicProxy => HOM_COLOR,
        BranchKind::Equilibrium => "#888888",
    }
}

/// Two-parameter diagram: one polyline per branch colored by kind, BT and
/// GH markers from the branch tags, and extra labelled markers.
pub fn diagram_svg(layers: &[DiagramLayer<'_>], extra: &[(&str, (f64, f64))], frame: Option<Frame>) -> String {
    let frame = frame.unwrap_or_else(|| {
        Frame::fit(
            layers
                .iter()
                .flat_map(|l| l.branch.points.iter().map(|p| (p.params.lambda1, p.params.lambda2)))
                .chain(extra.iter().map(|e| e.1)),
        )
    });
    let mut d = Doc::new(frame, "bifurcation diagram", "lambda1", "lambda2");
    for l in layers {
        let c = color_of(l.branch.kind);
        d.open(
            &format!("branch-{}", l.name),
            &format!(
                "fill=\"none\" stroke=\"{c}\" stroke-width=\"2\" class=\"{}\"",
                l.branch.kind.as_str()
            ),
        );
        let pts: Vec<_> = l
            .branch
            .points
            .iter()
            .map(|p| (p.params.lambda1, p.params.lambda2))
            .collect();
        d.polyline(&pts, "");
        d.close();
    }
    d.open("special-points", "");
    for l in layers {
        for s in &l.branch.special_points {
            if matches!(s.tag, Tag::TakensBogdanov | Tag::Bautin) {
                let p = &l.branch.points[s.index].params;
                d.marker((p.lambda1, p.lambda2), Marker::Circle, "#ffffff", Some(s.tag.as_str()));
            }
        }
    }
    for (label, p) in extra {
        d.marker(*p, Marker::Square, "#ffffff", Some(label));
    }
    d.close();
    d.finish()
}
