//! Deterministic standalone SVG 1.1 renderers.
//!
//! Numbers are printed with fixed precision so identical inputs always give
//! identical bytes. Colours:
//!
//! - categorical: Okabe–Ito `#E69F00 #56B4E9 #009E73 #F0E442 #0072B2 #D55E00 #CC79A7 #000000`
//! - sequential: viridis stops `#440154 #3B528B #21918C #5EC962 #FDE725`
//! - diverging: `#2166AC #F7F7F7 #B2182B`, centred on zero
//!
//! No-data cells are drawn in `#BDBDBD`.

use std::fmt::Write;

use crate::data::RasterGrid;
use crate::error::{Error, Result};
use crate::kde::VectorField;
use crate::maup::ZonePartition;
use crate::simpson::ParallelCoordsTable;

pub const PALETTE: [&str; 8] = [
    "#E69F00", "#56B4E9", "#009E73", "#F0E442", "#0072B2", "#D55E00", "#CC79A7", "#000000",
];
const SEQUENTIAL: [[u8; 3]; 5] = [
    [0x44, 0x01, 0x54],
    [0x3B, 0x52, 0x8B],
    [0x21, 0x91, 0x8C],
    [0x5E, 0xC9, 0x62],
    [0xFD, 0xE7, 0x25],
];
const DIVERGING: [[u8; 3]; 3] = [[0x21, 0x66, 0xAC], [0xF7, 0xF7, 0xF7], [0xB2, 0x18, 0x2B]];
pub const NODATA_COLOR: &str = "#BDBDBD";
const NEUTRAL: &str = "#444444";

pub fn group_color(index: usize) -> &'static str {
    PALETTE[index % PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorRamp {
    #[default]
    Sequential,
    Diverging,
}

fn interpolate(stops: &[[u8; 3]], t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (stops.len() - 1) as f64;
    let i = (pos.floor() as usize).min(stops.len() - 2);
    let f = pos - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (stops[i][k] as f64 + f * (stops[i + 1][k] as f64 - stops[i][k] as f64)).round() as u8)
        .collect();
    format!("#{:02X}{:02X}{:02X}", c[0], c[1], c[2])
}

impl ColorRamp {
    /// Colour for `t` in `[0, 1]`.
    pub fn color(self, t: f64) -> String {
        match self {
            ColorRamp::Sequential => interpolate(&SEQUENTIAL, t),
            ColorRamp::Diverging => interpolate(&DIVERGING, t),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Doc {
    out: String,
}

impl Doc {
    fn new(width: f64, height: f64) -> Self {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
        );
        let _ = writeln!(out, "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#FFFFFF\"/>");
        Self { out }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
        let _ = writeln!(
            self.out,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"{size}\">{}</text>",
            escape(s)
        );
    }

    fn line(&mut self, class: &str, (x1, y1): (f64, f64), (x2, y2): (f64, f64), stroke: &str, width: f64) {
        let _ = writeln!(
            self.out,
            "<line class=\"{class}\" x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\" stroke-width=\"{width:.2}\"/>"
        );
    }

    fn raw(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn finish(mut self) -> Vec<u8> {
        self.out.push_str("</svg>\n");
        self.out.into_bytes()
    }
}

/// Maps data coordinates into a plotting rectangle (SVG y grows downwards).
#[derive(Clone, Copy)]
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y0) / (self.y1 - self.y0) * self.height
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub group: Option<usize>,
}

/// `y = intercept + slope * x`, drawn across the x range of the points.
#[derive(Debug, Clone, PartialEq)]
pub struct FitLine {
    pub slope: f64,
    pub intercept: f64,
    pub group: Option<usize>,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScatterPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<ScatterPoint>,
    pub group_lines: Vec<FitLine>,
    pub pooled_line: Option<FitLine>,
    /// Legend entries, indexed by group.
    pub group_names: Vec<String>,
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn axes_box(doc: &mut Doc, f: &Frame) {
    let _ = writeln!(
        doc.out,
        "<rect class=\"axes\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"{NEUTRAL}\" stroke-width=\"1\"/>",
        f.left, f.top, f.width, f.height
    );
    doc.text(f.left, f.top + f.height + 16.0, "start", 11, &format!("{:.3}", f.x0));
    doc.text(f.left + f.width, f.top + f.height + 16.0, "end", 11, &format!("{:.3}", f.x1));
    doc.text(f.left - 6.0, f.top + f.height, "end", 11, &format!("{:.3}", f.y0));
    doc.text(f.left - 6.0, f.top + 10.0, "end", 11, &format!("{:.3}", f.y1));
}

fn legend(doc: &mut Doc, names: &[String], x: f64, y: f64) {
    doc.raw("<g class=\"legend\">");
    for (i, name) in names.iter().enumerate() {
        let yy = y + 16.0 * i as f64;
        let _ = writeln!(
            doc.out,
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            yy - 9.0,
            group_color(i)
        );
        doc.text(x + 14.0, yy, "start", 11, name);
    }
    doc.raw("</g>");
}

pub fn render_scatter(plot: &ScatterPlot) -> Result<Vec<u8>> {
    if plot.points.is_empty() {
        return Err(Error::EmptyInput("scatter plot without points".into()));
    }
    let (x0, x1) = padded_range(plot.points.iter().map(|p| p.x));
    let (y0, y1) = padded_range(plot.points.iter().map(|p| p.y));
    let f = Frame {
        left: MARGIN,
        top: 40.0,
        width: PLOT_W - MARGIN - 120.0,
        height: PLOT_H - 40.0 - MARGIN,
        x0,
        x1,
        y0,
        y1,
    };
    let mut doc = Doc::new(PLOT_W, PLOT_H);
    doc.text(PLOT_W / 2.0, 22.0, "middle", 14, &plot.title);
    axes_box(&mut doc, &f);
    doc.text(f.left + f.width / 2.0, PLOT_H - 12.0, "middle", 12, &plot.x_label);
    doc.text(14.0, f.top + f.height / 2.0, "middle", 12, &plot.y_label);
    let _ = writeln!(
        doc.out,
        "<clipPath id=\"plot-area\"><rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/></clipPath>",
        f.left, f.top, f.width, f.height
    );
    doc.raw("<g class=\"points\">");
    for p in &plot.points {
        let fill = p.group.map(group_color).unwrap_or(NEUTRAL);
        let _ = writeln!(
            doc.out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{fill}\" fill-opacity=\"0.8\"/>",
            f.px(p.x),
            f.py(p.y)
        );
    }
    doc.raw("</g>");
    let xs = plot.points.iter().map(|p| p.x);
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let endpoints = |l: &FitLine| ((f.px(lo), f.py(l.intercept + l.slope * lo)), (f.px(hi), f.py(l.intercept + l.slope * hi)));
    doc.raw("<g class=\"fits\" clip-path=\"url(#plot-area)\">");
    for l in &plot.group_lines {
        let (a, b) = endpoints(l);
        doc.line("group-line", a, b, l.group.map(group_color).unwrap_or(NEUTRAL), 2.0);
    }
    if let Some(l) = &plot.pooled_line {
        let (a, b) = endpoints(l);
        let _ = writeln!(
            doc.out,
            "<line class=\"pooled-line\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#000000\" stroke-width=\"2.50\" stroke-dasharray=\"8 4\"/>",
            a.0, a.1, b.0, b.1
        );
    }
    doc.raw("</g>");
    legend(&mut doc, &plot.group_names, f.left + f.width + 14.0, f.top + 10.0);
    if plot.pooled_line.is_some() {
        let y = f.top + 16.0 * plot.group_names.len() as f64 + 10.0;
        doc.text(f.left + f.width + 14.0, y, "start", 11, "- - pooled fit");
    }
    Ok(doc.finish())
}

pub fn render_parallel_coords(table: &ParallelCoordsTable, title: &str) -> Result<Vec<u8>> {
    if table.rows.is_empty() {
        return Err(Error::EmptyInput("parallel coordinates without records".into()));
    }
    if table.axes.len() < 2 {
        return Err(Error::param("parallel coordinates need at least two axes"));
    }
    let mut groups: Vec<&str> = table.groups.iter().flatten().map(String::as_str).collect();
    groups.sort_unstable();
    groups.dedup();
    let k = table.axes.len();
    let (left, top, width, height) = (MARGIN, 50.0, PLOT_W - 2.0 * MARGIN - 60.0, PLOT_H - 50.0 - MARGIN);
    let ax_x = |a: usize| left + width * a as f64 / (k - 1) as f64;
    let (lo, hi) = table
        .rows
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let ay = |v: f64| top + height - (v - lo) / (hi - lo) * height;

    let mut doc = Doc::new(PLOT_W, PLOT_H);
    doc.text(PLOT_W / 2.0, 24.0, "middle", 14, title);
    doc.raw("<g class=\"records\">");
    for (row, g) in table.rows.iter().zip(&table.groups) {
        let color = g
            .as_deref()
            .and_then(|g| groups.iter().position(|x| *x == g))
            .map(group_color)
            .unwrap_or(NEUTRAL);
        let pts: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(a, &v)| format!("{:.2},{:.2}", ax_x(a), ay(v)))
            .collect();
        let _ = writeln!(
            doc.out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-opacity=\"0.45\" stroke-width=\"1\"/>",
            pts.join(" ")
        );
    }
    doc.raw("</g>");
    doc.raw("<g class=\"axes\">");
    for (a, name) in table.axes.iter().enumerate() {
        doc.line("axis", (ax_x(a), top), (ax_x(a), top + height), NEUTRAL, 1.5);
        doc.text(ax_x(a), top + height + 18.0, "middle", 12, name);
    }
    doc.raw("</g>");
    let names: Vec<String> = groups.iter().map(|s| s.to_string()).collect();
    legend(&mut doc, &names, left + width + 20.0, top + 10.0);
    Ok(doc.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Overlay {
    /// Outline these cell indices.
    FlaggedCells(Vec<usize>),
    /// Arrows along the field direction every `stride` cells.
    Quivers { field: VectorField, stride: usize },
    /// Lines between cells of different zones.
    ZoneBoundaries(ZonePartition),
    /// Cross markers at data coordinates.
    Markers(Vec<(f64, f64)>),
    /// Small dots at data coordinates.
    Points(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeatmapOptions {
    pub title: String,
    pub ramp: ColorRamp,
    pub overlays: Vec<Overlay>,
}

/// One `<rect class="cell">` per grid cell, row 0 at the bottom. Sequential
/// ramps map `[min, max]`; diverging ramps map `[-m, m]` with `m = max |v|`.
pub fn render_heatmap(r: &RasterGrid, opts: &HeatmapOptions) -> Result<Vec<u8>> {
    let (lo, hi) = r
        .min_max()
        .ok_or_else(|| Error::EmptyInput("heatmap of an all-no-data grid".into()))?;
    let spec = r.spec;
    let cell = (512.0 / spec.width.max(spec.height) as f64).clamp(1.0, 64.0);
    let (left, top) = (40.0, 50.0);
    let (pw, ph) = (cell * spec.width as f64, cell * spec.height as f64);
    let total_w = left + pw + 110.0;
    let total_h = top + ph + 40.0;
    let cx = |c: usize| left + c as f64 * cell;
    let cy = |row: usize| top + (spec.height - 1 - row) as f64 * cell;
    let to_px = |x: f64, y: f64| {
        (
            left + (x - spec.origin_x) / spec.cell_size * cell,
            top + ph - (y - spec.origin_y) / spec.cell_size * cell,
        )
    };
    let t_of = |v: f64| match opts.ramp {
        ColorRamp::Sequential => {
            if hi > lo {
                (v - lo) / (hi - lo)
            } else {
                0.5
            }
        }
        ColorRamp::Diverging => {
            let m = lo.abs().max(hi.abs());
            if m > 0.0 {
                0.5 + 0.5 * v / m
            } else {
                0.5
            }
        }
    };

    let mut doc = Doc::new(total_w, total_h);
    doc.text(total_w / 2.0, 24.0, "middle", 14, &opts.title);
    doc.raw("<g class=\"cells\" shape-rendering=\"crispEdges\">");
    for row in 0..spec.height {
        for col in 0..spec.width {
            let fill = match r.get(col, row) {
                Some(v) => opts.ramp.color(t_of(v)),
                None => NODATA_COLOR.to_string(),
            };
            let _ = writeln!(
                doc.out,
                "<rect class=\"cell\" x=\"{:.2}\" y=\"{:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"{fill}\"/>",
                cx(col),
                cy(row)
            );
        }
    }
    doc.raw("</g>");

    for overlay in &opts.overlays {
        match overlay {
            Overlay::FlaggedCells(cells) => {
                doc.raw("<g class=\"flagged\" fill=\"none\" stroke=\"#FF0000\" stroke-width=\"1.5\">");
                for &i in cells {
                    let (c, rr) = spec.col_row(i);
                    let _ = writeln!(
                        doc.out,
                        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\"/>",
                        cx(c),
                        cy(rr)
                    );
                }
                doc.raw("</g>");
            }
            Overlay::Quivers { field, stride } => {
                let stride = (*stride).max(1);
                let norm_max = field
                    .gx
                    .iter()
                    .zip(&field.gy)
                    .map(|(a, b)| a.hypot(*b))
                    .fold(0.0, f64::max);
                doc.raw("<g class=\"quivers\" stroke=\"#FFFFFF\" stroke-width=\"1.2\">");
                for row in (0..field.spec.height).step_by(stride) {
                    for col in (0..field.spec.width).step_by(stride) {
                        let (gx, gy) = field.at(col, row);
                        let n = gx.hypot(gy);
                        if !(n > 0.0) || !(norm_max > 0.0) {
                            continue;
                        }
                        let len = 0.45 * cell * stride as f64;
                        let (x, y) = field.spec.cell_center(col, row);
                        let (px, py) = to_px(x, y);
                        let (dx, dy) = (gx / n * len, -gy / n * len);
                        let _ = writeln!(
                            doc.out,
                            "<line class=\"quiver\" x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\"/>",
                            px - dx / 2.0,
                            py - dy / 2.0,
                            px + dx / 2.0,
                            py + dy / 2.0
                        );
                    }
                }
                doc.raw("</g>");
            }
            Overlay::ZoneBoundaries(p) => {
                let z = p.zone_of();
                let mut d = String::new();
                for row in 0..spec.height {
                    for col in 0..spec.width {
                        let here = z[spec.index(col, row)];
                        if col + 1 < spec.width && z[spec.index(col + 1, row)] != here {
                            let x = cx(col + 1);
                            let _ = write!(d, "M{x:.2} {:.2}V{:.2}", cy(row), cy(row) + cell);
                        }
                        if row + 1 < spec.height && z[spec.index(col, row + 1)] != here {
                            let y = cy(row);
                            let _ = write!(d, "M{:.2} {y:.2}H{:.2}", cx(col), cx(col) + cell);
                        }
                    }
                }
                let _ = writeln!(
                    doc.out,
                    "<path class=\"zone-boundaries\" d=\"{d}\" fill=\"none\" stroke=\"#FFFFFF\" stroke-width=\"1\"/>"
                );
            }
            Overlay::Markers(pts) => {
                doc.raw("<g class=\"markers\" stroke=\"#FF0000\" stroke-width=\"2\">");
                for &(x, y) in pts {
                    let (px, py) = to_px(x, y);
                    let _ = writeln!(
                        doc.out,
                        "<path d=\"M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}\"/>",
                        px - 6.0,
                        py - 6.0,
                        px + 6.0,
                        py + 6.0,
                        px - 6.0,
                        py + 6.0,
                        px + 6.0,
                        py - 6.0
                    );
                }
                doc.raw("</g>");
            }
            Overlay::Points(pts) => {
                doc.raw("<g class=\"data-points\" fill=\"#FFFFFF\" stroke=\"#000000\" stroke-width=\"0.5\">");
                for &(x, y) in pts {
                    let (px, py) = to_px(x, y);
                    let _ = writeln!(doc.out, "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"1.8\"/>");
                }
                doc.raw("</g>");
            }
        }
    }

    // colour bar
    let bx = left + pw + 20.0;
    doc.raw("<g class=\"colorbar\">");
    for k in 0..32 {
        let t = 1.0 - k as f64 / 31.0;
        let _ = writeln!(
            doc.out,
            "<rect x=\"{bx:.2}\" y=\"{:.2}\" width=\"14\" height=\"{:.2}\" fill=\"{}\"/>",
            top + k as f64 * ph / 32.0,
            ph / 32.0 + 0.5,
            opts.ramp.color(t)
        );
    }
    let (lab_lo, lab_hi) = match opts.ramp {
        ColorRamp::Sequential => (lo, hi),
        ColorRamp::Diverging => {
            let m = lo.abs().max(hi.abs());
            (-m, m)
        }
    };
    doc.text(bx + 18.0, top + 10.0, "start", 11, &format!("{lab_hi:.4}"));
    doc.text(bx + 18.0, top + ph, "start", 11, &format!("{lab_lo:.4}"));
    doc.raw("</g>");
    Ok(doc.finish())
}
