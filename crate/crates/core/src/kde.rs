//! Modeling-level audit for kernel density estimation: rule-of-thumb
//! bandwidths, gradient-direction comparison between two estimates, a
//! geometric bandwidth sweep, and detection of modes that land away from
//! the data ("false centres").

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{GridSpec, PointDataset, RasterGrid, Rect};
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth2D {
    pub hx: f64,
    pub hy: f64,
}

impl Bandwidth2D {
    pub fn new(hx: f64, hy: f64) -> Result<Self> {
        let ok = |h: f64| h > 0.0 && h.is_finite();
        if !ok(hx) || !ok(hy) {
            return Err(Error::param(format!("bandwidths must be positive and finite, got ({hx}, {hy})")));
        }
        Ok(Self { hx, hy })
    }

    pub fn isotropic(h: f64) -> Result<Self> {
        Self::new(h, h)
    }
}

/// Per-axis rule of thumb for a bivariate Gaussian kernel:
/// `h = sd * n^(-1/6)` with the sample standard deviation.
pub fn silverman_bandwidth(d: &PointDataset) -> Result<Bandwidth2D> {
    let n = d.len();
    if n < 2 {
        return Err(Error::SampleSize {
            group: None,
            required: 2,
            actual: n,
        });
    }
    let factor = (n as f64).powf(-1.0 / 6.0);
    let axis = |name: &str, vals: Vec<f64>| {
        let sd = stats::sample_sd(&vals);
        if !(sd > 0.0) {
            return Err(Error::Degenerate(format!("zero variance on the {name} axis")));
        }
        Ok(sd * factor)
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = d.coords().into_iter().unzip();
    Bandwidth2D::new(axis("x", xs)?, axis("y", ys)?)
}

/// Unnormalised kernel sum `sum_i exp(-(dx^2/2hx^2 + dy^2/2hy^2))`.
fn kernel_sum(points: &[(f64, f64)], h: Bandwidth2D, px: f64, py: f64) -> f64 {
    let (ax, ay) = (0.5 / (h.hx * h.hx), 0.5 / (h.hy * h.hy));
    points
        .iter()
        .map(|&(x, y)| (-(ax * (px - x).powi(2) + ay * (py - y).powi(2))).exp())
        .sum()
}

/// Gaussian product-kernel density at every cell centre. No edge correction.
pub fn kde_grid(d: &PointDataset, h: Bandwidth2D, grid: &GridSpec) -> Result<RasterGrid> {
    if d.is_empty() {
        return Err(Error::EmptyInput("density of an empty dataset".into()));
    }
    grid.validate()?;
    let points = d.coords();
    let norm = 1.0 / (points.len() as f64 * 2.0 * PI * h.hx * h.hy);
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (c, r) = grid.col_row(i);
            let (px, py) = grid.cell_center(c, r);
            norm * kernel_sum(&points, h, px, py)
        })
        .collect();
    RasterGrid::from_values(*grid, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub spec: GridSpec,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl VectorField {
    pub fn at(&self, col: usize, row: usize) -> (f64, f64) {
        let i = self.spec.index(col, row);
        (self.gx[i], self.gy[i])
    }
}

/// Central differences inside, one-sided differences on the border, both
/// divided by the cell size.
pub fn gradient_field(r: &RasterGrid) -> Result<VectorField> {
    let spec = r.spec;
    if spec.width < 3 || spec.height < 3 {
        return Err(Error::param(format!(
            "gradient needs at least a 3x3 grid, got {}x{}",
            spec.width, spec.height
        )));
    }
    let vals: Vec<f64> = r
        .values()
        .iter()
        .map(|v| v.ok_or_else(|| Error::Degenerate("gradient of a grid with no-data cells".into())))
        .collect::<Result<_>>()?;
    let at = |c: usize, r: usize| vals[spec.index(c, r)];
    let diff = |lo: f64, hi: f64, steps: f64| (hi - lo) / (steps * spec.cell_size);
    let mut gx = Vec::with_capacity(spec.len());
    let mut gy = Vec::with_capacity(spec.len());
    for row in 0..spec.height {
        for col in 0..spec.width {
            gx.push(if col == 0 {
                diff(at(0, row), at(1, row), 1.0)
            } else if col == spec.width - 1 {
                diff(at(col - 1, row), at(col, row), 1.0)
            } else {
                diff(at(col - 1, row), at(col + 1, row), 2.0)
            });
            gy.push(if row == 0 {
                diff(at(col, 0), at(col, 1), 1.0)
            } else if row == spec.height - 1 {
                diff(at(col, row - 1), at(col, row), 1.0)
            } else {
                diff(at(col, row - 1), at(col, row + 1), 2.0)
            });
        }
    }
    Ok(VectorField { spec, gx, gy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceStats {
    /// Mean angle between paired gradient vectors, radians in `[0, pi]`.
    pub mean: f64,
    pub max: f64,
    pub cells: usize,
    pub skipped: usize,
}

/// Vectors shorter than this are treated as directionless.
pub const MIN_GRADIENT_NORM: f64 = 1e-15;

/// Angular deviation between two gradient fields over the cells whose
/// centres fall inside `window`.
pub fn gradient_divergence(a: &VectorField, b: &VectorField, window: &Rect) -> Result<DivergenceStats> {
    if a.spec != b.spec {
        return Err(Error::param("gradient fields have different grid layouts"));
    }
    let (mut sum, mut max, mut cells, mut skipped) = (0.0, 0.0f64, 0usize, 0usize);
    for i in 0..a.spec.len() {
        let (c, r) = a.spec.col_row(i);
        let (x, y) = a.spec.cell_center(c, r);
        if !window.contains(x, y) {
            continue;
        }
        let (ax, ay) = (a.gx[i], a.gy[i]);
        let (bx, by) = (b.gx[i], b.gy[i]);
        let (na, nb) = (ax.hypot(ay), bx.hypot(by));
        if na < MIN_GRADIENT_NORM || nb < MIN_GRADIENT_NORM {
            skipped += 1;
            continue;
        }
        let angle = (ax * by - ay * bx).abs().atan2(ax * bx + ay * by);
        sum += angle;
        max = max.max(angle);
        cells += 1;
    }
    if cells == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(DivergenceStats {
        mean: sum / cells as f64,
        max,
        cells,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTrack {
    pub bandwidth: f64,
    pub cell: usize,
    pub x: f64,
    pub y: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KdeFinding {
    pub sweep_bandwidths: Vec<f64>,
    pub mode_tracks: Vec<ModeTrack>,
    pub false_center_bandwidths: Vec<f64>,
    /// Distance from each mode to its nearest data point, aligned with `mode_tracks`.
    pub mode_data_distances: Vec<f64>,
    pub false_center_radius: Option<f64>,
    pub divergence: Option<DivergenceStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeSweep {
    pub finding: KdeFinding,
    /// Density surface per sweep bandwidth.
    pub frames: Vec<RasterGrid>,
}

/// `steps` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_bandwidths(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::param(format!("need 0 < h_lo < h_hi, got ({lo}, {hi})")));
    }
    if steps < 2 {
        return Err(Error::param("a sweep needs at least two steps"));
    }
    let ratio = hi / lo;
    Ok((0..steps)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == steps - 1 {
                hi
            } else {
                lo * ratio.powf(k as f64 / (steps - 1) as f64)
            }
        })
        .collect())
}

fn argmax(r: &RasterGrid) -> (usize, f64) {
    r.values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Isotropic KDE at each swept bandwidth with the global mode tracked.
/// Ties for the maximum resolve to the first cell in row-major order.
pub fn bandwidth_sweep(d: &PointDataset, h_lo: f64, h_hi: f64, steps: usize, grid: &GridSpec) -> Result<KdeSweep> {
    let bandwidths = geometric_bandwidths(h_lo, h_hi, steps)?;
    let mut frames = Vec::with_capacity(steps);
    let mut tracks = Vec::with_capacity(steps);
    for &h in &bandwidths {
        let frame = kde_grid(d, Bandwidth2D::isotropic(h)?, grid)?;
        let (cell, density) = argmax(&frame);
        let (c, r) = grid.col_row(cell);
        let (x, y) = grid.cell_center(c, r);
        tracks.push(ModeTrack {
            bandwidth: h,
            cell,
            x,
            y,
            density,
        });
        frames.push(frame);
    }
    Ok(KdeSweep {
        finding: KdeFinding {
            sweep_bandwidths: bandwidths,
            mode_tracks: tracks,
            ..Default::default()
        },
        frames,
    })
}

fn nearest_distance(points: &[(f64, f64)], x: f64, y: f64, skip: Option<usize>) -> f64 {
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, &(px, py))| (px - x).hypot(py - y))
        .fold(f64::INFINITY, f64::min)
}

/// Median over points of the distance to their nearest other point.
pub fn median_nn_distance(d: &PointDataset) -> Result<f64> {
    let pts = d.coords();
    if pts.len() < 2 {
        return Err(Error::SampleSize {
            group: None,
            required: 2,
            actual: pts.len(),
        });
    }
    let nn: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| nearest_distance(&pts, pts[i].0, pts[i].1, Some(i)))
        .collect();
    Ok(stats::quantile(&nn, 0.5))
}

/// Flags sweep bandwidths whose mode lies farther than
/// `radius_factor * median nearest-neighbour distance` from every data point.
pub fn false_center_audit(sweep: &KdeFinding, d: &PointDataset, radius_factor: f64) -> Result<KdeFinding> {
    if !(radius_factor > 0.0) {
        return Err(Error::param("radius_factor must be positive"));
    }
    let radius = radius_factor * median_nn_distance(d)?;
    let pts = d.coords();
    let distances: Vec<f64> = sweep
        .mode_tracks
        .iter()
        .map(|m| nearest_distance(&pts, m.x, m.y, None))
        .collect();
    let flagged = sweep
        .mode_tracks
        .iter()
        .zip(&distances)
        .filter(|(_, &dist)| dist > radius)
        .map(|(m, _)| m.bandwidth)
        .collect();
    Ok(KdeFinding {
        false_center_bandwidths: flagged,
        mode_data_distances: distances,
        false_center_radius: Some(radius),
        ..sweep.clone()
    })
}
