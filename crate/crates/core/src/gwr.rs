//! Modeling-level audit for geographically weighted regression.
//!
//! A single-predictor GWR (`y ~ b0 + b1 * x1`) is fitted at each evaluation
//! point by kernel-weighted least squares. The fitted slope surface is then
//! scanned for abrupt jumps between neighbouring cells, and the audit asks
//! whether the large residuals concentrate where those jumps are.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{bounding_box, GridSpec, PointDataset, RasterGrid};
use crate::error::{Error, Result};
use crate::stats;

/// Weighted x-variance below this marks a local design as degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `exp(-d^2 / (2 b^2))`
    #[default]
    Gaussian,
    /// `(1 - (d/b)^2)^2` inside the bandwidth, zero outside.
    Bisquare,
}

impl Kernel {
    pub fn weight(self, dist2: f64, bandwidth: f64) -> f64 {
        let b2 = bandwidth * bandwidth;
        match self {
            Kernel::Gaussian => (-dist2 / (2.0 * b2)).exp(),
            Kernel::Bisquare => {
                if dist2 < b2 {
                    let u = 1.0 - dist2 / b2;
                    u * u
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    pub b0: f64,
    pub b1: f64,
}

/// Predictor/response columns pulled out of a dataset once.
#[derive(Debug, Clone)]
pub struct GwrData {
    pub coords: Vec<(f64, f64)>,
    pub x1: Vec<f64>,
    pub y: Vec<f64>,
}

impl GwrData {
    pub fn from_dataset(d: &PointDataset, predictor: &str, response: &str) -> Result<Self> {
        Ok(Self {
            coords: d.coords(),
            x1: d.column(predictor)?,
            y: d.column(response)?,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Weighted least squares at `(px, py)`, optionally leaving one sample out.
    pub fn local_fit(&self, px: f64, py: f64, bandwidth: f64, kernel: Kernel, skip: Option<usize>) -> Option<LocalFit> {
        let (mut sw, mut swx, mut swy) = (0.0, 0.0, 0.0);
        let mut weights = Vec::with_capacity(self.len());
        for (i, &(sx, sy)) in self.coords.iter().enumerate() {
            let w = if Some(i) == skip {
                0.0
            } else {
                kernel.weight((sx - px).powi(2) + (sy - py).powi(2), bandwidth)
            };
            weights.push(w);
            sw += w;
            swx += w * self.x1[i];
            swy += w * self.y[i];
        }
        if !(sw > 0.0) {
            return None;
        }
        let (mx, my) = (swx / sw, swy / sw);
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (i, w) in weights.into_iter().enumerate() {
            let dx = self.x1[i] - mx;
            sxx += w * dx * dx;
            sxy += w * dx * (self.y[i] - my);
        }
        if !(sxx / sw >= DEGENERATE_VARIANCE) {
            return None;
        }
        let b1 = sxy / sxx;
        Some(LocalFit { b0: my - b1 * mx, b1 })
    }
}

fn check_inputs(data: &GwrData, bandwidth: f64) -> Result<()> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::param(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if data.len() < 5 {
        return Err(Error::SampleSize {
            group: None,
            required: 5,
            actual: data.len(),
        });
    }
    Ok(())
}

/// Fitted coefficients at grid cell centres. `residual` is the mean of
/// `y - b0 - b1 * x1` over the samples inside each cell, using that cell's
/// coefficients; cells without samples or with a degenerate local design are
/// no-data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSurface {
    pub b1: RasterGrid,
    pub b0: RasterGrid,
    pub residual: RasterGrid,
    pub bandwidth: f64,
    pub kernel: Kernel,
}

impl CoefficientSurface {
    pub fn grid(&self) -> GridSpec {
        self.b1.spec
    }
}

/// GWR evaluated at the centres of `grid`.
pub fn gwr_fit(d: &PointDataset, bandwidth: f64, grid: &GridSpec) -> Result<CoefficientSurface> {
    gwr_fit_with(&GwrData::from_dataset(d, "x1", "y")?, bandwidth, Kernel::Gaussian, grid)
}

pub fn gwr_fit_with(data: &GwrData, bandwidth: f64, kernel: Kernel, grid: &GridSpec) -> Result<CoefficientSurface> {
    check_inputs(data, bandwidth)?;
    grid.validate()?;
    let fits: Vec<Option<LocalFit>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (c, r) = grid.col_row(i);
            let (px, py) = grid.cell_center(c, r);
            data.local_fit(px, py, bandwidth, kernel, None)
        })
        .collect();

    let mut res_sum = vec![0.0; grid.len()];
    let mut res_n = vec![0usize; grid.len()];
    for (i, &(sx, sy)) in data.coords.iter().enumerate() {
        if let Some((c, r)) = grid.locate(sx, sy) {
            let k = grid.index(c, r);
            if let Some(f) = fits[k] {
                res_sum[k] += data.y[i] - f.b0 - f.b1 * data.x1[i];
                res_n[k] += 1;
            }
        }
    }
    let residual = res_sum
        .into_iter()
        .zip(res_n)
        .map(|(s, n)| (n > 0).then(|| s / n as f64))
        .collect();
    Ok(CoefficientSurface {
        b1: RasterGrid::new(*grid, fits.iter().map(|f| f.map(|f| f.b1)).collect())?,
        b0: RasterGrid::new(*grid, fits.iter().map(|f| f.map(|f| f.b0)).collect())?,
        residual: RasterGrid::new(*grid, residual)?,
        bandwidth,
        kernel,
    })
}

/// GWR evaluated at every sample location; `None` marks degenerate fits.
pub fn gwr_fit_samples(data: &GwrData, bandwidth: f64, kernel: Kernel) -> Result<Vec<Option<LocalFit>>> {
    check_inputs(data, bandwidth)?;
    Ok(data
        .coords
        .par_iter()
        .map(|&(x, y)| data.local_fit(x, y, bandwidth, kernel, None))
        .collect())
}

/// Mean squared leave-one-out prediction error. Infinite when any sample
/// cannot be predicted (degenerate local design without it).
pub fn loo_cv_score(data: &GwrData, bandwidth: f64, kernel: Kernel) -> f64 {
    let errs: Option<Vec<f64>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = data.coords[i];
            data.local_fit(x, y, bandwidth, kernel, Some(i))
                .map(|f| (data.y[i] - f.b0 - f.b1 * data.x1[i]).powi(2))
        })
        .collect();
    match errs {
        Some(e) => e.iter().sum::<f64>() / e.len() as f64,
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub bandwidth: f64,
    pub cv_score: f64,
    pub evaluations: usize,
}

/// Golden-section search of the leave-one-out CV score on `[lo, hi]`. The
/// end points are scored too and the best evaluated bandwidth wins.
pub fn select_bandwidth_cv(data: &GwrData, lo: f64, hi: f64, tolerance: f64, kernel: Kernel) -> Result<BandwidthSelection> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::param(format!("bandwidth search range must satisfy 0 < lo < hi, got ({lo}, {hi})")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    if data.len() < 10 {
        return Err(Error::SampleSize {
            group: None,
            required: 10,
            actual: data.len(),
        });
    }
    let score = |b: f64| loo_cv_score(data, b, kernel);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut evaluated: Vec<(f64, f64)> = vec![(lo, score(lo)), (hi, score(hi))];

    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    evaluated.push((c, fc));
    evaluated.push((d, fd));
    while (b - a) > tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = score(c);
            evaluated.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = score(d);
            evaluated.push((d, fd));
        }
    }
    let (bandwidth, cv_score) = evaluated
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if !cv_score.is_finite() {
        return Err(Error::Degenerate(
            "leave-one-out CV is undefined across the whole search range".into(),
        ));
    }
    Ok(BandwidthSelection {
        bandwidth,
        cv_score,
        evaluations: evaluated.len(),
    })
}

/// Largest absolute difference of `b1` against the valid 4-neighbours of
/// each cell. Cells that are no-data or have no valid neighbour are no-data.
pub fn discontinuity_score(s: &CoefficientSurface) -> RasterGrid {
    let b1 = &s.b1;
    let spec = b1.spec;
    let (w, h) = (spec.width, spec.height);
    let values = (0..spec.len())
        .map(|i| {
            let (c, r) = spec.col_row(i);
            let v = b1.get(c, r)?;
            let mut neighbours = Vec::with_capacity(4);
            if c > 0 {
                neighbours.push(b1.get(c - 1, r));
            }
            if c + 1 < w {
                neighbours.push(b1.get(c + 1, r));
            }
            if r > 0 {
                neighbours.push(b1.get(c, r - 1));
            }
            if r + 1 < h {
                neighbours.push(b1.get(c, r + 1));
            }
            neighbours
                .into_iter()
                .flatten()
                .map(|n| (v - n).abs())
                .reduce(f64::max)
        })
        .collect();
    RasterGrid::new(spec, values).expect("layout copied from a valid surface")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwrFinding {
    pub discontinuity: RasterGrid,
    /// Spearman correlation of the discontinuity score with |residual|.
    pub rank_correlation: f64,
    pub flagged_cells: Vec<usize>,
    pub threshold: f64,
    pub threshold_quantile: f64,
    pub valid_cells: usize,
    pub bandwidth: f64,
    /// Share of the total |residual| carried by the flagged cells.
    pub flagged_residual_share: f64,
}

/// Minimum number of cells with both a score and a residual.
pub const MIN_AUDIT_CELLS: usize = 10;

pub fn continuity_audit(s: &CoefficientSurface, threshold_quantile: f64) -> Result<GwrFinding> {
    if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
        return Err(Error::param(format!(
            "threshold quantile must lie in (0, 1), got {threshold_quantile}"
        )));
    }
    let discontinuity = discontinuity_score(s);
    let paired: Vec<(usize, f64, f64)> = discontinuity
        .values()
        .iter()
        .zip(s.residual.values())
        .enumerate()
        .filter_map(|(i, (d, r))| Some((i, (*d)?, r.map(f64::abs)?)))
        .collect();
    if paired.len() < MIN_AUDIT_CELLS {
        return Err(Error::SampleSize {
            group: None,
            required: MIN_AUDIT_CELLS,
            actual: paired.len(),
        });
    }
    let scores: Vec<f64> = paired.iter().map(|p| p.1).collect();
    let abs_res: Vec<f64> = paired.iter().map(|p| p.2).collect();
    let rank_correlation = stats::spearman(&scores, &abs_res);
    let threshold = stats::quantile(&scores, threshold_quantile);
    let flagged_cells: Vec<usize> = paired.iter().filter(|p| p.1 > threshold).map(|p| p.0).collect();
    let total: f64 = abs_res.iter().sum();
    let flagged: f64 = paired.iter().filter(|p| p.1 > threshold).map(|p| p.2).sum();
    Ok(GwrFinding {
        discontinuity,
        rank_correlation,
        flagged_cells,
        threshold,
        threshold_quantile,
        valid_cells: paired.len(),
        bandwidth: s.bandwidth,
        flagged_residual_share: if total > 0.0 { flagged / total } else { 0.0 },
    })
}

/// Diagonal of the dataset's bounding box.
pub fn domain_diameter(d: &PointDataset) -> Result<f64> {
    Ok(bounding_box(d)?.diagonal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_gwr_surface, GwrSurfaceParams, Seed, SurfaceKind};

    fn surface_from_b1(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> CoefficientSurface {
        let spec = GridSpec::new(0.0, 0.0, 1.0, w, h).unwrap();
        let vals = (0..spec.len()).map(|i| {
            let (c, r) = spec.col_row(i);
            f(c, r)
        });
        let b1 = RasterGrid::from_values(spec, vals.collect()).unwrap();
        CoefficientSurface {
            b0: RasterGrid::filled(spec, Some(0.0)).unwrap(),
            residual: RasterGrid::filled(spec, Some(0.0)).unwrap(),
            b1,
            bandwidth: 1.0,
            kernel: Kernel::Gaussian,
        }
    }

    #[test]
    fn constant_coefficient_is_recovered() {
        let p = GwrSurfaceParams {
            kind: SurfaceKind::SmoothRamp,
            p_levels: (2.0, 2.0),
            noise_sd: 0.0,
            ..Default::default()
        };
        let d = gen_gwr_surface(&p, Seed(1)).unwrap();
        for bw in [1.0, 3.0, 50.0] {
            let s = gwr_fit(&d, bw, &p.grid).unwrap();
            assert!(s.b1.values().iter().all(|v| (v.unwrap() - 2.0).abs() < 1e-6));
        }
    }

    #[test]
    fn bad_bandwidth_and_small_samples() {
        let p = GwrSurfaceParams::default();
        let d = gen_gwr_surface(&p, Seed(1)).unwrap();
        assert!(matches!(gwr_fit(&d, 0.0, &p.grid), Err(Error::Parameter(_))));
        let tiny = GwrData {
            coords: vec![(0.0, 0.0); 4],
            x1: vec![1.0, 2.0, 3.0, 4.0],
            y: vec![1.0; 4],
        };
        assert!(matches!(gwr_fit_samples(&tiny, 1.0, Kernel::Gaussian), Err(Error::SampleSize { .. })));
    }

    #[test]
    fn degenerate_cells_are_nodata() {
        // all x1 equal: every local design is degenerate
        let data = GwrData {
            coords: (0..6).map(|i| (i as f64, 0.0)).collect(),
            x1: vec![2.0; 6],
            y: (0..6).map(|i| i as f64).collect(),
        };
        let grid = GridSpec::new(-0.5, -0.5, 1.0, 6, 1).unwrap();
        let s = gwr_fit_with(&data, 1.0, Kernel::Gaussian, &grid).unwrap();
        assert_eq!(s.b1.valid_count(), 0);
        assert_eq!(s.residual.valid_count(), 0);
    }

    #[test]
    fn bisquare_ignores_far_points() {
        assert_eq!(Kernel::Bisquare.weight(4.0, 1.0), 0.0);
        assert_eq!(Kernel::Bisquare.weight(0.0, 1.0), 1.0);
        assert!((Kernel::Gaussian.weight(1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn constant_surface_scores_zero() {
        let s = surface_from_b1(5, 4, |_, _| 2.5);
        assert!(discontinuity_score(&s).values().iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn vertical_step_scores_two_on_adjoining_columns() {
        let s = surface_from_b1(6, 4, |c, _| if c < 3 { 1.0 } else { 3.0 });
        let d = discontinuity_score(&s);
        for r in 0..4 {
            for c in 0..6 {
                let expected = if c == 2 || c == 3 { 2.0 } else { 0.0 };
                assert_eq!(d.get(c, r), Some(expected));
            }
        }
    }

    #[test]
    fn isolated_cell_has_no_score() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 3, 1).unwrap();
        let mut s = surface_from_b1(3, 1, |_, _| 1.0);
        s.b1 = RasterGrid::new(spec, vec![Some(1.0), None, None]).unwrap();
        let d = discontinuity_score(&s);
        assert_eq!(d.values(), &[None, None, None]);
    }

    #[test]
    fn all_nodata_audit_fails() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 5, 5).unwrap();
        let mut s = surface_from_b1(5, 5, |_, _| 1.0);
        s.b1 = RasterGrid::filled(spec, None).unwrap();
        assert!(matches!(continuity_audit(&s, 0.95), Err(Error::SampleSize { .. })));
    }

    #[test]
    fn flagged_cells_exceed_threshold() {
        let mut s = surface_from_b1(8, 8, |c, r| if c + r < 8 { 1.0 } else { 2.0 + 0.01 * c as f64 });
        s.residual = s.b1.map(|v| v * 0.1).unwrap();
        let f = continuity_audit(&s, 0.9).unwrap();
        assert!(!f.flagged_cells.is_empty());
        for &i in &f.flagged_cells {
            assert!(f.discontinuity.values()[i].unwrap() > f.threshold);
        }
    }
}
