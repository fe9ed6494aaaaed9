//! Seeded generators for the synthetic experiment setups.
//!
//! Every generator is a pure function of its parameters and a [`Seed`]. The
//! stream comes from a 128-bit-state permuted congruential generator
//! (PCG XSL-RR 128/64, `rand_pcg::Pcg64`) seeded through
//! `SeedableRng::seed_from_u64`. Uniform reals use the generator's 53-bit
//! `f64` conversion; Gaussian variates use the basic Box–Muller transform,
//! one uniform pair per draw, cosine branch only:
//! `z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`.
//!
//! Default parameters (region boxes, spreads, noise levels, sample sizes)
//! are choices of this crate, not values taken from any published run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::access::{DemandSite, Facility};
use crate::data::{GridSpec, PointDataset, PointRecord, RasterGrid, Rect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Default for Seed {
    fn default() -> Self {
        Seed(42)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Deterministic random stream used by all generators.
pub struct SynthRng {
    inner: Pcg64,
}

impl SynthRng {
    pub fn new(seed: Seed) -> Self {
        Self {
            inner: Pcg64::seed_from_u64(seed.0),
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.gaussian()
    }
}

/// Three-region setup in which each region has a positive within-region
/// trend but the region means line up along a negative diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimpsonParams {
    pub n_per_region: usize,
    pub within_slope: f64,
    /// `(mean_var1, mean_var2)` per region A, B, C.
    pub region_offsets: [(f64, f64); 3],
    /// Spread of `var1` around its region mean.
    pub var1_sd: f64,
    pub noise_sd: f64,
    pub region_boxes: [Rect; 3],
}

impl Default for SimpsonParams {
    fn default() -> Self {
        let bx = |a: f64, b: f64| Rect {
            min_x: a,
            min_y: a,
            max_x: b,
            max_y: b,
        };
        Self {
            n_per_region: 50,
            within_slope: 1.0,
            region_offsets: [(0.0, 4.0), (2.0, 2.0), (4.0, 0.0)],
            var1_sd: 0.5,
            noise_sd: 0.3,
            region_boxes: [bx(0.0, 3.0), bx(3.5, 6.5), bx(7.0, 10.0)],
        }
    }
}

pub const SIMPSON_LABELS: [&str; 3] = ["A", "B", "C"];

/// Points uniform in each region box with attributes `var1`, `var2` and
/// group labels A/B/C: `var2 = mean2 + slope * (var1 - mean1) + noise`.
pub fn gen_simpson_regions(params: &SimpsonParams, seed: Seed) -> Result<PointDataset> {
    if params.n_per_region < 3 {
        return Err(Error::param(format!(
            "n_per_region must be at least 3, got {}",
            params.n_per_region
        )));
    }
    if !(params.noise_sd >= 0.0) || !(params.var1_sd > 0.0) {
        return Err(Error::param("noise_sd must be >= 0 and var1_sd > 0"));
    }
    let mut rng = SynthRng::new(seed);
    let mut records = Vec::with_capacity(3 * params.n_per_region);
    for (k, label) in SIMPSON_LABELS.iter().enumerate() {
        let bx = params.region_boxes[k];
        let (m1, m2) = params.region_offsets[k];
        for _ in 0..params.n_per_region {
            let x = rng.uniform_in(bx.min_x, bx.max_x);
            let y = rng.uniform_in(bx.min_y, bx.max_y);
            let v1 = rng.normal(m1, params.var1_sd);
            let v2 = m2 + params.within_slope * (v1 - m1) + params.noise_sd * rng.gaussian();
            records.push(PointRecord {
                x,
                y,
                values: vec![v1, v2],
                group: Some(label.to_string()),
            });
        }
    }
    PointDataset::new(vec!["var1".into(), "var2".into()], records)
}

/// Spatial pattern of the true local coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    /// `p_low` left of the vertical midline, `p_high` right of it.
    StepX,
    /// `p_high` above the anti-diagonal of the grid extent.
    StepDiag,
    /// `p_high` inside a central disc of radius a quarter of the shorter side.
    CircularPatch,
    /// Linear in x from `p_low` at the left edge to `p_high` at the right.
    SmoothRamp,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 4] = [
        SurfaceKind::StepX,
        SurfaceKind::StepDiag,
        SurfaceKind::CircularPatch,
        SurfaceKind::SmoothRamp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::StepX => "step_x",
            SurfaceKind::StepDiag => "step_diag",
            SurfaceKind::CircularPatch => "circular_patch",
            SurfaceKind::SmoothRamp => "smooth_ramp",
        }
    }

    fn is_discontinuous(self) -> bool {
        !matches!(self, SurfaceKind::SmoothRamp)
    }

    /// True coefficient at `(x, y)` inside `extent`.
    pub fn p_at(self, extent: &Rect, x: f64, y: f64, p_low: f64, p_high: f64) -> f64 {
        let u = (x - extent.min_x) / extent.width();
        let v = (y - extent.min_y) / extent.height();
        match self {
            SurfaceKind::StepX => {
                if u < 0.5 {
                    p_low
                } else {
                    p_high
                }
            }
            SurfaceKind::StepDiag => {
                if u + v < 1.0 {
                    p_low
                } else {
                    p_high
                }
            }
            SurfaceKind::CircularPatch => {
                let (cx, cy) = extent.center();
                let r = 0.25 * extent.width().min(extent.height());
                if (x - cx).hypot(y - cy) <= r {
                    p_high
                } else {
                    p_low
                }
            }
            SurfaceKind::SmoothRamp => p_low + (p_high - p_low) * u,
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SurfaceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown surface kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GwrSurfaceParams {
    pub kind: SurfaceKind,
    pub grid: GridSpec,
    pub x1_range: (f64, f64),
    pub noise_sd: f64,
    pub p_levels: (f64, f64),
}

impl Default for GwrSurfaceParams {
    fn default() -> Self {
        Self {
            kind: SurfaceKind::StepX,
            grid: GridSpec {
                origin_x: 0.0,
                origin_y: 0.0,
                cell_size: 1.0,
                width: 32,
                height: 32,
            },
            x1_range: (1.0, 5.0),
            noise_sd: 0.1,
            p_levels: (1.0, 3.0),
        }
    }
}

/// One sample per cell centre with attributes `x1`, `y`, `p_true`, where
/// `y = x1 * p_true + N(0, noise_sd)`.
pub fn gen_gwr_surface(params: &GwrSurfaceParams, seed: Seed) -> Result<PointDataset> {
    params.grid.validate()?;
    let (lo, hi) = params.x1_range;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param("x1_range must be a finite (lo, hi) pair with lo <= hi"));
    }
    if !(params.noise_sd >= 0.0) {
        return Err(Error::param("noise_sd must be >= 0"));
    }
    let (p_low, p_high) = params.p_levels;
    if params.kind.is_discontinuous() && p_low == p_high {
        return Err(Error::param(format!(
            "{} needs distinct p levels, got {p_low} twice",
            params.kind
        )));
    }
    let extent = params.grid.extent();
    let mut rng = SynthRng::new(seed);
    let records = params
        .grid
        .centers()
        .map(|(x, y)| {
            let p = params.kind.p_at(&extent, x, y, p_low, p_high);
            let x1 = rng.uniform_in(lo, hi);
            let noise = rng.gaussian();
            PointRecord {
                x,
                y,
                values: vec![x1, x1 * p + params.noise_sd * noise, p],
                group: None,
            }
        })
        .collect();
    PointDataset::new(vec!["x1".into(), "y".into(), "p_true".into()], records)
}

/// Isotropic Gaussian blobs; cluster `k` is labelled `"k"`.
pub fn gen_clusters(centers: &[(f64, f64)], sigmas: &[f64], counts: &[usize], seed: Seed) -> Result<PointDataset> {
    if centers.len() != sigmas.len() || centers.len() != counts.len() {
        return Err(Error::param(format!(
            "centers ({}), sigmas ({}) and counts ({}) must have the same length",
            centers.len(),
            sigmas.len(),
            counts.len()
        )));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::param(format!("cluster sigma must be positive, got {s}")));
    }
    let mut rng = SynthRng::new(seed);
    let mut records = Vec::with_capacity(counts.iter().sum());
    for (k, ((&(cx, cy), &sigma), &count)) in centers.iter().zip(sigmas).zip(counts).enumerate() {
        for _ in 0..count {
            records.push(PointRecord {
                x: rng.normal(cx, sigma),
                y: rng.normal(cy, sigma),
                values: vec![],
                group: Some(k.to_string()),
            });
        }
    }
    PointDataset::new(vec![], records)
}

/// `side x side` surface (unit cells, origin 0,0) of uniform noise passed
/// `smoothness` times through a 3x3 mean filter with mirrored borders, then
/// min-max normalised to `[0, 1]`.
pub fn gen_random_surface(side: usize, smoothness: usize, seed: Seed) -> Result<RasterGrid> {
    if side < 1 {
        return Err(Error::param("surface side must be at least 1"));
    }
    let mut rng = SynthRng::new(seed);
    let mut cur: Vec<f64> = (0..side * side).map(|_| rng.uniform()).collect();
    let reflect = |i: isize| -> usize {
        if i < 0 {
            0
        } else if i as usize >= side {
            side - 1
        } else {
            i as usize
        }
    };
    for _ in 0..smoothness {
        let mut next = vec![0.0; cur.len()];
        for r in 0..side {
            for c in 0..side {
                let mut s = 0.0;
                for dr in -1..=1isize {
                    for dc in -1..=1isize {
                        s += cur[reflect(r as isize + dr) * side + reflect(c as isize + dc)];
                    }
                }
                next[r * side + c] = s / 9.0;
            }
        }
        cur = next;
    }
    let spec = GridSpec::new(0.0, 0.0, 1.0, side, side)?;
    Ok(RasterGrid::from_values(spec, cur)?.normalized())
}

/// A square synthetic county: demand sites on a lattice, facilities drawn
/// from the western part only, and four population groups whose shares
/// drift across space so that they sit at different distances from care.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountyParams {
    /// Demand sites per lattice row and column.
    pub side: usize,
    pub spacing: f64,
    pub pop_range: (f64, f64),
    pub facilities: usize,
    /// Facilities are placed with `x` in `[0, facility_x_max * extent]`.
    pub facility_x_max: f64,
    pub supply_range: (f64, f64),
}

impl Default for CountyParams {
    fn default() -> Self {
        Self {
            side: 30,
            spacing: 1.0,
            pop_range: (50.0, 150.0),
            facilities: 12,
            facility_x_max: 0.65,
            supply_range: (1.0, 5.0),
        }
    }
}

/// Group names of [`gen_county`], in column order.
pub const COUNTY_GROUPS: [&str; 4] = ["a", "b", "c", "d"];

/// Relative group weights at normalised position `(u, v)`: `a` leans west,
/// `b` east, `c` north, `d` is uniform.
fn county_shares(u: f64, v: f64) -> [f64; 4] {
    let w = [1.0 + 2.0 * (1.0 - u), 1.0 + 3.0 * u * u, 1.0 + v, 1.0];
    let t: f64 = w.iter().sum();
    w.map(|x| x / t)
}

pub fn gen_county(params: &CountyParams, seed: Seed) -> Result<(Vec<DemandSite>, Vec<Facility>)> {
    if params.side < 2 {
        return Err(Error::param("county side must be at least 2"));
    }
    if params.facilities == 0 {
        return Err(Error::param("county needs at least one facility"));
    }
    if !(params.spacing > 0.0) {
        return Err(Error::param("county spacing must be positive"));
    }
    let (plo, phi) = params.pop_range;
    let (slo, shi) = params.supply_range;
    if !(0.0 <= plo && plo <= phi) || !(0.0 < slo && slo <= shi) {
        return Err(Error::param("population and supply ranges must be ordered, with positive supply"));
    }
    if !(params.facility_x_max > 0.0 && params.facility_x_max <= 1.0) {
        return Err(Error::param("facility_x_max must lie in (0, 1]"));
    }
    let mut rng = SynthRng::new(seed);
    let extent = (params.side - 1) as f64 * params.spacing;
    let mut demand = Vec::with_capacity(params.side * params.side);
    for row in 0..params.side {
        for col in 0..params.side {
            let (x, y) = (col as f64 * params.spacing, row as f64 * params.spacing);
            let pop_total = rng.uniform_in(plo, phi);
            let shares = county_shares(x / extent, y / extent);
            let pop_by_group: BTreeMap<String, f64> = COUNTY_GROUPS
                .iter()
                .zip(shares)
                .map(|(g, s)| (g.to_string(), pop_total * s))
                .collect();
            demand.push(DemandSite { x, y, pop_total, pop_by_group });
        }
    }
    let facilities = (0..params.facilities)
        .map(|_| Facility {
            x: rng.uniform_in(0.0, params.facility_x_max * extent),
            y: rng.uniform_in(0.0, extent),
            supply: rng.uniform_in(slo, shi),
        })
        .collect();
    Ok((demand, facilities))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn lag1_autocorrelation(r: &RasterGrid) -> f64 {
        let (w, h) = (r.width(), r.height());
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for row in 0..h {
            for col in 0..w {
                let v = r.get(col, row).unwrap();
                if col + 1 < w {
                    a.push(v);
                    b.push(r.get(col + 1, row).unwrap());
                }
                if row + 1 < h {
                    a.push(v);
                    b.push(r.get(col, row + 1).unwrap());
                }
            }
        }
        stats::pearson(&a, &b)
    }

    #[test]
    fn gaussian_moments_are_plausible() {
        let mut rng = SynthRng::new(Seed(7));
        let xs: Vec<f64> = (0..20_000).map(|_| rng.gaussian()).collect();
        assert!(stats::mean(&xs).abs() < 0.03);
        assert!((stats::sample_sd(&xs) - 1.0).abs() < 0.03);
    }

    #[test]
    fn simpson_rejects_tiny_regions() {
        let p = SimpsonParams {
            n_per_region: 2,
            ..Default::default()
        };
        assert!(matches!(gen_simpson_regions(&p, Seed(1)), Err(Error::Parameter(_))));
    }

    #[test]
    fn simpson_labels_and_boxes() {
        let p = SimpsonParams::default();
        let d = gen_simpson_regions(&p, Seed(42)).unwrap();
        assert_eq!(d.len(), 150);
        for (k, label) in SIMPSON_LABELS.iter().enumerate() {
            let g = d.filter_group(label);
            assert_eq!(g.len(), 50);
            assert!(g.records().iter().all(|r| p.region_boxes[k].contains(r.x, r.y)));
        }
    }

    #[test]
    fn step_x_splits_at_midline() {
        let p = GwrSurfaceParams::default();
        let d = gen_gwr_surface(&p, Seed(3)).unwrap();
        let pt = d.column("p_true").unwrap();
        for (r, p) in d.records().iter().zip(pt) {
            assert!(p == 1.0 || p == 3.0);
            assert_eq!(p == 1.0, r.x < 16.0);
        }
    }

    #[test]
    fn smooth_ramp_noise_free_ratio() {
        let p = GwrSurfaceParams {
            kind: SurfaceKind::SmoothRamp,
            noise_sd: 0.0,
            ..Default::default()
        };
        let d = gen_gwr_surface(&p, Seed(3)).unwrap();
        let (x1, y, pt) = (d.column("x1").unwrap(), d.column("y").unwrap(), d.column("p_true").unwrap());
        for i in 0..d.len() {
            assert!((y[i] / x1[i] - pt[i]).abs() < 1e-12);
        }
        // linear in x, constant in y
        let rec = d.records();
        assert!((pt[1] - pt[0] - (pt[2] - pt[1])).abs() < 1e-12);
        assert_eq!(pt[0], pt[32]);
        assert!(rec[0].x < rec[1].x);
    }

    #[test]
    fn step_kinds_need_distinct_levels() {
        let p = GwrSurfaceParams {
            p_levels: (2.0, 2.0),
            ..Default::default()
        };
        assert!(gen_gwr_surface(&p, Seed(1)).is_err());
        assert!("hexagon".parse::<SurfaceKind>().is_err());
        assert_eq!("circular_patch".parse::<SurfaceKind>().unwrap(), SurfaceKind::CircularPatch);
    }

    #[test]
    fn clusters_length_mismatch() {
        assert!(gen_clusters(&[(0.0, 0.0)], &[1.0, 2.0], &[3], Seed(1)).is_err());
        assert!(gen_clusters(&[(0.0, 0.0)], &[0.0], &[3], Seed(1)).is_err());
    }

    #[test]
    fn tiny_sigma_lands_on_center() {
        let d = gen_clusters(&[(3.0, -2.0)], &[1e-9], &[1], Seed(5)).unwrap();
        let r = &d.records()[0];
        assert!((r.x - 3.0).abs() < 1e-6 && (r.y + 2.0).abs() < 1e-6);
    }

    #[test]
    fn cluster_means_near_centers() {
        let centers = [(0.0, 0.0), (10.0, 0.0), (5.0, 9.0)];
        let d = gen_clusters(&centers, &[1.0; 3], &[500; 3], Seed(42)).unwrap();
        for (k, c) in centers.iter().enumerate() {
            let g = d.filter_group(&k.to_string());
            let mx = stats::mean(&g.column("x").unwrap());
            let my = stats::mean(&g.column("y").unwrap());
            assert!((mx - c.0).hypot(my - c.1) < 1.0);
        }
    }

    #[test]
    fn surface_normalised_and_smoother_with_passes() {
        let raw = gen_random_surface(100, 0, Seed(42)).unwrap();
        assert_eq!(raw.min_max(), Some((0.0, 1.0)));
        let smooth = gen_random_surface(100, 25, Seed(42)).unwrap();
        assert_eq!(smooth.min_max(), Some((0.0, 1.0)));
        assert!(lag1_autocorrelation(&smooth) > lag1_autocorrelation(&raw));
        assert!(gen_random_surface(0, 1, Seed(1)).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_random_surface(20, 3, Seed(9)).unwrap();
        let b = gen_random_surface(20, 3, Seed(9)).unwrap();
        let bits = |r: &RasterGrid| r.values().iter().map(|v| v.unwrap().to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        for kind in SurfaceKind::ALL {
            let p = GwrSurfaceParams {
                kind,
                ..Default::default()
            };
            assert_eq!(gen_gwr_surface(&p, Seed(11)).unwrap(), gen_gwr_surface(&p, Seed(11)).unwrap());
        }
        let p = SimpsonParams::default();
        assert_eq!(gen_simpson_regions(&p, Seed(1)).unwrap(), gen_simpson_regions(&p, Seed(1)).unwrap());
    }

    #[test]
    fn county_groups_exhaust_total() {
        let (demand, facilities) = gen_county(&CountyParams::default(), Seed(42)).unwrap();
        assert_eq!(demand.len(), 900);
        assert_eq!(facilities.len(), 12);
        for s in &demand {
            s.validate().unwrap();
            let g: f64 = s.pop_by_group.values().sum();
            assert!((g - s.pop_total).abs() < 1e-9 * s.pop_total.max(1.0));
        }
        assert!(facilities.iter().all(|f| f.x <= 0.65 * 29.0 && f.supply >= 1.0));
        assert_eq!(gen_county(&CountyParams::default(), Seed(42)).unwrap().0, demand);
    }
}
