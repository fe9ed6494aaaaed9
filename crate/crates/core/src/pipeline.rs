//! End-to-end audit runs.
//!
//! A run takes an [`AuditConfig`], obtains data (a user file or a seeded
//! generator), runs one audit, writes figures under the output directory and
//! returns the resulting [`Finding`]s. [`run_audit`] and [`run_demo`] wrap
//! that into a complete `report.json`. Both the `geobias` binary and the
//! crate examples go through this module.
//!
//! Every configuration block rejects unknown keys and fills missing keys
//! with the defaults listed on its fields.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tracing::info;

use crate::access::{self, DecaySpec, DemandSite, Facility, Population};
use crate::data::{self, Aggregator, CsvSchema, GridSpec, PointDataset, RasterGrid, Rect};
use crate::error::{Error, Result};
use crate::gwr::{self, GwrData, Kernel};
use crate::kde;
use crate::maup::{self, ConsistencyClass};
use crate::report::{write_artifact, write_report, AuditReport, Finding, Level, Severity};
use crate::simpson::{self, GroupKey, Normalization, SimpsonKind};
use crate::stats;
use crate::svg::{self, ColorRamp, FitLine, HeatmapOptions, Overlay, ScatterPlot, ScatterPoint};
use crate::synth::{self, CountyParams, GwrSurfaceParams, Seed, SimpsonParams, SurfaceKind};

/// Everything a run can be configured with, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Seed for every generator. Default 42.
    pub seed: u64,
    pub simpson: SimpsonConfig,
    pub gwr: GwrConfig,
    pub kde: KdeConfig,
    pub maup: MaupConfig,
    pub access: AccessConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            simpson: SimpsonConfig::default(),
            gwr: GwrConfig::default(),
            kde: KdeConfig::default(),
            maup: MaupConfig::default(),
            access: AccessConfig::default(),
        }
    }
}

impl AuditConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parameter(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks the block used by `audit` without touching any data.
    pub fn validate_for(&self, audit: Audit) -> Result<()> {
        match audit {
            Audit::Simpson => self.simpson.validate(),
            Audit::Gwr => self.gwr.validate(),
            Audit::Kde => self.kde.validate(),
            Audit::Maup => self.maup.validate(),
            Audit::Access => self.access.validate(),
        }
    }
}

/// Column names of the coordinates in a point CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Coords {
    pub x: String,
    pub y: String,
}

impl Default for Coords {
    fn default() -> Self {
        Self {
            x: "x".into(),
            y: "y".into(),
        }
    }
}

fn load_points(path: &Path, coords: &Coords, attrs: &[&str], group: Option<&str>) -> Result<PointDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    data::load_points_csv(file, &CsvSchema::new(&coords.x, &coords.y, attrs, group))
}

fn csv_has_column(path: &Path, column: &str) -> Result<bool> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    Ok(rdr.headers()?.iter().any(|h| h.trim() == column))
}

fn check(ok: bool, msg: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(msg.into()))
    }
}

fn padded(r: &Rect, pad: f64) -> Result<Rect> {
    Rect::new(r.min_x - pad, r.min_y - pad, r.max_x + pad, r.max_y + pad)
}

/// File-name-safe form of a label.
fn slug(s: &str) -> String {
    let out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    if out.is_empty() {
        "_".into()
    } else {
        out
    }
}

fn svg_artifact(out: &Path, rel: &str, bytes: Result<Vec<u8>>) -> Result<String> {
    write_artifact(out, rel, &bytes?)
}

// ---------------------------------------------------------------- simpson

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimpsonConfig {
    /// Point CSV. When absent the three-region generator is used.
    pub input: Option<PathBuf>,
    pub coords: Coords,
    /// Regression predictor column. Default `var1`.
    pub x: String,
    /// Regression response column. Default `var2`.
    pub y: String,
    /// Group label column. Default `group`.
    pub group: String,
    /// Significance level. Default 0.05.
    pub alpha: f64,
    /// Parallel-coordinates axes; empty means `x`, `y`, predictor, response.
    pub axes: Vec<String>,
    pub normalization: Normalization,
    pub generator: SimpsonParams,
}

impl Default for SimpsonConfig {
    fn default() -> Self {
        Self {
            input: None,
            coords: Coords::default(),
            x: "var1".into(),
            y: "var2".into(),
            group: "group".into(),
            alpha: 0.05,
            axes: Vec::new(),
            normalization: Normalization::MinMax,
            generator: SimpsonParams::default(),
        }
    }
}

impl SimpsonConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.alpha > 0.0 && self.alpha < 1.0, format!("alpha must lie in (0, 1), got {}", self.alpha))?;
        check(!self.x.is_empty() && !self.y.is_empty(), "regression columns must be named")?;
        check(self.axes.is_empty() || self.axes.len() >= 2, "parallel coordinates need at least two axes")?;
        check(self.generator.n_per_region >= 3, "n_per_region must be at least 3")
    }

    fn axes(&self) -> Vec<String> {
        if self.axes.is_empty() {
            vec!["x".into(), "y".into(), self.x.clone(), self.y.clone()]
        } else {
            self.axes.clone()
        }
    }
}

/// Ratio of between-group variance of axis means to mean within-group variance.
fn between_within_ratio(values: &[f64], groups: &[Option<String>]) -> f64 {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (v, g) in values.iter().zip(groups) {
        by.entry(g.as_deref().unwrap_or("")).or_default().push(*v);
    }
    let means: Vec<f64> = by.values().map(|v| stats::mean(v)).collect();
    let within: Vec<f64> = by
        .values()
        .filter(|v| v.len() >= 2)
        .map(|v| stats::sample_sd(v).powi(2))
        .collect();
    if means.len() < 2 || within.is_empty() {
        return f64::NAN;
    }
    stats::sample_sd(&means).powi(2) / stats::mean(&within)
}

pub fn simpson_findings(cfg: &SimpsonConfig, seed: Seed, out: &Path) -> Result<Vec<Finding>> {
    cfg.validate()?;
    let axes = cfg.axes();
    let mut artifacts = Vec::new();
    let d = match &cfg.input {
        Some(path) => {
            let mut attrs: Vec<&str> = vec![cfg.x.as_str(), cfg.y.as_str()];
            for a in &axes {
                if a != "x" && a != "y" && !attrs.contains(&a.as_str()) {
                    attrs.push(a);
                }
            }
            load_points(path, &cfg.coords, &attrs, Some(&cfg.group))?
        }
        None => {
            let d = synth::gen_simpson_regions(&cfg.generator, seed)?;
            let mut buf = Vec::new();
            data::write_points_csv(&mut buf, &d)?;
            artifacts.push(write_artifact(out, "simpson/data.csv", &buf)?);
            d
        }
    };
    info!(records = d.len(), "simpson audit");
    let xs = d.column(&cfg.x)?;
    let ys = d.column(&cfg.y)?;
    let pooled = simpson::fit_ols(&xs, &ys)?;
    let per_group = simpson::fit_grouped(&d, &cfg.x, &cfg.y, &GroupKey::Label)?;
    let sf = simpson::detect_simpson(&pooled, &per_group, cfg.alpha)?;

    let names: Vec<String> = per_group.keys().cloned().collect();
    let index_of = |g: &Option<String>| g.as_ref().and_then(|g| names.iter().position(|n| n == g));
    let plot = ScatterPlot {
        title: format!("{} vs {}: grouped and pooled fits", cfg.y, cfg.x),
        x_label: cfg.x.clone(),
        y_label: cfg.y.clone(),
        points: d
            .records()
            .iter()
            .zip(xs.iter().zip(&ys))
            .map(|(r, (&x, &y))| ScatterPoint {
                x,
                y,
                group: index_of(&r.group),
            })
            .collect(),
        group_lines: per_group
            .iter()
            .enumerate()
            .map(|(i, (g, f))| FitLine {
                slope: f.slope,
                intercept: f.intercept,
                group: Some(i),
                label: g.clone(),
            })
            .collect(),
        pooled_line: Some(FitLine {
            slope: pooled.slope,
            intercept: pooled.intercept,
            group: None,
            label: "pooled".into(),
        }),
        group_names: names.clone(),
    };
    artifacts.push(svg_artifact(out, "simpson/scatter.svg", svg::render_scatter(&plot))?);

    let axis_refs: Vec<&str> = axes.iter().map(String::as_str).collect();
    let table = simpson::parallel_coords_table(&d, &axis_refs, cfg.normalization)?;
    artifacts.push(svg_artifact(
        out,
        "simpson/parallel_coords.svg",
        svg::render_parallel_coords(&table, "Normalised parallel coordinates by group"),
    )?);

    let severity = match sf.kind {
        SimpsonKind::SignReversal => Severity::Critical,
        SimpsonKind::SignificanceLoss | SimpsonKind::MixedGroups => Severity::Warning,
        SimpsonKind::None => Severity::Info,
    };
    let mut f = Finding::new("simpson", Level::Data, format!("simpson.{}", sf.kind.name()), severity)
        .metric("n", d.len() as f64)
        .metric("alpha", cfg.alpha)
        .metric("pooled_slope", pooled.slope)
        .metric("pooled_intercept", pooled.intercept)
        .metric("pooled_slope_se", pooled.slope_se)
        .metric("pooled_t", pooled.t_stat)
        .metric("pooled_p_value", pooled.p_value)
        .metric("pooled_r2", pooled.r2)
        .metric("groups", per_group.len() as f64)
        .metric("non_significant_groups", sf.non_significant_groups.len() as f64);
    for (g, fit) in &per_group {
        f = f
            .metric(format!("group.{g}.n"), fit.n as f64)
            .metric(format!("group.{g}.slope"), fit.slope)
            .metric(format!("group.{g}.p_value"), fit.p_value)
            .metric(format!("group.{g}.r2"), fit.r2);
    }
    let mut heterogeneous = 0;
    for (k, axis) in table.axes.iter().enumerate() {
        let col: Vec<f64> = table.column(k).collect();
        let ratio = between_within_ratio(&col, &table.groups);
        if ratio > 1.0 {
            heterogeneous += 1;
        }
        f = f.metric(format!("axis.{axis}.between_within_ratio"), ratio);
    }
    f = f.metric("heterogeneous_axes", heterogeneous as f64);
    if !sf.non_significant_groups.is_empty() {
        f = f.note(format!(
            "groups not significant at alpha {}: {}",
            cfg.alpha,
            sf.non_significant_groups.join(", ")
        ));
    }
    f = f.note("significance uses a two-sided t test on the OLS slope with n-2 degrees of freedom");
    for a in artifacts {
        f = f.artifact(a);
    }
    Ok(vec![f])
}

// -------------------------------------------------------------------- gwr

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GwrConfig {
    /// Point CSV with predictor and response columns. When absent, one
    /// synthetic surface per entry of `kinds` is audited.
    pub input: Option<PathBuf>,
    pub coords: Coords,
    /// Default `x1`.
    pub predictor: String,
    /// Default `y`.
    pub response: String,
    /// Synthetic surfaces to audit. Default: all four.
    pub kinds: Vec<SurfaceKind>,
    /// Generator settings; its `kind` is replaced by each entry of `kinds`.
    pub generator: GwrSurfaceParams,
    /// Fixed bandwidth. When absent, leave-one-out CV selects one.
    pub bandwidth: Option<f64>,
    /// CV search interval. Default: half the median nearest-neighbour
    /// spacing up to the domain diameter.
    pub search: Option<(f64, f64)>,
    /// Golden-section tolerance. Default 0.01.
    pub tolerance: f64,
    pub kernel: Kernel,
    /// Default 0.95.
    pub threshold_quantile: f64,
    /// Evaluation grid cell size for CSV input. Default: the longer side
    /// of the bounding box over 31.
    pub cell_size: Option<f64>,
}

impl Default for GwrConfig {
    fn default() -> Self {
        Self {
            input: None,
            coords: Coords::default(),
            predictor: "x1".into(),
            response: "y".into(),
            kinds: SurfaceKind::ALL.to_vec(),
            generator: GwrSurfaceParams::default(),
            bandwidth: None,
            search: None,
            tolerance: 0.01,
            kernel: Kernel::Gaussian,
            threshold_quantile: 0.95,
            cell_size: None,
        }
    }
}

impl GwrConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bandwidth {
            check(b > 0.0 && b.is_finite(), format!("bandwidth must be positive, got {b}"))?;
        }
        if let Some((lo, hi)) = self.search {
            check(lo > 0.0 && hi > lo, format!("bandwidth search needs 0 < lo < hi, got ({lo}, {hi})"))?;
        }
        check(self.tolerance > 0.0, "tolerance must be positive")?;
        check(
            self.threshold_quantile > 0.0 && self.threshold_quantile < 1.0,
            "threshold_quantile must lie in (0, 1)",
        )?;
        if let Some(c) = self.cell_size {
            check(c > 0.0, "cell_size must be positive")?;
        }
        check(self.input.is_some() || !self.kinds.is_empty(), "no surface kinds to audit")?;
        self.generator.grid.validate()
    }
}

fn gwr_severity(rho: f64) -> Severity {
    if rho >= 0.5 {
        Severity::Critical
    } else if rho >= 0.3 {
        Severity::Warning
    } else {
        Severity::Info
    }
}

fn gwr_one(cfg: &GwrConfig, name: &str, d: &PointDataset, grid: &GridSpec, out: &Path) -> Result<Finding> {
    let data = GwrData::from_dataset(d, &cfg.predictor, &cfg.response)?;
    let mut notes = Vec::new();
    let (bandwidth, cv_score) = match cfg.bandwidth {
        Some(b) => {
            notes.push("bandwidth fixed by configuration".to_string());
            (b, None)
        }
        None => {
            let (lo, hi) = match cfg.search {
                Some(s) => s,
                None => (0.5 * kde::median_nn_distance(d)?, gwr::domain_diameter(d)?),
            };
            let sel = gwr::select_bandwidth_cv(&data, lo, hi, cfg.tolerance, cfg.kernel)?;
            notes.push(format!(
                "bandwidth selected by leave-one-out CV, golden-section search over [{lo:.4}, {hi:.4}]"
            ));
            (sel.bandwidth, Some(sel.cv_score))
        }
    };
    let surface = gwr::gwr_fit_with(&data, bandwidth, cfg.kernel, grid)?;
    let audit = gwr::continuity_audit(&surface, cfg.threshold_quantile)?;
    info!(surface = name, bandwidth, rho = audit.rank_correlation, "gwr audit");

    let base = format!("gwr/{}", slug(name));
    let mut artifacts = vec![
        svg_artifact(
            out,
            &format!("{base}_b1.svg"),
            svg::render_heatmap(
                &surface.b1,
                &HeatmapOptions {
                    title: format!("Local slope b1, {name} (flagged cells outlined)"),
                    ramp: ColorRamp::Sequential,
                    overlays: vec![Overlay::FlaggedCells(audit.flagged_cells.clone())],
                },
            ),
        )?,
        svg_artifact(
            out,
            &format!("{base}_discontinuity.svg"),
            svg::render_heatmap(
                &audit.discontinuity,
                &HeatmapOptions {
                    title: format!("Discontinuity score, {name}"),
                    ..Default::default()
                },
            ),
        )?,
        svg_artifact(
            out,
            &format!("{base}_residual.svg"),
            svg::render_heatmap(
                &surface.residual,
                &HeatmapOptions {
                    title: format!("Cell residual, {name}"),
                    ramp: ColorRamp::Diverging,
                    overlays: vec![],
                },
            ),
        )?,
    ];
    if d.attr_index("p_true").is_ok() {
        let truth = data::rasterize(d, "p_true", grid, Aggregator::Mean)?;
        artifacts.push(svg_artifact(
            out,
            &format!("{base}_p_true.svg"),
            svg::render_heatmap(
                &truth,
                &HeatmapOptions {
                    title: format!("True coefficient, {name}"),
                    ..Default::default()
                },
            ),
        )?);
    }
    let b1: Vec<f64> = surface.b1.valid_values().collect();
    let mut f = Finding::new(format!("gwr.{}", slug(name)), Level::Modeling, "gwr.discontinuity", gwr_severity(audit.rank_correlation))
        .metric("bandwidth", bandwidth)
        .metric("rank_correlation", audit.rank_correlation)
        .metric("threshold", audit.threshold)
        .metric("threshold_quantile", audit.threshold_quantile)
        .metric("flagged_cells", audit.flagged_cells.len() as f64)
        .metric("valid_cells", audit.valid_cells as f64)
        .metric("flagged_residual_share", audit.flagged_residual_share)
        .metric("no_data_cells", (surface.b1.values().len() - surface.b1.valid_count()) as f64)
        .metric("b1_mean", stats::mean(&b1))
        .metric("b1_min", b1.iter().copied().fold(f64::INFINITY, f64::min))
        .metric("b1_max", b1.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if let Some(cv) = cv_score {
        f = f.metric("cv_score", cv);
    }
    for n in notes {
        f = f.note(n);
    }
    for a in artifacts {
        f = f.artifact(a);
    }
    Ok(f)
}

pub fn gwr_findings(cfg: &GwrConfig, seed: Seed, out: &Path) -> Result<Vec<Finding>> {
    cfg.validate()?;
    match &cfg.input {
        Some(path) => {
            let d = load_points(path, &cfg.coords, &[&cfg.predictor, &cfg.response], None)?;
            let bbox = data::bounding_box(&d)?;
            let cell = cfg
                .cell_size
                .unwrap_or_else(|| (bbox.width().max(bbox.height()) / 31.0).max(f64::MIN_POSITIVE));
            let grid = GridSpec::centered_on(&bbox, cell)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
            Ok(vec![gwr_one(cfg, stem, &d, &grid, out)?])
        }
        None => cfg
            .kinds
            .iter()
            .map(|&kind| {
                let params = GwrSurfaceParams {
                    kind,
                    ..cfg.generator.clone()
                };
                let d = synth::gen_gwr_surface(&params, seed)?;
                let grid = match cfg.cell_size {
                    Some(c) => GridSpec::centered_on(&data::bounding_box(&d)?, c)?,
                    None => params.grid,
                };
                gwr_one(cfg, kind.name(), &d, &grid, out)
            })
            .collect(),
    }
}

// -------------------------------------------------------------------- kde

/// Isotropic Gaussian clusters for the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub centers: Vec<(f64, f64)>,
    pub sigmas: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ClusterSpec {
    fn generate(&self, seed: Seed) -> Result<PointDataset> {
        synth::gen_clusters(&self.centers, &self.sigmas, &self.counts, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdeMode {
    /// Gradient directions of a local subset against the full dataset.
    Window,
    /// Bandwidth sweep with false-centre detection.
    Sweep,
    Both,
}

impl FromStr for KdeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window" => Ok(KdeMode::Window),
            "sweep" => Ok(KdeMode::Sweep),
            "both" => Ok(KdeMode::Both),
            _ => Err(Error::Parameter(format!("unknown kde mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KdeConfig {
    /// Point CSV used for both analyses. When absent, `window_clusters` and
    /// `sweep_clusters` are generated.
    pub input: Option<PathBuf>,
    pub coords: Coords,
    /// Group column in the CSV. Default `group`.
    pub group: String,
    pub mode: KdeMode,
    /// Default: a broad 50-point pattern plus a tight 5-point cluster.
    pub window_clusters: ClusterSpec,
    /// Group label of the local subset. Default `1`.
    pub local_group: String,
    /// Margin around the local subset's bounding box. Default 1.
    pub window_pad: f64,
    /// Default: three 60-point clusters at the vertices of a side-10
    /// triangle, leaving the centroid empty.
    pub sweep_clusters: ClusterSpec,
    /// Default 0.3.
    pub h_lo: f64,
    /// Default 10.
    pub h_hi: f64,
    /// Default 12.
    pub steps: usize,
    /// Default 2.
    pub radius_factor: f64,
    /// Default 0.25.
    pub cell_size: f64,
    /// Margin added around the data for the density grid. Default 3.
    pub grid_pad: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        let side = 10.0;
        Self {
            input: None,
            coords: Coords::default(),
            group: "group".into(),
            mode: KdeMode::Both,
            window_clusters: ClusterSpec {
                centers: vec![(0.0, 0.0), (5.0, 5.0)],
                sigmas: vec![2.5, 0.6],
                counts: vec![50, 5],
            },
            local_group: "1".into(),
            window_pad: 1.0,
            sweep_clusters: ClusterSpec {
                centers: vec![(0.0, 0.0), (side, 0.0), (0.5 * side, 0.5 * side * 3f64.sqrt())],
                sigmas: vec![1.0; 3],
                counts: vec![60; 3],
            },
            h_lo: 0.3,
            h_hi: 10.0,
            steps: 12,
            radius_factor: 2.0,
            cell_size: 0.25,
            grid_pad: 3.0,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        check(
            self.h_lo > 0.0 && self.h_hi > self.h_lo,
            format!("bandwidth sweep needs 0 < h_lo < h_hi, got ({}, {})", self.h_lo, self.h_hi),
        )?;
        check(self.steps >= 2, "sweep needs at least two steps")?;
        check(self.radius_factor > 0.0, "radius_factor must be positive")?;
        check(self.cell_size > 0.0, "cell_size must be positive")?;
        check(self.grid_pad >= 0.0 && self.window_pad >= 0.0, "padding must be non-negative")
    }
}

fn density_grid(d: &PointDataset, pad: f64, cell: f64) -> Result<GridSpec> {
    GridSpec::covering(&padded(&data::bounding_box(d)?, pad)?, cell)
}

fn kde_window(cfg: &KdeConfig, global: &PointDataset, out: &Path) -> Result<Finding> {
    let local = global.filter_group(&cfg.local_group);
    if local.len() < 2 {
        return Err(Error::SampleSize {
            group: Some(cfg.local_group.clone()),
            required: 2,
            actual: local.len(),
        });
    }
    let hg = kde::silverman_bandwidth(global)?;
    let hl = kde::silverman_bandwidth(&local)?;
    let grid = density_grid(global, cfg.grid_pad, cfg.cell_size)?;
    let dg = kde::kde_grid(global, hg, &grid)?;
    let dl = kde::kde_grid(&local, hl, &grid)?;
    let fg = kde::gradient_field(&dg)?;
    let fl = kde::gradient_field(&dl)?;
    let window = padded(&data::bounding_box(&local)?, cfg.window_pad)?;
    let div = kde::gradient_divergence(&fg, &fl, &window)?;
    info!(mean = div.mean, max = div.max, "kde window divergence");

    let stride = (grid.width.max(grid.height) / 24).max(1);
    let corners = vec![
        (window.min_x, window.min_y),
        (window.max_x, window.min_y),
        (window.max_x, window.max_y),
        (window.min_x, window.max_y),
    ];
    let render = |r: &RasterGrid, field, title: String, pts: &PointDataset| {
        svg::render_heatmap(
            r,
            &HeatmapOptions {
                title,
                ramp: ColorRamp::Sequential,
                overlays: vec![
                    Overlay::Quivers { field, stride },
                    Overlay::Points(pts.coords()),
                    Overlay::Markers(corners.clone()),
                ],
            },
        )
    };
    let a1 = svg_artifact(
        out,
        "kde/window_global.svg",
        render(&dg, fg.clone(), format!("Full dataset, h = ({:.4}, {:.4})", hg.hx, hg.hy), global),
    )?;
    let a2 = svg_artifact(
        out,
        "kde/window_local.svg",
        render(&dl, fl.clone(), format!("Local subset, h = ({:.4}, {:.4})", hl.hx, hl.hy), &local),
    )?;
    let severity = if div.mean >= PI / 4.0 {
        Severity::Critical
    } else if div.mean >= PI / 8.0 {
        Severity::Warning
    } else {
        Severity::Info
    };
    Ok(Finding::new("kde.window", Level::Modeling, "kde.gradient_divergence", severity)
        .metric("mean_angle", div.mean)
        .metric("max_angle", div.max)
        .metric("cells", div.cells as f64)
        .metric("skipped_cells", div.skipped as f64)
        .metric("global_n", global.len() as f64)
        .metric("local_n", local.len() as f64)
        .metric("global_hx", hg.hx)
        .metric("global_hy", hg.hy)
        .metric("local_hx", hl.hx)
        .metric("local_hy", hl.hy)
        .note("each dataset uses its own Silverman bandwidth; angles in radians over the window marked by crosses")
        .artifact(a1)
        .artifact(a2))
}

fn kde_sweep(cfg: &KdeConfig, d: &PointDataset, out: &Path) -> Result<Finding> {
    let grid = density_grid(d, cfg.grid_pad, cfg.cell_size)?;
    let sweep = kde::bandwidth_sweep(d, cfg.h_lo, cfg.h_hi, cfg.steps, &grid)?;
    let audit = kde::false_center_audit(&sweep.finding, d, cfg.radius_factor)?;
    info!(flagged = audit.false_center_bandwidths.len(), "kde sweep");

    let mut artifacts = Vec::new();
    let pts = d.coords();
    for (i, (frame, m)) in sweep.frames.iter().zip(&audit.mode_tracks).enumerate() {
        artifacts.push(svg_artifact(
            out,
            &format!("kde/sweep_frame_{i:02}.svg"),
            svg::render_heatmap(
                frame,
                &HeatmapOptions {
                    title: format!("Frame {i}: h = {:.4}, mode ({:.3}, {:.3})", m.bandwidth, m.x, m.y),
                    ramp: ColorRamp::Sequential,
                    overlays: vec![Overlay::Points(pts.clone()), Overlay::Markers(vec![(m.x, m.y)])],
                },
            ),
        )?);
    }
    let mut csv = String::from("bandwidth,mode_x,mode_y,mode_density,nearest_data_distance,flagged\n");
    for (m, dist) in audit.mode_tracks.iter().zip(&audit.mode_data_distances) {
        let flagged = audit.false_center_bandwidths.contains(&m.bandwidth);
        let _ = writeln!(csv, "{},{},{},{},{},{}", m.bandwidth, m.x, m.y, m.density, dist, flagged);
    }
    artifacts.push(write_artifact(out, "kde/sweep_modes.csv", csv.as_bytes())?);

    let flagged = &audit.false_center_bandwidths;
    let first = audit.sweep_bandwidths.iter().position(|h| flagged.contains(h));
    let monotone = first.is_none_or(|k| audit.sweep_bandwidths[k..].iter().all(|h| flagged.contains(h)));
    let sil = kde::silverman_bandwidth(d)?;
    let severity = if flagged.is_empty() { Severity::Info } else { Severity::Warning };
    let mut f = Finding::new("kde.sweep", Level::Modeling, "kde.false_center", severity)
        .metric("n", d.len() as f64)
        .metric("h_lo", cfg.h_lo)
        .metric("h_hi", cfg.h_hi)
        .metric("steps", cfg.steps as f64)
        .metric("radius_factor", cfg.radius_factor)
        .metric("flagged_bandwidths", flagged.len() as f64)
        .metric("flags_monotone", if monotone { 1.0 } else { 0.0 })
        .metric("silverman_hx", sil.hx)
        .metric("silverman_hy", sil.hy);
    if let Some(r) = audit.false_center_radius {
        f = f.metric("false_center_radius", r);
    }
    if let Some(k) = first {
        f = f.metric("smallest_flagged_bandwidth", audit.sweep_bandwidths[k]);
    }
    f = f.note("a bandwidth is flagged when its density mode lies farther from every data point than radius_factor times the median nearest-neighbour distance");
    for a in artifacts {
        f = f.artifact(a);
    }
    Ok(f)
}

pub fn kde_findings(cfg: &KdeConfig, seed: Seed, out: &Path) -> Result<Vec<Finding>> {
    cfg.validate()?;
    let mut findings = Vec::new();
    let input = match &cfg.input {
        Some(path) => {
            let group = csv_has_column(path, &cfg.group)?.then_some(cfg.group.as_str());
            Some(load_points(path, &cfg.coords, &[], group)?)
        }
        None => None,
    };
    if matches!(cfg.mode, KdeMode::Window | KdeMode::Both) {
        let d = match &input {
            Some(d) => d.clone(),
            None => cfg.window_clusters.generate(seed)?,
        };
        let has_local = d.records().iter().any(|r| r.group.as_deref() == Some(cfg.local_group.as_str()));
        if has_local || cfg.mode == KdeMode::Window {
            findings.push(kde_window(cfg, &d, out)?);
        }
    }
    if matches!(cfg.mode, KdeMode::Sweep | KdeMode::Both) {
        let d = match &input {
            Some(d) => d.clone(),
            None => cfg.sweep_clusters.generate(seed)?,
        };
        findings.push(kde_sweep(cfg, &d, out)?);
    }
    Ok(findings)
}

// ------------------------------------------------------------------- maup

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaupConfig {
    /// Point CSV of surface samples, averaged onto a grid of `cell_size`.
    /// When absent a smoothed random surface is generated.
    pub input: Option<PathBuf>,
    pub coords: Coords,
    /// Value column of the CSV. Default `value`.
    pub attr: String,
    /// Default 1.
    pub cell_size: f64,
    /// Generated surface side. Default 100.
    pub side: usize,
    /// 3x3 mean-filter passes. Default 25.
    pub smoothness: usize,
    /// One block partition per entry. Default `[5, 10, 20, 25]`.
    pub block_sides: Vec<usize>,
    /// Block anchor offset in cells, shared by all partitions. Default (0, 0).
    pub offset: (i64, i64),
    /// Top share labelled 1. Default 0.25.
    pub q: f64,
    /// Reference grid side in cells. Default 10.
    pub ref_cell_side: f64,
}

impl Default for MaupConfig {
    fn default() -> Self {
        Self {
            input: None,
            coords: Coords::default(),
            attr: "value".into(),
            cell_size: 1.0,
            side: 100,
            smoothness: 25,
            block_sides: vec![5, 10, 20, 25],
            offset: (0, 0),
            q: 0.25,
            ref_cell_side: 10.0,
        }
    }
}

impl MaupConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.block_sides.len() >= 2, "at least two block partitions are needed")?;
        check(self.block_sides.iter().all(|&b| b >= 1), "block sides must be at least 1")?;
        check(self.q > 0.0 && self.q < 1.0, format!("q must lie in (0, 1), got {}", self.q))?;
        check(self.ref_cell_side > 0.0, "ref_cell_side must be positive")?;
        check(self.cell_size > 0.0, "cell_size must be positive")?;
        check(self.side >= 1, "surface side must be at least 1")
    }
}

pub fn maup_findings(cfg: &MaupConfig, seed: Seed, out: &Path) -> Result<Vec<Finding>> {
    cfg.validate()?;
    let surface = match &cfg.input {
        Some(path) => {
            let d = load_points(path, &cfg.coords, &[&cfg.attr], None)?;
            let grid = GridSpec::centered_on(&data::bounding_box(&d)?, cfg.cell_size)?;
            data::rasterize(&d, &cfg.attr, &grid, Aggregator::Mean)?
        }
        None => synth::gen_random_surface(cfg.side, cfg.smoothness, seed)?,
    };
    let partitions = cfg
        .block_sides
        .iter()
        .map(|&b| maup::make_block_partition(&surface.spec, b, cfg.offset))
        .collect::<Result<Vec<_>>>()?;
    let finding = maup::maup_audit(&surface, &partitions, cfg.q, cfg.ref_cell_side)?;
    let report = &finding.report;
    info!(unanimous = report.fraction(ConsistencyClass::Unanimous), "maup audit");

    let mut artifacts = vec![svg_artifact(
        out,
        "maup/surface.svg",
        svg::render_heatmap(
            &surface,
            &HeatmapOptions {
                title: "Attribute surface".into(),
                ..Default::default()
            },
        ),
    )?];
    for (i, ((b, p), side)) in finding.binaries.iter().zip(&partitions).zip(&cfg.block_sides).enumerate() {
        artifacts.push(svg_artifact(
            out,
            &format!("maup/partition_{i}_b{side}.svg"),
            svg::render_heatmap(
                &b.to_raster(),
                &HeatmapOptions {
                    title: format!("Top {:.0}% zones, blocks of side {side}", 100.0 * cfg.q),
                    ramp: ColorRamp::Sequential,
                    overlays: vec![Overlay::ZoneBoundaries(p.clone())],
                },
            ),
        )?);
    }
    artifacts.push(svg_artifact(
        out,
        "maup/consistency.svg",
        svg::render_heatmap(
            &report.class_grid(),
            &HeatmapOptions {
                title: "Consistency per reference cell: 2 unanimous, 1 strong majority, 0 split".into(),
                ..Default::default()
            },
        ),
    )?);

    let severity = finding.severity.unwrap_or(Severity::Info);
    let mut f = Finding::new("maup", Level::Interpretation, "maup.inconsistency", severity)
        .metric("unanimous", report.fraction(ConsistencyClass::Unanimous))
        .metric("strong_majority", report.fraction(ConsistencyClass::StrongMajority))
        .metric("split", report.fraction(ConsistencyClass::Split))
        .metric("groupings", report.groupings as f64)
        .metric("reference_cells", report.per_ref_cell.len() as f64)
        .metric("q", cfg.q)
        .metric("ref_cell_side", cfg.ref_cell_side);
    for (i, side) in cfg.block_sides.iter().enumerate() {
        f = f
            .metric(format!("partition.{i}.block_side"), *side as f64)
            .metric(format!("partition.{i}.zones"), finding.zone_counts[i] as f64)
            .metric(format!("partition.{i}.threshold"), finding.thresholds[i]);
    }
    f = f
        .note("classes: unanimous = all groupings agree; strong_majority = all but one agree; split = anything weaker")
        .note("reference-cell label is the majority of its cells, ties labelled 1")
        .note("zone threshold is the linear-interpolation (1 - q) quantile of zone means, ties included");
    if finding.severity.is_none() {
        f = f.note("all groupings agree on every reference cell");
    }
    for a in artifacts {
        f = f.artifact(a);
    }
    Ok(vec![f])
}

// ----------------------------------------------------------------- access

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccessConfig {
    /// Demand CSV (`x,y,pop_total,pop_<group>...`). Must be given together
    /// with `facilities`; when both are absent a synthetic county is used.
    pub demand: Option<PathBuf>,
    /// Facility CSV (`x,y,supply`).
    pub facilities: Option<PathBuf>,
    /// Catchment radius. Default 8.
    pub d0: f64,
    /// Decay weight at `d0`. Default 0.01.
    pub w_at_d0: f64,
    /// Groups below this share of the overall mean are flagged. Default 0.95.
    pub threshold_ratio: f64,
    /// Map cell size. Default: the county spacing, or the longer side of
    /// the demand bounding box over 39 for CSV input.
    pub cell_size: Option<f64>,
    pub county: CountyParams,
}

impl Default for AccessConfig {
    fn default() -> Self {
        Self {
            demand: None,
            facilities: None,
            d0: 8.0,
            w_at_d0: 0.01,
            threshold_ratio: 0.95,
            cell_size: None,
            county: CountyParams::default(),
        }
    }
}

impl AccessConfig {
    pub fn validate(&self) -> Result<()> {
        check(
            self.demand.is_some() == self.facilities.is_some(),
            "demand and facilities files must be given together",
        )?;
        DecaySpec::new(self.d0, self.w_at_d0)?;
        check(self.threshold_ratio > 0.0, "threshold_ratio must be positive")?;
        if let Some(c) = self.cell_size {
            check(c > 0.0, "cell_size must be positive")?;
        }
        Ok(())
    }
}

fn weighted_mean(w: &[f64], v: &[f64]) -> Option<f64> {
    let total: f64 = w.iter().sum();
    (total > 0.0).then(|| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / total)
}

pub fn access_findings(cfg: &AccessConfig, seed: Seed, out: &Path) -> Result<Vec<Finding>> {
    cfg.validate()?;
    let (demand, facilities, default_cell): (Vec<DemandSite>, Vec<Facility>, Option<f64>) =
        match (&cfg.demand, &cfg.facilities) {
            (Some(dp), Some(fp)) => {
                let d = access::load_demand_csv(File::open(dp).map_err(|e| Error::io(dp, e))?)?;
                let f = access::load_facilities_csv(File::open(fp).map_err(|e| Error::io(fp, e))?)?;
                (d, f, None)
            }
            _ => {
                let (d, f) = synth::gen_county(&cfg.county, seed)?;
                (d, f, Some(cfg.county.spacing))
            }
        };
    let spec = DecaySpec::new(cfg.d0, cfg.w_at_d0)?;
    let total = access::three_sfca(&demand, &facilities, &spec, &Population::Total)?;
    let strat = access::stratified_accessibility(&total, &demand)?;
    let audit = access::disparity_audit(&strat, cfg.threshold_ratio)?;
    info!(overall = audit.overall_mean, flagged = audit.flagged_groups.len(), "access audit");

    let records = demand
        .iter()
        .map(|s| data::PointRecord {
            x: s.x,
            y: s.y,
            values: vec![s.pop_total],
            group: None,
        })
        .collect();
    let sites = PointDataset::new(vec!["pop_total".into()], records)?;
    let bbox = data::bounding_box(&sites)?;
    let cell = cfg
        .cell_size
        .or(default_cell)
        .unwrap_or_else(|| (bbox.width().max(bbox.height()) / 39.0).max(f64::MIN_POSITIVE));
    let grid = GridSpec::centered_on(&bbox, cell)?;
    let facility_marks: Vec<(f64, f64)> = facilities.iter().map(|f| (f.x, f.y)).collect();

    let mut artifacts = Vec::new();
    let mut csv_header = String::from("x,y,a_total");
    let mut columns: Vec<Vec<f64>> = vec![total.a.clone()];
    let mut f = Finding::new("access", Level::Interpretation, "access.disparity", Severity::Info);
    let mut first = true;
    for g in access::group_names(&demand) {
        let run = access::group_specific_access(&demand, &facilities, &spec, &g)?;
        let maps = access::normalized_difference_map(&total, &run, &demand, &grid)?;
        if first {
            artifacts.push(svg_artifact(
                out,
                "access/total.svg",
                svg::render_heatmap(
                    &maps.normalized_total,
                    &HeatmapOptions {
                        title: "Normalised accessibility, total population".into(),
                        ramp: ColorRamp::Sequential,
                        overlays: vec![Overlay::Markers(facility_marks.clone())],
                    },
                ),
            )?);
            first = false;
        }
        let s = slug(&g);
        artifacts.push(svg_artifact(
            out,
            &format!("access/group_{s}.svg"),
            svg::render_heatmap(
                &maps.normalized_group,
                &HeatmapOptions {
                    title: format!("Normalised accessibility, group {g} only"),
                    ramp: ColorRamp::Sequential,
                    overlays: vec![Overlay::Markers(facility_marks.clone())],
                },
            ),
        )?);
        artifacts.push(svg_artifact(
            out,
            &format!("access/diff_{s}.svg"),
            svg::render_heatmap(
                &maps.difference,
                &HeatmapOptions {
                    title: format!("Total minus group {g}, normalised"),
                    ramp: ColorRamp::Diverging,
                    overlays: vec![Overlay::Markers(facility_marks.clone())],
                },
            ),
        )?);
        let pops: Vec<f64> = demand
            .iter()
            .map(|d| d.pop_by_group.get(&g).copied().unwrap_or(0.0))
            .collect();
        if let Some(m) = weighted_mean(&pops, &run.a) {
            f = f.metric(format!("group.{g}.group_run_mean"), m);
        }
        if let Some(Some(m)) = strat.group_means.get(&g) {
            f = f.metric(format!("group.{g}.mean"), *m);
        }
        if let Some(r) = audit.ratios.get(&g) {
            f = f.metric(format!("group.{g}.ratio"), *r);
        }
        f = f.metric(format!("group.{g}.population"), strat.group_population[&g]);
        let _ = write!(csv_header, ",a_{s}");
        columns.push(run.a);
    }
    let mut csv = csv_header + "\n";
    for (i, s) in demand.iter().enumerate() {
        let _ = write!(csv, "{},{}", s.x, s.y);
        for c in &columns {
            let _ = write!(csv, ",{}", c[i]);
        }
        csv.push('\n');
    }
    artifacts.push(write_artifact(out, "access/accessibility.csv", csv.as_bytes())?);

    f.severity = if audit.min_ratio < 0.8 {
        Severity::Critical
    } else if !audit.flagged_groups.is_empty() {
        Severity::Warning
    } else {
        Severity::Info
    };
    f = f
        .metric("overall_mean", audit.overall_mean)
        .metric("threshold_ratio", audit.threshold_ratio)
        .metric("min_ratio", audit.min_ratio)
        .metric("max_ratio", audit.max_ratio)
        .metric("flagged_groups", audit.flagged_groups.len() as f64)
        .metric("conservation_residual", total.conservation_residual)
        .metric("unreached_sites", total.unreached_sites as f64)
        .metric("idle_facilities", total.idle_facilities.len() as f64)
        .metric("demand_sites", demand.len() as f64)
        .metric("facilities", facilities.len() as f64)
        .metric("d0", cfg.d0)
        .metric("w_at_d0", cfg.w_at_d0)
        .note("group means weight the total-population accessibility surface by group population")
        .note("group maps and group_run_mean come from re-running 3SFCA with only that group as demand")
        .note("maps are min-max normalised per surface; a constant surface maps to 0.5");
    if !audit.flagged_groups.is_empty() {
        f = f.note(format!("flagged groups: {}", audit.flagged_groups.join(", ")));
    }
    if !audit.undefined_groups.is_empty() {
        f = f.note(format!("groups without population: {}", audit.undefined_groups.join(", ")));
    }
    for a in artifacts {
        f = f.artifact(a);
    }
    Ok(vec![f])
}

// ----------------------------------------------------------------- driver

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Audit {
    Simpson,
    Gwr,
    Kde,
    Maup,
    Access,
}

impl Audit {
    pub fn name(self) -> &'static str {
        match self {
            Audit::Simpson => "simpson",
            Audit::Gwr => "gwr",
            Audit::Kde => "kde",
            Audit::Maup => "maup",
            Audit::Access => "access",
        }
    }
}

/// The packaged synthetic experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Simpson,
    Gwr,
    KdeWindow,
    KdeSweep,
    Maup,
    Access,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Simpson,
        Experiment::Gwr,
        Experiment::KdeWindow,
        Experiment::KdeSweep,
        Experiment::Maup,
        Experiment::Access,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simpson => "simpson",
            Experiment::Gwr => "gwr",
            Experiment::KdeWindow => "kde-window",
            Experiment::KdeSweep => "kde-sweep",
            Experiment::Maup => "maup",
            Experiment::Access => "access",
        }
    }

    pub fn audit(self) -> Audit {
        match self {
            Experiment::Simpson => Audit::Simpson,
            Experiment::Gwr => Audit::Gwr,
            Experiment::KdeWindow | Experiment::KdeSweep => Audit::Kde,
            Experiment::Maup => Audit::Maup,
            Experiment::Access => Audit::Access,
        }
    }

    /// The configuration the experiment actually runs: all inputs removed
    /// so that data comes from the generators.
    pub fn configure(self, cfg: &AuditConfig) -> AuditConfig {
        let mut cfg = cfg.clone();
        cfg.simpson.input = None;
        cfg.gwr.input = None;
        cfg.kde.input = None;
        cfg.maup.input = None;
        cfg.access.demand = None;
        cfg.access.facilities = None;
        match self {
            Experiment::KdeWindow => cfg.kde.mode = KdeMode::Window,
            Experiment::KdeSweep => cfg.kde.mode = KdeMode::Sweep,
            _ => {}
        }
        cfg
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown experiment `{s}`")))
    }
}

pub fn findings_for(audit: Audit, cfg: &AuditConfig, out: &Path) -> Result<Vec<Finding>> {
    let seed = Seed(cfg.seed);
    match audit {
        Audit::Simpson => simpson_findings(&cfg.simpson, seed, out),
        Audit::Gwr => gwr_findings(&cfg.gwr, seed, out),
        Audit::Kde => kde_findings(&cfg.kde, seed, out),
        Audit::Maup => maup_findings(&cfg.maup, seed, out),
        Audit::Access => access_findings(&cfg.access, seed, out),
    }
}

fn config_echo(audit: Audit, cfg: &AuditConfig) -> Result<serde_json::Value> {
    let block = match audit {
        Audit::Simpson => serde_json::to_value(&cfg.simpson)?,
        Audit::Gwr => serde_json::to_value(&cfg.gwr)?,
        Audit::Kde => serde_json::to_value(&cfg.kde)?,
        Audit::Maup => serde_json::to_value(&cfg.maup)?,
        Audit::Access => serde_json::to_value(&cfg.access)?,
    };
    let mut map = serde_json::Map::new();
    map.insert("seed".into(), cfg.seed.into());
    map.insert(audit.name().into(), block);
    Ok(serde_json::Value::Object(map))
}

fn run(command: String, audit: Audit, cfg: &AuditConfig, out: &Path, timestamp: bool) -> Result<AuditReport> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut report = AuditReport::new(command, config_echo(audit, cfg)?, Some(cfg.seed), timestamp);
    for f in findings_for(audit, cfg, out)? {
        report.push(f);
    }
    write_report(&mut report, out)?;
    Ok(report)
}

/// Runs one audit and writes `report.json` plus artifacts into `out`.
pub fn run_audit(audit: Audit, cfg: &AuditConfig, out: &Path, timestamp: bool) -> Result<AuditReport> {
    run(audit.name().into(), audit, cfg, out, timestamp)
}

/// Runs a packaged experiment on generated data.
pub fn run_demo(experiment: Experiment, cfg: &AuditConfig, out: &Path, timestamp: bool) -> Result<AuditReport> {
    let cfg = experiment.configure(cfg);
    run(format!("demo {}", experiment.name()), experiment.audit(), &cfg, out, timestamp)
}
