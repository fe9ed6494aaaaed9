//! Interpretation-level audit for healthcare accessibility.
//!
//! Accessibility follows the three-step floating catchment area method with
//! a Gaussian distance decay truncated at the catchment radius `d0`:
//!
//! 1. selection weights `G_ij = W_ij / sum_k W_ik` over facilities in reach of `i`;
//! 2. supply ratios `R_j = S_j / sum_i G_ij * P_i * W_ij`;
//! 3. accessibility `A_i = sum_j G_ij * W_ij * R_j`.
//!
//! Substituting step 2 into step 3 gives `sum_i P_i A_i = sum_j S_j` over the
//! facilities that have any weighted demand, which the tests rely on.

use std::collections::BTreeMap;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{GridSpec, PointDataset, PointRecord, RasterGrid, rasterize, Aggregator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSite {
    pub x: f64,
    pub y: f64,
    pub pop_total: f64,
    pub pop_by_group: BTreeMap<String, f64>,
}

impl DemandSite {
    pub fn validate(&self) -> Result<()> {
        if !self.x.is_finite() || !self.y.is_finite() {
            return Err(Error::param("demand site coordinates must be finite"));
        }
        if !(self.pop_total >= 0.0) || self.pop_by_group.values().any(|p| !(*p >= 0.0)) {
            return Err(Error::param("populations must be non-negative"));
        }
        let groups: f64 = self.pop_by_group.values().sum();
        if groups > self.pop_total + 1e-9 {
            return Err(Error::param(format!(
                "group populations ({groups}) exceed the site total ({})",
                self.pop_total
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub x: f64,
    pub y: f64,
    pub supply: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    /// Catchment radius.
    pub d0: f64,
    /// Weight at exactly `d0`.
    pub w_at_d0: f64,
}

impl DecaySpec {
    pub fn new(d0: f64, w_at_d0: f64) -> Result<Self> {
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(Error::param(format!("d0 must be positive, got {d0}")));
        }
        if !(w_at_d0 > 0.0 && w_at_d0 < 1.0) {
            return Err(Error::param(format!("w_at_d0 must lie in (0, 1), got {w_at_d0}")));
        }
        Ok(Self { d0, w_at_d0 })
    }

    pub fn with_radius(d0: f64) -> Result<Self> {
        Self::new(d0, 0.01)
    }

    /// `beta` in `W(d) = exp(-d^2 / beta)`, calibrated so `W(d0) = w_at_d0`.
    pub fn beta(&self) -> f64 {
        self.d0 * self.d0 / (1.0 / self.w_at_d0).ln()
    }
}

pub fn decay_weight(d: f64, spec: &DecaySpec) -> f64 {
    if d > spec.d0 {
        0.0
    } else {
        (-d * d / spec.beta()).exp()
    }
}

/// Which population counts as demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    Total,
    Group(String),
}

impl Population {
    fn of(&self, site: &DemandSite) -> f64 {
        match self {
            Population::Total => site.pop_total,
            Population::Group(g) => site.pop_by_group.get(g).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityResult {
    pub population: Population,
    /// `A_i`, aligned with the demand sites.
    pub a: Vec<f64>,
    /// `R_j`; `None` for facilities without reachable weighted demand.
    pub supply_ratio: Vec<Option<f64>>,
    /// Population-weighted mean of `A_i` under the selected population.
    pub overall_mean: Option<f64>,
    /// Filled by [`stratified_accessibility`].
    pub group_means: BTreeMap<String, Option<f64>>,
    /// Facilities with no reachable weighted demand.
    pub idle_facilities: Vec<usize>,
    /// Demand sites with no facility within `d0`.
    pub unreached_sites: usize,
    /// `|sum P_i A_i - sum_j S_j| / sum_j S_j` over active facilities.
    pub conservation_residual: f64,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

pub fn three_sfca(demand: &[DemandSite], facilities: &[Facility], spec: &DecaySpec, population: &Population) -> Result<AccessibilityResult> {
    if demand.is_empty() || facilities.is_empty() {
        return Err(Error::EmptyInput("3SFCA needs at least one demand site and one facility".into()));
    }
    for site in demand {
        site.validate()?;
    }
    if let Some(f) = facilities.iter().find(|f| !(f.supply > 0.0) || !f.x.is_finite() || !f.y.is_finite()) {
        return Err(Error::param(format!("facility supply must be positive, got {}", f.supply)));
    }

    // Step 1: per demand site, (facility, W_ij, G_ij) over facilities in reach.
    let links: Vec<Vec<(usize, f64, f64)>> = demand
        .par_iter()
        .map(|site| {
            let reach: Vec<(usize, f64)> = facilities
                .iter()
                .enumerate()
                .filter_map(|(j, f)| {
                    let d = dist((site.x, site.y), (f.x, f.y));
                    (d <= spec.d0).then(|| (j, decay_weight(d, spec)))
                })
                .collect();
            let total: f64 = reach.iter().map(|r| r.1).sum();
            reach
                .into_iter()
                .map(|(j, w)| (j, w, if total > 0.0 { w / total } else { 0.0 }))
                .collect()
        })
        .collect();

    // Step 2
    let pops: Vec<f64> = demand.iter().map(|s| population.of(s)).collect();
    let mut weighted_demand = vec![0.0; facilities.len()];
    for (i, site_links) in links.iter().enumerate() {
        for &(j, w, g) in site_links {
            weighted_demand[j] += g * pops[i] * w;
        }
    }
    let supply_ratio: Vec<Option<f64>> = facilities
        .iter()
        .zip(&weighted_demand)
        .map(|(f, &dem)| (dem > 0.0).then(|| f.supply / dem))
        .collect();

    // Step 3
    let a: Vec<f64> = links
        .iter()
        .map(|site_links| {
            site_links
                .iter()
                .filter_map(|&(j, w, g)| supply_ratio[j].map(|r| g * w * r))
                .sum()
        })
        .collect();

    let idle_facilities = supply_ratio
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(j, _)| j)
        .collect();
    let unreached_sites = links.iter().filter(|l| l.is_empty()).count();
    let active_supply: f64 = facilities
        .iter()
        .zip(&supply_ratio)
        .filter(|(_, r)| r.is_some())
        .map(|(f, _)| f.supply)
        .sum();
    let delivered: f64 = pops.iter().zip(&a).map(|(p, a)| p * a).sum();
    let conservation_residual = if active_supply > 0.0 {
        (delivered - active_supply).abs() / active_supply
    } else {
        0.0
    };
    Ok(AccessibilityResult {
        population: population.clone(),
        overall_mean: weighted_mean(&pops, &a),
        a,
        supply_ratio,
        group_means: BTreeMap::new(),
        idle_facilities,
        unreached_sites,
        conservation_residual,
    })
}

fn weighted_mean(weights: &[f64], values: &[f64]) -> Option<f64> {
    let wsum: f64 = weights.iter().sum();
    (wsum > 0.0).then(|| weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / wsum)
}

/// Group names present on any demand site, sorted.
pub fn group_names(demand: &[DemandSite]) -> Vec<String> {
    let mut names: Vec<String> = demand.iter().flat_map(|s| s.pop_by_group.keys().cloned()).collect();
    names.sort();
    names.dedup();
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedAccess {
    pub overall_mean: f64,
    pub group_means: BTreeMap<String, Option<f64>>,
    pub group_population: BTreeMap<String, f64>,
}

/// Population-weighted means of one shared accessibility surface (from the
/// total-population run) for the whole population and for each group.
pub fn stratified_accessibility(result_total: &AccessibilityResult, demand: &[DemandSite]) -> Result<StratifiedAccess> {
    if result_total.a.len() != demand.len() {
        return Err(Error::param("accessibility result and demand sites differ in length"));
    }
    let groups = group_names(demand);
    if groups.is_empty() {
        return Err(Error::EmptyInput("demand sites carry no group populations".into()));
    }
    let total: Vec<f64> = demand.iter().map(|s| s.pop_total).collect();
    let overall_mean = weighted_mean(&total, &result_total.a)
        .ok_or_else(|| Error::Degenerate("total population is zero".into()))?;
    let mut group_means = BTreeMap::new();
    let mut group_population = BTreeMap::new();
    for g in groups {
        let pops: Vec<f64> = demand.iter().map(|s| s.pop_by_group.get(&g).copied().unwrap_or(0.0)).collect();
        group_population.insert(g.clone(), pops.iter().sum());
        group_means.insert(g, weighted_mean(&pops, &result_total.a));
    }
    Ok(StratifiedAccess {
        overall_mean,
        group_means,
        group_population,
    })
}

/// 3SFCA with the named group's population as the only demand.
pub fn group_specific_access(demand: &[DemandSite], facilities: &[Facility], spec: &DecaySpec, group: &str) -> Result<AccessibilityResult> {
    three_sfca(demand, facilities, spec, &Population::Group(group.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceMaps {
    pub normalized_total: RasterGrid,
    pub normalized_group: RasterGrid,
    /// `normalized_total - normalized_group`, in `[-1, 1]`.
    pub difference: RasterGrid,
}

fn access_raster(a: &[f64], demand: &[DemandSite], grid: &GridSpec) -> Result<RasterGrid> {
    let records = demand
        .iter()
        .zip(a)
        .map(|(s, &v)| PointRecord {
            x: s.x,
            y: s.y,
            values: vec![v],
            group: None,
        })
        .collect();
    let d = PointDataset::new(vec!["a".into()], records)?;
    rasterize(&d, "a", grid, Aggregator::Mean)
}

/// Rasterises both accessibility surfaces (cell mean), min-max normalises
/// each independently and differences them. A constant surface normalises to 0.5.
pub fn normalized_difference_map(a_total: &AccessibilityResult, a_group: &AccessibilityResult, demand: &[DemandSite], grid: &GridSpec) -> Result<DifferenceMaps> {
    if a_total.a.len() != demand.len() || a_group.a.len() != demand.len() {
        return Err(Error::param("accessibility results must cover the same demand sites"));
    }
    let normalized_total = access_raster(&a_total.a, demand, grid)?.normalized();
    let normalized_group = access_raster(&a_group.a, demand, grid)?.normalized();
    let diff = normalized_total
        .values()
        .iter()
        .zip(normalized_group.values())
        .map(|(t, g)| Some(t.as_ref()? - g.as_ref()?))
        .collect();
    Ok(DifferenceMaps {
        difference: RasterGrid::new(*grid, diff)?,
        normalized_total,
        normalized_group,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessFinding {
    pub overall_mean: f64,
    pub threshold_ratio: f64,
    /// `mean_g / overall_mean` for groups with a defined mean.
    pub ratios: BTreeMap<String, f64>,
    pub flagged_groups: Vec<String>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Groups without population, hence without a mean.
    pub undefined_groups: Vec<String>,
}

/// Flags every group whose mean falls below `threshold_ratio` times the
/// overall mean.
pub fn disparity_audit(stratified: &StratifiedAccess, threshold_ratio: f64) -> Result<AccessFinding> {
    if stratified.group_means.len() < 2 {
        return Err(Error::param("disparity audit needs at least two groups"));
    }
    if !(threshold_ratio > 0.0) {
        return Err(Error::param("threshold_ratio must be positive"));
    }
    if !(stratified.overall_mean > 0.0) {
        return Err(Error::Degenerate("overall mean accessibility is zero".into()));
    }
    let mut ratios = BTreeMap::new();
    let mut undefined_groups = Vec::new();
    for (g, m) in &stratified.group_means {
        match m {
            Some(m) => {
                ratios.insert(g.clone(), m / stratified.overall_mean);
            }
            None => undefined_groups.push(g.clone()),
        }
    }
    let flagged_groups = ratios
        .iter()
        .filter(|(_, &r)| r < threshold_ratio)
        .map(|(g, _)| g.clone())
        .collect();
    let min_ratio = ratios.values().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.values().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AccessFinding {
        overall_mean: stratified.overall_mean,
        threshold_ratio,
        ratios,
        flagged_groups,
        min_ratio,
        max_ratio,
        undefined_groups,
    })
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Schema {
        column: name.to_string(),
    })
}

fn number(raw: Option<&str>, row: usize, column: &str) -> Result<f64> {
    let raw = raw.unwrap_or("");
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

/// Reads `x,y,pop_total,pop_<group>...`. Every `pop_*` column other than
/// `pop_total` becomes a group named by its suffix.
pub fn load_demand_csv<R: Read>(source: R) -> Result<Vec<DemandSite>> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    let (xi, yi, ti) = (
        header_index(&headers, "x")?,
        header_index(&headers, "y")?,
        header_index(&headers, "pop_total")?,
    );
    let group_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let h = h.trim();
            h.strip_prefix("pop_")
                .filter(|g| *g != "total" && !g.is_empty())
                .map(|g| (i, g.to_string()))
        })
        .collect();
    let mut sites = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let mut pop_by_group = BTreeMap::new();
        for (i, g) in &group_cols {
            pop_by_group.insert(g.clone(), number(row.get(*i), line, &headers[*i])?);
        }
        let site = DemandSite {
            x: number(row.get(xi), line, "x")?,
            y: number(row.get(yi), line, "y")?,
            pop_total: number(row.get(ti), line, "pop_total")?,
            pop_by_group,
        };
        site.validate()?;
        sites.push(site);
    }
    if sites.is_empty() {
        return Err(Error::EmptyInput("demand CSV contains no rows".into()));
    }
    Ok(sites)
}

/// Reads `x,y,supply`.
pub fn load_facilities_csv<R: Read>(source: R) -> Result<Vec<Facility>> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    let (xi, yi, si) = (
        header_index(&headers, "x")?,
        header_index(&headers, "y")?,
        header_index(&headers, "supply")?,
    );
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let f = Facility {
            x: number(row.get(xi), line, "x")?,
            y: number(row.get(yi), line, "y")?,
            supply: number(row.get(si), line, "supply")?,
        };
        if !(f.supply > 0.0) {
            return Err(Error::param(format!("facility on row {line} has non-positive supply")));
        }
        out.push(f);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("facility CSV contains no rows".into()));
    }
    Ok(out)
}
