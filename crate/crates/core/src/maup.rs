//! Interpretation-level audit for the modifiable areal unit problem.
//!
//! The same surface is aggregated under several zonings, the top quantile of
//! zone means is extracted under each, and the resulting binary maps are
//! compared cell by cell on a coarser reference grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{GridSpec, RasterGrid};
use crate::error::{Error, Result};
use crate::report::Severity;
use crate::stats;

/// Assignment of every grid cell to one zone; ids are dense in `0..zone_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePartition {
    pub spec: GridSpec,
    zone_of: Vec<usize>,
    zone_count: usize,
}

impl ZonePartition {
    /// Arbitrary zone ids are relabelled densely in order of first appearance.
    pub fn from_labels<T: Ord + Clone>(spec: GridSpec, labels: &[T]) -> Result<Self> {
        spec.validate()?;
        if labels.len() != spec.len() {
            return Err(Error::param(format!(
                "partition has {} labels for {} cells",
                labels.len(),
                spec.len()
            )));
        }
        let mut ids: BTreeMap<T, usize> = BTreeMap::new();
        let zone_of = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Ok(Self {
            spec,
            zone_of,
            zone_count: ids.len(),
        })
    }

    pub fn zone_of(&self) -> &[usize] {
        &self.zone_of
    }

    pub fn zone_count(&self) -> usize {
        self.zone_count
    }

    pub fn zone_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.zone_count];
        for &z in &self.zone_of {
            sizes[z] += 1;
        }
        sizes
    }
}

/// Square blocks of `block_side` cells whose lattice is shifted by
/// `offset` cells. Blocks cut by the grid border stay as partial zones.
pub fn make_block_partition(spec: &GridSpec, block_side: usize, offset: (i64, i64)) -> Result<ZonePartition> {
    if block_side < 1 {
        return Err(Error::param("block_side must be at least 1"));
    }
    let side = block_side as i64;
    let labels: Vec<(i64, i64)> = (0..spec.len())
        .map(|i| {
            let (c, r) = spec.col_row(i);
            (
                (r as i64 - offset.1).div_euclid(side),
                (c as i64 - offset.0).div_euclid(side),
            )
        })
        .collect();
    ZonePartition::from_labels(*spec, &labels)
}

/// Mean of valid cells per zone; zones with only no-data are `None`.
pub fn zonal_mean(r: &RasterGrid, p: &ZonePartition) -> Result<Vec<Option<f64>>> {
    if r.spec != p.spec {
        return Err(Error::param("raster and partition layouts differ"));
    }
    let mut sum = vec![0.0; p.zone_count];
    let mut n = vec![0usize; p.zone_count];
    for (v, &z) in r.values().iter().zip(&p.zone_of) {
        if let Some(v) = v {
            sum[z] += v;
            n[z] += 1;
        }
    }
    Ok(sum
        .into_iter()
        .zip(n)
        .map(|(s, k)| (k > 0).then(|| s / k as f64))
        .collect())
}

/// Cell-level 0/1 map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryGrid {
    pub spec: GridSpec,
    pub cells: Vec<bool>,
}

impl BinaryGrid {
    pub fn to_raster(&self) -> RasterGrid {
        RasterGrid::from_values(self.spec, self.cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .expect("layout is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binarization {
    /// `(1 - q)` quantile of the valid zone means.
    pub threshold: f64,
    pub zone_labels: Vec<bool>,
    pub binary: BinaryGrid,
}

/// Labels zones whose mean is at or above the `(1 - q)` linear-interpolation
/// quantile of zone means. Ties at the threshold are included; no-data zones
/// are labelled 0.
pub fn top_quantile_binarize(zone_values: &[Option<f64>], p: &ZonePartition, q: f64) -> Result<Binarization> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param(format!("q must lie in (0, 1), got {q}")));
    }
    if zone_values.len() != p.zone_count {
        return Err(Error::param("zone value count does not match the partition"));
    }
    let valid: Vec<f64> = zone_values.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::EmptyInput("every zone is no-data".into()));
    }
    let threshold = stats::quantile(&valid, 1.0 - q);
    let zone_labels: Vec<bool> = zone_values.iter().map(|v| matches!(v, Some(v) if *v >= threshold)).collect();
    let cells = p.zone_of.iter().map(|&z| zone_labels[z]).collect();
    Ok(Binarization {
        threshold,
        zone_labels,
        binary: BinaryGrid { spec: p.spec, cells },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyClass {
    /// All groupings agree.
    Unanimous,
    /// All but one agree, and that is a strict majority.
    StrongMajority,
    /// Anything weaker.
    Split,
}

impl ConsistencyClass {
    pub fn classify(agreement: usize, k: usize) -> Self {
        if agreement == k {
            ConsistencyClass::Unanimous
        } else if agreement + 1 == k && 2 * agreement > k {
            ConsistencyClass::StrongMajority
        } else {
            ConsistencyClass::Split
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub ref_cell_side: f64,
    /// Reference-grid layout (one cell per comparison unit).
    pub ref_spec: GridSpec,
    pub groupings: usize,
    pub classes: BTreeMap<ConsistencyClass, f64>,
    /// Largest number of groupings sharing a label, per reference cell.
    pub per_ref_cell: Vec<usize>,
}

impl ConsistencyReport {
    pub fn fraction(&self, class: ConsistencyClass) -> f64 {
        self.classes.get(&class).copied().unwrap_or(0.0)
    }

    pub fn class_grid(&self) -> RasterGrid {
        let v = self
            .per_ref_cell
            .iter()
            .map(|&a| match ConsistencyClass::classify(a, self.groupings) {
                ConsistencyClass::Unanimous => 2.0,
                ConsistencyClass::StrongMajority => 1.0,
                ConsistencyClass::Split => 0.0,
            })
            .collect();
        RasterGrid::from_values(self.ref_spec, v).expect("layout is valid")
    }
}

/// Compares `k >= 2` binary maps on reference cells of `ref_cell_side`
/// (map units). Each map contributes the majority label of the fine cells in
/// a reference cell (ties count as 1). Reference cells cut by the border
/// keep whatever fine cells they cover.
pub fn consistency_stats(binaries: &[BinaryGrid], ref_cell_side: f64) -> Result<ConsistencyReport> {
    if binaries.len() < 2 {
        return Err(Error::param("consistency needs at least two binary maps"));
    }
    let spec = binaries[0].spec;
    if binaries.iter().any(|b| b.spec != spec || b.cells.len() != spec.len()) {
        return Err(Error::param("binary maps have different layouts"));
    }
    if !(ref_cell_side > 0.0) {
        return Err(Error::param("reference cell side must be positive"));
    }
    let block = (ref_cell_side / spec.cell_size).round().max(1.0) as usize;
    let rw = spec.width.div_ceil(block);
    let rh = spec.height.div_ceil(block);
    let ref_spec = GridSpec::new(spec.origin_x, spec.origin_y, spec.cell_size * block as f64, rw, rh)?;
    let k = binaries.len();

    let mut per_ref_cell = Vec::with_capacity(rw * rh);
    let mut counts: BTreeMap<ConsistencyClass, usize> = BTreeMap::new();
    for rr in 0..rh {
        for rc in 0..rw {
            let ones = binaries
                .iter()
                .filter(|b| {
                    let (mut pos, mut tot) = (0usize, 0usize);
                    for r in rr * block..((rr + 1) * block).min(spec.height) {
                        for c in rc * block..((rc + 1) * block).min(spec.width) {
                            tot += 1;
                            pos += b.cells[spec.index(c, r)] as usize;
                        }
                    }
                    2 * pos >= tot
                })
                .count();
            let agreement = ones.max(k - ones);
            per_ref_cell.push(agreement);
            *counts.entry(ConsistencyClass::classify(agreement, k)).or_default() += 1;
        }
    }
    let total = per_ref_cell.len() as f64;
    let classes = [
        ConsistencyClass::Unanimous,
        ConsistencyClass::StrongMajority,
        ConsistencyClass::Split,
    ]
    .into_iter()
    .map(|c| (c, counts.get(&c).copied().unwrap_or(0) as f64 / total))
    .collect();
    Ok(ConsistencyReport {
        ref_cell_side,
        ref_spec,
        groupings: k,
        classes,
        per_ref_cell,
    })
}

/// How alarming a consistency level is; `None` when all groupings agree.
pub fn maup_severity(unanimous: f64) -> Option<Severity> {
    if unanimous >= 1.0 {
        None
    } else if unanimous >= 0.75 {
        Some(Severity::Info)
    } else if unanimous >= 0.5 {
        Some(Severity::Warning)
    } else {
        Some(Severity::Critical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaupFinding {
    pub report: ConsistencyReport,
    pub q: f64,
    pub thresholds: Vec<f64>,
    pub zone_counts: Vec<usize>,
    pub severity: Option<Severity>,
    #[serde(skip)]
    pub binaries: Vec<BinaryGrid>,
}

pub fn maup_audit(r: &RasterGrid, partitions: &[ZonePartition], q: f64, ref_cell_side: f64) -> Result<MaupFinding> {
    let mut thresholds = Vec::with_capacity(partitions.len());
    let mut binaries = Vec::with_capacity(partitions.len());
    for p in partitions {
        let means = zonal_mean(r, p)?;
        let b = top_quantile_binarize(&means, p, q)?;
        thresholds.push(b.threshold);
        binaries.push(b.binary);
    }
    let report = consistency_stats(&binaries, ref_cell_side)?;
    let severity = maup_severity(report.fraction(ConsistencyClass::Unanimous));
    Ok(MaupFinding {
        report,
        q,
        thresholds,
        zone_counts: partitions.iter().map(|p| p.zone_count).collect(),
        severity,
        binaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(w: usize, h: usize) -> GridSpec {
        GridSpec::new(0.0, 0.0, 1.0, w, h).unwrap()
    }

    #[test]
    fn block_partitions() {
        let p = make_block_partition(&spec(7, 3), 1, (0, 0)).unwrap();
        assert_eq!(p.zone_count(), 21);
        let p = make_block_partition(&spec(100, 100), 10, (0, 0)).unwrap();
        assert_eq!(p.zone_count(), 100);
        assert!(p.zone_sizes().iter().all(|&s| s == 100));
        let shifted = make_block_partition(&spec(100, 100), 10, (5, 5)).unwrap();
        assert_eq!(shifted.zone_count(), 121);
        assert_ne!(p.zone_of(), shifted.zone_of());
        assert!(make_block_partition(&spec(3, 3), 0, (0, 0)).is_err());
    }

    #[test]
    fn zonal_means() {
        let s = spec(4, 4);
        let r = RasterGrid::filled(s, Some(3.0)).unwrap();
        let p = make_block_partition(&s, 3, (0, 0)).unwrap();
        assert!(zonal_mean(&r, &p).unwrap().iter().all(|m| *m == Some(3.0)));
        let ramp = RasterGrid::from_values(s, (0..16).map(f64::from).collect()).unwrap();
        let id = make_block_partition(&s, 1, (0, 0)).unwrap();
        let means: Vec<f64> = zonal_mean(&ramp, &id).unwrap().into_iter().flatten().collect();
        assert_eq!(means, (0..16).map(f64::from).collect::<Vec<_>>());
        let other = make_block_partition(&spec(3, 3), 1, (0, 0)).unwrap();
        assert!(zonal_mean(&r, &other).is_err());
        let empty = RasterGrid::filled(s, None).unwrap();
        assert!(zonal_mean(&empty, &p).unwrap().iter().all(|m| m.is_none()));
    }

    #[test]
    fn top_quarter_of_four() {
        let s = spec(4, 1);
        let p = make_block_partition(&s, 1, (0, 0)).unwrap();
        let b = top_quantile_binarize(&[Some(1.0), Some(2.0), Some(3.0), Some(4.0)], &p, 0.25).unwrap();
        assert_eq!(b.zone_labels, vec![false, false, false, true]);
        let b = top_quantile_binarize(&[Some(2.0); 4], &p, 0.25).unwrap();
        assert!(b.zone_labels.iter().all(|&l| l));
        assert!(matches!(top_quantile_binarize(&[None; 4], &p, 0.25), Err(Error::EmptyInput(_))));
        assert!(top_quantile_binarize(&[Some(1.0); 4], &p, 1.0).is_err());
    }

    #[test]
    fn identical_and_complementary_maps() {
        let s = spec(4, 4);
        let a = BinaryGrid {
            spec: s,
            cells: (0..16).map(|i| i % 3 == 0).collect(),
        };
        let rep = consistency_stats(&[a.clone(), a.clone(), a.clone()], 1.0).unwrap();
        assert_eq!(rep.fraction(ConsistencyClass::Unanimous), 1.0);
        let not_a = BinaryGrid {
            spec: s,
            cells: a.cells.iter().map(|c| !c).collect(),
        };
        let rep = consistency_stats(&[a.clone(), not_a], 1.0).unwrap();
        assert_eq!(rep.fraction(ConsistencyClass::Unanimous), 0.0);
        assert_eq!(rep.fraction(ConsistencyClass::Split), 1.0);
        assert!(consistency_stats(&[a], 1.0).is_err());
    }

    #[test]
    fn classes_for_four_maps() {
        assert_eq!(ConsistencyClass::classify(4, 4), ConsistencyClass::Unanimous);
        assert_eq!(ConsistencyClass::classify(3, 4), ConsistencyClass::StrongMajority);
        assert_eq!(ConsistencyClass::classify(2, 4), ConsistencyClass::Split);
        assert_eq!(ConsistencyClass::classify(2, 3), ConsistencyClass::StrongMajority);
        assert_eq!(ConsistencyClass::classify(1, 2), ConsistencyClass::Split);
    }

    #[test]
    fn reference_label_majority_tie_is_one() {
        let s = spec(2, 1);
        let half = BinaryGrid {
            spec: s,
            cells: vec![true, false],
        };
        let ones = BinaryGrid {
            spec: s,
            cells: vec![true, true],
        };
        let rep = consistency_stats(&[half, ones], 2.0).unwrap();
        assert_eq!(rep.per_ref_cell, vec![2]);
    }

    #[test]
    fn repeated_partition_has_no_severity() {
        let s = spec(20, 20);
        let r = RasterGrid::from_values(s, (0..400).map(|i| ((i * 37) % 101) as f64).collect()).unwrap();
        let p = make_block_partition(&s, 5, (0, 0)).unwrap();
        let f = maup_audit(&r, &vec![p; 4], 0.25, 10.0).unwrap();
        assert_eq!(f.report.fraction(ConsistencyClass::Unanimous), 1.0);
        assert_eq!(f.severity, None);
    }
}
