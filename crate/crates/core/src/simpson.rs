//! Data-level audit: pooled versus grouped simple regression and detection
//! of Simpson's-paradox patterns, plus the normalised table behind the
//! parallel-coordinates view.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::PointDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub t_stat: f64,
    /// Two-sided, Student t with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares of `ys` on `xs` with an intercept.
pub fn fit_ols(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    if xs.len() != ys.len() {
        return Err(Error::param(format!("xs has {} values, ys has {}", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::SampleSize {
            group: None,
            required: 3,
            actual: n,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("predictor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let df = nf - 2.0;
    let slope_se = (sse / df / sxx).sqrt();
    let t_stat = if slope_se > 0.0 {
        slope / slope_se
    } else if slope == 0.0 {
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };
    let p_value = two_sided_p(t_stat, df);
    Ok(RegressionFit {
        slope,
        intercept,
        slope_se,
        t_stat,
        p_value,
        r2,
        n,
    })
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

/// How records are partitioned for grouped regression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    /// The records' group label.
    Label,
    /// Distinct values of a numeric attribute.
    Attribute(String),
}

fn group_labels(d: &PointDataset, key: &GroupKey) -> Result<Vec<String>> {
    match key {
        GroupKey::Label => d
            .records()
            .iter()
            .map(|r| r.group.clone().ok_or_else(|| Error::Schema { column: "group".into() }))
            .collect(),
        GroupKey::Attribute(name) => Ok(d.column(name)?.into_iter().map(|v| v.to_string()).collect()),
    }
}

/// Independent OLS fit per group, keyed by label in sorted order.
pub fn fit_grouped(d: &PointDataset, xvar: &str, yvar: &str, key: &GroupKey) -> Result<BTreeMap<String, RegressionFit>> {
    let xs = d.column(xvar)?;
    let ys = d.column(yvar)?;
    let labels = group_labels(d, key)?;
    let mut buckets: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((x, y), label) in xs.into_iter().zip(ys).zip(labels) {
        let b = buckets.entry(label).or_default();
        b.0.push(x);
        b.1.push(y);
    }
    buckets
        .into_iter()
        .map(|(label, (gx, gy))| {
            if gx.len() < 3 {
                return Err(Error::SampleSize {
                    group: Some(label),
                    required: 3,
                    actual: gx.len(),
                });
            }
            let fit = fit_ols(&gx, &gy).map_err(|e| match e {
                Error::Degenerate(msg) => Error::Degenerate(format!("group `{label}`: {msg}")),
                other => other,
            })?;
            Ok((label, fit))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimpsonKind {
    SignReversal,
    SignificanceLoss,
    MixedGroups,
    None,
}

impl SimpsonKind {
    pub fn name(self) -> &'static str {
        match self {
            SimpsonKind::SignReversal => "sign_reversal",
            SimpsonKind::SignificanceLoss => "significance_loss",
            SimpsonKind::MixedGroups => "mixed_groups",
            SimpsonKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpsonFinding {
    pub kind: SimpsonKind,
    pub pooled: RegressionFit,
    pub per_group: BTreeMap<String, RegressionFit>,
    pub alpha: f64,
    /// Groups whose slope is not significant at `alpha`.
    pub non_significant_groups: Vec<String>,
}

/// Classifies the relation between the pooled trend and the group trends.
///
/// Significant group slopes of both signs give `MixedGroups`. Otherwise every
/// group must be significant (else `None`); with `s` their common sign, a
/// significant pooled slope of sign `-s` is a `SignReversal` and a
/// non-significant pooled slope a `SignificanceLoss`.
pub fn detect_simpson(pooled: &RegressionFit, per_group: &BTreeMap<String, RegressionFit>, alpha: f64) -> Result<SimpsonFinding> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if per_group.is_empty() {
        return Err(Error::EmptyInput("no groups to compare".into()));
    }
    let significant = |f: &RegressionFit| f.p_value < alpha;
    let sig_signs: Vec<f64> = per_group
        .values()
        .filter(|f| significant(f))
        .map(|f| f.slope.signum())
        .collect();
    let non_significant_groups: Vec<String> = per_group
        .iter()
        .filter(|(_, f)| !significant(f))
        .map(|(k, _)| k.clone())
        .collect();

    let kind = if sig_signs.iter().any(|&s| s > 0.0) && sig_signs.iter().any(|&s| s < 0.0) {
        SimpsonKind::MixedGroups
    } else if !non_significant_groups.is_empty() {
        SimpsonKind::None
    } else {
        let s = sig_signs[0];
        if !significant(pooled) {
            SimpsonKind::SignificanceLoss
        } else if pooled.slope.signum() == -s {
            SimpsonKind::SignReversal
        } else {
            SimpsonKind::None
        }
    };
    Ok(SimpsonFinding {
        kind,
        pooled: *pooled,
        per_group: per_group.clone(),
        alpha,
        non_significant_groups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    MinMax,
    ZScore,
}

/// Per-record axis values, each axis normalised independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelCoordsTable {
    pub axes: Vec<String>,
    /// `rows[record][axis]`.
    pub rows: Vec<Vec<f64>>,
    pub groups: Vec<Option<String>>,
}

impl ParallelCoordsTable {
    pub fn column(&self, axis: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[axis])
    }
}

/// Axis names may be attributes or the coordinates `x`/`y`. A constant axis
/// maps to 0.5 under min-max and 0 under z-score.
pub fn parallel_coords_table(d: &PointDataset, axes: &[&str], normalization: Normalization) -> Result<ParallelCoordsTable> {
    if axes.len() < 2 {
        return Err(Error::param("parallel coordinates need at least two axes"));
    }
    let columns = axes
        .iter()
        .map(|a| d.column(a).map(|c| normalize(&c, normalization)))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..d.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    Ok(ParallelCoordsTable {
        axes: axes.iter().map(|s| s.to_string()).collect(),
        rows,
        groups: d.records().iter().map(|r| r.group.clone()).collect(),
    })
}

fn normalize(col: &[f64], how: Normalization) -> Vec<f64> {
    if col.is_empty() {
        return vec![];
    }
    match how {
        Normalization::MinMax => {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            col.iter()
                .map(|v| if span > 0.0 { (v - lo) / span } else { 0.5 })
                .collect()
        }
        Normalization::ZScore => {
            let n = col.len() as f64;
            let m = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            col.iter()
                .map(|v| if sd > 0.0 { (v - m) / sd } else { 0.0 })
                .collect()
        }
    }
}
