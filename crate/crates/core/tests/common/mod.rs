//! Independent reference implementations and fixtures for the integration
//! tests. Nothing here calls into the code under test.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use geobias::access::{DemandSite, Facility};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

/// Least squares through the 2x2 normal equations `X'X b = X'y`, solved by
/// Cramer's rule. Returns `(intercept, slope, r2)`.
pub fn ols_normal_equations(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let intercept = (sy * sxx - sx * sxy) / det;
    let slope = (n * sxy - sx * sy) / det;
    let ybar = sy / n;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    (intercept, slope, 1.0 - sse / sst)
}

/// Ranks by counting: `1 + #smaller + (#equal - 1) / 2`.
pub fn counting_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson_direct(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman_brute(a: &[f64], b: &[f64]) -> f64 {
    pearson_direct(&counting_ranks(a), &counting_ranks(b))
}

/// Hyndman–Fan type 7 quantile by the 1-based `h = (n - 1) p + 1` recipe.
pub fn quantile_type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() as f64 - 1.0) * p + 1.0;
    let lo = h.floor() as usize;
    if lo >= v.len() {
        return v[v.len() - 1];
    }
    v[lo - 1] + (h - lo as f64) * (v[lo] - v[lo - 1])
}

/// Three-step floating catchment computed with explicit loops, with its own
/// Gaussian decay. `pops[i]` is the demand population of site `i`.
pub fn three_sfca_brute(sites: &[(f64, f64)], pops: &[f64], facilities: &[Facility], d0: f64, w0: f64) -> Vec<f64> {
    let beta = d0 * d0 / (1.0 / w0).ln();
    let w = |i: usize, j: usize| {
        let d = ((sites[i].0 - facilities[j].x).powi(2) + (sites[i].1 - facilities[j].y).powi(2)).sqrt();
        if d <= d0 {
            (-(d * d) / beta).exp()
        } else {
            0.0
        }
    };
    let (n, m) = (sites.len(), facilities.len());
    let mut g = vec![vec![0.0; m]; n];
    for i in 0..n {
        let mut total = 0.0;
        for j in 0..m {
            total += w(i, j);
        }
        for j in 0..m {
            if total > 0.0 {
                g[i][j] = w(i, j) / total;
            }
        }
    }
    let mut r = vec![None; m];
    for j in 0..m {
        let mut denom = 0.0;
        for i in 0..n {
            denom += g[i][j] * pops[i] * w(i, j);
        }
        if denom > 0.0 {
            r[j] = Some(facilities[j].supply / denom);
        }
    }
    let mut a = vec![0.0; n];
    for i in 0..n {
        for j in 0..m {
            if let Some(rj) = r[j] {
                a[i] += g[i][j] * w(i, j) * rj;
            }
        }
    }
    a
}

pub fn random_access_instance(seed: u64, sites: usize, facilities: usize, extent: f64) -> (Vec<DemandSite>, Vec<Facility>) {
    let mut r = rng(seed);
    let demand = (0..sites)
        .map(|_| {
            let total = r.gen_range(1.0..100.0);
            let a_share: f64 = r.gen_range(0.0..1.0);
            let mut groups = BTreeMap::new();
            groups.insert("a".to_string(), total * a_share);
            groups.insert("b".to_string(), total * (1.0 - a_share));
            DemandSite {
                x: r.gen_range(0.0..extent),
                y: r.gen_range(0.0..extent),
                pop_total: total,
                pop_by_group: groups,
            }
        })
        .collect();
    let fac = (0..facilities)
        .map(|_| Facility {
            x: r.gen_range(0.0..extent),
            y: r.gen_range(0.0..extent),
            supply: r.gen_range(0.5..10.0),
        })
        .collect();
    (demand, fac)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_geobias")
}

/// Relative paths of all files below `dir`, sorted.
pub fn files_below(dir: &Path) -> Vec<PathBuf> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

pub const EXPERIMENTS: [&str; 6] = ["simpson", "gwr", "kde-window", "kde-sweep", "maup", "access"];
