//! One check per acceptance criterion. Run with
//! `cargo test --test acceptance -- --nocapture` to see the PASS/FAIL lines.

mod common;

use common::*;
use geobias::access::{
    load_demand_csv, load_facilities_csv, stratified_accessibility, three_sfca, DecaySpec,
    DemandSite, Facility, Population,
};
use geobias::data::{bounding_box, GridSpec, PointDataset, PointRecord};
use geobias::gwr::{domain_diameter, gwr_fit};
use geobias::kde::{kde_grid, silverman_bandwidth, Bandwidth2D};
use geobias::maup::{make_block_partition, maup_audit, zonal_mean, ConsistencyClass};
use geobias::pipeline::{gwr_findings, kde_findings, maup_findings, GwrConfig, KdeConfig, KdeMode, MaupConfig};
use geobias::report::{AuditReport, REPORT_SCHEMA};
use geobias::simpson::{detect_simpson, fit_grouped, fit_ols, GroupKey, SimpsonKind};
use geobias::synth::{gen_gwr_surface, gen_random_surface, gen_simpson_regions, GwrSurfaceParams, Seed, SimpsonParams, SurfaceKind};
use rand::Rng;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.gen_range(5..=200);
        let slope = r.gen_range(-3.0..3.0);
        let xs: Vec<f64> = (0..n).map(|_| r.gen_range(-20.0..20.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -1.0 + slope * x + r.gen_range(-5.0..5.0)).collect();
        let fit = fit_ols(&xs, &ys).map_err(|e| e.to_string())?;
        let (b0, b1, r2) = ols_normal_equations(&xs, &ys);
        worst = worst
            .max((fit.slope - b1).abs())
            .max((fit.intercept - b0).abs())
            .max((fit.r2 - r2).abs());
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-9, format!("max deviation {worst:e} > 1e-9"))?;
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("100 instances, max deviation {worst:.1e}, {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let d = gen_simpson_regions(&SimpsonParams::default(), Seed(42)).map_err(|e| e.to_string())?;
    let pooled = fit_ols(&d.column("var1").unwrap(), &d.column("var2").unwrap()).map_err(|e| e.to_string())?;
    let groups = fit_grouped(&d, "var1", "var2", &GroupKey::Label).map_err(|e| e.to_string())?;
    check(groups.len() == 3, format!("{} groups", groups.len()))?;
    for (g, f) in &groups {
        check(f.slope > 0.0 && f.p_value < 0.01, format!("group {g}: slope {} p {}", f.slope, f.p_value))?;
    }
    check(
        pooled.p_value >= 0.05 || pooled.slope < 0.0,
        format!("pooled slope {} p {}", pooled.slope, pooled.p_value),
    )?;
    let finding = detect_simpson(&pooled, &groups, 0.05).map_err(|e| e.to_string())?;
    check(
        matches!(finding.kind, SimpsonKind::SignReversal | SimpsonKind::SignificanceLoss),
        format!("kind {}", finding.kind.name()),
    )?;
    let max_p = groups.values().map(|f| f.p_value).fold(0.0, f64::max);
    Ok(format!(
        "{}: pooled slope {:.3} (p {:.1e}), group slopes positive with max p {max_p:.1e}",
        finding.kind.name(),
        pooled.slope,
        pooled.p_value
    ))
}

fn criterion_3(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let params = GwrSurfaceParams::default();
    let d = gen_gwr_surface(&params, Seed(42)).map_err(|e| e.to_string())?;
    let global = fit_ols(&d.column("x1").unwrap(), &d.column("y").unwrap()).map_err(|e| e.to_string())?;
    let wide = gwr_fit(&d, 1e6 * domain_diameter(&d).unwrap(), &params.grid).map_err(|e| e.to_string())?;
    let limit_dev = wide.b1.valid_values().map(|b| (b - global.slope).abs()).fold(0.0, f64::max);
    check(wide.b1.valid_count() == params.grid.len(), "wide fit left no-data cells")?;
    check(limit_dev <= 1e-6, format!("limit deviation {limit_dev:e}"))?;

    let mut r = rng(3);
    let records = (0..32 * 32)
        .map(|i| {
            let x1: f64 = r.gen_range(0.0..10.0);
            PointRecord {
                x: (i % 32) as f64,
                y: (i / 32) as f64,
                values: vec![x1, 4.0 - 1.5 * x1],
                group: None,
            }
        })
        .collect();
    let flat = PointDataset::new(vec!["x1".into(), "y".into()], records).unwrap();
    let mut const_dev = 0.0f64;
    for bw in [0.7, 1.5, 6.0] {
        let s = gwr_fit(&flat, bw, &params.grid).map_err(|e| e.to_string())?;
        const_dev = s.b1.valid_values().map(|b| (b + 1.5).abs()).fold(const_dev, f64::max);
    }
    check(const_dev <= 1e-6, format!("constant recovery deviation {const_dev:e}"))?;

    check(params.grid.width == 32 && params.grid.height == 32 && params.noise_sd == 0.1, "demo defaults changed")?;
    let cfg = GwrConfig {
        kinds: vec![SurfaceKind::StepX, SurfaceKind::SmoothRamp],
        ..Default::default()
    };
    let findings = gwr_findings(&cfg, Seed(42), tmp).map_err(|e| e.to_string())?;
    let rho = |id: &str| findings.iter().find(|f| f.id == id).map(|f| f.metrics["rank_correlation"]);
    let (step, ramp) = (rho("gwr.step_x").ok_or("no step_x finding")?, rho("gwr.smooth_ramp").ok_or("no smooth_ramp finding")?);
    check(step >= 0.3, format!("step_x rho {step:.4} < 0.3"))?;
    check(ramp <= 0.2, format!("smooth_ramp rho {ramp:.4} > 0.2"))?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!(
        "limit {limit_dev:.1e}, constant {const_dev:.1e}, step_x rho {step:.4}, smooth_ramp rho {ramp:.4}, {elapsed:.2?}"
    ))
}

fn criterion_4(tmp: &Path) -> Outcome {
    let h = Bandwidth2D::new(0.8, 1.1).map_err(|e| e.to_string())?;
    let mut r = rng(4);
    let pts: Vec<PointRecord> = (0..25)
        .map(|_| PointRecord {
            x: r.gen_range(0.0..4.0),
            y: r.gen_range(0.0..3.0),
            values: vec![],
            group: None,
        })
        .collect();
    let d = PointDataset::new(vec![], pts).unwrap();
    let b = bounding_box(&d).unwrap();
    let pad = 6.0 * 1.1;
    let span = (b.width().max(b.height())) + 2.0 * pad;
    let cell = span / 128.0;
    let grid = GridSpec::new(b.min_x - pad, b.min_y - pad, cell, 128, 128).unwrap();
    let mass = kde_grid(&d, h, &grid).map_err(|e| e.to_string())?.valid_values().sum::<f64>() * cell * cell;
    check((mass - 1.0).abs() <= 0.01, format!("mass {mass}"))?;

    let sil = silverman_bandwidth(&d).map_err(|e| e.to_string())?;
    let n = d.len() as f64;
    let sd = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / n;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let sil_dev = (sil.hx - sd(d.column("x").unwrap()) * n.powf(-1.0 / 6.0))
        .abs()
        .max((sil.hy - sd(d.column("y").unwrap()) * n.powf(-1.0 / 6.0)).abs());
    check(sil_dev <= 1e-12, format!("Silverman deviation {sil_dev:e}"))?;

    let moved = d.map_coords(|x, y| (x - 321.0, y + 77.5)).unwrap();
    let a = kde_grid(&d, h, &grid).unwrap();
    let c = kde_grid(&moved, h, &grid.translated(-321.0, 77.5)).unwrap();
    let trans_dev = a.valid_values().zip(c.valid_values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    check(trans_dev <= 1e-12, format!("translation deviation {trans_dev:e}"))?;

    let cfg = KdeConfig {
        mode: KdeMode::Sweep,
        ..Default::default()
    };
    let findings = kde_findings(&cfg, Seed(42), tmp).map_err(|e| e.to_string())?;
    let sweep = findings.iter().find(|f| f.id == "kde.sweep").ok_or("no sweep finding")?;
    let flagged = sweep.metrics["flagged_bandwidths"];
    check(flagged >= 1.0, "triangle sweep flagged no bandwidth")?;
    Ok(format!(
        "mass {mass:.5}, Silverman {sil_dev:.1e}, translation {trans_dev:.1e}, {flagged} false-centre bandwidths"
    ))
}

fn criterion_5(tmp: &Path) -> Outcome {
    let surface = gen_random_surface(40, 5, Seed(42)).map_err(|e| e.to_string())?;
    let p = make_block_partition(&surface.spec, 5, (0, 0)).unwrap();
    let same = maup_audit(&surface, &[p.clone(), p.clone(), p], 0.25, 5.0).map_err(|e| e.to_string())?;
    check(same.report.fraction(ConsistencyClass::Unanimous) == 1.0, "identical partitions not unanimous")?;

    let total: f64 = surface.valid_values().sum();
    let mut zonal_dev = 0.0f64;
    for side in [3, 5, 8, 40] {
        let p = make_block_partition(&surface.spec, side, (1, 2)).unwrap();
        let acc: f64 = zonal_mean(&surface, &p)
            .unwrap()
            .iter()
            .zip(p.zone_sizes())
            .map(|(m, n)| m.unwrap() * n as f64)
            .sum();
        zonal_dev = zonal_dev.max((acc - total).abs());
    }
    check(zonal_dev <= 1e-9, format!("zonal deviation {zonal_dev:e}"))?;

    let findings = maup_findings(&MaupConfig::default(), Seed(42), tmp).map_err(|e| e.to_string())?;
    let m = &findings[0].metrics;
    let (u, s, x) = (m["unanimous"], m["strong_majority"], m["split"]);
    check(((u + s + x) - 1.0).abs() <= 1e-12, format!("fractions sum to {}", u + s + x))?;
    check(u < 1.0, "seeded demo is unanimous everywhere")?;
    check(
        close(u, 0.70, 1e-12) && close(s, 0.18, 1e-12) && close(x, 0.12, 1e-12),
        format!("demo fractions {u}/{s}/{x} moved from the 0.70/0.18/0.12 baseline"),
    )?;
    Ok(format!("demo unanimous {u:.2}, strong majority {s:.2}, split {x:.2}; zonal {zonal_dev:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut worst_oracle = 0.0f64;
    let mut worst_cons = 0.0f64;
    let mut worst_ident = 0.0f64;
    let mut worst_scale = 0.0f64;
    for seed in 0..50 {
        let (demand, facilities) = random_access_instance(1000 + seed, 30, 6, 25.0);
        let spec = DecaySpec::new(8.0, 0.01).unwrap();
        let res = three_sfca(&demand, &facilities, &spec, &Population::Total).map_err(|e| e.to_string())?;
        let sites: Vec<(f64, f64)> = demand.iter().map(|s| (s.x, s.y)).collect();
        let pops: Vec<f64> = demand.iter().map(|s| s.pop_total).collect();
        let oracle = three_sfca_brute(&sites, &pops, &facilities, 8.0, 0.01);
        for (a, b) in res.a.iter().zip(&oracle) {
            worst_oracle = worst_oracle.max((a - b).abs() / b.abs().max(1e-12));
        }
        let active: f64 = facilities
            .iter()
            .zip(&res.supply_ratio)
            .filter(|(_, r)| r.is_some())
            .map(|(f, _)| f.supply)
            .sum();
        if active > 0.0 {
            let served: f64 = pops.iter().zip(&oracle).map(|(p, a)| p * a).sum();
            worst_cons = worst_cons.max((served - active).abs() / active);
        }

        let mut richer = facilities.clone();
        richer[seed as usize % facilities.len()].supply *= 3.0;
        let more = three_sfca(&demand, &richer, &spec, &Population::Total).unwrap();
        check(
            res.a.iter().zip(&more.a).all(|(a, b)| *b >= *a - 1e-15),
            format!("accessibility fell after a supply increase (seed {seed})"),
        )?;

        let strat = stratified_accessibility(&res, &demand).map_err(|e| e.to_string())?;
        let lhs: f64 = strat.group_means.iter().map(|(g, m)| strat.group_population[g] * m.unwrap_or(0.0)).sum();
        let rhs: f64 = demand.iter().zip(&res.a).map(|(s, a)| s.pop_by_group.values().sum::<f64>() * a).sum();
        if rhs > 0.0 {
            worst_ident = worst_ident.max((lhs - rhs).abs() / rhs);
        }

        let c = 7.5;
        let scaled: Vec<DemandSite> = demand
            .iter()
            .map(|s| DemandSite {
                pop_total: s.pop_total * c,
                pop_by_group: s.pop_by_group.iter().map(|(g, p)| (g.clone(), p * c)).collect(),
                ..s.clone()
            })
            .collect();
        let sres = three_sfca(&scaled, &facilities, &spec, &Population::Total).unwrap();
        for (a, b) in res.a.iter().zip(&sres.a) {
            worst_scale = worst_scale.max((b * c - a).abs() / a.abs().max(1e-300));
        }
    }
    check(worst_oracle <= 1e-9, format!("oracle deviation {worst_oracle:e}"))?;
    check(worst_cons <= 1e-9, format!("conservation deviation {worst_cons:e}"))?;
    check(worst_ident <= 1e-12, format!("stratified identity deviation {worst_ident:e}"))?;
    check(worst_scale <= 1e-12, format!("population scaling deviation {worst_scale:e}"))?;
    Ok(format!(
        "50 instances: oracle {worst_oracle:.1e}, conservation {worst_cons:.1e}, identity {worst_ident:.1e}, scaling {worst_scale:.1e}"
    ))
}

/// Reference values for the optional county check: overall mean then group means.
const COUNTY_REFERENCE: [(&str, f64); 5] = [
    ("overall", 0.000977),
    ("white", 0.00103),
    ("black", 0.000879),
    ("american_indian", 0.000907),
    ("asian", 0.00106),
];

fn two_significant(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let m = 10f64.powi(1 - v.abs().log10().floor() as i32);
    (v * m).round() / m
}

/// `None` when no county dataset is configured.
fn criterion_6_county() -> Option<Outcome> {
    let demand_path = std::env::var("GEOBIAS_COUNTY_DEMAND").ok()?;
    let facilities_path = std::env::var("GEOBIAS_COUNTY_FACILITIES").ok()?;
    let run = || -> Outcome {
        let d0: f64 = std::env::var("GEOBIAS_COUNTY_D0")
            .map_err(|_| "GEOBIAS_COUNTY_D0 is not set".to_string())?
            .parse()
            .map_err(|e| format!("GEOBIAS_COUNTY_D0: {e}"))?;
        let demand = load_demand_csv(fs::File::open(&demand_path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let facilities: Vec<Facility> =
            load_facilities_csv(fs::File::open(&facilities_path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let spec = DecaySpec::new(d0, 0.01).map_err(|e| e.to_string())?;
        let total = three_sfca(&demand, &facilities, &spec, &Population::Total).map_err(|e| e.to_string())?;
        let strat = stratified_accessibility(&total, &demand).map_err(|e| e.to_string())?;
        let mut lines = Vec::new();
        for (name, expected) in COUNTY_REFERENCE {
            let got = if name == "overall" {
                strat.overall_mean
            } else {
                strat
                    .group_means
                    .get(name)
                    .copied()
                    .flatten()
                    .ok_or(format!("group {name} missing from the demand CSV"))?
            };
            check(
                two_significant(got) == two_significant(expected),
                format!("{name}: {got:.3e} vs {expected}"),
            )?;
            lines.push(format!("{name} {got:.3e}"));
        }
        Ok(lines.join(", "))
    };
    Some(run())
}

fn run_demo(out: &Path, experiment: &str) -> Result<(), String> {
    let o = Command::new(bin())
        .arg("--out")
        .arg(out)
        .args(["--no-timestamp", "demo", "--experiment", experiment])
        .output()
        .map_err(|e| e.to_string())?;
    check(
        o.status.code() == Some(0),
        format!("demo {experiment} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)),
    )
}

fn criterion_7(root: &Path) -> Outcome {
    let mut files = 0;
    for exp in EXPERIMENTS {
        let (a, b) = (root.join(format!("{exp}.1")), root.join(format!("{exp}.2")));
        run_demo(&a, exp)?;
        run_demo(&b, exp)?;
        let (fa, fb) = (files_below(&a), files_below(&b));
        check(fa == fb, format!("{exp}: file lists differ"))?;
        for f in &fa {
            check(
                fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap(),
                format!("{exp}: {} differs", f.display()),
            )?;
        }
        files += fa.len();
    }
    Ok(format!("{} demos, {files} files byte-identical across reruns", EXPERIMENTS.len()))
}

fn criterion_8(root: &Path) -> Outcome {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).map_err(|e| e.to_string())?;
    let compiled = jsonschema::JSONSchema::compile(&schema).map_err(|e| e.to_string())?;
    let (mut artifacts, mut svgs) = (0, 0);
    for exp in EXPERIMENTS {
        let dir = root.join(format!("{exp}.1"));
        let text = fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
        let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        if let Err(errors) = compiled.validate(&json) {
            let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
            return Err(format!("{exp}: schema violations: {}", msgs.join("; ")));
        }
        let report: AuditReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let referenced = report.artifact_paths();
        let on_disk: Vec<String> = files_below(&dir)
            .into_iter()
            .map(|p| p.to_string_lossy().into_owned())
            .filter(|p| p != "report.json")
            .collect();
        check(
            referenced.len() == on_disk.len() && on_disk.iter().all(|p| referenced.contains(p.as_str())),
            format!("{exp}: {} referenced artifacts, {} files on disk", referenced.len(), on_disk.len()),
        )?;
        for rel in referenced {
            let path = dir.join(rel);
            check(path.is_file(), format!("{exp}: missing {rel}"))?;
            artifacts += 1;
            if rel.ends_with(".svg") {
                let body = fs::read_to_string(&path).map_err(|e| e.to_string())?;
                let doc = roxmltree::Document::parse(&body).map_err(|e| format!("{exp}: {rel}: {e}"))?;
                check(doc.root_element().has_tag_name("svg"), format!("{exp}: {rel} root is not <svg>"))?;
                svgs += 1;
            }
        }
    }
    Ok(format!("6 reports valid, {artifacts} artifacts present, {svgs} SVGs well-formed"))
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let demos = tmp.path().join("demos");
    let mut results: Vec<(String, Option<Outcome>)> = vec![
        ("1 OLS oracle".into(), Some(criterion_1())),
        ("2 Simpson demo".into(), Some(criterion_2())),
        ("3 GWR limits and discontinuity".into(), Some(criterion_3(&tmp.path().join("gwr")))),
        ("4 KDE".into(), Some(criterion_4(&tmp.path().join("kde")))),
        ("5 MAUP".into(), Some(criterion_5(&tmp.path().join("maup")))),
        ("6 3SFCA".into(), Some(criterion_6())),
        ("6 3SFCA county reference (optional)".into(), criterion_6_county()),
        ("7 determinism".into(), Some(criterion_7(&demos))),
    ];
    let c8 = criterion_8(&demos);
    results.push(("8 report integrity".into(), Some(c8)));

    let mut failed = Vec::new();
    for (name, outcome) in &results {
        match outcome {
            Some(Ok(detail)) => println!("PASS criterion {name}: {detail}"),
            Some(Err(reason)) => {
                println!("FAIL criterion {name}: {reason}");
                failed.push(name.clone());
            }
            None => println!(
                "SKIP criterion {name}: set GEOBIAS_COUNTY_DEMAND, GEOBIAS_COUNTY_FACILITIES and GEOBIAS_COUNTY_D0 to run it"
            ),
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
