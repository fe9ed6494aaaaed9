//! Three regions, each with a positive trend, whose pooled trend is negative.
//!
//! Run with `cargo run --example simpson_paradox [OUT_DIR]`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use geobias::simpson::{detect_simpson, fit_grouped, fit_ols, parallel_coords_table, GroupKey, Normalization};
use geobias::svg::{render_parallel_coords, render_scatter, FitLine, ScatterPlot, ScatterPoint};
use geobias::synth::{gen_simpson_regions, Seed, SimpsonParams};

fn main() -> geobias::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("geobias-simpson"));
    std::fs::create_dir_all(&out).map_err(|e| geobias::Error::Internal(e.to_string()))?;

    let d = gen_simpson_regions(&SimpsonParams::default(), Seed(42))?;
    let (xs, ys) = (d.column("var1")?, d.column("var2")?);
    let pooled = fit_ols(&xs, &ys)?;
    let groups = fit_grouped(&d, "var1", "var2", &GroupKey::Label)?;

    println!("{:<8} {:>8} {:>10} {:>6}", "group", "slope", "p", "r2");
    for (g, f) in &groups {
        println!("{g:<8} {:>8.4} {:>10.3e} {:>6.3}", f.slope, f.p_value, f.r2);
    }
    println!("{:<8} {:>8.4} {:>10.3e} {:>6.3}", "pooled", pooled.slope, pooled.p_value, pooled.r2);

    let finding = detect_simpson(&pooled, &groups, 0.05)?;
    println!("verdict: {}", finding.kind.name());

    let names: Vec<String> = groups.keys().cloned().collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let plot = ScatterPlot {
        title: "var2 against var1".into(),
        x_label: "var1".into(),
        y_label: "var2".into(),
        points: d
            .records()
            .iter()
            .zip(xs.iter().zip(&ys))
            .map(|(r, (&x, &y))| ScatterPoint {
                x,
                y,
                group: r.group.as_deref().and_then(|g| index.get(g).copied()),
            })
            .collect(),
        group_lines: groups
            .iter()
            .map(|(g, f)| FitLine {
                slope: f.slope,
                intercept: f.intercept,
                group: index.get(g.as_str()).copied(),
                label: g.clone(),
            })
            .collect(),
        pooled_line: Some(FitLine {
            slope: pooled.slope,
            intercept: pooled.intercept,
            group: None,
            label: "pooled".into(),
        }),
        group_names: names,
    };
    let write = |name: &str, bytes: Vec<u8>| std::fs::write(out.join(name), bytes).map_err(|e| geobias::Error::Internal(e.to_string()));
    write("scatter.svg", render_scatter(&plot)?)?;

    let table = parallel_coords_table(&d, &["x", "y", "var1", "var2"], Normalization::MinMax)?;
    write("parallel_coords.svg", render_parallel_coords(&table, "x, y, var1, var2")?)?;
    println!("figures in {}", out.display());
    Ok(())
}
