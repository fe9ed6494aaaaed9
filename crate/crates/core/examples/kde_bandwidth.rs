//! Kernel density bandwidth effects: gradient directions of a small local
//! cluster against the full dataset, and false density centres that appear
//! when the bandwidth outgrows the gaps between clusters.
//!
//! Run with `cargo run --release --example kde_bandwidth`.

use geobias::data::{bounding_box, GridSpec, PointDataset, Rect};
use geobias::kde::{bandwidth_sweep, false_center_audit, gradient_divergence, gradient_field, kde_grid, silverman_bandwidth};
use geobias::synth::{gen_clusters, Seed};

fn grid_around(d: &PointDataset, pad: f64, cell: f64) -> geobias::Result<GridSpec> {
    let b = bounding_box(d)?;
    GridSpec::covering(&Rect::new(b.min_x - pad, b.min_y - pad, b.max_x + pad, b.max_y + pad)?, cell)
}

fn sweep(name: &str, centers: &[(f64, f64)]) -> geobias::Result<()> {
    let d = gen_clusters(centers, &vec![1.0; centers.len()], &vec![60; centers.len()], Seed(42))?;
    let grid = grid_around(&d, 3.0, 0.25)?;
    let s = bandwidth_sweep(&d, 0.3, 10.0, 10, &grid)?;
    let audit = false_center_audit(&s.finding, &d, 2.0)?;
    println!("{name}:");
    for (m, dist) in audit.mode_tracks.iter().zip(&audit.mode_data_distances) {
        let flag = if audit.false_center_bandwidths.contains(&m.bandwidth) { "false centre" } else { "" };
        println!("  h {:>7.3}  mode ({:>6.2}, {:>6.2})  nearest point {:>6.3}  {flag}", m.bandwidth, m.x, m.y, dist);
    }
    Ok(())
}

fn main() -> geobias::Result<()> {
    // A broad 50-point pattern that contains a tight 5-point cluster.
    let global = gen_clusters(&[(0.0, 0.0), (5.0, 5.0)], &[2.5, 0.6], &[50, 5], Seed(42))?;
    let local = global.filter_group("1");
    let (hg, hl) = (silverman_bandwidth(&global)?, silverman_bandwidth(&local)?);
    println!("Silverman bandwidth: full ({:.4}, {:.4}), local ({:.4}, {:.4})", hg.hx, hg.hy, hl.hx, hl.hy);

    let grid = grid_around(&global, 3.0, 0.25)?;
    let fg = gradient_field(&kde_grid(&global, hg, &grid)?)?;
    let fl = gradient_field(&kde_grid(&local, hl, &grid)?)?;
    let b = bounding_box(&local)?;
    let window = Rect::new(b.min_x - 1.0, b.min_y - 1.0, b.max_x + 1.0, b.max_y + 1.0)?;
    let div = gradient_divergence(&fg, &fl, &window)?;
    println!(
        "gradient angle around the local cluster: mean {:.3} rad, max {:.3} rad over {} cells\n",
        div.mean, div.max, div.cells
    );

    let h = 10.0 * 3f64.sqrt() / 2.0;
    sweep("triangle (empty centroid)", &[(0.0, 0.0), (10.0, 0.0), (5.0, h)])?;
    sweep("collinear (occupied middle)", &[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)])?;
    Ok(())
}
