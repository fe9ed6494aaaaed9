//! How much a "top 25 %" map depends on the zoning used to build it.
//!
//! Run with `cargo run --release --example maup_consistency`.

use geobias::maup::{make_block_partition, maup_audit, ConsistencyClass};
use geobias::synth::{gen_random_surface, Seed};

fn main() -> geobias::Result<()> {
    let surface = gen_random_surface(100, 25, Seed(42))?;
    let sides = [5, 10, 20, 25];
    let partitions = sides
        .iter()
        .map(|&s| make_block_partition(&surface.spec, s, (0, 0)))
        .collect::<geobias::Result<Vec<_>>>()?;
    let f = maup_audit(&surface, &partitions, 0.25, 10.0)?;
    for ((side, n), t) in sides.iter().zip(&f.zone_counts).zip(&f.thresholds) {
        println!("blocks of {side:>2}: {n:>4} zones, top-quantile threshold {t:.4}");
    }
    for class in [ConsistencyClass::Unanimous, ConsistencyClass::StrongMajority, ConsistencyClass::Split] {
        println!("{class:?}: {:.2}", f.report.fraction(class));
    }
    println!("severity: {:?}", f.severity);

    let shifted = [(0, 0), (5, 5)]
        .iter()
        .map(|&o| make_block_partition(&surface.spec, 10, o))
        .collect::<geobias::Result<Vec<_>>>()?;
    let g = maup_audit(&surface, &shifted, 0.25, 10.0)?;
    println!(
        "same block size, shifted by half a block: unanimous {:.2}",
        g.report.fraction(ConsistencyClass::Unanimous)
    );
    Ok(())
}
