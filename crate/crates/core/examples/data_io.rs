//! Reading point data, gridding it, and writing it back.
//!
//! Run with `cargo run --example data_io`.

use geobias::data::{bounding_box, load_points_csv, rasterize, write_points_csv, Aggregator, CsvSchema, GridSpec};

const CSV: &str = "\
lon,lat,income,region
0.5,0.5,31.0,west
1.5,0.5,35.5,west
0.5,1.5,29.0,west
2.5,2.5,48.0,east
3.5,2.5,51.5,east
3.9,3.9,47.0,east
";

fn main() -> geobias::Result<()> {
    let d = load_points_csv(CSV.as_bytes(), &CsvSchema::new("lon", "lat", &["income"], Some("region")))?;
    let bbox = bounding_box(&d)?;
    println!("{} records, bounds {bbox:?}", d.len());

    let grid = GridSpec::covering(&bbox, 1.0)?;
    for agg in [Aggregator::Count, Aggregator::Mean] {
        let r = rasterize(&d, "income", &grid, agg)?;
        println!("{agg:?}:");
        for row in (0..r.height()).rev() {
            let line: Vec<String> = (0..r.width())
                .map(|c| r.get(c, row).map_or("   .".into(), |v| format!("{v:>4.0}")))
                .collect();
            println!("  {}", line.join(" "));
        }
    }

    let east = d.filter_group("east");
    let mut buf = Vec::new();
    write_points_csv(&mut buf, &east)?;
    print!("east subset as CSV:\n{}", String::from_utf8_lossy(&buf));
    Ok(())
}
