//! Every packaged experiment end to end, each producing a `report.json` and
//! its figures, with a JSON config layered over the defaults.
//!
//! Run with `cargo run --release --example full_audit [OUT_DIR]`.

use std::path::PathBuf;

use geobias::pipeline::{run_demo, AuditConfig, Experiment};

fn main() -> geobias::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("geobias-full-audit"));
    let cfg = AuditConfig::from_json(r#"{ "seed": 42, "maup": { "q": 0.25 }, "access": { "d0": 8.0 } }"#)?;
    for e in Experiment::ALL {
        let report = run_demo(e, &cfg, &out.join(e.name()), false)?;
        for f in &report.findings {
            println!("{:<11} {:<24} {:?} ({} artifacts)", e.name(), f.kind, f.severity, f.artifacts.len());
        }
    }
    println!("reports under {}", out.display());
    Ok(())
}
