//! Three-step floating catchment accessibility on a synthetic county, with
//! group averages compared against the overall mean.
//!
//! Run with `cargo run --release --example access_disparity`.

use geobias::access::{disparity_audit, group_specific_access, stratified_accessibility, three_sfca, DecaySpec, Population};
use geobias::synth::{gen_county, CountyParams, Seed};

fn main() -> geobias::Result<()> {
    let (demand, facilities) = gen_county(&CountyParams::default(), Seed(42))?;
    let spec = DecaySpec::with_radius(8.0)?;
    let total = three_sfca(&demand, &facilities, &spec, &Population::Total)?;
    let supply: f64 = facilities.iter().map(|f| f.supply).sum();
    let served: f64 = demand.iter().zip(&total.a).map(|(s, a)| s.pop_total * a).sum();
    println!("supply {supply:.4}, population-weighted accessibility {served:.4}");
    println!("{} of {} sites reach no facility", total.unreached_sites, demand.len());

    let strat = stratified_accessibility(&total, &demand)?;
    let audit = disparity_audit(&strat, 0.95)?;
    println!("overall mean {:.6}", strat.overall_mean);
    for (g, m) in &strat.group_means {
        let own = group_specific_access(&demand, &facilities, &spec, g)?;
        let own_max = own.a.iter().copied().fold(0.0, f64::max);
        println!(
            "group {g}: mean {:.6}  ratio {:.3}  group-only peak {own_max:.6}",
            m.unwrap_or(f64::NAN),
            audit.ratios.get(g).copied().unwrap_or(f64::NAN)
        );
    }
    println!("flagged below 0.95 of the overall mean: {:?}", audit.flagged_groups);
    Ok(())
}
