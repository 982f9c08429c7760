//! Power relative to the oracle over a small (pi0, m) grid.

use bfdr::mc::power_heatmap;
use bfdr::{standard_roster, Family, McOptions, MeanConfig, SimConfig};

fn main() -> bfdr::Result<()> {
    let base = SimConfig::new(64, 0.5, MeanConfig::Alternating).with_seed(9);
    let roster: Vec<_> = standard_roster(Family::Sl, 0.2)
        .into_iter()
        .filter(|p| ["SL", "TSSL(q)", "Storey(1/2)", "Oracle"].contains(&p.name().as_str()))
        .collect();
    let table = power_heatmap(&base, &[0.25, 0.75], &[16, 128], &roster, &McOptions::with_reps(1000))?;
    for r in table.rows.iter().filter(|r| r.procedure != "Oracle") {
        println!(
            "{:<12} pi0 = {:.2} m = {:>3}: relative power {}",
            r.procedure,
            r.pi0,
            r.m,
            r.relative_power.map_or("n/a".into(), |v| format!("{v:.3}"))
        );
    }
    Ok(())
}
