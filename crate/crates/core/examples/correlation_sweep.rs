//! bFDR under equicorrelated test statistics.

use bfdr::mc::corr_sweep;
use bfdr::{standard_roster, Family, McOptions, MeanConfig, SimConfig};

fn main() -> bfdr::Result<()> {
    let sim = SimConfig::new(64, 0.75, MeanConfig::Alternating).with_seed(5);
    let roster: Vec<_> = standard_roster(Family::Sl, 0.2)
        .into_iter()
        .filter(|p| ["SL", "Storey(1/2)", "Storey(q)"].contains(&p.name().as_str()))
        .collect();
    let table = corr_sweep(&sim, &[0.0, 0.5, 1.0], &roster, &McOptions::with_reps(2000))?;
    for r in &table.rows {
        println!("{:<12} rho = {:.2}: bFDR {:.4} (se {:.4})", r.procedure, r.rho, r.bfdr_hat, r.bfdr_se);
    }
    Ok(())
}
