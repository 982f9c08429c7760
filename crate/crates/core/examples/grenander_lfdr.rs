//! Grenander density fit and the estimated lfdr, next to the true lfdr.

use bfdr::{grenander_fit, lfdr_hat, sample_pvalues, true_lfdr, MeanConfig, SimConfig};

fn main() -> bfdr::Result<()> {
    let sim = SimConfig::new(1024, 0.75, MeanConfig::Alternating).with_seed(3);
    let sample = sample_pvalues(&sim, 0)?;
    let fit = grenander_fit(&sample)?;
    println!("{} knots, total mass {:.6}", fit.knots().len(), fit.total_mass());
    let truth = sim.alt_config();
    println!("{:>8} {:>10} {:>10}", "t", "lfdr_hat", "lfdr");
    for t in [0.0005, 0.001, 0.005, 0.01, 0.05, 0.1] {
        println!("{t:>8} {:>10.4} {:>10.4}", lfdr_hat(sim.pi0, &fit, t)?, true_lfdr(&truth, t)?);
    }
    Ok(())
}
