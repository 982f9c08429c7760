//! Null-proportion estimators on one simulated sample.

use bfdr::{adaptive_storey_pi0, lsl_pi0, sample_pvalues, storey_pi0, MeanConfig, SimConfig};

fn main() -> bfdr::Result<()> {
    let sim = SimConfig::new(256, 0.75, MeanConfig::Alternating).with_seed(11);
    let sample = sample_pvalues(&sim, 0)?;
    println!("true pi0 = {}", sim.pi0);
    for lambda in [0.2, 0.5] {
        println!("Storey({lambda}): {:.3}", storey_pi0(&sample, lambda)?.value);
    }
    println!("LSL: {:.3}", lsl_pi0(&sample)?.value);
    for (delta, start) in [(0.1, 0.2), (0.01, 0.5)] {
        let est = adaptive_storey_pi0(&sample, delta, start)?;
        println!("AS({delta};{start}): {:.3} at lambda = {:?}", est.value, est.lambda_hat);
    }
    Ok(())
}
