//! Small-scale Monte Carlo checks of the structural properties of SL.

use bfdr::lemmas::{expectation_bound_check, lemma_p_to_one_check, lemma_sl_key_check};
use bfdr::{sample_pvalues, MeanConfig, SimConfig};

fn main() -> bfdr::Result<()> {
    let others = sample_pvalues(&SimConfig::new(63, 1.0, MeanConfig::Alternating).with_seed(2), 0)?;
    let key = lemma_sl_key_check(&others, 0.2, 20_000, 2, None)?;
    println!("P(last p-value is the boundary) = {:.5} +/- {:.5}, target {}", key.estimate, key.se, 0.2 / 64.0);

    let p1 = lemma_p_to_one_check(5_000, 2, None)?;
    println!("p-to-one: {} violations in {} applicable instances", p1.violations, p1.applicable);

    let sim = SimConfig::new(64, 0.75, MeanConfig::Alternating).with_seed(2);
    let e = expectation_bound_check(&sim, 0.2, 2_000, None)?;
    println!("expectation term {:.4} +/- {:.4}, bound {:.4}", e.estimate, e.se, 0.2 / 0.8);
    Ok(())
}
