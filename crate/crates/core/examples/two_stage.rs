//! Two-stage Support Line: the first stage estimates pi0, the second re-runs
//! SL at q / pi0_hat.

use bfdr::{sample_pvalues, tssl, tst, MeanConfig, SimConfig};

fn main() -> bfdr::Result<()> {
    let sim = SimConfig::new(64, 0.5, MeanConfig::Alternating).with_seed(7);
    let sample = sample_pvalues(&sim, 0)?;
    let q = 0.2;
    let q_prime = q / (1.0 + q);
    for (label, level) in [("q", q), ("q'", q_prime)] {
        let out = tssl(&sample, level)?;
        let trace = out.stage_trace.as_ref().expect("two-stage trace");
        println!(
            "TSSL({label}): stage 1 rejects {:?}, pi0_hat = {:.3}, final r = {}",
            trace.first_stage,
            trace.pi0.unwrap_or(f64::NAN),
            out.r
        );
    }
    let bh_version = tst(&sample, q_prime)?;
    println!("TST(q'): r = {}", bh_version.r);
    Ok(())
}
