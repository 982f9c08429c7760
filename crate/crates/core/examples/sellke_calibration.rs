//! Sellke calibration of p-values into posterior-style error probabilities.

use bfdr::report::{alpha_pi0_cutoff, calibration_curve};

fn main() -> bfdr::Result<()> {
    let grid = [0.001, 0.005, 0.01, 0.05, 0.1, 0.3];
    for row in calibration_curve(&grid, 0.75, None)? {
        println!("t = {:<6} alpha = {:.4}  alpha_0.75 = {:.4}", row.t, row.alpha, row.alpha_pi0);
    }
    for q in [0.1, 0.2] {
        println!("alpha_0.75 reaches {q} at t = {:?}", alpha_pi0_cutoff(q, 0.75)?);
    }
    Ok(())
}
