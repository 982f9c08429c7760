//! Support Line versus Benjamini-Hochberg on a small hand-made sample.

use bfdr::{bh, sl, PValueSample};

fn main() -> bfdr::Result<()> {
    let sample = PValueSample::new(vec![0.0004, 0.0019, 0.0095, 0.0201, 0.0278, 0.0298, 0.0344, 0.3240, 0.4262, 0.5719, 0.6528, 0.7590, 1.0])?;
    for q in [0.05, 0.1, 0.2] {
        let s = sl(&sample, q)?;
        let b = bh(&sample, q)?;
        println!(
            "q = {q:.2}: SL rejects {:2} (threshold {:.4}), BH rejects {:2} (threshold {:.4})",
            s.r, s.threshold, b.r, b.threshold
        );
    }
    // SL rejects the hypothesis that maximises k*q/m - p_(k), the point where
    // a line of slope m/q is a support line of the sorted p-values.
    let s = sl(&sample, 0.2)?;
    println!("boundary hypothesis index: {:?}", s.boundary_index);
    Ok(())
}
