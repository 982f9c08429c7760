//! Standard normal helpers. Tail functions are computed through `erfc` so
//! that tiny upper-tail probabilities keep full relative precision.

use std::f64::consts::SQRT_2;

use statrs::function::erf::{erfc, erfc_inv};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `1 - Phi(x)`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `Phi^{-1}(p)` for `p` in `[0, 1]`.
pub fn quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `Phi^{-1}(1 - t)`, accurate for small `t`.
pub fn upper_quantile(t: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_relative_eq!(cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-11);
        assert_relative_eq!(upper_quantile(0.05), 1.644_853_626_951_472_2, epsilon = 1e-12);
        assert_relative_eq!(sf(8.0), 6.220_960_574_271_785e-16, max_relative = 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert_relative_eq!(cdf(quantile(p)), p, max_relative = 1e-10);
            assert_relative_eq!(sf(upper_quantile(p)), p, max_relative = 1e-10);
        }
    }
}
