//! Local false discovery rate machinery.
//!
//! The Grenander estimator is the left derivative of the least concave
//! majorant (LCM) of the empirical CDF on `[0, 1]`. It is computed as the
//! upper convex hull of the ECDF knots, anchored at `(0, 0)` and `(1, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_level, Error, Result};
use crate::normal;
use crate::sample::PValueSample;

/// Piecewise-constant non-increasing density on `[0, 1]`.
///
/// `heights[j]` applies on `(knots[j], knots[j + 1]]`; the first interval
/// also covers `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneDensity {
    knots: Vec<f64>,
    heights: Vec<f64>,
}

impl MonotoneDensity {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn total_mass(&self) -> f64 {
        self.heights
            .iter()
            .zip(self.knots.windows(2))
            .map(|(h, w)| h * (w[1] - w[0]))
            .sum()
    }

    /// Height of the interval containing `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("density argument {t}")));
        }
        // First interval whose right end is >= t.
        let j = self.knots[1..].partition_point(|&k| k < t);
        Ok(self.heights[j.min(self.heights.len() - 1)])
    }

    /// Value of the integrated density (the LCM itself) at `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (h, w) in self.heights.iter().zip(self.knots.windows(2)) {
            if t <= w[0] {
                break;
            }
            acc += h * (t.min(w[1]) - w[0]);
        }
        acc
    }
}

/// Grenander fit of a p-value sample.
///
/// P-values equal to 0 are absorbed into the first interval, since the fit
/// is anchored at `(0, 0)`.
pub fn grenander_fit(sample: &PValueSample) -> Result<MonotoneDensity> {
    if sample.is_empty() {
        return Err(Error::Validation("Grenander fit needs at least one p-value".into()));
    }
    let mut sorted = sample.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated p-values"));
    let m = sorted.len() as f64;

    let mut points: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for (i, &p) in sorted.iter().enumerate() {
        let last_of_group = sorted.get(i + 1).is_none_or(|&next| next > p);
        if p > 0.0 && last_of_group {
            points.push((p, (i + 1) as f64 / m));
        }
    }
    if points.last().is_some_and(|&(x, _)| x < 1.0) {
        points.push((1.0, 1.0));
    }

    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &c in &points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }

    let heights = hull
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    Ok(MonotoneDensity {
        knots: hull.iter().map(|p| p.0).collect(),
        heights,
    })
}

pub fn density_eval(d: &MonotoneDensity, t: f64) -> Result<f64> {
    d.eval(t)
}

/// `pi0 / f(t)`; `+inf` where the density vanishes.
pub fn lfdr_hat(pi0: f64, d: &MonotoneDensity, t: f64) -> Result<f64> {
    let f = d.eval(t)?;
    Ok(if f > 0.0 { pi0 / f } else { f64::INFINITY })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MeanConfig {
    /// Non-null means cycle through 5/4, 10/4, 15/4, 5.
    Alternating,
    /// Every non-null mean equals 5.
    #[value(name = "all-at-5", alias = "all_at_5")]
    AllAt5,
}

impl MeanConfig {
    /// Distinct non-null means, each carrying equal weight.
    pub fn alternative_means(self) -> &'static [f64] {
        match self {
            MeanConfig::Alternating => &[1.25, 2.5, 3.75, 5.0],
            MeanConfig::AllAt5 => &[5.0],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeanConfig::Alternating => "alternating",
            MeanConfig::AllAt5 => "all_at_5",
        }
    }
}

/// A one-sided Gaussian two-groups mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltConfig {
    pub kind: MeanConfig,
    pub pi0: f64,
}

impl AltConfig {
    pub fn new(kind: MeanConfig, pi0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::Config(format!("pi0 must lie in [0, 1], got {pi0}")));
        }
        Ok(Self { kind, pi0 })
    }

    /// Average non-null density of the p-value at upper-quantile `z`,
    /// using `phi(z - mu) / phi(z) = exp(mu z - mu^2 / 2)`.
    pub(crate) fn alt_density_ratio(&self, z: f64) -> f64 {
        let means = self.kind.alternative_means();
        means.iter().map(|&mu| (mu * z - 0.5 * mu * mu).exp()).sum::<f64>() / means.len() as f64
    }

    /// Average non-null CDF of the p-value at `t`.
    pub(crate) fn alt_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let z = normal::upper_quantile(t);
        let means = self.kind.alternative_means();
        means.iter().map(|&mu| normal::cdf(mu - z)).sum::<f64>() / means.len() as f64
    }
}

/// True local fdr of the mixture at p-value `t`.
pub fn true_lfdr(config: &AltConfig, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("lfdr argument {t}")));
    }
    let pi0 = config.pi0;
    if pi0 == 0.0 {
        return Ok(0.0);
    }
    let ratio = config.alt_density_ratio(normal::upper_quantile(t));
    Ok(pi0 / (pi0 + (1.0 - pi0) * ratio))
}

/// The `t*` in `(0, 1)` with `true_lfdr(t*) = q`, by bisection.
pub fn oracle_threshold(config: &AltConfig, q: f64) -> Result<f64> {
    check_level("q", q)?;
    if !(config.pi0 > 0.0 && config.pi0 < 1.0) {
        return Err(Error::NoRoot(format!(
            "lfdr is constant when pi0 = {}",
            config.pi0
        )));
    }
    // lfdr increases from 0 (t -> 0) to 1 (t -> 1), so a root always exists.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if true_lfdr(config, mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if lo > 0.0 { lo } else { hi };
    let gap = (true_lfdr(config, t)? - q).abs();
    if gap > 1e-8 {
        return Err(Error::NoRoot(format!("bisection stalled with |lfdr - q| = {gap:e}")));
    }
    Ok(t)
}

fn check_sellke_domain(t: f64) -> Result<()> {
    if t > 0.0 && t < (-1.0f64).exp() {
        Ok(())
    } else {
        Err(Error::Domain(format!("calibration argument {t} (needs 0 < t < 1/e)")))
    }
}

/// `t log(1/t) / (e^-1 + t log(1/t))`, for `0 < t < 1/e`.
pub fn sellke_alpha(t: f64) -> Result<f64> {
    check_sellke_domain(t)?;
    let b = -t * t.ln();
    Ok(b / ((-1.0f64).exp() + b))
}

/// Calibration with prior odds `(1 - pi0) / pi0` in place of even odds.
pub fn sellke_alpha_pi0(t: f64, pi0_hat: f64) -> Result<f64> {
    check_sellke_domain(t)?;
    if !(pi0_hat > 0.0 && pi0_hat < 1.0) {
        return Err(Error::Domain(format!("null proportion {pi0_hat}")));
    }
    let b = -t * t.ln();
    Ok(b / ((-1.0f64).exp() * ((1.0 - pi0_hat) / pi0_hat) + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pi0::storey_pi0;
    use crate::procedures::{sl_plugin, PluginPolicy};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(v: &[f64]) -> PValueSample {
        PValueSample::new(v.to_vec()).unwrap()
    }

    /// LCM of the ECDF points by brute force: at each knot, the largest value
    /// of any chord spanning it.
    fn brute_lcm(values: &[f64]) -> Vec<(f64, f64)> {
        let m = values.len() as f64;
        let mut xs: Vec<f64> = values.iter().copied().filter(|&p| p > 0.0).collect();
        xs.push(0.0);
        xs.push(1.0);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| {
                let y = if x == 0.0 { 0.0 } else { values.iter().filter(|&&p| p <= x).count() as f64 / m };
                (x, y)
            })
            .collect();
        pts.iter()
            .map(|&(x, y)| {
                let mut best = y;
                for a in &pts {
                    for b in &pts {
                        if a.0 < x && x < b.0 {
                            best = best.max(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0));
                        }
                    }
                }
                (x, best)
            })
            .collect()
    }

    #[test]
    fn grenander_examples() {
        let d = grenander_fit(&sample(&[0.25, 0.75])).unwrap();
        assert_eq!(d.knots(), &[0.0, 0.25, 0.75, 1.0]);
        assert_eq!(d.heights(), &[2.0, 1.0, 0.0]);

        let d = grenander_fit(&sample(&[0.5])).unwrap();
        assert_eq!(d.knots(), &[0.0, 0.5, 1.0]);
        assert_eq!(d.heights(), &[2.0, 0.0]);

        assert!(grenander_fit(&sample(&[])).is_err());
    }

    #[test]
    fn density_eval_examples() {
        let d = grenander_fit(&sample(&[0.25, 0.75])).unwrap();
        assert_eq!(d.eval(0.1).unwrap(), 2.0);
        assert_eq!(d.eval(0.0).unwrap(), 2.0);
        assert_eq!(d.eval(0.25).unwrap(), 2.0);
        assert_eq!(d.eval(0.5).unwrap(), 1.0);
        assert_eq!(d.eval(1.0).unwrap(), 0.0);
        assert!(d.eval(1.1).is_err());
        assert!(d.eval(-0.1).is_err());
    }

    #[test]
    fn lfdr_hat_examples() {
        let d = grenander_fit(&sample(&[0.25, 0.75])).unwrap();
        assert_eq!(lfdr_hat(1.0, &d, 0.1).unwrap(), 0.5);
        assert_eq!(lfdr_hat(0.5, &d, 0.5).unwrap(), 0.5);
        assert_eq!(lfdr_hat(0.5, &d, 0.9).unwrap(), f64::INFINITY);
    }

    #[test]
    fn grenander_matches_brute_force_lcm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m = rng.random_range(1..=8);
            let values: Vec<f64> = (0..m)
                .map(|_| if rng.random_bool(0.1) { 0.5 } else { rng.random::<f64>() })
                .collect();
            let d = grenander_fit(&sample(&values)).unwrap();
            assert!((d.total_mass() - 1.0).abs() <= 1e-10);
            assert!(d.heights().windows(2).all(|w| w[0] >= w[1] - 1e-12));
            let lcm = brute_lcm(&values);
            for &(x, y) in &lcm {
                assert!((d.cdf(x) - y).abs() < 1e-9, "{values:?} at {x}: {} vs {y}", d.cdf(x));
            }
            for w in lcm.windows(2) {
                let mid = 0.5 * (w[0].0 + w[1].0);
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                assert!((d.eval(mid).unwrap() - slope).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn grenander_is_close_to_uniform_for_uniform_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 200;
        let mut close = 0;
        for _ in 0..trials {
            let values: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            let d = grenander_fit(&sample(&values)).unwrap();
            // Grenander is inconsistent at both boundaries, so the sup is
            // taken over [0.2, 0.8].
            let dev = (20..=80)
                .map(|i| (d.eval(i as f64 / 100.0).unwrap() - 1.0).abs())
                .fold(0.0, f64::max);
            if dev < 0.2 {
                close += 1;
            }
        }
        assert!(close as f64 / trials as f64 >= 0.99, "{close}/{trials}");
    }

    #[test]
    fn true_lfdr_examples() {
        let all_null = AltConfig::new(MeanConfig::Alternating, 1.0).unwrap();
        assert_eq!(true_lfdr(&all_null, 0.3).unwrap(), 1.0);
        let no_null = AltConfig::new(MeanConfig::AllAt5, 0.0).unwrap();
        assert_eq!(true_lfdr(&no_null, 0.3).unwrap(), 0.0);
        let alt = AltConfig::new(MeanConfig::Alternating, 0.75).unwrap();
        assert_relative_eq!(true_lfdr(&alt, 0.05).unwrap(), 0.641_802_007, epsilon = 1e-8);
        assert!(true_lfdr(&alt, 0.0).is_err());
        assert!(true_lfdr(&alt, 1.0).is_err());
    }

    #[test]
    fn true_lfdr_increases() {
        for kind in [MeanConfig::Alternating, MeanConfig::AllAt5] {
            let c = AltConfig::new(kind, 0.6).unwrap();
            let vals: Vec<f64> = (1..2000).map(|i| true_lfdr(&c, i as f64 / 2000.0).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn oracle_threshold_examples() {
        for pi0 in [0.0, 1.0] {
            let c = AltConfig::new(MeanConfig::Alternating, pi0).unwrap();
            assert!(matches!(oracle_threshold(&c, 0.2), Err(Error::NoRoot(_))));
        }
        let c = AltConfig::new(MeanConfig::Alternating, 0.75).unwrap();
        let t = oracle_threshold(&c, 0.2).unwrap();
        assert!((true_lfdr(&c, t).unwrap() - 0.2).abs() <= 1e-8);
        // brentq reference 0.005725921437521404
        assert_relative_eq!(t, 0.005_725_921_437_5, epsilon = 1e-10);
    }

    #[test]
    fn sellke_examples() {
        assert_relative_eq!(sellke_alpha(0.05).unwrap(), 0.289_3, epsilon = 5e-4);
        let edge = (-1.0f64).exp() - 1e-8;
        assert!((sellke_alpha(edge).unwrap() - 0.5).abs() < 1e-6);
        assert!(sellke_alpha(1e-300).unwrap() < 1e-290);
        assert!(sellke_alpha(0.0).is_err());
        assert!(sellke_alpha(0.4).is_err());

        assert_relative_eq!(sellke_alpha_pi0(0.05, 0.75).unwrap(), 0.550, epsilon = 1e-3);
        assert!(sellke_alpha_pi0(0.05, 1.0 - 1e-12).unwrap() > 1.0 - 1e-9);
        assert!(sellke_alpha_pi0(0.05, 1.0).is_err());
        for i in 1..36 {
            let t = i as f64 / 100.0;
            assert!((sellke_alpha_pi0(t, 0.5).unwrap() - sellke_alpha(t).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn sellke_increases() {
        let e = (-1.0f64).exp();
        let vals: Vec<f64> = (1..1000).map(|i| sellke_alpha(e * i as f64 / 1000.0).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn estimated_lfdr_at_capped_cutoff_is_at_most_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let m = rng.random_range(5..80);
            let values: Vec<f64> = (0..m)
                .map(|_| if rng.random_bool(0.4) { rng.random::<f64>().powi(6) } else { rng.random::<f64>() })
                .collect();
            let s = sample(&values);
            let est = storey_pi0(&s, 0.5).unwrap();
            let out = sl_plugin(&s, 0.2, &est, &PluginPolicy::default()).unwrap();
            if out.r == 0 {
                continue;
            }
            let d = grenander_fit(&s).unwrap();
            assert!(lfdr_hat(est.value, &d, out.threshold).unwrap() <= 0.2 + 1e-9);
        }
    }
}
