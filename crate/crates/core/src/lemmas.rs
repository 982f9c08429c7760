//! Executable property checks behind the bFDR control results.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_level, Error, Result};
use crate::lfdr::MeanConfig;
use crate::mc::{in_pool, Estimate};
use crate::procedures::support_rank;
use crate::sample::{order_values, PValueSample};
use crate::simgen::{sample_pvalues, stream_rng, SimConfig};

fn sl_rank(values: &[f64], q: f64) -> (usize, Option<usize>) {
    let ordered = order_values(values);
    let r = support_rank(&ordered, q, values.len() as f64, None);
    let boundary = (r > 0).then(|| ordered.permutation()[r - 1]);
    (r, boundary)
}

/// Probability that a uniform `p_m`, appended to `fixed_others`, is the SL
/// boundary hypothesis. The expected answer is `q / m` for `q <= 1`.
pub fn lemma_sl_key_check(fixed_others: &PValueSample, q: f64, n_reps: u64, seed: u64, workers: Option<usize>) -> Result<Estimate> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Validation(format!("q must lie in (0, 1], got {q}")));
    }
    if n_reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let m = fixed_others.len() + 1;
    let hits = in_pool(workers, || {
        (0..n_reps)
            .into_par_iter()
            .filter(|&rep| {
                let mut values = fixed_others.values().to_vec();
                values.push(stream_rng(seed, rep).random::<f64>());
                sl_rank(&values, q).1 == Some(m - 1)
            })
            .count() as u64
    })?;
    Ok(Estimate::proportion(hits, n_reps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PToOneReport {
    pub instances: u64,
    /// Instances where `p_m` exceeded the stage-1 threshold.
    pub applicable: u64,
    pub violations: u64,
}

/// Random p-value vector for instance `i`: either a Gaussian design or an
/// unstructured mix of uniforms, small values, exact ties and ones.
fn random_instance(seed: u64, i: u64) -> (Vec<f64>, f64) {
    let mut rng = stream_rng(seed, i);
    let q = rng.random_range(0.01..0.6);
    if rng.random_bool(0.5) {
        let m = 16 * rng.random_range(1..=4usize);
        let pi0 = [0.25, 0.5, 0.75, 1.0][rng.random_range(0..4)];
        let kind = if rng.random_bool(0.5) { MeanConfig::Alternating } else { MeanConfig::AllAt5 };
        let rho = [0.0, 0.0, 0.3, 0.8][rng.random_range(0..4)];
        let sim = SimConfig::new(m, pi0, kind).with_rho(rho).with_seed(rng.random());
        let values = sample_pvalues(&sim, 0).expect("grid designs are valid").values().to_vec();
        (values, q)
    } else {
        let m = rng.random_range(1..=64usize);
        let values = (0..m)
            .map(|_| match rng.random_range(0..10) {
                0 => 1.0,
                1 => 0.5,
                2..=4 => rng.random::<f64>().powi(6),
                _ => rng.random::<f64>(),
            })
            .collect();
        (values, q)
    }
}

/// Replacing `p_m` by 1 leaves the stage-1 rank unchanged whenever `p_m`
/// lies above the stage-1 threshold. Counts violations over random instances.
pub fn lemma_p_to_one_check(n_instances: u64, seed: u64, workers: Option<usize>) -> Result<PToOneReport> {
    let outcomes: Vec<(bool, bool)> = in_pool(workers, || {
        (0..n_instances)
            .into_par_iter()
            .map(|i| {
                let (mut values, q) = random_instance(seed, i);
                let m = values.len();
                let (r1, _) = sl_rank(&values, q);
                let ordered = order_values(&values);
                let threshold = ordered.at_rank(r1);
                if values[m - 1] <= threshold {
                    return (false, false);
                }
                values[m - 1] = 1.0;
                (true, sl_rank(&values, q).0 != r1)
            })
            .collect()
    })?;
    Ok(PToOneReport {
        instances: n_instances,
        applicable: outcomes.iter().filter(|o| o.0).count() as u64,
        violations: outcomes.iter().filter(|o| o.1).count() as u64,
    })
}

/// `q m0 / (m - R1(1))` for one sample, where `R1(1)` is the SL rank with the
/// last p-value replaced by 1.
pub fn expectation_term(sample: &PValueSample, q: f64, m0: usize) -> Result<f64> {
    check_level("q", q)?;
    sample.ensure_nonempty()?;
    let mut values = sample.values().to_vec();
    let m = values.len();
    *values.last_mut().expect("non-empty") = 1.0;
    let (r1, _) = sl_rank(&values, q);
    // p_m = 1 is rejected only if everything is, which needs q = 1.
    debug_assert!(r1 < m);
    Ok(q * m0 as f64 / (m - r1) as f64)
}

/// Monte Carlo mean of `q m0 / (m - R1(1))`; bounded by `q / (1 - q)`.
pub fn expectation_bound_check(sim: &SimConfig, q: f64, n_reps: u64, workers: Option<usize>) -> Result<Estimate> {
    sim.validate()?;
    check_level("q", q)?;
    if n_reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let m0 = sim.null_count();
    let values = in_pool(workers, || {
        (0..n_reps)
            .into_par_iter()
            .map(|rep| expectation_term(&sample_pvalues(sim, rep)?, q, m0))
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(Estimate::mean(&values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sl_key_single_hypothesis() {
        let empty = PValueSample::new(vec![]).unwrap();
        let est = lemma_sl_key_check(&empty, 0.2, 20_000, 1, None).unwrap();
        assert!(est.within(0.2, 3.0), "{est:?}");
    }

    #[test]
    fn sl_key_all_zero_others() {
        let zeros = PValueSample::new(vec![0.0; 15]).unwrap();
        let est = lemma_sl_key_check(&zeros, 0.2, 20_000, 2, None).unwrap();
        assert!(est.estimate <= 0.2 / 16.0 + 3.0 * est.se, "{est:?}");
        assert!(lemma_sl_key_check(&zeros, 0.0, 10, 2, None).is_err());
        assert!(lemma_sl_key_check(&zeros, 1.0, 10, 2, None).is_ok());
    }

    #[test]
    fn p_to_one_small_run() {
        let report = lemma_p_to_one_check(2_000, 4, None).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.applicable > 500);
    }

    #[test]
    fn expectation_term_degenerate_cases() {
        let ones = PValueSample::new(vec![1.0; 8]).unwrap();
        assert_eq!(expectation_term(&ones, 0.2, 8).unwrap(), 0.2);
        assert_eq!(expectation_term(&ones, 0.2, 6).unwrap(), 0.2 * 6.0 / 8.0);
        let alt = SimConfig::new(16, 0.0, MeanConfig::Alternating);
        let est = expectation_bound_check(&alt, 0.2, 50, None).unwrap();
        assert_eq!(est.estimate, 0.0);
    }

    #[test]
    fn expectation_bound_worker_invariant() {
        let sim = SimConfig::new(32, 0.5, MeanConfig::Alternating).with_seed(6);
        let a = expectation_bound_check(&sim, 0.2, 300, Some(1)).unwrap();
        let b = expectation_bound_check(&sim, 0.2, 300, Some(3)).unwrap();
        assert_eq!(a, b);
    }
}
