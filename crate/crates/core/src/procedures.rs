//! Rejection procedures: Support Line (SL), Benjamini-Hochberg (BH), their
//! two-stage versions, and plug-in variants that divide the level by an
//! estimated null proportion.
//!
//! All argmax/argmin searches break exact ties toward the largest rank.

use serde::{Deserialize, Serialize};

use crate::error::{check_level, Result};
use crate::pi0::Pi0Estimate;
use crate::sample::{order_sample, outcome_from_rank, OrderedSample, PValueSample, RejectionOutcome, StageTrace};

/// Which ranks a plug-in SL may choose from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainCap {
    /// Only ranks with `p_(k) <= q` (plus rank 0).
    #[default]
    CapAtQ,
    Uncapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluginPolicy {
    pub domain_cap: DomainCap,
    /// Lower bound applied to the estimate before dividing by it.
    pub pi0_floor: f64,
}

impl Default for PluginPolicy {
    fn default() -> Self {
        Self {
            domain_cap: DomainCap::CapAtQ,
            pi0_floor: 1e-12,
        }
    }
}

impl PluginPolicy {
    pub fn uncapped() -> Self {
        Self {
            domain_cap: DomainCap::Uncapped,
            ..Self::default()
        }
    }

    fn floored(&self, pi0: f64) -> f64 {
        pi0.max(self.pi0_floor)
    }
}

/// Largest maximizer of `level * k / denom - p_(k)` over `k = 0..=m`,
/// optionally restricted to ranks with `p_(k) <= cap`.
pub(crate) fn support_rank(ordered: &OrderedSample, level: f64, denom: f64, cap: Option<f64>) -> usize {
    let mut best = 0.0;
    let mut best_k = 0;
    for (i, &p) in ordered.sorted().iter().enumerate() {
        if cap.is_some_and(|c| p > c) {
            break;
        }
        let k = i + 1;
        let objective = level * k as f64 / denom - p;
        if objective >= best {
            best = objective;
            best_k = k;
        }
    }
    best_k
}

/// Largest `k` with `p_(k) <= level * k / m`, or 0.
pub(crate) fn step_up_rank(ordered: &OrderedSample, level: f64) -> usize {
    let m = ordered.len() as f64;
    ordered
        .sorted()
        .iter()
        .enumerate()
        .rev()
        .find(|&(i, &p)| p <= level * (i + 1) as f64 / m)
        .map_or(0, |(i, _)| i + 1)
}

fn checked(sample: &PValueSample, name: &str, level: f64) -> Result<OrderedSample> {
    sample.ensure_nonempty()?;
    check_level(name, level)?;
    Ok(order_sample(sample))
}

/// Support Line procedure at level `q`.
pub fn sl(sample: &PValueSample, q: f64) -> Result<RejectionOutcome> {
    let ordered = checked(sample, "q", q)?;
    sl_ordered(&ordered, q)
}

pub(crate) fn sl_ordered(ordered: &OrderedSample, q: f64) -> Result<RejectionOutcome> {
    let r = support_rank(ordered, q, ordered.len() as f64, None);
    outcome_from_rank(ordered, r)
}

/// Benjamini-Hochberg step-up at level `q`.
pub fn bh(sample: &PValueSample, q: f64) -> Result<RejectionOutcome> {
    let ordered = checked(sample, "q", q)?;
    outcome_from_rank(&ordered, step_up_rank(&ordered, q))
}

/// Two-stage Support Line. Pass `level = q` for TSSL(q) or `q / (1 + q)` for
/// the reduced-level variant.
pub fn tssl(sample: &PValueSample, level: f64) -> Result<RejectionOutcome> {
    let ordered = checked(sample, "level", level)?;
    tssl_ordered(&ordered, level)
}

pub(crate) fn tssl_ordered(ordered: &OrderedSample, level: f64) -> Result<RejectionOutcome> {
    let m = ordered.len();
    let r1 = support_rank(ordered, level, m as f64, None);
    if r1 == 0 || r1 == m {
        let pi0 = (m - r1) as f64 / m as f64;
        return Ok(outcome_from_rank(ordered, r1)?.with_trace(StageTrace {
            first_stage: Some(r1),
            level,
            pi0: Some(pi0),
            lambda: None,
        }));
    }
    let remaining = (m - r1) as f64;
    let r2 = support_rank(ordered, level, remaining, None);
    Ok(outcome_from_rank(ordered, r2)?.with_trace(StageTrace {
        first_stage: Some(r1),
        level: level * m as f64 / remaining,
        pi0: Some(remaining / m as f64),
        lambda: None,
    }))
}

/// Two-stage BH (TST). Pass `level = q` or `q / (1 + q)`.
pub fn tst(sample: &PValueSample, level: f64) -> Result<RejectionOutcome> {
    let ordered = checked(sample, "level", level)?;
    tst_ordered(&ordered, level)
}

pub(crate) fn tst_ordered(ordered: &OrderedSample, level: f64) -> Result<RejectionOutcome> {
    let m = ordered.len();
    let r1 = step_up_rank(ordered, level);
    let pi0 = (m - r1) as f64 / m as f64;
    let (r, level_used) = if r1 == 0 || r1 == m {
        (r1, level)
    } else {
        let adjusted = level * m as f64 / (m - r1) as f64;
        (step_up_rank(ordered, adjusted), adjusted)
    };
    Ok(outcome_from_rank(ordered, r)?.with_trace(StageTrace {
        first_stage: Some(r1),
        level: level_used,
        pi0: Some(pi0),
        lambda: None,
    }))
}

/// SL at level `q / pi0`. Under [`DomainCap::CapAtQ`] only ranks with
/// `p_(k) <= q` are eligible.
pub fn sl_plugin(sample: &PValueSample, q: f64, pi0: &Pi0Estimate, policy: &PluginPolicy) -> Result<RejectionOutcome> {
    let ordered = checked(sample, "q", q)?;
    sl_plugin_ordered(&ordered, q, pi0, policy)
}

pub(crate) fn sl_plugin_ordered(
    ordered: &OrderedSample,
    q: f64,
    pi0: &Pi0Estimate,
    policy: &PluginPolicy,
) -> Result<RejectionOutcome> {
    let pi0_used = policy.floored(pi0.value);
    let cap = match policy.domain_cap {
        DomainCap::CapAtQ => Some(q),
        DomainCap::Uncapped => None,
    };
    let r = support_rank(ordered, q, pi0_used * ordered.len() as f64, cap);
    Ok(outcome_from_rank(ordered, r)?.with_trace(StageTrace {
        first_stage: None,
        level: q / pi0_used,
        pi0: Some(pi0.value),
        lambda: pi0.lambda_hat,
    }))
}

/// BH at level `q / pi0`, clamped to at most 1.
pub fn bh_plugin(sample: &PValueSample, q: f64, pi0: &Pi0Estimate) -> Result<RejectionOutcome> {
    let ordered = checked(sample, "q", q)?;
    bh_plugin_ordered(&ordered, q, pi0, &PluginPolicy::default())
}

pub(crate) fn bh_plugin_ordered(
    ordered: &OrderedSample,
    q: f64,
    pi0: &Pi0Estimate,
    policy: &PluginPolicy,
) -> Result<RejectionOutcome> {
    let level = (q / policy.floored(pi0.value)).min(1.0);
    Ok(outcome_from_rank(ordered, step_up_rank(ordered, level))?.with_trace(StageTrace {
        first_stage: None,
        level,
        pi0: Some(pi0.value),
        lambda: pi0.lambda_hat,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pi0::{storey_pi0, Pi0Estimate};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sample(v: &[f64]) -> PValueSample {
        PValueSample::new(v.to_vec()).unwrap()
    }

    /// Direct enumeration of `argmax_k level*k/denom - p_(k)` (largest k on ties).
    fn brute_argmax(sorted: &[f64], level: f64, denom: f64, cap: Option<f64>) -> usize {
        let mut cands: Vec<(usize, f64)> = vec![(0, 0.0)];
        for k in 1..=sorted.len() {
            if cap.map_or(true, |c| sorted[k - 1] <= c) {
                cands.push((k, level * k as f64 / denom - sorted[k - 1]));
            }
        }
        let best = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        cands.iter().filter(|c| c.1 == best).map(|c| c.0).max().unwrap()
    }

    fn brute_step_up(sorted: &[f64], level: f64) -> usize {
        let m = sorted.len() as f64;
        (1..=sorted.len())
            .filter(|&k| sorted[k - 1] <= level * k as f64 / m)
            .max()
            .unwrap_or(0)
    }

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s
    }

    #[test]
    fn sl_examples() {
        let s = sample(&[0.01, 0.02, 0.6, 0.9]);
        let out = sl(&s, 0.2).unwrap();
        assert_eq!(out.r, 2);
        assert_eq!(out.threshold, 0.02);
        assert_eq!(sl(&sample(&[0.99, 0.98, 0.97]), 0.2).unwrap().r, 0);
        assert_eq!(sl(&sample(&[0.0; 4]), 0.1).unwrap().r, 4);
        assert!(sl(&sample(&[]), 0.2).is_err());
        assert!(sl(&s, 0.0).is_err());
        assert!(sl(&s, 1.0).is_err());
    }

    #[test]
    fn bh_examples() {
        assert_eq!(bh(&sample(&[0.01, 0.02, 0.6, 0.9]), 0.2).unwrap().r, 2);
        assert_eq!(bh(&sample(&[1.0; 5]), 0.2).unwrap().r, 0);
        assert_eq!(bh(&sample(&[0.04, 0.9]), 0.1).unwrap().r, 1);
    }

    #[test]
    fn tssl_examples() {
        let out = tssl(&sample(&[0.01, 0.07, 0.12, 0.9]), 0.2).unwrap();
        let trace = out.stage_trace.unwrap();
        assert_eq!(trace.first_stage, Some(1));
        assert_eq!(out.r, 3);
        assert_relative_eq!(trace.level, 0.2 * 4.0 / 3.0, epsilon = 1e-12);

        let all = tssl(&sample(&[0.0; 4]), 0.2).unwrap();
        assert_eq!(all.r, 4);
        assert_eq!(all.stage_trace.unwrap().first_stage, Some(4));

        let none = tssl(&sample(&[0.97, 0.98, 0.99]), 0.2).unwrap();
        assert_eq!(none.r, 0);
    }

    #[test]
    fn tst_examples() {
        let out = tst(&sample(&[0.01, 0.07, 0.12, 0.9]), 0.2).unwrap();
        let trace = out.stage_trace.unwrap();
        assert_eq!(trace.first_stage, Some(3));
        assert_relative_eq!(trace.level, 0.8, epsilon = 1e-12);
        assert_eq!(out.r, 3);
        assert_eq!(tst(&sample(&[0.0; 3]), 0.2).unwrap().r, 3);
        assert_eq!(tst(&sample(&[1.0; 3]), 0.2).unwrap().r, 0);
    }

    #[test]
    fn sl_plugin_examples() {
        let s = sample(&[0.01, 0.02, 0.6, 0.9]);
        let half = Pi0Estimate::oracle(0.5);
        assert_eq!(sl_plugin(&s, 0.2, &half, &PluginPolicy::default()).unwrap().r, 2);
        let none = sample(&[0.3, 0.4]);
        assert_eq!(sl_plugin(&none, 0.2, &Pi0Estimate::oracle(0.01), &PluginPolicy::default()).unwrap().r, 0);
        // uncapped with a tiny pi0 rejects everything
        assert_eq!(sl_plugin(&none, 0.2, &Pi0Estimate::oracle(0.01), &PluginPolicy::uncapped()).unwrap().r, 2);
    }

    #[test]
    fn sl_plugin_with_unit_pi0_is_capped_sl() {
        let one = Pi0Estimate::oracle(1.0);
        let s = sample(&[0.01, 0.02, 0.05, 0.19, 0.21, 0.9]);
        let capped = sl_plugin(&s, 0.2, &one, &PluginPolicy::default()).unwrap();
        assert_eq!(capped.r, brute_argmax(&sorted(s.values()), 0.2, 6.0, Some(0.2)));
        let uncapped = sl_plugin(&s, 0.2, &one, &PluginPolicy::uncapped()).unwrap();
        assert_eq!(uncapped.r, sl(&s, 0.2).unwrap().r);
    }

    #[test]
    fn bh_plugin_examples() {
        let s = sample(&[0.01, 0.02, 0.6, 0.9]);
        assert_eq!(
            bh_plugin(&s, 0.2, &Pi0Estimate::oracle(1.0)).unwrap().rejected,
            bh(&s, 0.2).unwrap().rejected
        );
        let two = sample(&[0.04, 0.9]);
        let out = bh_plugin(&two, 0.1, &Pi0Estimate::oracle(0.5)).unwrap();
        assert_eq!(out.r, 1);
        assert_relative_eq!(out.stage_trace.unwrap().level, 0.2);
        let clamp = sample(&[0.3, 0.55, 0.8, 0.95]);
        let out = bh_plugin(&clamp, 0.1, &Pi0Estimate::oracle(0.05)).unwrap();
        assert_eq!(out.stage_trace.unwrap().level, 1.0);
        assert_eq!(out.r, 4);
    }

    #[test]
    fn storey_plugin_threshold_stays_below_q() {
        let s = sample(&[0.001, 0.01, 0.15, 0.18, 0.25, 0.3, 0.31, 0.6]);
        let est = storey_pi0(&s, 0.5).unwrap();
        let out = sl_plugin(&s, 0.2, &est, &PluginPolicy::default()).unwrap();
        assert!(out.threshold <= 0.2);
    }

    fn pvals() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![3 => 0.0f64..=1.0, 1 => 0.0f64..0.05], 1..=10)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn procedures_match_enumeration(values in pvals(), qi in 1usize..20) {
            let q = qi as f64 * 0.05;
            let s = sample(&values);
            let sorted = sorted(&values);
            let m = values.len();
            prop_assert_eq!(sl(&s, q).unwrap().r, brute_argmax(&sorted, q, m as f64, None));
            prop_assert_eq!(bh(&s, q).unwrap().r, brute_step_up(&sorted, q));

            let r1 = brute_argmax(&sorted, q, m as f64, None);
            let expect = if r1 == 0 || r1 == m { r1 } else { brute_argmax(&sorted, q, (m - r1) as f64, None) };
            prop_assert_eq!(tssl(&s, q).unwrap().r, expect);

            let b1 = brute_step_up(&sorted, q);
            let expect = if b1 == 0 || b1 == m { b1 } else { brute_step_up(&sorted, q * m as f64 / (m - b1) as f64) };
            prop_assert_eq!(tst(&s, q).unwrap().r, expect);
        }

        #[test]
        fn sl_and_bh_monotone_in_q(values in pvals(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = sample(&values);
            prop_assert!(sl(&s, lo).unwrap().r <= sl(&s, hi).unwrap().r);
            prop_assert!(bh(&s, lo).unwrap().r <= bh(&s, hi).unwrap().r);
        }

        #[test]
        fn tssl_second_stage_never_loses(values in pvals(), q in 0.01f64..0.99) {
            let out = tssl(&sample(&values), q).unwrap();
            let r1 = out.stage_trace.unwrap().first_stage.unwrap();
            if r1 > 0 && r1 < values.len() {
                prop_assert!(out.r >= r1);
            }
        }

        #[test]
        fn capped_plugin_threshold_at_most_q(values in pvals(), q in 0.01f64..0.99, pi0 in 0.0f64..1.5) {
            let out = sl_plugin(&sample(&values), q, &Pi0Estimate::oracle(pi0), &PluginPolicy::default()).unwrap();
            prop_assert!(out.threshold <= q);
            for &i in &out.rejected { prop_assert!(values[i] <= out.threshold); }
        }
    }
}
