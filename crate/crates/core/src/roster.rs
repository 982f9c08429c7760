//! Procedure specifications and dispatch.
//!
//! A [`ProcedureSpec`] names one composition of a base family (SL or BH) with
//! a null-proportion adjustment. Parameters that track the level (Storey with
//! `lambda = q`, adaptive grids starting at `q`) are stored symbolically so a
//! roster can be re-levelled with [`ProcedureSpec::at_level`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_level, Error, Result};
use crate::pi0::{adaptive_storey_pi0, lsl_pi0, storey_pi0, Pi0Estimate};
use crate::procedures::{
    bh_plugin_ordered, sl_ordered, sl_plugin_ordered, step_up_rank, tssl_ordered, tst_ordered, DomainCap,
    PluginPolicy,
};
use crate::sample::{order_sample, outcome_from_rank, OrderedSample, PValueSample, RejectionOutcome, StageTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sl,
    Bh,
}

/// A tuning value that is either fixed or equal to the procedure level `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    Fixed(f64),
    Level,
}

impl Tuning {
    pub fn resolve(self, q: f64) -> f64 {
        match self {
            Tuning::Fixed(v) => v,
            Tuning::Level => q,
        }
    }

    fn label(self) -> String {
        match self {
            Tuning::Fixed(v) if v == 0.5 => "1/2".to_string(),
            Tuning::Fixed(v) => format!("{v}"),
            Tuning::Level => "q".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Adjustment {
    None,
    /// Two-stage: `reduced` runs both stages at `q / (1 + q)`.
    TwoStage { reduced: bool },
    StoreyFixed { lambda: Tuning },
    StoreyAdaptive { delta: f64, start: Tuning },
    Lsl,
    /// Level `q / pi0` with the true null proportion; `None` reads it from
    /// the sample's ground truth.
    Oracle { pi0: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcedureSpec {
    pub family: Family,
    pub adjustment: Adjustment,
    pub q: f64,
    /// Domain policy for plug-in SL variants (Storey, adaptive Storey, LSL).
    pub domain_cap: DomainCap,
}

impl ProcedureSpec {
    pub fn new(family: Family, adjustment: Adjustment, q: f64) -> Self {
        Self {
            family,
            adjustment,
            q,
            domain_cap: DomainCap::CapAtQ,
        }
    }

    pub fn at_level(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_domain_cap(mut self, cap: DomainCap) -> Self {
        self.domain_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_level("q", self.q)?;
        match self.adjustment {
            Adjustment::StoreyFixed { lambda } => {
                let l = lambda.resolve(self.q);
                if !(0.0..1.0).contains(&l) {
                    return Err(Error::Config(format!("lambda must lie in [0, 1), got {l}")));
                }
            }
            Adjustment::StoreyAdaptive { delta, start } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
                }
                let s = start.resolve(self.q);
                if !(s > 0.0 && s < 1.0) {
                    return Err(Error::Config(format!("grid start must lie in (0, 1), got {s}")));
                }
            }
            Adjustment::Oracle { pi0: Some(p) } if !(0.0..=1.0).contains(&p) => {
                return Err(Error::Config(format!("oracle pi0 must lie in [0, 1], got {p}")));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self.adjustment, Adjustment::Oracle { .. })
    }

    /// Display name in the style `TSSL(q')`, `AS(0.1;q)`, `Storey-BH(1/2)`.
    pub fn name(&self) -> String {
        let (base, two_stage) = match self.family {
            Family::Sl => ("SL", "TSSL"),
            Family::Bh => ("BH", "TST"),
        };
        let suffix = match self.family {
            Family::Sl => "",
            Family::Bh => "-BH",
        };
        match self.adjustment {
            Adjustment::None => base.to_string(),
            Adjustment::TwoStage { reduced: false } => format!("{two_stage}(q)"),
            Adjustment::TwoStage { reduced: true } => format!("{two_stage}(q')"),
            Adjustment::StoreyFixed { lambda } => format!("Storey{suffix}({})", lambda.label()),
            Adjustment::StoreyAdaptive { delta, start } => {
                format!("AS{suffix}({delta};{})", start.label())
            }
            Adjustment::Lsl => format!("LSL{suffix}"),
            Adjustment::Oracle { .. } => format!("Oracle{suffix}"),
        }
    }
}

impl fmt::Display for ProcedureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The ten-procedure comparison roster at level `q`, in the order
/// TSSL(q), TSSL(q'), Storey(1/2), Storey(q), AS(0.1;q), AS(0.01;q),
/// AS(0.1;1/2), LSL, SL, Oracle.
pub fn standard_roster(family: Family, q: f64) -> Vec<ProcedureSpec> {
    use Adjustment::*;
    [
        TwoStage { reduced: false },
        TwoStage { reduced: true },
        StoreyFixed { lambda: Tuning::Fixed(0.5) },
        StoreyFixed { lambda: Tuning::Level },
        StoreyAdaptive { delta: 0.1, start: Tuning::Level },
        StoreyAdaptive { delta: 0.01, start: Tuning::Level },
        StoreyAdaptive { delta: 0.1, start: Tuning::Fixed(0.5) },
        Lsl,
        None,
        Oracle { pi0: Option::None },
    ]
    .into_iter()
    .map(|adj| ProcedureSpec::new(family, adj, q))
    .collect()
}

/// Look a roster entry up by its display name (e.g. `"AS(0.01;q)"`).
pub fn find_procedure(family: Family, name: &str, q: f64) -> Result<ProcedureSpec> {
    standard_roster(family, q)
        .into_iter()
        .find(|p| p.name() == name)
        .ok_or_else(|| Error::Config(format!("unknown procedure {name:?}")))
}

/// The null proportion estimate a plug-in procedure divides by, if any.
pub fn estimate_pi0(spec: &ProcedureSpec, sample: &PValueSample) -> Result<Option<Pi0Estimate>> {
    let q = spec.q;
    Ok(match spec.adjustment {
        Adjustment::StoreyFixed { lambda } => Some(storey_pi0(sample, lambda.resolve(q))?),
        Adjustment::StoreyAdaptive { delta, start } => Some(adaptive_storey_pi0(sample, delta, start.resolve(q))?),
        Adjustment::Lsl => Some(lsl_pi0(sample)?),
        Adjustment::Oracle { pi0 } => Some(Pi0Estimate::oracle(oracle_pi0(pi0, sample)?)),
        Adjustment::None | Adjustment::TwoStage { .. } => None,
    })
}

fn oracle_pi0(pi0: Option<f64>, sample: &PValueSample) -> Result<f64> {
    pi0.or_else(|| sample.null_proportion()).ok_or_else(|| {
        Error::Config("oracle adjustment needs a true pi0 or a sample with ground truth".into())
    })
}

/// Run one roster entry on a sample.
pub fn run_procedure(spec: &ProcedureSpec, sample: &PValueSample) -> Result<RejectionOutcome> {
    spec.validate()?;
    sample.ensure_nonempty()?;
    let ordered = order_sample(sample);
    run_ordered(spec, sample, &ordered)
}

/// Same as [`run_procedure`] with the ordering already computed; the
/// Monte Carlo engine sorts once per replication and shares it.
pub(crate) fn run_ordered(spec: &ProcedureSpec, sample: &PValueSample, ordered: &OrderedSample) -> Result<RejectionOutcome> {
    let q = spec.q;
    let reduced = q / (1.0 + q);
    let policy = PluginPolicy {
        domain_cap: spec.domain_cap,
        ..PluginPolicy::default()
    };
    match (spec.family, spec.adjustment) {
        (Family::Sl, Adjustment::None) => Ok(sl_ordered(ordered, q)?.with_trace(StageTrace {
            first_stage: None,
            level: q,
            pi0: Some(1.0),
            lambda: None,
        })),
        (Family::Bh, Adjustment::None) => Ok(outcome_from_rank(ordered, step_up_rank(ordered, q))?.with_trace(StageTrace {
            first_stage: None,
            level: q,
            pi0: Some(1.0),
            lambda: None,
        })),
        (Family::Sl, Adjustment::TwoStage { reduced: r }) => tssl_ordered(ordered, if r { reduced } else { q }),
        (Family::Bh, Adjustment::TwoStage { reduced: r }) => tst_ordered(ordered, if r { reduced } else { q }),
        (Family::Sl, Adjustment::Oracle { pi0 }) => {
            // The benchmark is plain SL at q / pi0, with no domain restriction.
            let est = Pi0Estimate::oracle(oracle_pi0(pi0, sample)?);
            sl_plugin_ordered(ordered, q, &est, &PluginPolicy::uncapped())
        }
        (family, _) => {
            let est = estimate_pi0(spec, sample)?
                .ok_or_else(|| Error::Config(format!("{} has no pi0 estimator", spec.name())))?;
            match family {
                Family::Sl => sl_plugin_ordered(ordered, q, &est, &policy),
                Family::Bh => bh_plugin_ordered(ordered, q, &est, &policy),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedures::{sl, tssl};

    fn sample(v: &[f64]) -> PValueSample {
        PValueSample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn roster_names() {
        let names: Vec<String> = standard_roster(Family::Sl, 0.2).iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            [
                "TSSL(q)",
                "TSSL(q')",
                "Storey(1/2)",
                "Storey(q)",
                "AS(0.1;q)",
                "AS(0.01;q)",
                "AS(0.1;1/2)",
                "LSL",
                "SL",
                "Oracle"
            ]
        );
        let bh: Vec<String> = standard_roster(Family::Bh, 0.1).iter().map(|p| p.name()).collect();
        assert_eq!(bh[0], "TST(q)");
        assert_eq!(bh[2], "Storey-BH(1/2)");
        assert_eq!(bh[8], "BH");
    }

    #[test]
    fn dispatch_examples() {
        let s = sample(&[0.01, 0.02, 0.6, 0.9]);
        let plain = ProcedureSpec::new(Family::Sl, Adjustment::None, 0.2);
        assert_eq!(run_procedure(&plain, &s).unwrap().r, 2);

        let oracle = ProcedureSpec::new(Family::Sl, Adjustment::Oracle { pi0: Some(1.0) }, 0.2);
        assert_eq!(run_procedure(&oracle, &s).unwrap().rejected, sl(&s, 0.2).unwrap().rejected);

        let reduced = ProcedureSpec::new(Family::Sl, Adjustment::TwoStage { reduced: true }, 0.2);
        let t = sample(&[0.01, 0.07, 0.12, 0.9, 0.003, 0.3]);
        assert_eq!(run_procedure(&reduced, &t).unwrap(), tssl(&t, 0.2 / 1.2).unwrap());
    }

    #[test]
    fn oracle_reads_truth_or_fails() {
        let s = sample(&[0.01, 0.5]);
        let oracle = ProcedureSpec::new(Family::Sl, Adjustment::Oracle { pi0: None }, 0.2);
        assert!(matches!(run_procedure(&oracle, &s), Err(Error::Config(_))));
        let s = s.with_truth(vec![false, true]).unwrap();
        let out = run_procedure(&oracle, &s).unwrap();
        assert_eq!(out.stage_trace.unwrap().pi0, Some(0.5));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let s = sample(&[0.01, 0.5]);
        let bad_q = ProcedureSpec::new(Family::Sl, Adjustment::None, 1.5);
        assert!(run_procedure(&bad_q, &s).is_err());
        let bad_lambda = ProcedureSpec::new(Family::Sl, Adjustment::StoreyFixed { lambda: Tuning::Fixed(1.0) }, 0.2);
        assert!(matches!(run_procedure(&bad_lambda, &s), Err(Error::Config(_))));
        let bad_delta = ProcedureSpec::new(Family::Bh, Adjustment::StoreyAdaptive { delta: 0.0, start: Tuning::Level }, 0.2);
        assert!(run_procedure(&bad_delta, &s).is_err());
        assert!(find_procedure(Family::Sl, "Nope", 0.2).is_err());
        assert_eq!(find_procedure(Family::Sl, "AS(0.01;q)", 0.2).unwrap().q, 0.2);
    }

    #[test]
    fn every_roster_entry_runs_on_both_families() {
        let s = sample(&[0.001, 0.004, 0.02, 0.03, 0.2, 0.45, 0.5, 0.8, 0.91, 0.99])
            .with_truth(vec![false, false, false, false, true, true, true, true, true, true])
            .unwrap();
        for family in [Family::Sl, Family::Bh] {
            for spec in standard_roster(family, 0.2) {
                let out = run_procedure(&spec, &s).unwrap();
                assert_eq!(out.rejected.len(), out.r, "{}", spec.name());
            }
        }
    }
}
