//! Dataset-level summaries: rejection tables, null-proportion estimates,
//! estimated lfdr of each discovery and the calibration curves.

use std::f64::consts::E;

use crate::dataio::{percent_rejected, CalibrationRow, CutoffRow, Pi0Row, RejectedRow, RejectionRow};
use crate::error::{Error, Result};
use crate::lfdr::{grenander_fit, lfdr_hat, sellke_alpha, sellke_alpha_pi0, MonotoneDensity};
use crate::pi0::Pi0Estimate;
use crate::procedures::{sl_plugin, PluginPolicy};
use crate::roster::{run_procedure, standard_roster, Adjustment, Family, ProcedureSpec};
use crate::sample::PValueSample;

/// Everything `analyze` computes for one dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Analysis {
    pub rejections: Vec<RejectionRow>,
    pub pi0: Vec<Pi0Row>,
    pub rejected: Vec<RejectedRow>,
}

impl Analysis {
    pub fn rejection(&self, procedure: &str, q: f64) -> Option<&RejectionRow> {
        self.rejections.iter().find(|r| r.procedure == procedure && r.q == q)
    }

    pub fn pi0_hat(&self, procedure: &str, q: f64) -> Option<f64> {
        self.pi0.iter().find(|r| r.procedure == procedure && r.q == q).map(|r| r.pi0_hat)
    }
}

/// The standard roster minus the oracle, which needs ground truth.
pub fn data_roster(family: Family, q: f64) -> Vec<ProcedureSpec> {
    standard_roster(family, q).into_iter().filter(|p| !p.is_oracle()).collect()
}

fn calibration_at(t: f64, pi0: f64) -> (Option<f64>, Option<f64>) {
    (sellke_alpha(t).ok(), sellke_alpha_pi0(t, pi0).ok())
}

/// Run `roster` (re-levelled at each `q`) on `sample`.
pub fn analyze(sample: &PValueSample, roster: &[ProcedureSpec], qs: &[f64]) -> Result<Analysis> {
    sample.ensure_nonempty()?;
    let density = grenander_fit(sample)?;
    let m = sample.len();
    let mut out = Analysis::default();
    for base in roster {
        for &q in qs {
            let spec = base.at_level(q);
            let outcome = run_procedure(&spec, sample)?;
            let trace = outcome.stage_trace.as_ref();
            let pi0 = trace.and_then(|t| t.pi0).unwrap_or(1.0);
            let name = spec.name();
            if spec.adjustment != Adjustment::None {
                out.pi0.push(Pi0Row {
                    procedure: name.clone(),
                    q,
                    pi0_hat: pi0,
                    lambda_hat: trace.and_then(|t| t.lambda),
                });
            }
            for (rank0, &index) in outcome.rejected.iter().enumerate() {
                let p = sample.values()[index];
                out.rejected.push(RejectedRow {
                    procedure: name.clone(),
                    q,
                    rank: rank0 + 1,
                    index,
                    label: sample.labels().map(|l| l[index].clone()),
                    p,
                    lfdr_hat: lfdr_hat(pi0, &density, p)?,
                });
            }
            let boundary = outcome.boundary_index;
            let (alpha, alpha_pi0) = match boundary {
                Some(_) => calibration_at(outcome.threshold, pi0),
                None => (None, None),
            };
            out.rejections.push(RejectionRow {
                procedure: name,
                q,
                m,
                r: outcome.r,
                percent: percent_rejected(outcome.r, m),
                threshold: outcome.threshold,
                pi0_hat: Some(pi0),
                boundary_index: boundary,
                boundary_label: boundary.and_then(|i| sample.labels().map(|l| l[i].clone())),
                boundary_lfdr_hat: boundary.map(|_| lfdr_hat(pi0, &density, outcome.threshold)).transpose()?,
                sellke_alpha: alpha,
                sellke_alpha_pi0: alpha_pi0,
            });
        }
    }
    Ok(out)
}

/// Points of `grid` strictly inside `(0, 1/e)`, plus how many were dropped.
pub fn clip_calibration_grid(grid: &[f64]) -> (Vec<f64>, usize) {
    let kept: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0 && t < 1.0 / E).collect();
    let dropped = grid.len() - kept.len();
    (kept, dropped)
}

/// Calibration curves `alpha(t)` and `alpha_pi0(t)`, with the estimated lfdr
/// when a density fit is given.
pub fn calibration_curve(grid: &[f64], pi0: f64, density: Option<&MonotoneDensity>) -> Result<Vec<CalibrationRow>> {
    grid.iter()
        .map(|&t| {
            Ok(CalibrationRow {
                t,
                alpha: sellke_alpha(t)?,
                alpha_pi0: sellke_alpha_pi0(t, pi0)?,
                lfdr_hat: density.map(|d| lfdr_hat(pi0, d, t)).transpose()?,
            })
        })
        .collect()
}

/// Where `alpha_pi0` reaches `q` (it increases from 0 to `pi0` on `(0, 1/e)`).
pub fn alpha_pi0_cutoff(q: f64, pi0: f64) -> Result<Option<f64>> {
    if !(pi0 > 0.0 && pi0 < 1.0) {
        return Err(Error::Domain(format!("null proportion {pi0}")));
    }
    if q >= pi0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0 / E);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sellke_alpha_pi0(mid, pi0)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Calibration cutoffs per level; with data, also the capped SL plug-in cutoff.
pub fn calibration_cutoffs(qs: &[f64], pi0: f64, sample: Option<&PValueSample>) -> Result<Vec<CutoffRow>> {
    qs.iter()
        .map(|&q| {
            let sl = sample
                .map(|s| sl_plugin(s, q, &Pi0Estimate::oracle(pi0), &PluginPolicy::default()))
                .transpose()?;
            Ok(CutoffRow {
                q,
                alpha_pi0_cutoff: alpha_pi0_cutoff(q, pi0)?,
                sl_cutoff: sl.as_ref().map(|o| o.threshold),
                sl_rejections: sl.as_ref().map(|o| o.r),
            })
        })
        .collect()
}
