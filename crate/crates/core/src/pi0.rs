//! Null-proportion estimators: Storey with fixed `lambda`, adaptive Storey
//! with a grid stopping rule, and the Lowest Slope estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{order_sample, PValueSample};

/// Grid points this close to 1 are treated as 1 and never evaluated.
const GRID_EDGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pi0Method {
    StoreyFixed,
    StoreyAdaptive,
    Lsl,
    TwoStage,
    Oracle,
}

/// An estimated null proportion together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pi0Estimate {
    pub value: f64,
    pub method: Pi0Method,
    /// Chosen `lambda` (Storey variants only).
    pub lambda_hat: Option<f64>,
    /// `(lambda, estimate)` pairs for Storey variants, `(i, S_i)` for LSL.
    pub trace: Vec<(f64, f64)>,
}

impl Pi0Estimate {
    /// A known null proportion, e.g. the simulation truth.
    pub fn oracle(value: f64) -> Self {
        Self {
            value,
            method: Pi0Method::Oracle,
            lambda_hat: None,
            trace: Vec::new(),
        }
    }

    pub fn two_stage(value: f64) -> Self {
        Self {
            value,
            method: Pi0Method::TwoStage,
            lambda_hat: None,
            trace: Vec::new(),
        }
    }
}

fn storey_value(values: &[f64], lambda: f64) -> f64 {
    let above = values.iter().filter(|&&p| p > lambda).count();
    (1 + above) as f64 / (values.len() as f64 * (1.0 - lambda))
}

/// `(1 + #{p_i > lambda}) / (m (1 - lambda))`, not capped at 1.
pub fn storey_pi0(sample: &PValueSample, lambda: f64) -> Result<Pi0Estimate> {
    sample.ensure_nonempty()?;
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Validation(format!(
            "lambda must lie in [0, 1), got {lambda}"
        )));
    }
    let value = storey_value(sample.values(), lambda);
    Ok(Pi0Estimate {
        value,
        method: Pi0Method::StoreyFixed,
        lambda_hat: Some(lambda),
        trace: vec![(lambda, value)],
    })
}

/// Storey estimator with `lambda` chosen on the grid `start, start + delta, ...`
/// (points at or above 1 dropped). The scan stops at the first grid point
/// whose estimate is not smaller than its predecessor's and returns that
/// point; if the estimates decrease all the way, the last grid point wins.
pub fn adaptive_storey_pi0(sample: &PValueSample, delta: f64, start: f64) -> Result<Pi0Estimate> {
    sample.ensure_nonempty()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Validation(format!(
            "grid step must lie in (0, 1), got {delta}"
        )));
    }
    if !(start > 0.0 && start < 1.0) {
        return Err(Error::Validation(format!(
            "grid start must lie in (0, 1), got {start}"
        )));
    }
    let values = sample.values();
    let mut trace: Vec<(f64, f64)> = Vec::new();
    for j in 0.. {
        let lambda = start + j as f64 * delta;
        if lambda >= 1.0 - GRID_EDGE {
            break;
        }
        let estimate = storey_value(values, lambda);
        let stop = trace.last().is_some_and(|&(_, prev)| estimate >= prev);
        trace.push((lambda, estimate));
        if stop {
            break;
        }
    }
    let &(lambda_hat, value) = trace.last().expect("grid start is below 1");
    Ok(Pi0Estimate {
        value,
        method: Pi0Method::StoreyAdaptive,
        lambda_hat: Some(lambda_hat),
        trace,
    })
}

/// Lowest Slope estimator. Slopes `S_i = (1 - p_(i)) / (m + 1 - i)` are scanned
/// from `i = 1`; at the first strict decrease `m0 = min(ceil(1 / S_i), m)`.
/// Without a decrease the scan ends at `i = m`.
pub fn lsl_pi0(sample: &PValueSample) -> Result<Pi0Estimate> {
    sample.ensure_nonempty()?;
    let ordered = order_sample(sample);
    let m = ordered.len();
    let slope = |i: usize| (1.0 - ordered.at_rank(i)) / (m + 1 - i) as f64;

    let mut trace = vec![(0.0, slope(0))];
    let mut stop = m;
    for i in 1..=m {
        let s = slope(i);
        let prev = trace[i - 1].1;
        trace.push((i as f64, s));
        if s < prev {
            stop = i;
            break;
        }
    }
    let s = trace[stop].1;
    let m0 = if s > 0.0 {
        ((1.0 / s).ceil() as usize).min(m)
    } else {
        m
    };
    Ok(Pi0Estimate {
        value: m0 as f64 / m as f64,
        method: Pi0Method::Lsl,
        lambda_hat: None,
        trace,
    })
}
