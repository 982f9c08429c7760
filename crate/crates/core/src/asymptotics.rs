//! Large-m behaviour of the two-stage Support Line: population thresholds of
//! the mixture, the limiting boundary lfdr, and a Monte Carlo probe of the
//! convergence of the empirical thresholds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_level, Error, Result};
use crate::lfdr::{true_lfdr, AltConfig};
use crate::mc::{in_pool, Estimate};
use crate::normal;
use crate::sample::{order_sample, PValueSample};
use crate::simgen::{sample_pvalues, SimConfig};

const GRID_STEP: f64 = 1e-4;

/// Population mixture `F(t) = pi0 t + (1 - pi0) F1(t)` of one-sided Gaussian
/// p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel {
    pub config: AltConfig,
}

impl PopulationModel {
    pub fn new(config: AltConfig) -> Self {
        Self { config }
    }

    pub fn pi0(&self) -> f64 {
        self.config.pi0
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let pi0 = self.pi0();
        pi0 * t.clamp(0.0, 1.0) + (1.0 - pi0) * self.config.alt_cdf(t)
    }

    /// Mixture density; `+inf` at `t = 0` when there are non-nulls.
    pub fn density(&self, t: f64) -> f64 {
        let pi0 = self.pi0();
        if pi0 == 1.0 {
            return 1.0;
        }
        let z = if t <= 0.0 {
            f64::INFINITY
        } else if t >= 1.0 {
            f64::NEG_INFINITY
        } else {
            normal::upper_quantile(t)
        };
        pi0 + (1.0 - pi0) * self.config.alt_density_ratio(z)
    }
}

/// `(F(t), f(t))` for `t` in `[0, 1]`.
pub fn avg_cdf(model: &PopulationModel, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("mixture argument {t} outside [0, 1]")));
    }
    Ok((model.cdf(t), model.density(t)))
}

/// Minimizer of `t - F(t) / slope` over `[0, 1]`: a grid scan locates the
/// bracket, then bisection solves `f(t) = slope`.
fn stationary_point(model: &PopulationModel, slope: f64) -> Result<f64> {
    let n = (1.0 / GRID_STEP).round() as usize;
    let objective = |t: f64| t - model.cdf(t) / slope;
    let best = (0..=n)
        .map(|i| i as f64 * GRID_STEP)
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, t)| {
            let v = objective(t);
            if v <= acc.1 {
                (i, v)
            } else {
                acc
            }
        })
        .0;
    let mut lo = best.saturating_sub(1) as f64 * GRID_STEP;
    let mut hi = ((best + 1).min(n)) as f64 * GRID_STEP;
    // f is non-increasing, so f > slope on the left of the root.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model.density(mid) > slope {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let interior = t > 0.0 && t < 1.0 && model.density(lo) >= slope && model.density(hi) <= slope;
    if !interior {
        return Err(Error::Degenerate(format!(
            "no interior solution of f(t) = {slope} (pi0 = {})",
            model.pi0()
        )));
    }
    Ok(t)
}

/// Population stage-1 and stage-2 thresholds `(t1*, t2*)`.
pub fn population_thresholds(model: &PopulationModel, q: f64) -> Result<(f64, f64)> {
    check_level("q", q)?;
    let t1 = stationary_point(model, 1.0 / q)?;
    let tail = 1.0 - model.cdf(t1);
    if tail <= 0.0 {
        return Err(Error::Degenerate("mixture cdf reaches 1 at the stage-1 threshold".into()));
    }
    let t2 = stationary_point(model, tail / q)?;
    Ok((t1, t2))
}

/// Limiting boundary lfdr of TSSL(q): `q pi0 / (1 - F(t1*))`.
pub fn boundary_lfdr_limit(model: &PopulationModel, q: f64) -> Result<f64> {
    let (t1, _) = population_thresholds(model, q)?;
    let tail = 1.0 - model.cdf(t1);
    if tail <= 0.0 {
        return Err(Error::Degenerate("mixture cdf reaches 1 at the stage-1 threshold".into()));
    }
    Ok(q * model.pi0() / tail)
}

/// Empirical thresholds `(tau1, tau2)` minimizing `t - q F_m(t)` and
/// `t - q F_m(t) / (1 - F_m(tau1))` over `{0} U {p_i}`, ties to the largest.
pub fn empirical_two_stage_thresholds(sample: &PValueSample, q: f64) -> Result<(f64, f64)> {
    sample.ensure_nonempty()?;
    let ordered = order_sample(sample);
    let sorted = ordered.sorted();
    let m = sorted.len();
    let argmax = |denom: f64| {
        let mut best = (0.0, 0.0, 0usize);
        for (i, &p) in sorted.iter().enumerate() {
            let v = q * (i + 1) as f64 / denom - p;
            if v >= best.0 {
                best = (v, p, i + 1);
            }
        }
        (best.1, best.2)
    };
    let (tau1, count1) = argmax(m as f64);
    if count1 == m {
        return Ok((tau1, tau1));
    }
    let (tau2, _) = argmax((m - count1) as f64);
    Ok((tau1, tau2))
}

/// Settings for [`convergence_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub q: f64,
    pub m_list: Vec<usize>,
    pub n_reps: u64,
    pub seed: u64,
    pub rho: f64,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: usize,
    pub n_reps: u64,
    pub limit: f64,
    pub mean_lfdr: f64,
    pub mean_gap: f64,
    pub gap_se: f64,
}

/// Mean `|lfdr(tau2) - limit|` over simulated samples of each size.
pub fn convergence_probe(model: &PopulationModel, opts: &ProbeOptions) -> Result<Vec<ConvergenceRow>> {
    let limit = boundary_lfdr_limit(model, opts.q)?;
    if opts.n_reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let lfdr_at = |t: f64| -> Result<f64> {
        if t <= 0.0 {
            Ok(0.0)
        } else if t >= 1.0 {
            Ok(1.0)
        } else {
            true_lfdr(&model.config, t)
        }
    };
    opts.m_list
        .iter()
        .map(|&m| {
            let sim = SimConfig::new(m, model.pi0(), model.config.kind)
                .with_rho(opts.rho)
                .with_seed(opts.seed);
            sim.validate()?;
            let lfdrs = in_pool(opts.workers, || {
                (0..opts.n_reps)
                    .into_par_iter()
                    .map(|rep| {
                        let (_, tau2) = empirical_two_stage_thresholds(&sample_pvalues(&sim, rep)?, opts.q)?;
                        lfdr_at(tau2)
                    })
                    .collect::<Result<Vec<f64>>>()
            })??;
            let gaps: Vec<f64> = lfdrs.iter().map(|l| (l - limit).abs()).collect();
            let gap = Estimate::mean(&gaps);
            Ok(ConvergenceRow {
                m,
                n_reps: opts.n_reps,
                limit,
                mean_lfdr: lfdrs.iter().sum::<f64>() / lfdrs.len() as f64,
                mean_gap: gap.estimate,
                gap_se: gap.se,
            })
        })
        .collect()
}
