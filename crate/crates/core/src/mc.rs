//! Monte Carlo experiments over procedure rosters.
//!
//! Every replication draws its p-values from a stream keyed by
//! `(seed, replication)`, the per-replication records are collected in
//! replication order, and aggregation runs sequentially afterwards. Results
//! are therefore bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{check_level, Error, Result};
use crate::lfdr::{grenander_fit, lfdr_hat, oracle_threshold, true_lfdr, AltConfig};
use crate::roster::{run_ordered, Family, ProcedureSpec};
use crate::sample::{order_sample, PValueSample};
use crate::simgen::{sample_pvalues, SimConfig};

/// Execution knobs shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub n_reps: u64,
    /// Worker threads; `None` uses rayon's global pool.
    pub workers: Option<usize>,
    /// Also record true and estimated lfdr at each cutoff.
    pub track_lfdr: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            n_reps: 10_000,
            workers: None,
            track_lfdr: false,
        }
    }
}

impl McOptions {
    pub fn with_reps(n_reps: u64) -> Self {
        Self {
            n_reps,
            ..Self::default()
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn track_lfdr(mut self, on: bool) -> Self {
        self.track_lfdr = on;
        self
    }
}

/// Run `f` on a pool with the requested worker count.
pub(crate) fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// What one procedure did in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureRecord {
    pub r: usize,
    pub boundary_is_null: bool,
    pub false_rejections: usize,
    pub true_rejections: usize,
    pub pi0_used: f64,
    pub threshold: f64,
    pub true_lfdr_at_threshold: Option<f64>,
    pub est_lfdr_at_threshold: Option<f64>,
    pub est_lfdr_at_oracle: Option<f64>,
}

/// One record per roster entry, in roster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub procedures: Vec<ProcedureRecord>,
}

/// True lfdr extended to the closed interval by its limits.
fn true_lfdr_closed(config: &AltConfig, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        true_lfdr(config, t).unwrap_or(f64::NAN)
    }
}

fn record_sample(
    sample: &PValueSample,
    roster: &[ProcedureSpec],
    lfdr: Option<(&AltConfig, Option<f64>)>,
) -> Result<ReplicationRecord> {
    let truth = sample
        .truth()
        .ok_or_else(|| Error::Validation("Monte Carlo samples need ground truth".into()))?;
    let ordered = order_sample(sample);
    let density = match lfdr {
        Some(_) => Some(grenander_fit(sample)?),
        None => None,
    };
    let mut procedures = Vec::with_capacity(roster.len());
    for spec in roster {
        let out = run_ordered(spec, sample, &ordered)?;
        let false_rejections = out.rejected.iter().filter(|&&i| truth[i]).count();
        let pi0_used = out.stage_trace.as_ref().and_then(|t| t.pi0).unwrap_or(1.0);
        let (true_at, est_at, est_oracle) = match (lfdr, &density) {
            (Some((config, t_star)), Some(d)) => {
                let at_cut = (out.r > 0).then(|| {
                    (
                        true_lfdr_closed(config, out.threshold),
                        lfdr_hat(pi0_used, d, out.threshold).unwrap_or(f64::NAN),
                    )
                });
                let oracle = t_star.map(|t| lfdr_hat(pi0_used, d, t).unwrap_or(f64::NAN));
                (at_cut.map(|c| c.0), at_cut.map(|c| c.1), oracle)
            }
            _ => (None, None, None),
        };
        procedures.push(ProcedureRecord {
            r: out.r,
            boundary_is_null: out.boundary_index.is_some_and(|i| truth[i]),
            false_rejections,
            true_rejections: out.r - false_rejections,
            pi0_used,
            threshold: out.threshold,
            true_lfdr_at_threshold: true_at,
            est_lfdr_at_threshold: est_at,
            est_lfdr_at_oracle: est_oracle,
        });
    }
    Ok(ReplicationRecord { procedures })
}

fn check_inputs(sim: &SimConfig, roster: &[ProcedureSpec], opts: &McOptions) -> Result<()> {
    sim.validate()?;
    if roster.is_empty() {
        return Err(Error::Config("roster is empty".into()));
    }
    if opts.n_reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    roster.iter().try_for_each(|p| p.validate())
}

/// Raw per-replication records, in replication order.
pub fn simulate_records(sim: &SimConfig, roster: &[ProcedureSpec], opts: &McOptions) -> Result<Vec<ReplicationRecord>> {
    check_inputs(sim, roster, opts)?;
    let config = sim.alt_config();
    let lfdr = if opts.track_lfdr {
        // The oracle cutoff is shared by the whole roster only if q is.
        let q = roster[0].q;
        let same_q = roster.iter().all(|p| p.q == q);
        let t_star = if same_q { oracle_threshold(&config, q).ok() } else { None };
        Some((&config, t_star))
    } else {
        None
    };
    in_pool(opts.workers, || {
        (0..opts.n_reps)
            .into_par_iter()
            .map(|rep| record_sample(&sample_pvalues(sim, rep)?, roster, lfdr))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Quartiles and mean of a set of draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub mean: f64,
}

/// Non-finite draws are dropped; `None` when nothing remains.
pub fn summarize(values: impl IntoIterator<Item = f64>) -> Option<Summary> {
    let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let mut data = Data::new(v);
    Some(Summary {
        q25: data.lower_quartile(),
        median: data.median(),
        q75: data.upper_quartile(),
        mean,
    })
}

/// Aggregated results for one procedure under one design.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsRow {
    pub procedure: String,
    pub config: String,
    pub m: usize,
    pub pi0: f64,
    pub rho: f64,
    pub q: f64,
    pub n_reps: u64,
    pub bfdr_hat: f64,
    pub bfdr_se: f64,
    pub fdr_hat: f64,
    pub mean_rejections: f64,
    pub power: Option<f64>,
    pub relative_power: Option<f64>,
    pub pi0_q25: f64,
    pub pi0_median: f64,
    pub pi0_q75: f64,
    pub pi0_mean: f64,
    pub true_lfdr_q25: Option<f64>,
    pub true_lfdr_median: Option<f64>,
    pub true_lfdr_q75: Option<f64>,
    pub true_lfdr_mean: Option<f64>,
    pub est_lfdr_q25: Option<f64>,
    pub est_lfdr_median: Option<f64>,
    pub est_lfdr_q75: Option<f64>,
    pub est_lfdr_mean: Option<f64>,
    pub est_lfdr_oracle_q25: Option<f64>,
    pub est_lfdr_oracle_median: Option<f64>,
    pub est_lfdr_oracle_q75: Option<f64>,
    pub est_lfdr_oracle_mean: Option<f64>,
}

/// Rows of per-procedure Monte Carlo summaries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn row(&self, procedure: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.procedure == procedure)
    }

    pub fn rows_for<'a>(&'a self, procedure: &'a str) -> impl Iterator<Item = &'a MetricsRow> + 'a {
        self.rows.iter().filter(move |r| r.procedure == procedure)
    }
}

fn split(s: Option<Summary>) -> [Option<f64>; 4] {
    match s {
        Some(s) => [Some(s.q25), Some(s.median), Some(s.q75), Some(s.mean)],
        None => [None; 4],
    }
}

/// Collapse replication records into one row per roster entry.
pub fn aggregate(sim: &SimConfig, roster: &[ProcedureSpec], records: &[ReplicationRecord]) -> MetricsTable {
    let n = records.len() as f64;
    let m1 = sim.alt_count();
    let mut rows: Vec<MetricsRow> = roster
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let recs = || records.iter().map(move |r| &r.procedures[j]);
            let bfdr = recs().filter(|r| r.boundary_is_null).count() as f64 / n;
            let fdr = recs().map(|r| r.false_rejections as f64 / r.r.max(1) as f64).sum::<f64>() / n;
            let power = (m1 > 0).then(|| recs().map(|r| r.true_rejections as f64 / m1 as f64).sum::<f64>() / n);
            let pi0 = summarize(recs().map(|r| r.pi0_used)).unwrap_or(Summary {
                q25: f64::NAN,
                median: f64::NAN,
                q75: f64::NAN,
                mean: f64::NAN,
            });
            let [tq25, tmed, tq75, tmean] = split(summarize(recs().filter_map(|r| r.true_lfdr_at_threshold)));
            let [eq25, emed, eq75, emean] = split(summarize(recs().filter_map(|r| r.est_lfdr_at_threshold)));
            let [oq25, omed, oq75, omean] = split(summarize(recs().filter_map(|r| r.est_lfdr_at_oracle)));
            MetricsRow {
                procedure: spec.name(),
                config: sim.kind.as_str().to_string(),
                m: sim.m,
                pi0: sim.pi0,
                rho: sim.rho,
                q: spec.q,
                n_reps: records.len() as u64,
                bfdr_hat: bfdr,
                bfdr_se: (bfdr * (1.0 - bfdr) / n).sqrt(),
                fdr_hat: fdr,
                mean_rejections: recs().map(|r| r.r as f64).sum::<f64>() / n,
                power,
                relative_power: None,
                pi0_q25: pi0.q25,
                pi0_median: pi0.median,
                pi0_q75: pi0.q75,
                pi0_mean: pi0.mean,
                true_lfdr_q25: tq25,
                true_lfdr_median: tmed,
                true_lfdr_q75: tq75,
                true_lfdr_mean: tmean,
                est_lfdr_q25: eq25,
                est_lfdr_median: emed,
                est_lfdr_q75: eq75,
                est_lfdr_mean: emean,
                est_lfdr_oracle_q25: oq25,
                est_lfdr_oracle_median: omed,
                est_lfdr_oracle_q75: oq75,
                est_lfdr_oracle_mean: omean,
            }
        })
        .collect();

    // Relative power: against the oracle of the same family, else any oracle.
    let oracle_power = |family: Family| {
        roster
            .iter()
            .position(|p| p.is_oracle() && p.family == family)
            .or_else(|| roster.iter().position(|p| p.is_oracle()))
            .and_then(|j| rows[j].power)
    };
    let oracle: Vec<Option<f64>> = roster.iter().map(|p| oracle_power(p.family)).collect();
    for (row, base) in rows.iter_mut().zip(oracle) {
        row.relative_power = match (row.power, base) {
            (Some(p), Some(b)) if b > 0.0 => Some(p / b),
            _ => None,
        };
    }
    MetricsTable { rows }
}

/// Estimate bFDR, FDR, power and pi0 summaries for every roster entry.
pub fn run_experiment(sim: &SimConfig, roster: &[ProcedureSpec], opts: &McOptions) -> Result<MetricsTable> {
    let records = simulate_records(sim, roster, opts)?;
    Ok(aggregate(sim, roster, &records))
}

fn sort_by_roster(rows: &mut [MetricsRow], roster: &[ProcedureSpec], key: impl Fn(&MetricsRow) -> f64) {
    let order = |name: &str| roster.iter().position(|p| p.name() == name).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        order(&a.procedure)
            .cmp(&order(&b.procedure))
            .then(key(a).total_cmp(&key(b)))
    });
}

/// bFDR against the tuning level: the roster is re-levelled at each `q`.
pub fn bfdr_curve(sim: &SimConfig, roster: &[ProcedureSpec], q_grid: &[f64], opts: &McOptions) -> Result<MetricsTable> {
    let mut rows = Vec::new();
    for &q in q_grid {
        check_level("q", q)?;
        let levelled: Vec<ProcedureSpec> = roster.iter().map(|p| p.at_level(q)).collect();
        rows.extend(run_experiment(sim, &levelled, opts)?.rows);
    }
    sort_by_roster(&mut rows, roster, |r| r.q);
    Ok(MetricsTable { rows })
}

/// bFDR and pi0 summaries against the noise correlation.
pub fn corr_sweep(sim: &SimConfig, rho_grid: &[f64], roster: &[ProcedureSpec], opts: &McOptions) -> Result<MetricsTable> {
    let mut rows = Vec::new();
    for &rho in rho_grid {
        rows.extend(run_experiment(&sim.with_rho(rho), roster, opts)?.rows);
    }
    sort_by_roster(&mut rows, roster, |r| r.rho);
    Ok(MetricsTable { rows })
}

/// Power relative to the oracle over a `(pi0, m)` grid.
pub fn power_heatmap(
    base: &SimConfig,
    pi0_grid: &[f64],
    m_grid: &[usize],
    roster: &[ProcedureSpec],
    opts: &McOptions,
) -> Result<MetricsTable> {
    let mut rows = Vec::new();
    for &pi0 in pi0_grid {
        for &m in m_grid {
            let sim = SimConfig { m, pi0, ..*base };
            rows.extend(run_experiment(&sim, roster, opts)?.rows);
        }
    }
    // Stable, so each procedure keeps the (pi0, m) grid order.
    sort_by_roster(&mut rows, roster, |_| 0.0);
    Ok(MetricsTable { rows })
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
    pub n: u64,
}

impl Estimate {
    pub(crate) fn proportion(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    pub(crate) fn mean(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            estimate: mean,
            se: (var / n).sqrt(),
            n: values.len() as u64,
        }
    }

    /// `estimate` within `k` standard errors of `target`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.se
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfdr::MeanConfig;
    use crate::roster::{standard_roster, Adjustment};

    fn sim() -> SimConfig {
        SimConfig::new(64, 0.75, MeanConfig::Alternating).with_seed(2024)
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let roster = standard_roster(Family::Sl, 0.2);
        let opts = McOptions::with_reps(400).track_lfdr(true);
        let a = run_experiment(&sim(), &roster, &opts.workers(1)).unwrap();
        let b = run_experiment(&sim(), &roster, &opts.workers(4)).unwrap();
        let c = run_experiment(&sim(), &roster, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn single_replication_aggregates_to_itself() {
        let roster = standard_roster(Family::Sl, 0.2);
        let opts = McOptions::with_reps(1);
        let recs = simulate_records(&sim(), &roster, &opts).unwrap();
        let table = aggregate(&sim(), &roster, &recs);
        for (row, rec) in table.rows.iter().zip(&recs[0].procedures) {
            assert_eq!(row.bfdr_hat, if rec.boundary_is_null { 1.0 } else { 0.0 });
            assert_eq!(row.bfdr_se, 0.0);
            assert_eq!(row.fdr_hat, rec.false_rejections as f64 / rec.r.max(1) as f64);
            assert_eq!(row.power, Some(rec.true_rejections as f64 / 16.0));
            assert_eq!(row.pi0_median, rec.pi0_used);
            assert_eq!(row.mean_rejections, rec.r as f64);
        }
    }

    #[test]
    fn records_are_consistent() {
        let roster = standard_roster(Family::Bh, 0.1);
        let recs = simulate_records(&sim(), &roster, &McOptions::with_reps(50).track_lfdr(true)).unwrap();
        for rec in recs.iter().flat_map(|r| &r.procedures) {
            assert_eq!(rec.false_rejections + rec.true_rejections, rec.r);
            assert!(!rec.boundary_is_null || rec.r > 0);
            assert_eq!(rec.true_lfdr_at_threshold.is_some(), rec.r > 0);
        }
    }

    #[test]
    fn oracle_with_unit_pi0_matches_sl() {
        let null = SimConfig::new(32, 1.0, MeanConfig::Alternating).with_seed(3);
        let roster = vec![
            ProcedureSpec::new(Family::Sl, Adjustment::Oracle { pi0: Some(1.0) }, 0.2),
            ProcedureSpec::new(Family::Sl, Adjustment::None, 0.2),
        ];
        let recs = simulate_records(&null, &roster, &McOptions::with_reps(300)).unwrap();
        for rec in &recs {
            assert_eq!(rec.procedures[0].r, rec.procedures[1].r);
        }
        let table = aggregate(&null, &roster, &recs);
        assert_eq!(table.rows[0].power, None);
        assert_eq!(table.rows[0].relative_power, None);
    }

    #[test]
    fn full_correlation_under_global_null_is_all_or_nothing() {
        let tied = SimConfig::new(16, 1.0, MeanConfig::Alternating).with_rho(1.0).with_seed(8);
        let roster = standard_roster(Family::Sl, 0.2);
        let recs = simulate_records(&tied, &roster, &McOptions::with_reps(300)).unwrap();
        for rec in recs.iter().flat_map(|r| &r.procedures) {
            assert!(rec.r == 0 || rec.r == 16, "r = {}", rec.r);
        }
    }

    #[test]
    fn curve_rows_sorted_by_procedure_then_q() {
        let roster = vec![
            ProcedureSpec::new(Family::Sl, Adjustment::None, 0.2),
            ProcedureSpec::new(Family::Sl, Adjustment::TwoStage { reduced: false }, 0.2),
        ];
        let table = bfdr_curve(&sim(), &roster, &[0.3, 0.1], &McOptions::with_reps(50)).unwrap();
        let keys: Vec<(String, f64)> = table.rows.iter().map(|r| (r.procedure.clone(), r.q)).collect();
        assert_eq!(
            keys,
            vec![("SL".into(), 0.1), ("SL".into(), 0.3), ("TSSL(q)".into(), 0.1), ("TSSL(q)".into(), 0.3)]
        );
        let single = bfdr_curve(&sim(), &roster, &[0.2], &McOptions::with_reps(50)).unwrap();
        assert_eq!(single, run_experiment(&sim(), &roster, &McOptions::with_reps(50)).unwrap());
    }

    #[test]
    fn bad_inputs_are_errors() {
        let roster = standard_roster(Family::Sl, 0.2);
        assert!(run_experiment(&sim(), &[], &McOptions::with_reps(5)).is_err());
        assert!(run_experiment(&sim(), &roster, &McOptions::with_reps(0)).is_err());
        let bad = SimConfig::new(10, 0.5, MeanConfig::Alternating);
        assert!(run_experiment(&bad, &roster, &McOptions::with_reps(5)).is_err());
    }

    #[test]
    fn summaries_skip_non_finite() {
        assert_eq!(summarize(vec![f64::INFINITY]), None);
        let s = summarize(vec![1.0, 2.0, 3.0, f64::INFINITY]).unwrap();
        assert_eq!(s.median, 2.0);
        assert_eq!(s.mean, 2.0);
    }
}
