//! The `bfdr` command line.
//!
//! Every run writes into a fresh directory `<out>/<command>_<unix-ms>/`
//! holding `<command>_<unix-ms>.csv`, the same table as JSON, any auxiliary
//! tables, and `manifest.json` listing parameters and outputs. Exit codes:
//! 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::asymptotics::{convergence_probe, population_thresholds, boundary_lfdr_limit, PopulationModel, ProbeOptions};
use crate::dataio::{
    load_pvalues, write_table, AsymptoticRow, DatasetDescriptor, LemmaRow, RunManifest, Sidedness, TableFormat,
    TableRow,
};
use crate::error::{Error, Result};
use crate::lemmas::{expectation_bound_check, lemma_p_to_one_check, lemma_sl_key_check};
use crate::lfdr::{grenander_fit, AltConfig, MeanConfig};
use crate::mc::{bfdr_curve, corr_sweep, power_heatmap, MetricsTable, McOptions};
use crate::pi0::storey_pi0;
use crate::procedures::DomainCap;
use crate::report::{analyze, calibration_curve, calibration_cutoffs, clip_calibration_grid, data_roster};
use crate::roster::{standard_roster, Adjustment, Family, ProcedureSpec, Tuning};
use crate::simgen::{sample_pvalues, SimConfig};

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Environment variable supplying the default output directory.
pub const OUT_DIR_ENV: &str = "BFDR_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "bfdr", version, about = "Boundary-FDR procedures and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo experiments and numerical checks.
    Simulate {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Run the procedure roster on a p-value dataset.
    Analyze(AnalyzeArgs),
    /// Calibration curves alpha(t) and alpha_pi0(t).
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// bFDR against the tuning level.
    BfdrCurve(CurveArgs),
    /// bFDR and pi0 estimates against the noise correlation.
    CorrSweep(CorrArgs),
    /// Power relative to the oracle over a (pi0, m) grid.
    PowerHeatmap(HeatmapArgs),
    /// Spread of true and estimated lfdr at each procedure's cutoff.
    LfdrVariability(LfdrArgs),
    /// Monte Carlo checks of the lemmas behind bFDR control.
    Lemmas(LemmaArgs),
    /// Population thresholds, limiting boundary lfdr and a convergence probe.
    Asymptotics(AsymptoticArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Parent directory for the run directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "results")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    #[arg(long, value_enum, default_value = "alternating")]
    pub config: MeanConfig,
    #[arg(long, default_value_t = 0.75)]
    pub pi0: f64,
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Replications.
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "sl")]
    pub family: Family,
    /// Comma-separated roster names (default: the full roster).
    #[arg(long, value_delimiter = ',')]
    pub procedures: Vec<String>,
    /// Let plug-in procedures reject p-values above q.
    #[arg(long)]
    pub uncapped: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub mc: McArgs,
    /// `lo:hi:step` or a comma-separated list.
    #[arg(long, value_parser = grid_arg, default_value = "0.05:0.4:0.05")]
    pub q_grid: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrArgs {
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    #[arg(long, value_parser = grid_arg, default_value = "0:1:0.25")]
    pub rho_grid: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    #[arg(long, value_parser = grid_arg, default_value = "0.25,0.5,0.75")]
    pub pi0_grid: String,
    #[arg(long, value_parser = sizes_arg, default_value = "16,64,256")]
    pub m_grid: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LfdrArgs {
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, value_parser = grid_arg, default_value = "0.1:0.3:0.05")]
    pub q_grid: String,
    /// Sample sizes; overrides `--m`.
    #[arg(long, value_parser = sizes_arg, default_value = "64,1024")]
    pub m_list: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LemmaArgs {
    /// Replications for the boundary-probability check.
    #[arg(long, default_value_t = 200_000)]
    pub n: u64,
    /// Random instances for the p-to-one check.
    #[arg(long, default_value_t = 100_000)]
    pub instances: u64,
    /// Replications per design for the expectation bound.
    #[arg(long, default_value_t = 10_000)]
    pub expectation_reps: u64,
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AsymptoticArgs {
    #[arg(long, value_enum, default_value = "alternating")]
    pub config: MeanConfig,
    #[arg(long, value_parser = grid_arg, default_value = "0.25,0.5,0.75")]
    pub pi0_grid: String,
    #[arg(long, value_parser = grid_arg, default_value = "0.1,0.2,0.3")]
    pub q_grid: String,
    /// Sample sizes for the convergence probe; empty skips it.
    #[arg(long, value_parser = sizes_arg, default_value = "256,1024,4096")]
    pub m_list: String,
    /// Replications per sample size in the probe.
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DatasetArgs {
    /// Comma-separated file with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "p")]
    pub column: String,
    #[arg(long)]
    pub id_column: Option<String>,
    #[arg(long, value_enum, default_value = "one-sided")]
    pub sidedness: Sidedness,
    /// Effect-direction column for two-sided input.
    #[arg(long)]
    pub direction_column: Option<String>,
    /// Keep p < 0.025 and rescale by 40.
    #[arg(long)]
    pub selection_adjust: bool,
    /// Use p <= 0.025 when selecting.
    #[arg(long)]
    pub inclusive_cutoff: bool,
}

impl DatasetArgs {
    fn descriptor(&self) -> Option<DatasetDescriptor> {
        self.data.as_ref().map(|path| DatasetDescriptor {
            path: path.clone(),
            column: self.column.clone(),
            id_column: self.id_column.clone(),
            sidedness: self.sidedness,
            direction_column: self.direction_column.clone(),
            selection_adjust: self.selection_adjust,
            inclusive_cutoff: self.inclusive_cutoff,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, value_parser = grid_arg, default_value = "0.1,0.2,0.3")]
    pub q: String,
    #[arg(long, value_enum, default_value = "sl")]
    pub family: Family,
    #[arg(long, value_delimiter = ',')]
    pub procedures: Vec<String>,
    #[arg(long)]
    pub uncapped: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    /// Null proportion for alpha_pi0 (default: Storey(1/2) on `--data`, else 0.5).
    #[arg(long)]
    pub pi0: Option<f64>,
    #[arg(long, value_parser = grid_arg, default_value = "0.1,0.15,0.2,0.25,0.3")]
    pub q: String,
    #[arg(long, value_parser = grid_arg, default_value = "0.001:0.367:0.001")]
    pub t_grid: String,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parse `lo:hi:step` (endpoints inclusive within 1e-9) or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse grid {text:?}; use lo:hi:step or a,b,c"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [lo, hi, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || hi < lo || !lo.is_finite() || !hi.is_finite() {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        // Round away representation noise such as 0.15000000000000002.
        Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect())
    } else {
        text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}

// Validate grids at parse time so a malformed value is a usage error.
fn grid_arg(text: &str) -> std::result::Result<String, String> {
    parse_grid(text).map(|_| text.to_string()).map_err(|e| e.to_string())
}

fn sizes_arg(text: &str) -> std::result::Result<String, String> {
    parse_sizes(text).map(|_| text.to_string()).map_err(|e| e.to_string())
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    parse_grid(text)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("sample size {v} is not a positive integer")))
            }
        })
        .collect()
}

fn select_roster(family: Family, q: f64, names: &[String], with_oracle: bool) -> Result<Vec<ProcedureSpec>> {
    let full = if with_oracle { standard_roster(family, q) } else { data_roster(family, q) };
    if names.is_empty() {
        return Ok(full);
    }
    names
        .iter()
        .map(|name| {
            full.iter()
                .find(|p| p.name() == name.trim())
                .copied()
                .ok_or_else(|| {
                    let known: Vec<String> = full.iter().map(|p| p.name()).collect();
                    Error::Config(format!("unknown procedure {name:?} (known: {})", known.join(", ")))
                })
        })
        .collect()
}

fn capped(roster: Vec<ProcedureSpec>, uncapped: bool) -> Vec<ProcedureSpec> {
    let cap = if uncapped { DomainCap::Uncapped } else { DomainCap::CapAtQ };
    roster.into_iter().map(|p| p.with_domain_cap(cap)).collect()
}

/// A run directory plus what has been written into it so far.
struct Run {
    command: String,
    id: String,
    dir: PathBuf,
    outputs: Vec<String>,
    started: Instant,
    started_unix_ms: u128,
}

impl Run {
    fn create(out_dir: &Path, command: &str) -> Result<Self> {
        let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
        fs::create_dir_all(out_dir).map_err(|source| Error::Io {
            path: out_dir.to_path_buf(),
            source,
        })?;
        let base = format!("{command}_{started_unix_ms}");
        let mut id = base.clone();
        let mut attempt = 1;
        loop {
            let dir = out_dir.join(&id);
            match fs::create_dir(&dir) {
                Ok(()) => {
                    return Ok(Self {
                        command: command.to_string(),
                        id,
                        dir,
                        outputs: Vec::new(),
                        started: Instant::now(),
                        started_unix_ms,
                    })
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    id = format!("{base}-{attempt}");
                    attempt += 1;
                }
                Err(source) => return Err(Error::Io { path: dir, source }),
            }
        }
    }

    /// Write `rows` as `<id><suffix>.csv` and `.json`.
    fn table<T: TableRow>(&mut self, suffix: &str, rows: &[T]) -> Result<()> {
        for format in [TableFormat::Csv, TableFormat::Json] {
            let name = format!("{}{suffix}.{}", self.id, format.extension());
            write_table(rows, format, &self.dir.join(&name))?;
            self.outputs.push(name);
        }
        Ok(())
    }

    fn finish(self, parameters: &impl Serialize, seed: Option<u64>) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            run_id: self.id,
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
            started_unix_ms: self.started_unix_ms,
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        manifest.write(&self.dir.join("manifest.json"))?;
        out!("wrote {}", self.dir.display());
        Ok(self.dir)
    }
}

fn mc_setup(mc: &McArgs, q: f64) -> Result<(SimConfig, Vec<ProcedureSpec>, McOptions)> {
    let sim = SimConfig::new(mc.m, mc.pi0, mc.config).with_rho(mc.rho).with_seed(mc.seed);
    sim.validate()?;
    let roster = capped(select_roster(mc.family, q, &mc.procedures, true)?, mc.uncapped);
    let opts = McOptions {
        n_reps: mc.n,
        workers: mc.workers,
        track_lfdr: false,
    };
    Ok((sim, roster, opts))
}

fn print_metrics(table: &MetricsTable) {
    out!(
        "{:<14} {:>6} {:>5} {:>5} {:>5} {:>8} {:>8} {:>8} {:>8}",
        "procedure", "m", "pi0", "rho", "q", "bfdr", "se", "fdr", "rel.pow"
    );
    for r in &table.rows {
        let rel = r.relative_power.map_or("-".to_string(), |v| format!("{v:.3}"));
        out!(
            "{:<14} {:>6} {:>5} {:>5} {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8}",
            r.procedure, r.m, r.pi0, r.rho, r.q, r.bfdr_hat, r.bfdr_se, r.fdr_hat, rel
        );
    }
}

fn cmd_bfdr_curve(args: &CurveArgs) -> Result<PathBuf> {
    let grid = parse_grid(&args.q_grid)?;
    let q0 = grid.first().copied().ok_or_else(|| Error::Config("empty q grid".into()))?;
    let (sim, roster, opts) = mc_setup(&args.mc, q0)?;
    let mut run = Run::create(&args.mc.output.out_dir, "bfdr-curve")?;
    let table = bfdr_curve(&sim, &roster, &grid, &opts)?;
    print_metrics(&table);
    run.table("", &table.rows)?;
    run.finish(args, Some(args.mc.seed))
}

fn cmd_corr_sweep(args: &CorrArgs) -> Result<PathBuf> {
    let grid = parse_grid(&args.rho_grid)?;
    let (sim, roster, opts) = mc_setup(&args.mc, args.q)?;
    let mut run = Run::create(&args.mc.output.out_dir, "corr-sweep")?;
    let table = corr_sweep(&sim, &grid, &roster, &opts)?;
    print_metrics(&table);
    run.table("", &table.rows)?;
    run.finish(args, Some(args.mc.seed))
}

fn cmd_power_heatmap(args: &HeatmapArgs) -> Result<PathBuf> {
    let pi0s = parse_grid(&args.pi0_grid)?;
    let ms = parse_sizes(&args.m_grid)?;
    let (sim, roster, opts) = mc_setup(&args.mc, args.q)?;
    let mut run = Run::create(&args.mc.output.out_dir, "power-heatmap")?;
    let table = power_heatmap(&sim, &pi0s, &ms, &roster, &opts)?;
    print_metrics(&table);
    run.table("", &table.rows)?;
    run.finish(args, Some(args.mc.seed))
}

fn cmd_lfdr_variability(args: &LfdrArgs) -> Result<PathBuf> {
    let grid = parse_grid(&args.q_grid)?;
    let ms = parse_sizes(&args.m_list)?;
    let mc = &args.mc;
    let names = if mc.procedures.is_empty() {
        let q = grid.first().copied().unwrap_or(0.2);
        vec![
            ProcedureSpec::new(mc.family, Adjustment::None, q),
            ProcedureSpec::new(mc.family, Adjustment::TwoStage { reduced: false }, q),
            ProcedureSpec::new(mc.family, Adjustment::StoreyFixed { lambda: Tuning::Fixed(0.5) }, q),
            ProcedureSpec::new(mc.family, Adjustment::StoreyAdaptive { delta: 0.1, start: Tuning::Level }, q),
        ]
    } else {
        select_roster(mc.family, 0.2, &mc.procedures, true)?
    };
    let roster = capped(names, mc.uncapped);
    let opts = McOptions {
        n_reps: mc.n,
        workers: mc.workers,
        track_lfdr: true,
    };
    let mut run = Run::create(&mc.output.out_dir, "lfdr-variability")?;
    let mut rows = Vec::new();
    for &m in &ms {
        let sim = SimConfig::new(m, mc.pi0, mc.config).with_rho(mc.rho).with_seed(mc.seed);
        rows.extend(bfdr_curve(&sim, &roster, &grid, &opts)?.rows);
    }
    let table = MetricsTable { rows };
    out!(
        "{:<14} {:>6} {:>5} {:>10} {:>10} {:>10}",
        "procedure", "m", "q", "true.med", "est.med", "est@t*.med"
    );
    let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    for r in &table.rows {
        out!(
            "{:<14} {:>6} {:>5} {:>10} {:>10} {:>10}",
            r.procedure,
            r.m,
            r.q,
            show(r.true_lfdr_median),
            show(r.est_lfdr_median),
            show(r.est_lfdr_oracle_median)
        );
    }
    run.table("", &table.rows)?;
    run.finish(args, Some(mc.seed))
}

fn cmd_lemmas(args: &LemmaArgs) -> Result<(PathBuf, bool)> {
    let mut run = Run::create(&args.output.out_dir, "lemmas")?;
    let mut rows = Vec::new();
    let q = args.q;

    // Other p-values fixed at one draw of the default design.
    let others_design = SimConfig::new(args.m.max(2) - 1, 1.0, MeanConfig::Alternating).with_seed(args.seed);
    let others = if args.m > 1 {
        sample_pvalues(&others_design, u64::MAX)?
    } else {
        crate::sample::PValueSample::new(Vec::new())?
    };
    let est = lemma_sl_key_check(&others, q.min(1.0), args.n, args.seed, args.workers)?;
    let target = q / args.m as f64;
    rows.push(LemmaRow {
        check: "sl_key".into(),
        setting: format!("m={} q={q} n={}", args.m, args.n),
        estimate: est.estimate,
        se: est.se,
        bound: target,
        pass: est.within(target, 3.0),
    });

    let report = lemma_p_to_one_check(args.instances, args.seed, args.workers)?;
    rows.push(LemmaRow {
        check: "p_to_one".into(),
        setting: format!("instances={} applicable={}", report.instances, report.applicable),
        estimate: report.violations as f64,
        se: 0.0,
        bound: 0.0,
        pass: report.violations == 0,
    });

    for pi0 in [0.5, 0.75, 1.0] {
        for eq in [0.1, 0.2] {
            let sim = SimConfig::new(args.m, pi0, MeanConfig::Alternating).with_seed(args.seed);
            let est = expectation_bound_check(&sim, eq, args.expectation_reps, args.workers)?;
            let bound = eq / (1.0 - eq);
            rows.push(LemmaRow {
                check: "expectation_bound".into(),
                setting: format!("m={} pi0={pi0} q={eq} n={}", args.m, args.expectation_reps),
                estimate: est.estimate,
                se: est.se,
                bound,
                pass: est.estimate <= bound + 3.0 * est.se,
            });
        }
    }

    for r in &rows {
        out!(
            "[{}] {:<18} {:<40} estimate {:.6} (se {:.6}) vs {:.6}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.setting,
            r.estimate,
            r.se,
            r.bound
        );
    }
    let all = rows.iter().all(|r| r.pass);
    run.table("", &rows)?;
    Ok((run.finish(args, Some(args.seed))?, all))
}

fn cmd_asymptotics(args: &AsymptoticArgs) -> Result<PathBuf> {
    let pi0s = parse_grid(&args.pi0_grid)?;
    let qs = parse_grid(&args.q_grid)?;
    let ms = parse_sizes(&args.m_list)?;
    let mut run = Run::create(&args.output.out_dir, "asymptotics")?;
    let mut rows = Vec::new();
    for &pi0 in &pi0s {
        let model = PopulationModel::new(AltConfig::new(args.config, pi0)?);
        for &q in &qs {
            let (t1, t2) = population_thresholds(&model, q)?;
            let base = AsymptoticRow {
                config: args.config.as_str().into(),
                pi0,
                q,
                t1_star: t1,
                t2_star: t2,
                limit: boundary_lfdr_limit(&model, q)?,
                bound: q / (1.0 - q),
                ..Default::default()
            };
            if ms.is_empty() {
                rows.push(base);
                continue;
            }
            let probe = ProbeOptions {
                q,
                m_list: ms.clone(),
                n_reps: args.n,
                seed: args.seed,
                rho: args.rho,
                workers: args.workers,
            };
            for c in convergence_probe(&model, &probe)? {
                rows.push(AsymptoticRow {
                    m: Some(c.m),
                    n_reps: Some(c.n_reps),
                    mean_lfdr: Some(c.mean_lfdr),
                    mean_gap: Some(c.mean_gap),
                    gap_se: Some(c.gap_se),
                    ..base.clone()
                });
            }
        }
    }
    out!(
        "{:>5} {:>5} {:>10} {:>10} {:>8} {:>8} {:>6} {:>8}",
        "pi0", "q", "t1*", "t2*", "limit", "bound", "m", "gap"
    );
    for r in &rows {
        out!(
            "{:>5} {:>5} {:>10.6} {:>10.6} {:>8.4} {:>8.4} {:>6} {:>8}",
            r.pi0,
            r.q,
            r.t1_star,
            r.t2_star,
            r.limit,
            r.bound,
            r.m.map_or("-".into(), |m| m.to_string()),
            r.mean_gap.map_or("-".into(), |g| format!("{g:.4}"))
        );
    }
    run.table("", &rows)?;
    run.finish(args, Some(args.seed))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<PathBuf> {
    let desc = args
        .dataset
        .descriptor()
        .ok_or_else(|| Error::Config("analyze needs --data".into()))?;
    let sample = load_pvalues(&desc)?;
    let qs = parse_grid(&args.q)?;
    let roster = capped(select_roster(args.family, 0.2, &args.procedures, false)?, args.uncapped);
    let analysis = analyze(&sample, &roster, &qs)?;
    let mut run = Run::create(&args.output.out_dir, "analyze")?;
    out!("m = {}", sample.len());
    out!("{:<16} {:>5} {:>10} {:>8} {:>10}", "procedure", "q", "r (%)", "pi0", "cutoff");
    for r in &analysis.rejections {
        out!(
            "{:<16} {:>5} {:>10} {:>8.3} {:>10.6}",
            r.procedure,
            r.q,
            format!("{} ({}%)", r.r, r.percent),
            r.pi0_hat.unwrap_or(f64::NAN),
            r.threshold
        );
    }
    run.table("", &analysis.rejections)?;
    run.table("_pi0", &analysis.pi0)?;
    run.table("_rejected", &analysis.rejected)?;
    run.finish(args, None)
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<PathBuf> {
    let (grid, dropped) = clip_calibration_grid(&parse_grid(&args.t_grid)?);
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} grid point(s) outside (0, 1/e)");
    }
    let qs = parse_grid(&args.q)?;
    let sample = args.dataset.descriptor().map(|d| load_pvalues(&d)).transpose()?;
    let pi0 = match (args.pi0, &sample) {
        (Some(p), _) => p,
        (None, Some(s)) => storey_pi0(s, 0.5)?.value.min(1.0 - 1e-12),
        (None, None) => 0.5,
    };
    let density = sample.as_ref().map(grenander_fit).transpose()?;
    let curve = calibration_curve(&grid, pi0, density.as_ref())?;
    let cutoffs = calibration_cutoffs(&qs, pi0, sample.as_ref())?;
    let mut run = Run::create(&args.output.out_dir, "calibrate")?;
    out!("pi0 = {pi0}");
    for c in &cutoffs {
        out!(
            "q = {:<5} alpha_pi0 cutoff {}",
            c.q,
            c.alpha_pi0_cutoff.map_or("-".into(), |t| format!("{t:.6}"))
        );
    }
    run.table("", &curve)?;
    run.table("_cutoffs", &cutoffs)?;
    run.finish(args, None)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate { experiment } => match experiment {
            Experiment::BfdrCurve(a) => cmd_bfdr_curve(a).map(|_| true),
            Experiment::CorrSweep(a) => cmd_corr_sweep(a).map(|_| true),
            Experiment::PowerHeatmap(a) => cmd_power_heatmap(a).map(|_| true),
            Experiment::LfdrVariability(a) => cmd_lfdr_variability(a).map(|_| true),
            Experiment::Lemmas(a) => cmd_lemmas(a).map(|(_, ok)| ok),
            Experiment::Asymptotics(a) => cmd_asymptotics(a).map(|_| true),
        },
        Command::Analyze(a) => cmd_analyze(a).map(|_| true),
        Command::Calibrate(a) => cmd_calibrate(a).map(|_| true),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: one or more checks failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Entry point for the `bfdr` binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.05:0.4:0.05").unwrap().len(), 8);
        assert_eq!(parse_grid("0.05:0.4:0.05").unwrap()[2], 0.15);
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("0.2:0.2:0.1").unwrap(), vec![0.2]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert_eq!(parse_sizes("16,64").unwrap(), vec![16, 64]);
        assert!(parse_sizes("1.5").is_err());
    }

    #[test]
    fn roster_selection() {
        let r = select_roster(Family::Sl, 0.2, &["SL".into(), "TSSL(q')".into()], true).unwrap();
        assert_eq!(r.len(), 2);
        assert!(select_roster(Family::Sl, 0.2, &["Oracle".into()], false).is_err());
        assert!(select_roster(Family::Sl, 0.2, &["nope".into()], true).is_err());
    }
}
