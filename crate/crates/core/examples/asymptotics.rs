//! Population thresholds of the two-stage procedure and how the boundary lfdr
//! approaches its limit as m grows.

use bfdr::asymptotics::{convergence_probe, population_thresholds, boundary_lfdr_limit, PopulationModel, ProbeOptions};
use bfdr::{AltConfig, MeanConfig};

fn main() -> bfdr::Result<()> {
    let model = PopulationModel::new(AltConfig::new(MeanConfig::Alternating, 0.75)?);
    let q = 0.2;
    let (t1, t2) = population_thresholds(&model, q)?;
    let limit = boundary_lfdr_limit(&model, q)?;
    println!("t1* = {t1:.6}, t2* = {t2:.6}, limit = {limit:.5} (bound {:.5})", q / (1.0 - q));
    let opts = ProbeOptions {
        q,
        m_list: vec![256, 1024],
        n_reps: 300,
        seed: 1,
        rho: 0.0,
        workers: None,
    };
    for r in convergence_probe(&model, &opts)? {
        println!("m = {:>5}: mean lfdr {:.4}, mean gap {:.4} (se {:.4})", r.m, r.mean_lfdr, r.mean_gap, r.gap_se);
    }
    Ok(())
}
