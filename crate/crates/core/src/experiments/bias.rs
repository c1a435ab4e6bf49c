//! Upward bias of the dispersion MLE, for Mallows' φ (known and estimated
//! center) and for the single-parameter top-t infinite model.

use std::time::Instant;

use rayon::prelude::*;

use super::{mean_se, replicate_rng, ExperimentReport, Source};
use crate::data::{RankingDataset, Universe};
use crate::error::Result;
use crate::fit::{center_objective, fit_center, fit_igm_single, fit_theta_known_center, CenterOptions};
use crate::perm::{CentralOrder, Permutation};
use crate::sample::{sample_igm_top_t, sample_mallows_phi, DispersionVector};

#[derive(Debug, Clone, PartialEq)]
pub struct BiasConfig {
    pub n: usize,
    pub theta: f64,
    /// Sample size `N` per replicate.
    pub n_samples: usize,
    pub replicates: usize,
    pub seed: u64,
}

/// Bias is declared positive when the mean exceeds θ by this many standard errors.
pub const BIAS_SE: f64 = 5.0;

struct Replicate {
    known: f64,
    unknown: f64,
    objective_ok: bool,
}

/// Mallows' φ: θ̂ with the true center and with the consensus center. Also
/// checks, on every replicate, that the consensus center has no larger total
/// discordance than the true one and hence no smaller θ̂.
pub fn mc_bias_theta(cfg: &BiasConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let tag = format!("bias-phi-{}-{}-{}", cfg.n, cfg.theta, cfg.n_samples);
    let truth = Permutation::from_ranked_list(&(1..=cfg.n as u32).rev().collect::<Vec<_>>())?;
    let truth_ranked = truth.ranked_list();
    let options = CenterOptions::default();
    let reps: Vec<Replicate> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| -> Result<Replicate> {
            let mut rng = replicate_rng(cfg.seed, &tag, i as u64);
            let sample = (0..cfg.n_samples)
                .map(|_| sample_mallows_phi(cfg.n, cfg.theta, &truth, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let data = RankingDataset::from_permutations(&sample)?;
            let known = fit_theta_known_center(&data, &truth)?.theta;
            let center = fit_center(&data, &options)?;
            let estimated = Permutation::from_ranked_list(&center.ranked)?;
            let unknown = fit_theta_known_center(&data, &estimated)?.theta;
            let objective_ok = center.objective <= center_objective(&data, &truth_ranked, &options)?;
            Ok(Replicate {
                known,
                unknown,
                objective_ok,
            })
        })
        .collect::<Result<_>>()?;

    let known: Vec<f64> = reps.iter().map(|r| r.known).collect();
    let unknown: Vec<f64> = reps.iter().map(|r| r.unknown).collect();
    let (mk, sek) = mean_se(&known);
    let (mu, seu) = mean_se(&unknown);
    let objective_violations = reps.iter().filter(|r| !r.objective_ok).count();
    let order_violations = reps.iter().filter(|r| r.unknown < r.known).count();

    let mut report = ExperimentReport::new("bias-phi");
    report
        .param("n", cfg.n)
        .param("theta", cfg.theta)
        .param("N", cfg.n_samples)
        .param("replicates", cfg.replicates)
        .param("seed", cfg.seed);
    let prefix = format!("n{}_N{}_theta{}", cfg.n, cfg.n_samples, cfg.theta);
    report.check(
        format!("{prefix}_bias_known"),
        mk - cfg.theta,
        BIAS_SE * sek,
        format!("bias > {BIAS_SE} SE"),
        Source::Bound,
        mk - cfg.theta > BIAS_SE * sek,
    );
    report.check(
        format!("{prefix}_bias_unknown"),
        mu - cfg.theta,
        mk - cfg.theta,
        "bias >= known-center bias",
        Source::Bound,
        mu >= mk,
    );
    report.note(format!("{prefix}_se_unknown"), seu, 0.0, "standard error", Source::None);
    report.check(
        format!("{prefix}_objective_violations"),
        objective_violations as f64,
        0.0,
        "== 0",
        Source::Identity,
        objective_violations == 0,
    );
    report.check(
        format!("{prefix}_theta_order_violations"),
        order_violations as f64,
        0.0,
        "== 0",
        Source::Identity,
        order_violations == 0,
    );
    report.runtime = start.elapsed();
    Ok(report)
}

/// Single-parameter top-t infinite model with the true (identity) center.
pub fn mc_bias_igm(t: usize, cfg: &BiasConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let tag = format!("bias-igm-{t}-{}-{}", cfg.theta, cfg.n_samples);
    let thetas = DispersionVector::constant(cfg.theta, t)?;
    let center = CentralOrder::identity();
    let estimates: Vec<f64> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = replicate_rng(cfg.seed, &tag, i as u64);
            let rankings = (0..cfg.n_samples)
                .map(|_| sample_igm_top_t(&thetas, &center, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let data = RankingDataset::from_rankings(Universe::Open, rankings)?;
            Ok(fit_igm_single(&data, &center, t)?.theta)
        })
        .collect::<Result<_>>()?;
    let (m, se) = mean_se(&estimates);
    let mut report = ExperimentReport::new("bias-igm");
    report
        .param("t", t)
        .param("theta", cfg.theta)
        .param("N", cfg.n_samples)
        .param("replicates", cfg.replicates)
        .param("seed", cfg.seed);
    report.check(
        format!("t{t}_N{}_theta{}_bias", cfg.n_samples, cfg.theta),
        m - cfg.theta,
        BIAS_SE * se,
        format!("bias > {BIAS_SE} SE"),
        Source::Bound,
        m - cfg.theta > BIAS_SE * se,
    );
    report.runtime = start.elapsed();
    Ok(report)
}
