//! Synthetic top-t pipelines: model size selection and parameter recovery on
//! data from the infinite model, an accuracy/timing comparison across list
//! lengths, and a many-small-queries pipeline shaped like search-engine
//! result aggregation.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use super::{mean_se, replicate_rng, ExperimentReport, Source};
use crate::data::{RankingDataset, Universe};
use crate::error::Result;
use crate::fit::{fit, fit_center, target_rank, CenterOptions, FitOptions, ModelKind};
use crate::perm::{CentralOrder, TopTRanking};
use crate::sample::{sample_igm_top_t, DispersionVector};
use crate::select::{select_t, SelectOptions};

/// Stage dispersions of the model-size experiment.
pub const TABLE1_THETAS: [f64; 6] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5];
/// Reported share (percent) of each selected size `t = 1..=6`.
pub const TABLE1_REPORTED: [f64; 6] = [0.0, 65.0, 35.0, 0.0, 0.0, 0.0];

/// `N` top-t rankings from the infinite model centered at the identity.
pub fn synthetic_igm_data<R: Rng + ?Sized>(thetas: &[f64], n_samples: usize, rng: &mut R) -> Result<RankingDataset> {
    let thetas = DispersionVector::new(thetas.to_vec())?;
    let center = CentralOrder::identity();
    let rankings = (0..n_samples)
        .map(|_| sample_igm_top_t(&thetas, &center, rng))
        .collect::<Result<Vec<_>>>()?;
    RankingDataset::from_rankings(Universe::Open, rankings)
}

fn top_k_is_identity(center: &[u32], k: usize) -> bool {
    center.len() >= k && center[..k].iter().zip(1..).all(|(&c, i)| c == i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Replicate {
    pub chosen: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub center_top6_ok: bool,
}

/// Runs the selection + fit pipeline on `replicates` datasets of `N` rankings.
pub fn table1_replicates(seed: u64, replicates: usize, n_samples: usize) -> Result<Vec<Table1Replicate>> {
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, "table1", i as u64);
            let data = synthetic_igm_data(&TABLE1_THETAS, n_samples, &mut rng)?;
            let (chosen, _) = select_t(&data, &SelectOptions::default())?;
            let options = FitOptions {
                t: Some(chosen.max(2)),
                center_options: CenterOptions::heuristic(),
                ..FitOptions::new(ModelKind::Igm)
            };
            let model = fit(&data, &options)?;
            Ok(Table1Replicate {
                chosen,
                theta1: model.thetas[0],
                theta2: model.thetas[1],
                center_top6_ok: top_k_is_identity(&model.center, 6),
            })
        })
        .collect()
}

/// Histogram of selected sizes.
pub fn table1_report(reps: &[Table1Replicate], seed: u64) -> ExperimentReport {
    let mut report = ExperimentReport::new("table1");
    report
        .param("replicates", reps.len())
        .param("seed", seed)
        .param("lambda", 0.5);
    let total = reps.len() as f64;
    let mut counts = [0usize; 6];
    for r in reps {
        counts[(r.chosen - 1).min(5)] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        report.note(
            format!("percent_t{}", k + 1),
            100.0 * c as f64 / total,
            TABLE1_REPORTED[k],
            "share of replicates",
            Source::Reported,
        );
    }
    let small = (counts[1] + counts[2]) as f64 / total;
    report.check("share_t2_or_t3", small, 0.9, ">= 0.9", Source::Reported, small >= 0.9);
    let mode = counts
        .iter()
        .enumerate()
        .max_by_key(|&(k, &c)| (c, std::cmp::Reverse(k)))
        .map(|(k, _)| k + 1)
        .unwrap_or(0);
    report.check("mode_t", mode as f64, 2.0, "== 2", Source::Reported, mode == 2);
    let pct2 = 100.0 * counts[1] as f64 / total;
    report.soft_check(
        "percent_t2_band",
        pct2,
        TABLE1_REPORTED[1],
        "within 15 points (informational)",
        Source::Reported,
        (pct2 - TABLE1_REPORTED[1]).abs() <= 15.0,
    );
    report
}

/// Recovery of `θ_1`, `θ_2` and the top of the center.
pub fn recovery_report(reps: &[Table1Replicate], seed: u64) -> ExperimentReport {
    let mut report = ExperimentReport::new("recovery");
    report.param("replicates", reps.len()).param("seed", seed);
    let t1: Vec<f64> = reps.iter().map(|r| r.theta1).collect();
    let t2: Vec<f64> = reps.iter().map(|r| r.theta2).collect();
    let (m1, _) = mean_se(&t1);
    let (m2, _) = mean_se(&t2);
    report.check(
        "theta1_mean",
        m1,
        1.0,
        "within 0.02",
        Source::Reported,
        (m1 - 1.0).abs() <= 0.02,
    );
    report.check(
        "theta2_mean",
        m2,
        0.9,
        "within 0.02",
        Source::Reported,
        (m2 - 0.9).abs() <= 0.02,
    );
    let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt();
    report.note("theta1_sd", sd(&t1, m1), 0.03, "reported spread", Source::Reported);
    report.note("theta2_sd", sd(&t2, m2), 0.02, "reported spread", Source::Reported);
    let lo = t1.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.check("theta1_min", lo, 0.90, ">= 0.90", Source::Reported, lo >= 0.90);
    report.check("theta1_max", hi, 1.12, "<= 1.12", Source::Reported, hi <= 1.12);
    let acc = reps.iter().filter(|r| r.center_top6_ok).count() as f64 / reps.len() as f64;
    report.check(
        "center_top6_accuracy",
        acc,
        0.95,
        ">= 0.95",
        Source::Reported,
        acc >= 0.95,
    );
    report
}

/// Reported center accuracy (percent) for IGM(t=1), IGM(t=10) and automatic
/// selection, keyed by `t_max`.
pub fn table2_reported(t_max: usize) -> Option<[f64; 3]> {
    match t_max {
        10 => Some([100.0, 100.0, 100.0]),
        20 => Some([94.0, 100.0, 100.0]),
        40 => Some([82.0, 100.0, 100.0]),
        _ => None,
    }
}

/// `θ_k = 1 - 0.025 (k - 1)` for `k = 1..=t_max`.
pub fn table2_thetas(t_max: usize) -> Vec<f64> {
    (0..t_max).map(|k| 1.0 - 0.025 * k as f64).collect()
}

/// Center accuracy (top six ranks equal `1..6`) and mean fitting time for
/// fixed `t = 1`, fixed `t = 10` and automatic `t`.
pub fn reproduce_table2(seed: u64, t_max: usize, replicates: usize, n_samples: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    let thetas = table2_thetas(t_max);
    let tag = format!("table2-{t_max}");
    // replicates run one after another so the timings are not contended
    let mut rows = Vec::with_capacity(replicates);
    for i in 0..replicates {
        let mut rng = replicate_rng(seed, &tag, i as u64);
        let data = synthetic_igm_data(&thetas, n_samples, &mut rng)?;
        let one = |t: usize| -> Result<(bool, Duration)> {
            let clock = Instant::now();
            let truncated = data.truncated(t);
            let center = fit_center(&truncated, &CenterOptions::heuristic())?.ranked;
            let options = FitOptions {
                t: Some(t),
                single_parameter: false,
                center: Some(center),
                ..FitOptions::new(ModelKind::Igm)
            };
            let model = fit(&truncated, &options)?;
            Ok((top_k_is_identity(&model.center, 6), clock.elapsed()))
        };
        let fixed1 = one(1)?;
        let fixed10 = one(10.min(t_max))?;
        let clock = Instant::now();
        let (chosen, _) = select_t(&data, &SelectOptions::default())?;
        let options = FitOptions {
            t: Some(chosen),
            center_options: CenterOptions::heuristic(),
            ..FitOptions::new(ModelKind::Igm)
        };
        let model = fit(&data, &options)?;
        let auto = (top_k_is_identity(&model.center, 6), clock.elapsed());
        rows.push([fixed1, fixed10, auto]);
    }
    let mut report = ExperimentReport::new(format!("table2-tmax{t_max}"));
    report
        .param("t_max", t_max)
        .param("replicates", replicates)
        .param("N", n_samples)
        .param("seed", seed);
    let reported = table2_reported(t_max);
    for (m, label) in ["igm_t1", "igm_t10", "auto"].iter().enumerate() {
        let acc = 100.0 * rows.iter().filter(|r| r[m].0).count() as f64 / replicates as f64;
        let secs = rows.iter().map(|r| r[m].1.as_secs_f64()).sum::<f64>() / replicates as f64;
        let reference = reported.map_or(f64::NAN, |r| r[m]);
        if m == 2 {
            report.check(
                format!("{label}_accuracy_percent"),
                acc,
                reference,
                ">= 95",
                Source::Reported,
                acc >= 95.0,
            );
        } else {
            report.note(
                format!("{label}_accuracy_percent"),
                acc,
                reference,
                "informational",
                Source::Reported,
            );
        }
        // wall-clock, never asserted; kept out of the deterministic CSV by
        // reporting it only in params
        report.param(&format!("{label}_mean_seconds"), format!("{secs:.4}"));
    }
    report.runtime = start.elapsed();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub n_lists: usize,
    pub t_max: usize,
    pub chosen_t: usize,
    /// Rank of the target item in the estimated center; one past the end
    /// when the center does not contain it.
    pub target_rank: usize,
}

/// Many small aggregation problems: each query has 1 to 21 lists of 1 to 30
/// items drawn from the infinite model, with item 1 as the target. Each is
/// run through automatic size selection, fitting and target ranking.
pub fn homepage_pipeline(seed: u64, queries: usize) -> Result<Vec<QueryOutcome>> {
    let thetas = DispersionVector::constant(0.7, 30)?;
    let center = CentralOrder::identity();
    (0..queries)
        .into_par_iter()
        .map(|q| {
            let mut rng = replicate_rng(seed, "homepage", q as u64);
            let n_lists = rng.random_range(1..=21usize);
            let lists = (0..n_lists)
                .map(|_| {
                    let len = rng.random_range(1..=30usize);
                    Ok(sample_igm_top_t(&thetas, &center, &mut rng)?.truncated(len))
                })
                .collect::<Result<Vec<TopTRanking>>>()?;
            let data = RankingDataset::from_rankings(Universe::Open, lists)?;
            let (chosen_t, _) = select_t(&data, &SelectOptions::default())?;
            let options = FitOptions {
                t: Some(chosen_t),
                center_options: CenterOptions::heuristic(),
                ..FitOptions::new(ModelKind::Igm)
            };
            let model = fit(&data, &options)?;
            Ok(QueryOutcome {
                n_lists,
                t_max: data.t_max(),
                chosen_t,
                target_rank: target_rank(&model.center, 1),
            })
        })
        .collect()
}

pub fn homepage_report(outcomes: &[QueryOutcome], queries: usize, seed: u64) -> ExperimentReport {
    let mut report = ExperimentReport::new("homepage");
    report.param("queries", queries).param("seed", seed);
    report.check(
        "queries_completed",
        outcomes.len() as f64,
        queries as f64,
        "== queries",
        Source::Identity,
        outcomes.len() == queries,
    );
    let ok = outcomes
        .iter()
        .all(|o| o.chosen_t >= 1 && o.chosen_t <= o.t_max && o.n_lists <= 21);
    report.check(
        "outcomes_well_formed",
        f64::from(u8::from(ok)),
        1.0,
        "chosen t within 1..=t_max",
        Source::Identity,
        ok,
    );
    let ranks: Vec<f64> = outcomes.iter().map(|o| o.target_rank as f64).collect();
    report.note(
        "mean_target_rank",
        mean_se(&ranks).0,
        f64::NAN,
        "informational",
        Source::None,
    );
    let top1 = outcomes.iter().filter(|o| o.target_rank == 1).count() as f64 / outcomes.len().max(1) as f64;
    report.note("target_top1_share", top1, f64::NAN, "informational", Source::None);
    let mean_t = mean_se(&outcomes.iter().map(|o| o.chosen_t as f64).collect::<Vec<_>>()).0;
    report.note("mean_chosen_t", mean_t, f64::NAN, "informational", Source::None);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thetas_match_reported_endpoints() {
        assert!((table2_thetas(10)[9] - 0.775).abs() < 1e-12);
        assert!((table2_thetas(20)[19] - 0.525).abs() < 1e-12);
        assert!((table2_thetas(40)[39] - 0.025).abs() < 1e-12);
    }

    #[test]
    fn small_table1_run() {
        let reps = table1_replicates(3, 4, 1000).unwrap();
        assert_eq!(reps.len(), 4);
        assert!(reps.iter().all(|r| (1..=3).contains(&r.chosen)));
        let report = recovery_report(&reps, 3);
        assert!(report.checks.iter().any(|c| c.name == "theta1_mean"));
    }

    #[test]
    fn homepage_runs() {
        let out = homepage_pipeline(2, 12).unwrap();
        assert_eq!(out.len(), 12);
        assert!(homepage_report(&out, 12, 2).passed());
        assert_eq!(out, homepage_pipeline(2, 12).unwrap());
    }
}
