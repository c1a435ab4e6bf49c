//! Named experiment suites, shared by the `verify` command and the
//! acceptance tests.

use std::path::PathBuf;
use std::time::Instant;

use super::bias::{mc_bias_igm, mc_bias_theta, BiasConfig};
use super::center::{mc_center_error_rate, CenterRateConfig};
use super::checks::{bijection_suite, g_oracle_suite, mle_inverse_suite, renewal_suite, sampler_suite};
use super::synthetic::{
    homepage_pipeline, homepage_report, recovery_report, reproduce_table2, table1_replicates, table1_report,
};
use super::{ExperimentReport, Source};
use crate::data::RankingDataset;
use crate::error::{Error, Result};
use crate::fit::{fit, CenterOptions, FitOptions, ModelKind};
use crate::io::read_rankings;
use crate::select::{select_t, SelectOptions};

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 13] = [
    "bijection",
    "sampler",
    "g-oracle",
    "mle-inverse",
    "bias",
    "center-rate",
    "renewal",
    "table1",
    "recovery",
    "table2",
    "homepage",
    "apa",
    "all",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Ranking file for the `apa` suite.
    pub apa_data: Option<PathBuf>,
    /// List lengths for the `table2` suite.
    pub table2_t_max: Vec<usize>,
    pub table2_replicates: usize,
    pub homepage_queries: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 20_240_601,
            apa_data: None,
            table2_t_max: vec![10, 20, 40],
            table2_replicates: 50,
            homepage_queries: 147,
        }
    }
}

fn timed(mut report: ExperimentReport, start: Instant) -> ExperimentReport {
    report.runtime = start.elapsed();
    report
}

/// Bias on the grid `n ∈ {3, 5}`, `N ∈ {2, 5, 10}`, `θ ∈ {0.5, 1, 2}`, merged
/// into one report (φ rows followed by top-t rows with `t = n`).
pub fn bias_grid(seed: u64, replicates: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut merged = ExperimentReport::new("bias");
    merged.param("replicates", replicates).param("seed", seed);
    for n in [3usize, 5] {
        for n_samples in [2usize, 5, 10] {
            for theta in [0.5, 1.0, 2.0] {
                let cfg = BiasConfig {
                    n,
                    theta,
                    n_samples,
                    replicates,
                    seed,
                };
                merged.checks.extend(mc_bias_theta(&cfg)?.checks);
                merged
                    .checks
                    .extend(mc_bias_igm(n, &cfg)?.checks.into_iter().map(|mut c| {
                        c.name = format!("igm_{}", c.name);
                        c
                    }));
            }
        }
    }
    Ok(timed(merged, start))
}

/// Error rate of the consensus center for `n ∈ {2, 3}`, `θ ∈ {1, 2}`,
/// `N ∈ {5, 10, 20, 40}`.
pub fn center_grid(seed: u64, replicates: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut merged = ExperimentReport::new("center-rate");
    merged.param("replicates", replicates).param("seed", seed);
    for n in [2usize, 3] {
        for theta in [1.0, 2.0] {
            let cfg = CenterRateConfig {
                n,
                theta,
                sample_sizes: vec![5, 10, 20, 40],
                replicates,
                seed,
            };
            merged.checks.extend(mc_center_error_rate(&cfg)?.checks);
        }
    }
    Ok(timed(merged, start))
}

/// Reported single-parameter θ̂(t), `t = 1..=5`, on the election data.
pub const APA_THETAS: [f64; 5] = [0.47, 0.50, 0.54, 0.62, 0.72];
/// Reported stagewise θ̂ at `t = 2`.
pub const APA_IGM2: [f64; 2] = [0.46, 0.54];
/// Reported center.
pub const APA_CENTER: [u32; 5] = [3, 1, 5, 4, 2];

/// Checks against the reported election-data analysis.
pub fn apa_report(data: &RankingDataset) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("apa");
    report.param("N", data.total_count()).param("t_max", data.t_max());
    let scan = SelectOptions {
        window: Some((1..=data.t_max().min(5)).collect()),
        lambda: 0.99,
        ..SelectOptions::default()
    };
    let (_, trace) = select_t(data, &scan)?;
    for c in &trace.candidates {
        let want = APA_THETAS[c.t - 1];
        report.check(
            format!("theta_single_t{}", c.t),
            c.theta,
            want,
            "within 0.02",
            Source::Reported,
            (c.theta - want).abs() <= 0.02,
        );
    }
    let (chosen, _) = select_t(data, &SelectOptions::default())?;
    report.check("selected_t", chosen as f64, 2.0, "== 2", Source::Reported, chosen == 2);
    let model = fit(
        data,
        &FitOptions {
            t: Some(2),
            center_options: CenterOptions::default(),
            ..FitOptions::new(ModelKind::Igm)
        },
    )?;
    for (j, &want) in APA_IGM2.iter().enumerate() {
        let got = model.thetas[j];
        report.check(
            format!("theta_igm2_{}", j + 1),
            got,
            want,
            "within 0.02",
            Source::Reported,
            (got - want).abs() <= 0.02,
        );
    }
    let center_ok = model.center.len() >= 5 && model.center[..5] == APA_CENTER;
    report.check(
        "center",
        f64::from(u8::from(center_ok)),
        1.0,
        "== (3|1|5|4|2)",
        Source::Reported,
        center_ok,
    );
    Ok(timed(report, start))
}

/// Runs the named suite. `all` runs every suite except `table2` (slow) and
/// `apa` (only when a data file is configured).
pub fn run_suite(name: &str, options: &SuiteOptions) -> Result<Vec<ExperimentReport>> {
    let seed = options.seed;
    let start = Instant::now();
    Ok(match name {
        "bijection" => vec![bijection_suite(8)?],
        "sampler" => vec![sampler_suite(&[0.5, 1.0, 2.0], 1_000_000, 0.01, seed)?],
        "g-oracle" => vec![g_oracle_suite(7)?],
        "mle-inverse" => vec![mle_inverse_suite()?],
        "bias" => vec![bias_grid(seed, 10_000)?],
        "center-rate" => vec![center_grid(seed, 10_000)?],
        "renewal" => vec![renewal_suite(100_000, seed)?],
        "table1" | "recovery" => {
            let reps = table1_replicates(seed, 50, 1000)?;
            let report = if name == "table1" {
                table1_report(&reps, seed)
            } else {
                recovery_report(&reps, seed)
            };
            vec![timed(report, start)]
        }
        "table2" => options
            .table2_t_max
            .iter()
            .map(|&t| reproduce_table2(seed, t, options.table2_replicates, 1000))
            .collect::<Result<_>>()?,
        "homepage" => {
            let out = homepage_pipeline(seed, options.homepage_queries)?;
            vec![timed(homepage_report(&out, options.homepage_queries, seed), start)]
        }
        "apa" => {
            let path = options
                .apa_data
                .as_ref()
                .ok_or_else(|| Error::input("the apa suite needs a data file"))?;
            vec![apa_report(&read_rankings(path, None)?)?]
        }
        "all" => {
            let mut all = Vec::new();
            for suite in [
                "bijection",
                "sampler",
                "g-oracle",
                "mle-inverse",
                "bias",
                "center-rate",
                "renewal",
            ] {
                all.extend(run_suite(suite, options)?);
            }
            let t1 = Instant::now();
            let reps = table1_replicates(seed, 50, 1000)?;
            all.push(timed(table1_report(&reps, seed), t1));
            all.push(timed(recovery_report(&reps, seed), t1));
            all.extend(run_suite("homepage", options)?);
            if options.apa_data.is_some() {
                all.extend(run_suite("apa", options)?);
            }
            all
        }
        other => {
            return Err(Error::input(format!(
                "unknown suite '{other}' (expected one of {})",
                SUITES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope", &SuiteOptions::default()).is_err());
        assert!(run_suite("apa", &SuiteOptions::default()).is_err());
    }

    #[test]
    fn quick_suites_pass() {
        for name in ["g-oracle", "mle-inverse"] {
            let reports = run_suite(name, &SuiteOptions::default()).unwrap();
            assert!(reports.iter().all(ExperimentReport::passed));
        }
    }
}
