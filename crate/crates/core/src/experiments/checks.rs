//! Exact and sampling checks of the basic building blocks: inversion tables,
//! the finite samplers, `g`, the θ root finder and the renewal law.

use std::time::Instant;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{replicate_rng, ExperimentReport, Source};
use crate::error::Result;
use crate::fit::{fit_theta_from_mean, mean_inversions_g};
use crate::perm::{decode_inversion_table, inversion_table, kendall_tau, permutations, Permutation};
use crate::regen::{component_length_law, expected_component_length, renewal_monte_carlo_parallel};
use crate::sample::{sample_mallows_phi, RowDistribution};

fn brute_inversions(word: &[u32]) -> u64 {
    let mut count = 0;
    for i in 0..word.len() {
        for j in i + 1..word.len() {
            count += u64::from(word[i] > word[j]);
        }
    }
    count
}

/// Inversion-table round trip and `Σ s_j = inv` over all of `S_n`, `n ≤ max_n`.
pub fn bijection_suite(max_n: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("bijection");
    report.param("max_n", max_n);
    let mut checked = 0u64;
    let mut roundtrip_failures = 0u64;
    let mut sum_failures = 0u64;
    for n in 1..=max_n {
        for p in permutations(n) {
            let table = inversion_table(&p);
            if decode_inversion_table(&table, n)? != p {
                roundtrip_failures += 1;
            }
            if table.total() != brute_inversions(p.word()) {
                sum_failures += 1;
            }
            checked += 1;
        }
    }
    report.note("permutations_checked", checked as f64, 0.0, "count", Source::None);
    report.check(
        "roundtrip_failures",
        roundtrip_failures as f64,
        0.0,
        "== 0",
        Source::Identity,
        roundtrip_failures == 0,
    );
    report.check(
        "sum_failures",
        sum_failures as f64,
        0.0,
        "== 0",
        Source::Identity,
        sum_failures == 0,
    );
    report.runtime = start.elapsed();
    Ok(report)
}

/// χ² goodness of fit of the φ sampler on `S_4` against enumerated
/// probabilities, one row per θ.
pub fn sampler_suite(thetas: &[f64], draws: usize, alpha: f64, seed: u64) -> Result<ExperimentReport> {
    let start = Instant::now();
    let n = 4;
    let center = Permutation::from_word(vec![2, 4, 1, 3])?;
    let perms: Vec<Permutation> = permutations(n).collect();
    let cells = perms.len();
    let mut report = ExperimentReport::new("sampler");
    report
        .param("n", n)
        .param("draws", draws)
        .param("alpha", alpha)
        .param("seed", seed);
    let crit = ChiSquared::new((cells - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha);
    let index_of = |p: &Permutation| perms.iter().position(|q| q == p).expect("sampled a permutation of S_4");
    for (k, &theta) in thetas.iter().enumerate() {
        let weights: Vec<f64> = perms
            .iter()
            .map(|p| Ok((-theta * kendall_tau(p, &center)? as f64).exp()))
            .collect::<Result<_>>()?;
        let z: f64 = weights.iter().sum();
        let chunks = 64usize;
        let counts = (0..chunks)
            .into_par_iter()
            .map(|c| -> Result<Vec<u64>> {
                let mut rng = replicate_rng(seed, "sampler", (k * chunks + c) as u64);
                let m = draws / chunks + usize::from(c < draws % chunks);
                let mut counts = vec![0u64; cells];
                for _ in 0..m {
                    counts[index_of(&sample_mallows_phi(n, theta, &center, &mut rng)?)] += 1;
                }
                Ok(counts)
            })
            .try_reduce(
                || vec![0u64; cells],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )?;
        let chi2: f64 = counts
            .iter()
            .zip(&weights)
            .map(|(&o, w)| {
                let e = draws as f64 * w / z;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        report.check(
            format!("chi2_theta_{theta}"),
            chi2,
            crit,
            format!("< chi2 quantile {:.4} ({} dof)", 1.0 - alpha, cells - 1),
            Source::Exact,
            chi2 < crit,
        );
    }
    report.runtime = start.elapsed();
    Ok(report)
}

/// `g(q)` against brute-force enumeration of `S_n`.
pub fn g_oracle_suite(max_n: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("g-oracle");
    report.param("max_n", max_n);
    let mut worst = 0.0f64;
    for n in 2..=max_n {
        let invs: Vec<f64> = permutations(n).map(|p| p.inversions() as f64).collect();
        for k in 1..=9 {
            let q = k as f64 / 10.0;
            let (mut f, mut num) = (0.0, 0.0);
            for &i in &invs {
                let w = q.powf(i);
                f += w;
                num += i * w;
            }
            let brute = num / f;
            let g = mean_inversions_g(q, n)?;
            worst = worst.max((g - brute).abs() / brute);
        }
    }
    report.check(
        "max_relative_error",
        worst,
        1e-10,
        "<= 1e-10",
        Source::Exact,
        worst <= 1e-10,
    );
    report.runtime = start.elapsed();
    Ok(report)
}

/// θ̂ from the exact mean inversions reproduces θ.
pub fn mle_inverse_suite() -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("mle-inverse");
    for theta in [0.1f64, 1.0, 5.0] {
        let mut worst = 0.0f64;
        for n in [2usize, 3, 5, 8, 12, 20, 50] {
            let q = (-theta).exp();
            let fit = fit_theta_from_mean(mean_inversions_g(q, n)?, n);
            worst = worst.max((fit.theta - theta).abs());
        }
        report.check(
            format!("theta_{theta}_max_abs_error"),
            worst,
            1e-8,
            "<= 1e-8",
            Source::Identity,
            worst <= 1e-8,
        );
    }
    report.runtime = start.elapsed();
    Ok(report)
}

/// Effective length by the product formula and by the renewal series, plus
/// a streamed Monte Carlo mean.
pub fn renewal_suite(components: usize, seed: u64) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("renewal");
    report.param("components", components).param("seed", seed);
    for &theta in &[0.5, 1.0, 2.0] {
        let el = expected_component_length(theta)?;
        let law = component_length_law(&RowDistribution::geometric(theta)?, None)?;
        let rel = (law.mean() - el).abs() / el;
        report.check(
            format!("two_route_theta_{theta}"),
            law.mean(),
            el,
            "relative error <= 1e-4",
            Source::Exact,
            rel <= 1e-4,
        );
    }
    let q = (-1.0f64).exp();
    let product: f64 = (1..=60).map(|k| 1.0 - q.powi(k)).product();
    let el1 = expected_component_length(1.0)?;
    report.check(
        "effective_length_theta_1",
        el1,
        1.0 / product,
        "|x - 60-factor product| <= 1e-3",
        Source::Exact,
        (el1 - 1.0 / product).abs() <= 1e-3,
    );
    report.check(
        "effective_length_theta_1_value",
        el1,
        1.9824,
        "|x - 1.9824| <= 1e-3",
        Source::Reported,
        (el1 - 1.9824).abs() <= 1e-3,
    );
    let mc = renewal_monte_carlo_parallel(1.0, components, seed, 16)?;
    let se = mc.standard_error();
    report.check(
        "monte_carlo_mean_theta_1",
        mc.empirical_mean(),
        el1,
        format!("within 3 SE (SE = {se:.3e})"),
        Source::Exact,
        (mc.empirical_mean() - el1).abs() <= 3.0 * se,
    );
    report.runtime = start.elapsed();
    Ok(report)
}
