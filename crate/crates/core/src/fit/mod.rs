//! Maximum-likelihood estimation for Mallows' φ, Generalized Mallows and the
//! infinite (top-t) Generalized Mallows models.

pub mod consensus;
pub mod special;

use serde::Serialize;

use crate::data::RankingDataset;
use crate::error::{Error, Result};
use crate::perm::{prefix_inversion_table, CentralOrder, Permutation};
use crate::sample::DispersionVector;

pub use consensus::{center_objective, fit_center, CenterFit, CenterOptions, CenterStrategy, PairCosts, EXACT_LIMIT};
pub use special::{log_q_factorial, mean_inversions_g, q_factorial, stage_mean, stage_variance};

use special::{log_stage_normalizer, mean_inversions_theta, var_inversions_theta};

/// Upper clamp for θ̂, used when the data show no discordance at all.
pub const THETA_MAX: f64 = 50.0;
/// Lower clamp for θ̂, used when the data are at least as spread as uniform.
pub const THETA_MIN: f64 = 1e-8;

const MAX_BISECTIONS: u32 = 200;
const MAX_NEWTON: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clamp {
    None,
    /// No finite maximizer: θ̂ = ∞, reported as [`THETA_MAX`].
    Max,
    /// Maximizer at θ ≤ 0, reported as [`THETA_MIN`].
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaFit {
    pub theta: f64,
    pub iterations: u32,
    /// `model mean(θ̂) - observed mean`.
    pub residual: f64,
    pub clamp: Clamp,
}

impl ThetaFit {
    fn clamped(theta: f64, clamp: Clamp) -> Self {
        ThetaFit {
            theta,
            iterations: 0,
            residual: 0.0,
            clamp,
        }
    }
}

/// Per-stage discordance totals for a dataset relative to a center.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    /// `Σ count · s_j` over observations reaching stage `j` (index `j - 1`).
    pub stage_sums: Vec<f64>,
    /// Number of observations (with multiplicity) reaching stage `j`.
    pub stage_counts: Vec<u64>,
    /// Sample size `N`.
    pub n_obs: u64,
}

impl SufficientStats {
    /// Statistics of the top `t` stages (all stages when `t` is `None`).
    pub fn new(data: &RankingDataset, center: &CentralOrder, t: Option<usize>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let depth = t.unwrap_or(usize::MAX).min(data.t_max());
        let mut stats = SufficientStats {
            stage_sums: vec![0.0; depth],
            stage_counts: vec![0; depth],
            n_obs: data.total_count(),
        };
        for obs in data.observations() {
            let items = &obs.ranking.items()[..obs.ranking.len().min(depth)];
            let s = prefix_inversion_table(&center.relative_ranks(items));
            for (j, &sj) in s.as_slice().iter().enumerate() {
                stats.stage_sums[j] += (obs.count * sj) as f64;
                stats.stage_counts[j] += obs.count;
            }
        }
        Ok(stats)
    }

    /// Mean discordance `s̄_j` at 1-based stage `j`, if any observation reaches it.
    pub fn stage_mean(&self, j: usize) -> Option<f64> {
        let c = *self.stage_counts.get(j.checked_sub(1)?)?;
        (c > 0).then(|| self.stage_sums[j - 1] / c as f64)
    }

    /// Mean of the summed discordance per observation, `(1/N) Σ_i Σ_j s_j`.
    pub fn mean_total(&self) -> f64 {
        self.stage_sums.iter().sum::<f64>() / self.n_obs as f64
    }

    /// Mean over all stage observations pooled together.
    pub fn pooled_mean(&self) -> f64 {
        let count: u64 = self.stage_counts.iter().sum();
        self.stage_sums.iter().sum::<f64>() / count as f64
    }
}

/// Root of `mean(θ) = target` for a strictly decreasing `mean`, with `var`
/// its negated derivative. `upper` is the `θ → 0` limit of `mean`.
fn solve_decreasing(mean: impl Fn(f64) -> f64, var: impl Fn(f64) -> f64, target: f64, upper: f64) -> ThetaFit {
    if target <= 0.0 {
        return ThetaFit::clamped(THETA_MAX, Clamp::Max);
    }
    if target >= upper {
        return ThetaFit::clamped(THETA_MIN, Clamp::Min);
    }
    let f = |t: f64| mean(t) - target;
    if f(THETA_MAX) >= 0.0 {
        return ThetaFit::clamped(THETA_MAX, Clamp::Max);
    }
    if f(THETA_MIN) <= 0.0 {
        return ThetaFit::clamped(THETA_MIN, Clamp::Min);
    }
    let (mut lo, mut hi) = (THETA_MIN, THETA_MAX);
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let r = f(theta);
        let d = var(theta);
        if r == 0.0 || d <= 0.0 {
            break;
        }
        let next = theta + r / d;
        if !(lo..=hi).contains(&next) || next == theta {
            break;
        }
        iterations += 1;
        theta = next;
    }
    ThetaFit {
        theta,
        iterations,
        residual: f(theta),
        clamp: Clamp::None,
    }
}

/// θ̂ of Mallows' φ on `S_n` from the mean number of inversions.
pub fn fit_theta_from_mean(mean_inversions: f64, n: usize) -> ThetaFit {
    let upper = (n * n.saturating_sub(1)) as f64 / 4.0;
    solve_decreasing(
        |t| mean_inversions_theta(t, n),
        |t| var_inversions_theta(t, n),
        mean_inversions,
        upper,
    )
}

/// θ_j of a Generalized Mallows stage with support `{0, …, m-1}`.
pub fn fit_stage_from_mean(mean: f64, m: u64) -> ThetaFit {
    solve_decreasing(
        |t| stage_mean(t, m),
        |t| stage_variance(t, m),
        mean,
        (m as f64 - 1.0) / 2.0,
    )
}

/// Geometric MLE `θ̂ = ln(1 + 1/s̄)`.
pub fn fit_geometric_from_mean(mean: f64) -> ThetaFit {
    if mean <= 0.0 {
        return ThetaFit::clamped(THETA_MAX, Clamp::Max);
    }
    let theta = (1.0 / mean).ln_1p();
    if theta > THETA_MAX {
        ThetaFit::clamped(THETA_MAX, Clamp::Max)
    } else if theta < THETA_MIN {
        ThetaFit::clamped(THETA_MIN, Clamp::Min)
    } else {
        ThetaFit {
            theta,
            iterations: 0,
            residual: 0.0,
            clamp: Clamp::None,
        }
    }
}

fn complete_center(data: &RankingDataset, center: &Permutation) -> Result<(CentralOrder, usize)> {
    let perms = data.permutations()?;
    let n = perms[0].0.len();
    if center.len() != n {
        return Err(Error::SizeMismatch {
            left: center.len(),
            right: n,
        });
    }
    Ok((CentralOrder::new(center.ranked_list())?, n))
}

/// Mallows' φ dispersion for complete rankings with a known center.
pub fn fit_theta_known_center(data: &RankingDataset, center: &Permutation) -> Result<ThetaFit> {
    let (order, n) = complete_center(data, center)?;
    let stats = SufficientStats::new(data, &order, None)?;
    Ok(fit_theta_from_mean(stats.mean_total(), n))
}

/// Generalized Mallows dispersions `θ_1 … θ_{n-1}` with a known center. The
/// last stage has a single possible value and carries no parameter.
pub fn fit_gm_known_center(data: &RankingDataset, center: &Permutation) -> Result<Vec<ThetaFit>> {
    let (order, n) = complete_center(data, center)?;
    let stats = SufficientStats::new(data, &order, Some(n.saturating_sub(1)))?;
    Ok((1..n)
        .map(|j| fit_stage_from_mean(stats.stage_mean(j).unwrap_or(0.0), (n - j + 1) as u64))
        .collect())
}

/// Stagewise IGM dispersions for the top `t` stages. Stages that no
/// observation reaches are an error.
pub fn fit_igm_thetas(data: &RankingDataset, center: &CentralOrder, t: usize) -> Result<Vec<ThetaFit>> {
    let stats = SufficientStats::new(data, center, Some(t))?;
    (1..=t)
        .map(|j| {
            stats
                .stage_mean(j)
                .map(fit_geometric_from_mean)
                .ok_or_else(|| Error::input(format!("no observation reaches stage {j}")))
        })
        .collect()
}

/// Single-parameter IGM: one θ for all of the top `t` stages.
pub fn fit_igm_single(data: &RankingDataset, center: &CentralOrder, t: usize) -> Result<ThetaFit> {
    if t == 0 {
        return Err(Error::input("t must be at least 1"));
    }
    let stats = SufficientStats::new(data, center, Some(t))?;
    Ok(fit_geometric_from_mean(stats.pooled_mean()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Phi,
    Gm,
    Igm,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(ModelKind::Phi),
            "gm" => Ok(ModelKind::Gm),
            "igm" => Ok(ModelKind::Igm),
            other => Err(Error::input(format!(
                "unknown model '{other}' (expected phi, gm or igm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub stages: Vec<ThetaFit>,
    /// Consensus objective of the center, when it was estimated.
    pub center_objective: Option<f64>,
    pub center_exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub kind: ModelKind,
    /// One entry for φ, `n - 1` for GM, `t` for IGM (or one when pooled).
    pub thetas: Vec<f64>,
    /// Number of ranks the model covers: `n` for φ and GM, `t` for IGM.
    pub t: usize,
    /// Center as a ranked list, best first.
    pub center: Vec<u32>,
    pub log_likelihood: f64,
    pub diagnostics: Diagnostics,
}

impl FittedModel {
    pub fn dispersion(&self) -> Result<DispersionVector> {
        DispersionVector::new(self.thetas.clone())
    }

    /// θ for 1-based stage `j`; a pooled model repeats its single value.
    fn stage_theta(&self, j: usize) -> f64 {
        if self.thetas.len() == 1 {
            self.thetas[0]
        } else {
            self.thetas[j - 1]
        }
    }
}

/// Exact log density of the data under a fitted model. φ and GM need
/// complete rankings of the model's `n` items; IGM needs lists of length at
/// most `t`.
pub fn log_likelihood(data: &RankingDataset, model: &FittedModel) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(bad) = model.thetas.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::input(format!("dispersion {bad} must be finite and positive")));
    }
    let center = CentralOrder::new(model.center.clone())?;
    let mut total = 0.0;
    for obs in data.observations() {
        let len = obs.ranking.len();
        let stages = match model.kind {
            ModelKind::Phi | ModelKind::Gm => {
                if len != model.t || model.center.len() != model.t {
                    return Err(Error::input(format!(
                        "observation of length {len} does not fit a model on {} items",
                        model.t
                    )));
                }
                model.t.saturating_sub(1)
            }
            ModelKind::Igm => {
                if len > model.t {
                    return Err(Error::input(format!(
                        "observation of length {len} is longer than the model's t = {}",
                        model.t
                    )));
                }
                len
            }
        };
        let s = prefix_inversion_table(&center.relative_ranks(obs.ranking.items()));
        let mut lp = 0.0;
        for j in 1..=stages {
            let theta = model.stage_theta(j);
            let sj = s.as_slice()[j - 1] as f64;
            lp -= theta * sj;
            lp += match model.kind {
                ModelKind::Igm => (-(-theta).exp_m1()).ln(),
                _ => -log_stage_normalizer(theta, (model.t - j + 1) as u64),
            };
        }
        total += obs.count as f64 * lp;
    }
    Ok(total)
}

/// 1-based rank of `target` in a ranked list; an item missing from the list
/// is put at the end, one past its length.
pub fn target_rank(center: &[u32], target: u32) -> usize {
    center
        .iter()
        .position(|&c| c == target)
        .map_or(center.len() + 1, |i| i + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub kind: ModelKind,
    /// IGM depth; defaults to the longest observation.
    pub t: Option<usize>,
    /// IGM with one shared θ.
    pub single_parameter: bool,
    /// Known center as a ranked list; estimated when `None`.
    pub center: Option<Vec<u32>>,
    pub center_options: CenterOptions,
}

impl FitOptions {
    pub fn new(kind: ModelKind) -> Self {
        FitOptions {
            kind,
            t: None,
            single_parameter: false,
            center: None,
            center_options: CenterOptions::default(),
        }
    }
}

/// Fits center and dispersion(s). The center, when estimated, uses every
/// observed stage of the data with unit weights; IGM dispersions use the
/// data truncated to the top `t`.
pub fn fit(data: &RankingDataset, options: &FitOptions) -> Result<FittedModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (center, center_fit) = match &options.center {
        Some(c) => (c.clone(), None),
        None => {
            let cf = fit_center(data, &options.center_options)?;
            (cf.ranked.clone(), Some(cf))
        }
    };
    let mut model = match options.kind {
        ModelKind::Phi | ModelKind::Gm => {
            let perm = Permutation::from_ranked_list(&center)?;
            let n = perm.len();
            let stages = if options.kind == ModelKind::Phi {
                vec![fit_theta_known_center(data, &perm)?]
            } else {
                fit_gm_known_center(data, &perm)?
            };
            FittedModel {
                kind: options.kind,
                thetas: stages.iter().map(|s| s.theta).collect(),
                t: n,
                center,
                log_likelihood: 0.0,
                diagnostics: Diagnostics {
                    stages,
                    center_objective: None,
                    center_exact: None,
                },
            }
        }
        ModelKind::Igm => {
            let t = options.t.unwrap_or_else(|| data.t_max());
            if t == 0 {
                return Err(Error::input("t must be at least 1"));
            }
            let order = CentralOrder::new(center.clone())?;
            let stages = if options.single_parameter {
                vec![fit_igm_single(data, &order, t)?]
            } else {
                fit_igm_thetas(data, &order, t)?
            };
            FittedModel {
                kind: ModelKind::Igm,
                thetas: stages.iter().map(|s| s.theta).collect(),
                t,
                center,
                log_likelihood: 0.0,
                diagnostics: Diagnostics {
                    stages,
                    center_objective: None,
                    center_exact: None,
                },
            }
        }
    };
    if let Some(cf) = center_fit {
        model.diagnostics.center_objective = Some(cf.objective);
        model.diagnostics.center_exact = Some(cf.exact);
    }
    model.log_likelihood = match model.kind {
        ModelKind::Igm => log_likelihood(&data.truncated(model.t), &model)?,
        _ => log_likelihood(data, &model)?,
    };
    Ok(model)
}
