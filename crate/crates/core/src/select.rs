//! Top-t model size selection by matching `t` to the effective length
//! `1/(e^{-θ̂(t)}; e^{-θ̂(t)})_∞` of the fitted single-parameter model.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::RankingDataset;
use crate::error::{Error, Result};
use crate::fit::{fit_center, fit_igm_single, CenterOptions, Clamp};
use crate::perm::CentralOrder;
use crate::regen::expected_component_length;

/// Effective length of the single-parameter infinite model at `θ`.
pub fn effective_length(theta: f64) -> Result<f64> {
    expected_component_length(theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOptions {
    /// Cutoff fraction λ ∈ (0, 1).
    pub lambda: f64,
    /// Candidate sizes; a window around the first effective length when `None`.
    pub window: Option<Vec<usize>>,
    pub center: CenterOptions,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            lambda: 0.5,
            window: None,
            center: CenterOptions::heuristic(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub t: usize,
    pub theta: f64,
    pub clamp: Clamp,
    pub effective_length: f64,
    /// `|t - effective_length|`.
    pub error: f64,
    pub center: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace {
    /// θ̂ of the single-parameter model at `t = 1`.
    pub theta0: f64,
    pub effective_length0: f64,
    /// Ordered by `t`.
    pub candidates: Vec<Candidate>,
    /// Minimizer of the error before the cutoff.
    pub argmin: usize,
    /// `max(1, ⌊λ t_max⌋)`.
    pub cutoff: usize,
    pub lambda: f64,
    pub t_max: usize,
    pub chosen: usize,
    /// Every observation has length one and only `t = 1` was scanned.
    pub degenerate: bool,
}

impl SelectionTrace {
    /// CSV of the per-candidate rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,theta,effective_length,error,clamped,selected\n");
        for c in &self.candidates {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.t,
                c.theta,
                c.effective_length,
                c.error,
                c.clamp != Clamp::None,
                c.t == self.chosen
            ));
        }
        out
    }
}

fn candidate(data: &RankingDataset, t: usize, options: &CenterOptions) -> Result<Candidate> {
    let truncated = data.truncated(t);
    let center = fit_center(&truncated, options)?.ranked;
    let fit = fit_igm_single(&truncated, &CentralOrder::new(center.clone())?, t)?;
    let el = effective_length(fit.theta)?;
    Ok(Candidate {
        t,
        theta: fit.theta,
        clamp: fit.clamp,
        effective_length: el,
        error: (t as f64 - el).abs(),
        center,
    })
}

/// Default candidate window around `r = round(E L(θ₀))`, with `r` capped at
/// `t_max`: `max(1, r-w) ..= min(t_max, r+w)`, `w = max(2, ⌈r/2⌉)`.
pub fn default_window(effective_length0: f64, t_max: usize) -> Vec<usize> {
    let r = if effective_length0.is_finite() {
        (effective_length0.round() as usize).clamp(1, t_max)
    } else {
        t_max
    };
    let w = 2.max(r.div_ceil(2));
    (r.saturating_sub(w).max(1)..=(r + w).min(t_max)).collect()
}

/// Picks the model size `t` for top-t data.
pub fn select_t(data: &RankingDataset, options: &SelectOptions) -> Result<(usize, SelectionTrace)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(options.lambda > 0.0 && options.lambda < 1.0) {
        return Err(Error::input(format!("λ = {} must lie in (0, 1)", options.lambda)));
    }
    let t_max = data.t_max();
    let first = candidate(data, 1, &options.center)?;
    let window = match &options.window {
        Some(w) => {
            if w.is_empty() {
                return Err(Error::input("the candidate window is empty"));
            }
            if let Some(bad) = w.iter().find(|&&t| t == 0 || t > t_max) {
                return Err(Error::input(format!("window entry {bad} is outside 1..={t_max}")));
            }
            let mut w = w.clone();
            w.sort_unstable();
            w.dedup();
            w
        }
        None => default_window(first.effective_length, t_max),
    };
    let candidates: Vec<Candidate> = window
        .par_iter()
        .map(|&t| {
            if t == 1 {
                Ok(first.clone())
            } else {
                candidate(data, t, &options.center)
            }
        })
        .collect::<Result<_>>()?;
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        if c.error < best.error {
            best = c;
        }
    }
    let argmin = best.t;
    let cutoff = ((options.lambda * t_max as f64).floor() as usize).max(1);
    let chosen = argmin.min(cutoff);
    let trace = SelectionTrace {
        theta0: first.theta,
        effective_length0: first.effective_length,
        degenerate: t_max == 1 && window == [1],
        candidates,
        argmin,
        cutoff,
        lambda: options.lambda,
        t_max,
        chosen,
    };
    Ok((chosen, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Universe;
    use crate::perm::TopTRanking;
    use crate::sample::{sample_igm_top_t, DispersionVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn igm_data(thetas: &[f64], n: usize, seed: u64) -> RankingDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let thetas = DispersionVector::new(thetas.to_vec()).unwrap();
        let center = CentralOrder::identity();
        let rankings: Vec<_> = (0..n)
            .map(|_| sample_igm_top_t(&thetas, &center, &mut rng).unwrap())
            .collect();
        RankingDataset::from_rankings(Universe::Open, rankings).unwrap()
    }

    #[test]
    fn window_shapes() {
        assert_eq!(default_window(1.98, 6), vec![1, 2, 3, 4]);
        assert_eq!(default_window(1.0, 6), vec![1, 2, 3]);
        assert_eq!(default_window(7.4, 30), (3..=11).collect::<Vec<_>>());
        assert_eq!(default_window(f64::INFINITY, 4), vec![2, 3, 4]);
        assert_eq!(default_window(1.0, 1), vec![1]);
    }

    #[test]
    fn repeated_center_selects_one() {
        let r = TopTRanking::new(vec![4, 2, 9, 1, 3, 7]).unwrap();
        let data = RankingDataset::from_rankings(Universe::Open, vec![r; 30]).unwrap();
        let (t, trace) = select_t(&data, &SelectOptions::default()).unwrap();
        assert_eq!(t, 1);
        assert!(trace.candidates.iter().all(|c| c.clamp == Clamp::Max));
        assert!(trace
            .candidates
            .iter()
            .all(|c| (c.effective_length - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cutoff_is_respected() {
        let data = igm_data(&[0.3; 12], 200, 4);
        for &lambda in &[0.1, 0.25, 0.5, 0.9] {
            let opts = SelectOptions {
                lambda,
                ..Default::default()
            };
            let (t, trace) = select_t(&data, &opts).unwrap();
            assert!(t <= ((lambda * 12.0).floor() as usize).max(1));
            assert_eq!(trace.t_max, 12);
        }
    }

    #[test]
    fn table1_shaped_data_picks_small_t() {
        let data = igm_data(&[1.0, 0.9, 0.8, 0.7, 0.6, 0.5], 1000, 11);
        let (t, trace) = select_t(
            &data,
            &SelectOptions {
                lambda: 0.99,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((2..=3).contains(&t), "{trace:?}");
        assert!((trace.theta0 - 1.0).abs() < 0.1);
        assert!(trace
            .to_csv()
            .starts_with("t,theta,effective_length,error,clamped,selected\n"));
    }

    #[test]
    fn degenerate_single_stage() {
        let data = RankingDataset::from_rankings(
            Universe::Open,
            vec![TopTRanking::new(vec![1]).unwrap(), TopTRanking::new(vec![2]).unwrap()],
        )
        .unwrap();
        let (t, trace) = select_t(&data, &SelectOptions::default()).unwrap();
        assert_eq!(t, 1);
        assert!(trace.degenerate);
    }

    #[test]
    fn deterministic_and_validates() {
        let data = igm_data(&[0.7; 8], 300, 5);
        let a = select_t(&data, &SelectOptions::default()).unwrap();
        let b = select_t(&data, &SelectOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(select_t(
            &data,
            &SelectOptions {
                lambda: 1.0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(select_t(
            &data,
            &SelectOptions {
                window: Some(vec![0]),
                ..Default::default()
            }
        )
        .is_err());
        let (_, trace) = select_t(
            &data,
            &SelectOptions {
                window: Some(vec![3, 1, 3]),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(trace.candidates.iter().map(|c| c.t).collect::<Vec<_>>(), vec![1, 3]);
    }
}
