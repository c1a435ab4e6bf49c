//! Central-ranking estimation.
//!
//! For a candidate center `c`, the (weighted) discordance of an observation is
//! `Σ_j w_j s_j(obs ∘ c⁻¹)`. Each `s_j` counts items ranked above the stage-j
//! item by `c` that the observation had not yet chosen, so the total splits
//! into pairwise costs: `cost[x][y]` is paid whenever `c` ranks `x` above `y`.
//! With unit weights and complete data this is the Kemeny objective.
//!
//! Small universes are solved exactly by enumeration; larger ones by a
//! Borda-initialized local search over adjacent transpositions followed by a
//! pass of arbitrary pair swaps.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::RankingDataset;
use crate::error::{Error, Result};
use crate::perm::next_lexicographic;

/// Largest universe the exact strategy will enumerate.
pub const EXACT_LIMIT: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterStrategy {
    /// Exact when the universe has at most [`EXACT_LIMIT`] items.
    Auto,
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterOptions {
    pub strategy: CenterStrategy,
    /// Stage weights `w_j`; unit weights when `None`. Stages past the end of
    /// the vector get weight zero.
    pub stage_weights: Option<Vec<f64>>,
    /// Only stages `j <= max_stage` count.
    pub max_stage: Option<usize>,
    /// Extra heuristic runs from shuffled starts.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CenterOptions {
    fn default() -> Self {
        CenterOptions {
            strategy: CenterStrategy::Auto,
            stage_weights: None,
            max_stage: None,
            restarts: 0,
            seed: 0,
        }
    }
}

impl CenterOptions {
    pub fn heuristic() -> Self {
        CenterOptions {
            strategy: CenterStrategy::Heuristic,
            ..Self::default()
        }
    }

    pub fn exact() -> Self {
        CenterOptions {
            strategy: CenterStrategy::Exact,
            ..Self::default()
        }
    }

    fn weight(&self, stage: usize) -> f64 {
        if self.max_stage.is_some_and(|t| stage > t) {
            return 0.0;
        }
        match &self.stage_weights {
            None => 1.0,
            Some(w) => w.get(stage - 1).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterFit {
    /// Estimated central ranking over the whole universe, best first.
    pub ranked: Vec<u32>,
    pub objective: f64,
    /// Objective of the Borda starting point (heuristic only).
    pub initial_objective: Option<f64>,
    pub exact: bool,
}

/// Pairwise cost matrix over the dataset's universe.
#[derive(Debug, Clone)]
pub struct PairCosts {
    items: Vec<u32>,
    n: usize,
    /// `cost[x * n + y]`: paid when `x` is ranked above `y`.
    cost: Vec<f64>,
}

impl PairCosts {
    pub fn new(data: &RankingDataset, options: &CenterOptions) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let items = data.items();
        let n = items.len();
        let index = |item: u32| items.binary_search(&item).expect("observed item is in the universe");
        let mut column = vec![0.0; n];
        let mut cost = vec![0.0; n * n];
        let mut idx = Vec::new();
        for obs in data.observations() {
            idx.clear();
            idx.extend(obs.ranking.items().iter().map(|&it| index(it)));
            let count = obs.count as f64;
            for (j, &y) in idx.iter().enumerate() {
                let w = options.weight(j + 1) * count;
                if w == 0.0 {
                    continue;
                }
                // every x above y in the center costs w unless x was chosen earlier
                column[y] += w;
                for &x in &idx[..j] {
                    cost[x * n + y] -= w;
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    cost[x * n + y] += column[y];
                }
            }
        }
        Ok(PairCosts { items, n, cost })
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    #[inline]
    fn c(&self, x: usize, y: usize) -> f64 {
        self.cost[x * self.n + y]
    }

    /// Objective of an order given as universe indices, best first.
    fn order_objective(&self, order: &[usize]) -> f64 {
        let mut total = 0.0;
        for (a, &x) in order.iter().enumerate() {
            for &y in &order[a + 1..] {
                total += self.c(x, y);
            }
        }
        total
    }

    /// Objective of a ranked list of item ids covering the universe.
    pub fn objective(&self, ranked: &[u32]) -> Result<f64> {
        let order = self.to_indices(ranked)?;
        Ok(self.order_objective(&order))
    }

    fn to_indices(&self, ranked: &[u32]) -> Result<Vec<usize>> {
        if ranked.len() != self.n {
            return Err(Error::SizeMismatch {
                left: ranked.len(),
                right: self.n,
            });
        }
        let mut seen = vec![false; self.n];
        ranked
            .iter()
            .map(|&it| {
                let i = self
                    .items
                    .binary_search(&it)
                    .map_err(|_| Error::input(format!("item {it} is not in the universe")))?;
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::input(format!("item {it} appears twice")));
                }
                Ok(i)
            })
            .collect()
    }

    fn to_items(&self, order: &[usize]) -> Vec<u32> {
        order.iter().map(|&i| self.items[i]).collect()
    }

    /// Exhaustive search in lexicographic order of word lists, so ties go to
    /// the lexicographically smallest word list.
    fn exact(&self) -> (Vec<usize>, f64) {
        let n = self.n;
        let mut word: Vec<u32> = (0..n as u32).collect();
        let mut order = vec![0usize; n];
        let mut best = (Vec::new(), f64::INFINITY);
        loop {
            for (i, &r) in word.iter().enumerate() {
                order[r as usize] = i;
            }
            let obj = self.order_objective(&order);
            if obj < best.1 {
                best = (order.clone(), obj);
            }
            if !next_lexicographic(&mut word) {
                break;
            }
        }
        best
    }

    /// Borda-style start: mean observed position, an absent item counting as
    /// one past the end of that list; ties by appearance count, then id.
    fn borda(&self, data: &RankingDataset, options: &CenterOptions) -> Vec<usize> {
        let n = self.n;
        let mut pos_sum = vec![0.0; n];
        let mut appear = vec![0u64; n];
        let mut total = 0.0;
        let mut listed = vec![false; n];
        for obs in data.observations() {
            let len = obs.ranking.len().min(options.max_stage.unwrap_or(usize::MAX));
            let count = obs.count as f64;
            total += count;
            listed.fill(false);
            for (j, &it) in obs.ranking.items()[..len].iter().enumerate() {
                let i = self.items.binary_search(&it).expect("item in universe");
                pos_sum[i] += count * (j + 1) as f64;
                appear[i] += obs.count;
                listed[i] = true;
            }
            let absent = count * (len + 1) as f64;
            for (s, _) in pos_sum.iter_mut().zip(&listed).filter(|(_, &l)| !l) {
                *s += absent;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            (pos_sum[a] / total)
                .total_cmp(&(pos_sum[b] / total))
                .then(appear[b].cmp(&appear[a]))
                .then(self.items[a].cmp(&self.items[b]))
        });
        order
    }

    fn local_search(&self, order: &mut [usize]) -> f64 {
        let eps = 1e-9;
        self.adjacent_descent(order, eps);
        if self.pair_swap_pass(order, eps) {
            self.adjacent_descent(order, eps);
        }
        self.order_objective(order)
    }

    /// Steepest descent over adjacent transpositions.
    fn adjacent_descent(&self, order: &mut [usize], eps: f64) {
        let n = order.len();
        if n < 2 {
            return;
        }
        let delta = |o: &[usize], i: usize| self.c(o[i + 1], o[i]) - self.c(o[i], o[i + 1]);
        let mut deltas: Vec<f64> = (0..n - 1).map(|i| delta(order, i)).collect();
        loop {
            let (best_i, best) = deltas
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
            if best >= -eps {
                return;
            }
            order.swap(best_i, best_i + 1);
            let lo = best_i.saturating_sub(1);
            for (i, d) in deltas.iter_mut().enumerate().take((best_i + 1).min(n - 2) + 1).skip(lo) {
                *d = delta(order, i);
            }
        }
    }

    /// One sweep over all position pairs, applying improving swaps.
    fn pair_swap_pass(&self, order: &mut [usize], eps: f64) -> bool {
        let n = order.len();
        let mut improved = false;
        for i in 0..n {
            let mut j = i + 1;
            // Σ over the positions between i and j of the change for `a`
            let mut a_shift = 0.0;
            while j < n {
                let a = order[i];
                let b = order[j];
                let mut b_shift = 0.0;
                for &m in &order[i + 1..j] {
                    b_shift += self.c(b, m) - self.c(m, b);
                }
                let d = a_shift + b_shift + self.c(b, a) - self.c(a, b);
                if d < -eps {
                    order.swap(i, j);
                    improved = true;
                    // restart the scan for the new occupant of position i
                    j = i + 1;
                    a_shift = 0.0;
                    continue;
                }
                a_shift += self.c(b, a) - self.c(a, b);
                j += 1;
            }
        }
        improved
    }
}

/// Estimates the central ranking. Empty data is an error.
pub fn fit_center(data: &RankingDataset, options: &CenterOptions) -> Result<CenterFit> {
    let costs = PairCosts::new(data, options)?;
    let n = costs.items.len();
    let exact = match options.strategy {
        CenterStrategy::Exact => {
            if n > EXACT_LIMIT {
                return Err(Error::input(format!(
                    "exact consensus supports at most {EXACT_LIMIT} items, got {n}"
                )));
            }
            true
        }
        CenterStrategy::Auto => n <= EXACT_LIMIT,
        CenterStrategy::Heuristic => false,
    };
    if exact {
        let (order, objective) = costs.exact();
        return Ok(CenterFit {
            ranked: costs.to_items(&order),
            objective,
            initial_objective: None,
            exact: true,
        });
    }
    let mut order = costs.borda(data, options);
    let initial = costs.order_objective(&order);
    let mut best = costs.local_search(&mut order);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.restarts {
        let mut cand = order.clone();
        cand.shuffle(&mut rng);
        let obj = costs.local_search(&mut cand);
        if obj < best - 1e-9 {
            best = obj;
            order = cand;
        }
    }
    Ok(CenterFit {
        ranked: costs.to_items(&order),
        objective: best,
        initial_objective: Some(initial),
        exact: false,
    })
}

/// Objective of a given center under the same weighting as [`fit_center`].
pub fn center_objective(data: &RankingDataset, ranked: &[u32], options: &CenterOptions) -> Result<f64> {
    PairCosts::new(data, options)?.objective(ranked)
}
