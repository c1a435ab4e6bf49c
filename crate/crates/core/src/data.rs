//! Ranking datasets: multisets of ranked lists over a universe of item ids.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{Permutation, TopTRanking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Universe {
    /// Items `1..=n`.
    Size(u32),
    /// Whatever items the observations mention.
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub ranking: TopTRanking,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    /// `count;i1|i2|...` lines.
    Counted,
    /// `universe=<n|open>` header, then one `i1|i2|...` list per line.
    Lists,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDataset {
    universe: Universe,
    observations: Vec<Observation>,
    pub provenance: Option<Provenance>,
}

impl RankingDataset {
    pub fn new(universe: Universe, observations: Vec<Observation>) -> Result<Self> {
        for (i, obs) in observations.iter().enumerate() {
            if obs.count == 0 {
                return Err(Error::input(format!("observation {} has zero multiplicity", i + 1)));
            }
            if let Universe::Size(n) = universe {
                if let Some(&bad) = obs.ranking.items().iter().find(|&&it| it > n) {
                    return Err(Error::input(format!(
                        "observation {} mentions item {bad} outside the universe 1..={n}",
                        i + 1
                    )));
                }
            }
        }
        Ok(RankingDataset {
            universe,
            observations,
            provenance: None,
        })
    }

    /// Complete rankings, one observation each.
    pub fn from_permutations<'a>(perms: impl IntoIterator<Item = &'a Permutation>) -> Result<Self> {
        let mut n = None;
        let mut obs = Vec::new();
        for p in perms {
            match n {
                None => n = Some(p.len()),
                Some(m) if m != p.len() => {
                    return Err(Error::SizeMismatch {
                        left: m,
                        right: p.len(),
                    })
                }
                _ => {}
            }
            obs.push(Observation {
                ranking: TopTRanking::from(p),
                count: 1,
            });
        }
        let n = n.ok_or(Error::EmptyDataset)?;
        Self::new(Universe::Size(n as u32), obs)
    }

    pub fn from_rankings(universe: Universe, rankings: impl IntoIterator<Item = TopTRanking>) -> Result<Self> {
        Self::new(
            universe,
            rankings
                .into_iter()
                .map(|ranking| Observation { ranking, count: 1 })
                .collect(),
        )
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Total sample size counting multiplicities.
    pub fn total_count(&self) -> u64 {
        self.observations.iter().map(|o| o.count).sum()
    }

    /// Longest observation.
    pub fn t_max(&self) -> usize {
        self.observations.iter().map(|o| o.ranking.len()).max().unwrap_or(0)
    }

    /// Sorted item ids: `1..=n` for a sized universe, else every item seen.
    pub fn items(&self) -> Vec<u32> {
        match self.universe {
            Universe::Size(n) => (1..=n).collect(),
            Universe::Open => self
                .observations
                .iter()
                .flat_map(|o| o.ranking.items().iter().copied())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        }
    }

    pub fn universe_size(&self) -> usize {
        self.items().len()
    }

    /// Whether every observation ranks the whole (sized) universe.
    pub fn is_complete(&self) -> bool {
        match self.universe {
            Universe::Size(n) => self.observations.iter().all(|o| o.ranking.len() == n as usize),
            Universe::Open => false,
        }
    }

    /// Observations as permutations of `[n]`, for complete data only.
    pub fn permutations(&self) -> Result<Vec<(Permutation, u64)>> {
        if self.observations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !self.is_complete() {
            return Err(Error::input("this model needs complete rankings of a sized universe"));
        }
        self.observations
            .iter()
            .map(|o| Ok((Permutation::from_ranked_list(o.ranking.items())?, o.count)))
            .collect()
    }

    /// Every observation cut to its top `t` entries.
    pub fn truncated(&self, t: usize) -> RankingDataset {
        RankingDataset {
            universe: self.universe,
            observations: self
                .observations
                .iter()
                .map(|o| Observation {
                    ranking: o.ranking.truncated(t),
                    count: o.count,
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(items: &[u32]) -> TopTRanking {
        TopTRanking::new(items.to_vec()).unwrap()
    }

    #[test]
    fn counts_and_lengths() {
        let d = RankingDataset::new(
            Universe::Size(5),
            vec![
                Observation {
                    ranking: r(&[3, 1, 5, 4, 2]),
                    count: 5738,
                },
                Observation {
                    ranking: r(&[1, 3]),
                    count: 10,
                },
            ],
        )
        .unwrap();
        assert_eq!(d.total_count(), 5748);
        assert_eq!(d.t_max(), 5);
        assert!(!d.is_complete());
        assert_eq!(d.items(), vec![1, 2, 3, 4, 5]);
        assert_eq!(d.truncated(2).t_max(), 2);
    }

    #[test]
    fn rejects_zero_count_and_foreign_items() {
        let zero = vec![Observation {
            ranking: r(&[1]),
            count: 0,
        }];
        assert!(RankingDataset::new(Universe::Open, zero).is_err());
        let foreign = vec![Observation {
            ranking: r(&[9]),
            count: 1,
        }];
        assert!(RankingDataset::new(Universe::Size(3), foreign).is_err());
    }

    #[test]
    fn open_universe_collects_items() {
        let d = RankingDataset::from_rankings(Universe::Open, vec![r(&[10, 4]), r(&[4, 7])]).unwrap();
        assert_eq!(d.items(), vec![4, 7, 10]);
        assert!(d.permutations().is_err());
    }
}
