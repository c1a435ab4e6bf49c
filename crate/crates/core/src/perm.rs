//! Exact permutation combinatorics.
//!
//! A [`Permutation`] of `[n]` is stored as its word list: `word[i - 1]` is the
//! rank given to item `i`. The ranked list (items from most to least preferred)
//! is the inverse. Ranks and item ids are 1-based throughout.
//!
//! The inversion table follows the multistage reading of a ranking: at stage
//! `j` the item ranked `j` is chosen, and `s_j` counts the not-yet-chosen items
//! with a smaller label that were skipped over. Its entries sum to the number
//! of inversions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;

/// Upper bound on permutation sizes accepted by the checked constructors.
pub const DEFAULT_MAX_SIZE: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation {
    word: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            word: (1..=n as u32).collect(),
        }
    }

    pub fn from_word(word: Vec<u32>) -> Result<Self> {
        Self::from_word_with_max(word, DEFAULT_MAX_SIZE)
    }

    pub fn from_word_with_max(word: Vec<u32>, max_size: usize) -> Result<Self> {
        let n = word.len();
        if n == 0 {
            return Err(Error::input("permutation must have at least one element"));
        }
        if n > max_size {
            return Err(Error::input(format!(
                "permutation size {n} exceeds the configured maximum {max_size}"
            )));
        }
        let mut seen = vec![false; n + 1];
        for &v in &word {
            let v = v as usize;
            if v == 0 || v > n {
                return Err(Error::input(format!("value {v} is outside 1..={n}")));
            }
            if seen[v] {
                return Err(Error::input(format!("value {v} appears twice")));
            }
            seen[v] = true;
        }
        Ok(Permutation { word })
    }

    /// Builds the permutation whose ranked list is `items`.
    pub fn from_ranked_list(items: &[u32]) -> Result<Self> {
        Ok(Self::from_word(items.to_vec())?.inverse())
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn word(&self) -> &[u32] {
        &self.word
    }

    pub fn into_word(self) -> Vec<u32> {
        self.word
    }

    pub fn ranked_list(&self) -> Vec<u32> {
        self.inverse().word
    }

    /// Rank of `item` (1-based).
    pub fn rank_of(&self, item: u32) -> u32 {
        self.word[item as usize - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.word.iter().enumerate().all(|(i, &v)| v as usize == i + 1)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.word.len()];
        for (i, &v) in self.word.iter().enumerate() {
            inv[v as usize - 1] = i as u32 + 1;
        }
        Permutation { word: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        check_sizes(self.len(), other.len())?;
        Ok(Permutation {
            word: other.word.iter().map(|&j| self.word[j as usize - 1]).collect(),
        })
    }

    /// `self ∘ center⁻¹`, the ranking expressed relative to `center`.
    pub fn relative_to(&self, center: &Permutation) -> Result<Self> {
        check_sizes(self.len(), center.len())?;
        // (p ∘ c⁻¹)(c(i)) = p(i)
        let mut word = vec![0u32; self.len()];
        for (i, &c) in center.word.iter().enumerate() {
            word[c as usize - 1] = self.word[i];
        }
        Ok(Permutation { word })
    }

    pub fn inversions(&self) -> u64 {
        count_inversions(&self.word)
    }

    pub fn inversion_table(&self) -> InversionTable {
        let ranked: Vec<u64> = self.ranked_list().into_iter().map(u64::from).collect();
        let mut s = prefix_inversion_table(&ranked).0;
        s.pop();
        InversionTable(s)
    }
}

fn check_sizes(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::SizeMismatch { left, right });
    }
    Ok(())
}

/// Stage discordances `s_j`, one per stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InversionTable(pub Vec<u64>);

impl InversionTable {
    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Ordered prefix `(π⁻¹(1) | … | π⁻¹(t))` of distinct positive item ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopTRanking {
    items: Vec<u32>,
}

impl TopTRanking {
    pub fn new(items: Vec<u32>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::input("a ranking needs at least one item"));
        }
        let mut seen = std::collections::HashSet::with_capacity(items.len());
        for &it in &items {
            if it == 0 {
                return Err(Error::input("item ids are positive integers"));
            }
            if !seen.insert(it) {
                return Err(Error::input(format!("item {it} appears twice")));
            }
        }
        Ok(TopTRanking { items })
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The first `t` entries (or all of them when shorter).
    pub fn truncated(&self, t: usize) -> TopTRanking {
        TopTRanking {
            items: self.items[..t.min(self.items.len()).max(1)].to_vec(),
        }
    }
}

impl From<&Permutation> for TopTRanking {
    fn from(p: &Permutation) -> Self {
        TopTRanking { items: p.ranked_list() }
    }
}

/// A central ordering of the positive integers given by a finite ranked
/// prefix. Items not listed follow the prefix in increasing id order, so the
/// empty prefix is the identity on ℕ₊.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralOrder {
    ranked: Vec<u32>,
    sorted: Vec<u32>,
    rank: HashMap<u32, u64>,
}

impl CentralOrder {
    pub fn new(ranked: Vec<u32>) -> Result<Self> {
        let mut rank = HashMap::with_capacity(ranked.len());
        for (i, &it) in ranked.iter().enumerate() {
            if it == 0 {
                return Err(Error::input("item ids are positive integers"));
            }
            if rank.insert(it, i as u64 + 1).is_some() {
                return Err(Error::input(format!("item {it} appears twice in the center")));
            }
        }
        let mut sorted = ranked.clone();
        sorted.sort_unstable();
        Ok(CentralOrder { ranked, sorted, rank })
    }

    pub fn identity() -> Self {
        CentralOrder {
            ranked: Vec::new(),
            sorted: Vec::new(),
            rank: HashMap::new(),
        }
    }

    pub fn ranked(&self) -> &[u32] {
        &self.ranked
    }

    pub fn rank_of(&self, item: u32) -> u64 {
        if let Some(&r) = self.rank.get(&item) {
            return r;
        }
        let below = self.sorted.partition_point(|&x| x < item) as u64;
        self.ranked.len() as u64 + u64::from(item) - below
    }

    pub fn item_at_rank(&self, rank: u64) -> u32 {
        assert!(rank >= 1, "ranks are 1-based");
        if rank as usize <= self.ranked.len() {
            return self.ranked[rank as usize - 1];
        }
        // k-th positive integer missing from `sorted`
        let k = rank - self.ranked.len() as u64;
        let (mut lo, mut hi) = (0usize, self.sorted.len());
        // first index i with sorted[i] - (i + 1) >= k
        while lo < hi {
            let mid = (lo + hi) / 2;
            if u64::from(self.sorted[mid]) - (mid as u64 + 1) >= k {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        (k + lo as u64) as u32
    }

    /// Ranks of the observed items under this center, i.e. the ranked list of
    /// the relative permutation `π ∘ π₀⁻¹`.
    pub fn relative_ranks(&self, observed: &[u32]) -> Vec<u64> {
        observed.iter().map(|&it| self.rank_of(it)).collect()
    }
}

/// Number of pairs `i < j` with `word[i] > word[j]`, in O(n log n).
pub fn count_inversions<T: Copy + Ord>(word: &[T]) -> u64 {
    let ranks = compress(word);
    let mut bit = Fenwick::new(word.len());
    let mut inv = 0u64;
    for (seen, &r) in ranks.iter().enumerate() {
        inv += seen as u64 - bit.prefix(r) as u64;
        bit.add(r, 1);
    }
    inv
}

fn compress<T: Copy + Ord>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by_key(|&i| values[i]);
    let mut ranks = vec![0; values.len()];
    for (r, &i) in idx.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

pub fn inversions(p: &Permutation) -> u64 {
    p.inversions()
}

pub fn inversion_table(p: &Permutation) -> InversionTable {
    p.inversion_table()
}

/// Inversion table of a ranked prefix over ℕ₊ (top-t / infinite case):
/// `s_j = r_j - 1 - #{j' < j : r_j' < r_j}`. Entries must be distinct and
/// positive.
pub fn prefix_inversion_table(ranked: &[u64]) -> InversionTable {
    let ranks = compress(ranked);
    let mut bit = Fenwick::new(ranked.len());
    let s = ranked
        .iter()
        .zip(&ranks)
        .map(|(&r, &c)| {
            let smaller_before = bit.prefix(c) as u64;
            bit.add(c, 1);
            r - 1 - smaller_before
        })
        .collect();
    InversionTable(s)
}

/// Rebuilds the permutation of `[n]` from a length `n - 1` inversion table:
/// at stage `j` the `(s_j + 1)`-th best of the remaining items is selected.
pub fn decode_inversion_table(s: &InversionTable, n: usize) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::input("permutation size must be positive"));
    }
    if n > DEFAULT_MAX_SIZE {
        return Err(Error::input(format!(
            "permutation size {n} exceeds the configured maximum {DEFAULT_MAX_SIZE}"
        )));
    }
    if s.len() != n - 1 {
        return Err(Error::SizeMismatch {
            left: s.len(),
            right: n - 1,
        });
    }
    let mut remaining = Fenwick::ones(n);
    let mut word = vec![0u32; n];
    for rank in 1..=n {
        let skip = if rank < n { s.0[rank - 1] } else { 0 };
        let bound = (n - rank) as u64;
        if skip > bound {
            return Err(Error::StageOutOfRange {
                stage: rank,
                value: skip,
                bound,
            });
        }
        let item = remaining
            .find_kth(skip as i64 + 1)
            .expect("bounded skip always finds an item");
        remaining.add(item, -1);
        word[item - 1] = rank as u32;
    }
    Ok(Permutation { word })
}

pub fn compose(p: &Permutation, q: &Permutation) -> Result<Permutation> {
    p.compose(q)
}

pub fn invert(p: &Permutation) -> Permutation {
    p.inverse()
}

/// `p ∘ center⁻¹`.
pub fn relative(p: &Permutation, center: &Permutation) -> Result<Permutation> {
    p.relative_to(center)
}

/// Kendall tau distance `inv(p ∘ q⁻¹)`.
pub fn kendall_tau(p: &Permutation, q: &Permutation) -> Result<u64> {
    Ok(p.relative_to(q)?.inversions())
}

/// Positions `m` (1-based) where the prefix maps `[1, m]` onto itself.
/// Only splitting times within the prefix are reported.
pub fn splitting_times<T: Copy + Into<u64>>(prefix: &[T]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut running_max = 0u64;
    for (i, &v) in prefix.iter().enumerate() {
        running_max = running_max.max(v.into());
        if running_max == i as u64 + 1 {
            out.push(i + 1);
        }
    }
    out
}

/// One block of the component decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Number of positions preceding this block.
    pub offset: usize,
    /// Block entries shifted down by `offset`.
    pub reduced: Vec<u64>,
    /// False for a trailing block not closed by a splitting time.
    pub complete: bool,
}

impl Component {
    pub fn len(&self) -> usize {
        self.reduced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reduced.is_empty()
    }
}

/// Splits a prefix at its splitting times. A trailing incomplete block is
/// returned with `complete == false`, so the blocks always concatenate back to
/// the prefix.
pub fn components<T: Copy + Into<u64>>(prefix: &[T]) -> Vec<Component> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for end in splitting_times(prefix) {
        out.push(Component {
            offset: start,
            reduced: prefix[start..end].iter().map(|&v| v.into() - start as u64).collect(),
            complete: true,
        });
        start = end;
    }
    if start < prefix.len() {
        out.push(Component {
            offset: start,
            reduced: prefix[start..].iter().map(|&v| v.into() - start as u64).collect(),
            complete: false,
        });
    }
    out
}

/// All permutations of `[n]` in lexicographic order of their word lists.
pub fn permutations(n: usize) -> Permutations {
    Permutations {
        next: Some((1..=n as u32).collect()),
    }
}

#[derive(Debug, Clone)]
pub struct Permutations {
    next: Option<Vec<u32>>,
}

impl Iterator for Permutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if next_lexicographic(&mut succ) {
            self.next = Some(succ);
        }
        Some(Permutation { word: cur })
    }
}

pub(crate) fn next_lexicographic(a: &mut [u32]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}
