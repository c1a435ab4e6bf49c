//! Exact samplers for the Mallows family.
//!
//! Finite models (Mallows' φ and Generalized Mallows) draw independent stage
//! discordances from truncated geometric laws and decode the inversion table.
//! Infinite models go through [`PShiftedStream`]: each step draws `X_i` from
//! its row law and emits the `X_i`-th smallest positive integer not yet used.
//! Read as a ranked list, the emitted prefix has inversion table `X_i - 1`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::perm::{decode_inversion_table, CentralOrder, InversionTable, Permutation, TopTRanking};

/// Hard cap on the number of positions an infinite-permutation stream emits.
pub const DEFAULT_STREAM_CAP: usize = 1_000_000;

/// Stage dispersions `θ_1, …, θ_t`; `θ_j = 0` beyond the stored length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionVector(Vec<f64>);

impl DispersionVector {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        for (j, &t) in thetas.iter().enumerate() {
            check_theta(t).map_err(|_| Error::input(format!("theta_{} = {t} must be positive", j + 1)))?;
        }
        Ok(DispersionVector(thetas))
    }

    pub fn constant(theta: f64, len: usize) -> Result<Self> {
        Self::new(vec![theta; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `θ_j` for 1-based stage `j`.
    pub fn get(&self, stage: usize) -> f64 {
        self.0.get(stage - 1).copied().unwrap_or(0.0)
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!(
            "dispersion {theta} must be a positive finite number"
        )))
    }
}

/// Truncated geometric on `{0, …, k-1}` with `P(i) ∝ e^{-θ i}`, by closed-form
/// inverse CDF from a single uniform.
pub fn sample_truncated_geometric<R: Rng + ?Sized>(theta: f64, k: u64, rng: &mut R) -> Result<u64> {
    check_theta(theta)?;
    if k == 0 {
        return Err(Error::input("support size must be at least 1"));
    }
    Ok(truncated_geometric(theta, k, rng))
}

fn truncated_geometric<R: Rng + ?Sized>(theta: f64, k: u64, rng: &mut R) -> u64 {
    if k == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    // 1 - q^k
    let mass = -(-(k as f64) * theta).exp_m1();
    let x = -(-u * mass).ln_1p() / theta;
    (x.floor() as u64).min(k - 1)
}

/// Geometric on `{0, 1, …}` with success probability `1 - e^{-θ}`.
pub fn sample_geometric<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> Result<u64> {
    check_theta(theta)?;
    Ok(geometric(theta, rng))
}

fn geometric<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let x = -(-u).ln_1p() / theta;
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.floor() as u64
    }
}

/// Mallows' φ model centered at `center`.
pub fn sample_mallows_phi<R: Rng + ?Sized>(
    n: usize,
    theta: f64,
    center: &Permutation,
    rng: &mut R,
) -> Result<Permutation> {
    check_theta(theta)?;
    sample_staged(n, |_| theta, center, rng)
}

/// Generalized Mallows model with stage dispersions `thetas` (length `n - 1`).
pub fn sample_gm<R: Rng + ?Sized>(
    n: usize,
    thetas: &DispersionVector,
    center: &Permutation,
    rng: &mut R,
) -> Result<Permutation> {
    if thetas.len() + 1 != n {
        return Err(Error::SizeMismatch {
            left: thetas.len(),
            right: n.saturating_sub(1),
        });
    }
    sample_staged(n, |j| thetas.get(j), center, rng)
}

fn sample_staged<R: Rng + ?Sized>(
    n: usize,
    theta_at: impl Fn(usize) -> f64,
    center: &Permutation,
    rng: &mut R,
) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::input("permutation size must be positive"));
    }
    if center.len() != n {
        return Err(Error::SizeMismatch {
            left: center.len(),
            right: n,
        });
    }
    let s: Vec<u64> = (1..n)
        .map(|j| truncated_geometric(theta_at(j), (n - j + 1) as u64, rng))
        .collect();
    let rel = decode_inversion_table(&InversionTable(s), n)?;
    rel.compose(center)
}

/// Top-t ranking from the Infinite Generalized Mallows model: `s_j` is
/// geometric with success `1 - e^{-θ_j}` and the prefix is decoded against
/// the central order of ℕ₊.
pub fn sample_igm_top_t<R: RngCore + ?Sized>(
    thetas: &DispersionVector,
    center: &CentralOrder,
    rng: &mut R,
) -> Result<TopTRanking> {
    if thetas.is_empty() {
        return Err(Error::input("model size t must be at least 1"));
    }
    let rows = RowSchedule::PerIndex(
        thetas
            .as_slice()
            .iter()
            .map(|&theta| RowDistribution::geometric(theta))
            .collect::<Result<_>>()?,
    );
    let mut stream = PShiftedStream::new(rows, rng)?;
    let mut items = Vec::with_capacity(thetas.len());
    while let Some(draw) = stream.step()? {
        items.push(center.item_at_rank(draw.value));
    }
    TopTRanking::new(items)
}

/// A row law `p = (p_1, p_2, …)` on the positive integers.
#[derive(Debug, Clone, PartialEq)]
pub enum RowDistribution {
    /// `p_j = (1 - q) q^{j-1}` with `q = e^{-θ}`.
    Geometric { theta: f64 },
    /// Explicit finite support `p_1, …, p_K`.
    Finite { cdf: Vec<f64> },
}

impl RowDistribution {
    pub fn geometric(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(RowDistribution::Geometric { theta })
    }

    pub fn finite(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::input("row distribution needs at least one atom"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::input("row probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("row probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        Ok(RowDistribution::Finite { cdf })
    }

    pub fn pmf(&self, j: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match self {
            RowDistribution::Geometric { theta } => -(-theta).exp_m1() * (-(theta * (j - 1) as f64)).exp(),
            RowDistribution::Finite { cdf } => {
                let i = j as usize - 1;
                match i {
                    _ if i >= cdf.len() => 0.0,
                    0 => cdf[0],
                    _ => cdf[i] - cdf[i - 1],
                }
            }
        }
    }

    /// `p_1 + … + p_j`.
    pub fn cdf(&self, j: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match self {
            RowDistribution::Geometric { theta } => -(-(theta * j as f64)).exp_m1(),
            RowDistribution::Finite { cdf } => cdf[(j as usize).min(cdf.len()) - 1],
        }
    }

    pub fn sample(&self, rng: &mut (impl RngCore + ?Sized)) -> u64 {
        match self {
            RowDistribution::Geometric { theta } => geometric(*theta, rng) + 1,
            RowDistribution::Finite { cdf } => {
                let u: f64 = rng.random();
                let i = cdf.partition_point(|&c| c <= u);
                // rounding can leave the last cumulative just below 1
                let i = i.min(cdf.len() - 1);
                i as u64 + 1
            }
        }
    }
}

/// Row laws for a P-shifted permutation.
#[derive(Debug, Clone, PartialEq)]
pub enum RowSchedule {
    /// The same law for every index; requires `p_1 > 0`.
    Homogeneous(RowDistribution),
    /// One law per index; the stream ends after the last row.
    PerIndex(Vec<RowDistribution>),
}

impl RowSchedule {
    fn row(&self, index: usize) -> Option<&RowDistribution> {
        match self {
            RowSchedule::Homogeneous(r) => Some(r),
            RowSchedule::PerIndex(rows) => rows.get(index - 1),
        }
    }
}

/// One step of a [`PShiftedStream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    /// Raw draw `X_i ≥ 1`.
    pub x: u64,
    /// Emitted value `Π_i = ψ(X_i)`.
    pub value: u64,
    /// Whether this position is a splitting time of the prefix.
    pub splits: bool,
}

/// Lazy P-shifted permutation of ℕ₊.
pub struct PShiftedStream<'r, R: RngCore + ?Sized> {
    rows: RowSchedule,
    rng: &'r mut R,
    unused: UnusedIntegers,
    position: usize,
    running_max: u64,
    cap: usize,
}

impl<'r, R: RngCore + ?Sized> PShiftedStream<'r, R> {
    pub fn new(rows: RowSchedule, rng: &'r mut R) -> Result<Self> {
        Self::with_cap(rows, rng, DEFAULT_STREAM_CAP)
    }

    pub fn with_cap(rows: RowSchedule, rng: &'r mut R, cap: usize) -> Result<Self> {
        if let RowSchedule::Homogeneous(row) = &rows {
            if row.pmf(1) <= 0.0 {
                return Err(Error::input("homogeneous row distribution needs p_1 > 0"));
            }
        }
        Ok(PShiftedStream {
            rows,
            rng,
            unused: UnusedIntegers::new(),
            position: 0,
            running_max: 0,
            cap,
        })
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Next entry, `Ok(None)` once a per-index schedule is exhausted.
    pub fn step(&mut self) -> Result<Option<Draw>> {
        let Some(row) = self.rows.row(self.position + 1) else {
            return Ok(None);
        };
        if self.position >= self.cap {
            return Err(Error::StreamCap {
                cap: self.cap,
                partial: None,
            });
        }
        let x = row.sample(&mut *self.rng);
        check_draw(self.position + 1, x)?;
        let value = self.unused.take_kth(x);
        self.position += 1;
        self.running_max = self.running_max.max(value);
        let splits = self.running_max == self.position as u64;
        if splits {
            self.unused.rebase(self.position as u64);
        }
        Ok(Some(Draw { x, value, splits }))
    }
}

/// A sampled prefix `(Π_1, …, Π_m)` with the underlying draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PShiftedSample {
    pub values: Vec<u64>,
    pub draws: Vec<u64>,
}

/// First `m` entries of a P-shifted permutation (fewer if a per-index schedule
/// runs out first).
pub fn sample_p_shifted<R: RngCore + ?Sized>(rows: &RowSchedule, m: usize, rng: &mut R) -> Result<PShiftedSample> {
    let mut stream = PShiftedStream::with_cap(rows.clone(), rng, m.max(1))?;
    let mut out = PShiftedSample {
        values: Vec::with_capacity(m),
        draws: Vec::with_capacity(m),
    };
    while out.values.len() < m {
        match stream.step()? {
            Some(d) => {
                out.values.push(d.value);
                out.draws.push(d.x);
            }
            None => break,
        }
    }
    Ok(out)
}

/// Builds the prefix from explicit draws `X_1, X_2, …`.
pub fn p_shifted_from_draws(draws: &[u64]) -> Result<Vec<u64>> {
    let mut unused = UnusedIntegers::new();
    let mut running_max = 0;
    let mut out = Vec::with_capacity(draws.len());
    for (i, &x) in draws.iter().enumerate() {
        if x == 0 {
            return Err(Error::input(format!("draw {} is zero; draws are positive", i + 1)));
        }
        check_draw(i + 1, x)?;
        let v = unused.take_kth(x);
        running_max = v.max(running_max);
        if running_max == i as u64 + 1 {
            unused.rebase(running_max);
        }
        out.push(v);
    }
    Ok(out)
}

/// Largest single draw the prefix builder accepts; the window of unused
/// integers is allocated up to the largest draw.
pub const MAX_DRAW: u64 = 1 << 24;

fn check_draw(index: usize, x: u64) -> Result<()> {
    if x > MAX_DRAW {
        return Err(Error::input(format!("draw {index} is {x}, above the limit {MAX_DRAW}")));
    }
    Ok(())
}

/// The positive integers above `offset` not yet taken, supporting k-th
/// smallest extraction. After a splitting time every integer up to it is
/// taken and nothing above it is, so the window restarts there.
struct UnusedIntegers {
    offset: u64,
    free: Fenwick,
    taken: Vec<bool>,
}

impl UnusedIntegers {
    fn new() -> Self {
        UnusedIntegers {
            offset: 0,
            free: Fenwick::ones(16),
            taken: vec![false; 16],
        }
    }

    fn rebase(&mut self, offset: u64) {
        self.offset = offset;
        let len = self.taken.len().clamp(16, 64);
        self.free = Fenwick::ones(len);
        self.taken = vec![false; len];
    }

    fn take_kth(&mut self, k: u64) -> u64 {
        loop {
            let free_total = self.free.prefix(self.free.len()) as u64;
            if k <= free_total {
                break;
            }
            let need = self.free.len() as u64 + (k - free_total);
            self.grow(need.max(2 * self.free.len() as u64) as usize);
        }
        let local = self.free.find_kth(k as i64).expect("window holds k free slots");
        self.free.add(local, -1);
        self.taken[local - 1] = true;
        self.offset + local as u64
    }

    fn grow(&mut self, len: usize) {
        let mut free = Fenwick::ones(len);
        for (i, &t) in self.taken.iter().enumerate() {
            if t {
                free.add(i + 1, -1);
            }
        }
        self.taken.resize(len, false);
        self.free = free;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{prefix_inversion_table, splitting_times};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_x_sequence() {
        assert_eq!(
            p_shifted_from_draws(&[2, 1, 2, 3, 4, 1]).unwrap(),
            vec![2, 1, 4, 6, 8, 3]
        );
        assert_eq!(p_shifted_from_draws(&[1; 6]).unwrap(), vec![1, 2, 3, 4, 5, 6]);
        assert!(p_shifted_from_draws(&[1, 0]).is_err());
        assert!(p_shifted_from_draws(&[u64::MAX]).is_err());
    }

    #[test]
    fn truncated_geometric_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_truncated_geometric(0.3, 1, &mut rng).unwrap(), 0);
            assert!(sample_truncated_geometric(0.3, 4, &mut rng).unwrap() < 4);
            assert_eq!(sample_truncated_geometric(200.0, 5, &mut rng).unwrap(), 0);
        }
        assert!(sample_truncated_geometric(0.0, 3, &mut rng).is_err());
        assert!(sample_truncated_geometric(-1.0, 3, &mut rng).is_err());
        assert!(sample_truncated_geometric(1.0, 0, &mut rng).is_err());
    }

    #[test]
    fn n_one_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let id = Permutation::identity(1);
        for _ in 0..10 {
            assert_eq!(sample_mallows_phi(1, 0.7, &id, &mut rng).unwrap(), id);
        }
    }

    #[test]
    fn gm_requires_matching_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let th = DispersionVector::new(vec![1.0, 2.0]).unwrap();
        assert!(sample_gm(4, &th, &Permutation::identity(4), &mut rng).is_err());
        assert!(sample_gm(3, &th, &Permutation::identity(3), &mut rng).is_ok());
        assert!(DispersionVector::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn same_seed_same_output() {
        let center = Permutation::from_ranked_list(&[3, 1, 2, 5, 4]).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_mallows_phi(5, 0.8, &center, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn stream_table_equals_draws_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = RowSchedule::Homogeneous(RowDistribution::geometric(0.4).unwrap());
        for _ in 0..200 {
            let s = sample_p_shifted(&rows, 60, &mut rng).unwrap();
            let table = prefix_inversion_table(&s.values);
            let expect: Vec<u64> = s.draws.iter().map(|x| x - 1).collect();
            assert_eq!(table.as_slice(), expect.as_slice());
            // every reported split must agree with the running-max rule
            let mut sorted = s.values.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), s.values.len());
        }
    }

    #[test]
    fn stream_split_flags_match_prefix_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows = RowSchedule::Homogeneous(RowDistribution::finite(&[0.5, 0.3, 0.2]).unwrap());
        let mut stream = PShiftedStream::new(rows, &mut rng).unwrap();
        let mut values = Vec::new();
        let mut flagged = Vec::new();
        for _ in 0..5000 {
            let d = stream.step().unwrap().unwrap();
            values.push(d.value);
            if d.splits {
                flagged.push(values.len());
            }
        }
        assert_eq!(flagged, splitting_times(&values));
    }

    #[test]
    fn homogeneous_requires_mass_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows = RowSchedule::Homogeneous(RowDistribution::finite(&[0.0, 1.0]).unwrap());
        assert!(PShiftedStream::new(rows, &mut rng).is_err());
        assert!(RowDistribution::finite(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn igm_zero_draws_give_center_prefix() {
        // θ huge makes every geometric draw zero
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let center = CentralOrder::new(vec![7, 2, 9, 4]).unwrap();
        let th = DispersionVector::constant(700.0, 6).unwrap();
        let r = sample_igm_top_t(&th, &center, &mut rng).unwrap();
        assert_eq!(r.items(), &[7, 2, 9, 4, 1, 3]);
    }

    #[test]
    fn large_draws_extend_window() {
        let v = p_shifted_from_draws(&[1000, 1, 999]).unwrap();
        assert_eq!(v, vec![1000, 1, 1001]);
    }
}
