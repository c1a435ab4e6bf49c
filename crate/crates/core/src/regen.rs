//! Renewal structure of infinite P-shifted permutations: the law of the
//! component length `L`, its mean `1/(q;q)_∞` under geometric rows, and a
//! Monte Carlo check by streaming.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::{check_theta, PShiftedStream, RowDistribution, RowSchedule, DEFAULT_STREAM_CAP};

/// Default relative tolerance of [`q_pochhammer`].
pub const DEFAULT_TOL: f64 = 1e-15;
/// Largest number of factors [`q_pochhammer`] will multiply.
const MAX_FACTORS: u64 = 100_000_000;
/// Below this θ the effective length uses the modular transformation of the
/// Euler function instead of the (long) product.
const MODULAR_THETA: f64 = 0.25;
/// Default cap on the series length for the component-length law.
pub const DEFAULT_N_MAX: usize = 20_000;
/// The adaptive series stops once the unassigned mass drops below this.
const TAIL_TARGET: f64 = 1e-12;

/// `(a; q)_∞ = ∏_{k≥0} (1 - a q^k)`, stopping once `|a| q^k < tol (1 - q)`.
pub fn q_pochhammer(a: f64, q: f64, tol: f64) -> Result<f64> {
    if a.is_nan() || a.abs() >= 1.0 {
        return Err(Error::input(format!("|a| = {} must be below 1", a.abs())));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::input(format!("q = {q} must lie in [0, 1)")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::input(format!("tolerance {tol} must be positive")));
    }
    let stop = tol * (1.0 - q);
    let mut term = a;
    let mut log = 0.0;
    let mut k = 0u64;
    while term.abs() >= stop {
        log += (-term).ln_1p();
        term *= q;
        k += 1;
        if k > MAX_FACTORS {
            return Err(Error::input(format!(
                "q = {q} is too close to 1 for the direct product"
            )));
        }
        if term == 0.0 {
            break;
        }
    }
    Ok(log.exp())
}

/// `ln (q; q)_∞` at `q = e^{-θ}`, accurate for all `θ > 0`.
fn log_euler(theta: f64) -> Result<f64> {
    if theta >= MODULAR_THETA {
        let q = (-theta).exp();
        return Ok(q_pochhammer(q, q, DEFAULT_TOL)?.ln());
    }
    // Dedekind eta: (q;q)_∞ = sqrt(2π/θ) e^{θ/24 - π²/(6θ)} (q';q')_∞, q' = e^{-4π²/θ}
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let dual = (-4.0 * pi2 / theta).exp();
    let tail = if dual > 0.0 {
        q_pochhammer(dual, dual, DEFAULT_TOL)?.ln()
    } else {
        0.0
    };
    Ok(-pi2 / (6.0 * theta) + 0.5 * (2.0 * std::f64::consts::PI / theta).ln() + theta / 24.0 + tail)
}

/// Mean component length `E L = 1 / (e^{-θ}; e^{-θ})_∞` of the
/// single-parameter infinite model. Overflows to `+∞` for `θ` below ~0.004.
pub fn expected_component_length(theta: f64) -> Result<f64> {
    if theta == f64::INFINITY {
        return Ok(1.0);
    }
    check_theta(theta)?;
    Ok((-log_euler(theta)?).exp())
}

/// Law of the component length for i.i.d. rows `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthLaw {
    /// `u_n = ∏_{i≤n} (p_1 + … + p_i)`, index `n - 1`.
    pub u: Vec<f64>,
    /// `P(L = n)`, index `n - 1`.
    pub pmf: Vec<f64>,
    /// `1 - Σ pmf`, mass beyond the computed range.
    pub tail: f64,
}

impl LengthLaw {
    pub fn n_max(&self) -> usize {
        self.pmf.len()
    }

    /// `Σ n P(L = n)` over the computed range.
    pub fn mean(&self) -> f64 {
        kahan_sum(self.pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p))
    }

    /// Truncated `F(z) = Σ P(L = n) z^n`.
    pub fn pgf(&self, z: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, p| (acc + p) * z)
    }

    /// `1 - 1/(1 + Σ u_n z^n)` from the truncated `u` sequence.
    pub fn pgf_from_u(&self, z: f64) -> f64 {
        let s = self.u.iter().rev().fold(0.0, |acc, u| (acc + u) * z);
        1.0 - 1.0 / (1.0 + s)
    }
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Component-length law by renewal inversion: `u` is the renewal sequence of
/// the splitting times, so `P(L = n) = u_n - Σ_{k<n} P(L = k) u_{n-k}`.
/// With `n_max = None` the series grows until the unassigned mass is below
/// `1e-12` or [`DEFAULT_N_MAX`] terms are reached.
pub fn component_length_law(row: &RowDistribution, n_max: Option<usize>) -> Result<LengthLaw> {
    if row.pmf(1) <= 0.0 {
        return Err(Error::input("the row distribution needs p_1 > 0"));
    }
    let limit = n_max.unwrap_or(DEFAULT_N_MAX);
    if limit == 0 {
        return Err(Error::input("n_max must be at least 1"));
    }
    let mut u = Vec::new();
    let mut pmf: Vec<f64> = Vec::new();
    let mut mass = 0.0;
    let mut mass_c = 0.0;
    let mut running = 1.0;
    for n in 1..=limit {
        running *= row.cdf(n as u64).min(1.0);
        u.push(running);
        let conv = kahan_sum((1..n).map(|k| pmf[k - 1] * u[n - k - 1]));
        let f = (running - conv).max(0.0);
        pmf.push(f);
        let y = f - mass_c;
        let t = mass + y;
        mass_c = (t - mass) - y;
        mass = t;
        if n_max.is_none() && 1.0 - mass < TAIL_TARGET {
            break;
        }
    }
    Ok(LengthLaw {
        u,
        pmf,
        tail: 1.0 - mass,
    })
}

/// Component lengths collected from a streamed infinite permutation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalSummary {
    pub theta: f64,
    pub lengths: Vec<u64>,
    /// `E L` from the Q-Pochhammer formula.
    pub expected_length: f64,
    /// Leading terms of the `u` sequence.
    pub u_prefix: Vec<f64>,
    /// Positions consumed by the stream, including the discarded trailing
    /// partial component.
    pub positions: u64,
}

impl RenewalSummary {
    fn new(theta: f64) -> Result<Self> {
        let row = RowDistribution::geometric(theta)?;
        let u_prefix = (1..=10u64)
            .scan(1.0, |acc, n| {
                *acc *= row.cdf(n);
                Some(*acc)
            })
            .collect();
        Ok(RenewalSummary {
            theta,
            lengths: Vec::new(),
            expected_length: expected_component_length(theta)?,
            u_prefix,
            positions: 0,
        })
    }

    pub fn n_components(&self) -> usize {
        self.lengths.len()
    }

    pub fn empirical_mean(&self) -> f64 {
        if self.lengths.is_empty() {
            return f64::NAN;
        }
        self.lengths.iter().sum::<u64>() as f64 / self.lengths.len() as f64
    }

    /// Standard error of [`Self::empirical_mean`].
    pub fn standard_error(&self) -> f64 {
        let n = self.lengths.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let m = self.empirical_mean();
        let ss: f64 = self.lengths.iter().map(|&l| (l as f64 - m).powi(2)).sum();
        (ss / (n - 1.0) / n).sqrt()
    }

    /// Concatenates another run at the same θ.
    pub fn merge(mut self, other: RenewalSummary) -> RenewalSummary {
        self.lengths.extend(other.lengths);
        self.positions += other.positions;
        self
    }
}

/// Streams a single-parameter infinite permutation and records the first
/// `n_components` complete components.
pub fn renewal_monte_carlo<R: RngCore + ?Sized>(
    theta: f64,
    n_components: usize,
    rng: &mut R,
) -> Result<RenewalSummary> {
    renewal_monte_carlo_with_cap(
        theta,
        n_components,
        rng,
        DEFAULT_STREAM_CAP.max(n_components.saturating_mul(64)),
    )
}

/// As [`renewal_monte_carlo`], failing with the partial summary once `cap`
/// positions have been consumed.
pub fn renewal_monte_carlo_with_cap<R: RngCore + ?Sized>(
    theta: f64,
    n_components: usize,
    rng: &mut R,
    cap: usize,
) -> Result<RenewalSummary> {
    let mut summary = RenewalSummary::new(theta)?;
    let rows = RowSchedule::Homogeneous(RowDistribution::geometric(theta)?);
    let mut stream = PShiftedStream::with_cap(rows, rng, cap)?;
    let mut last = 0usize;
    while summary.lengths.len() < n_components {
        match stream.step() {
            Ok(Some(draw)) => {
                if draw.splits {
                    let pos = stream.position();
                    summary.lengths.push((pos - last) as u64);
                    last = pos;
                }
            }
            Ok(None) => unreachable!("homogeneous streams do not end"),
            Err(Error::StreamCap { cap, .. }) => {
                summary.positions = stream.position() as u64;
                return Err(Error::StreamCap {
                    cap,
                    partial: Some(Box::new(summary)),
                });
            }
            Err(e) => return Err(e),
        }
    }
    summary.positions = stream.position() as u64;
    Ok(summary)
}

/// [`renewal_monte_carlo`] split over `streams` independent generator
/// streams derived from `seed`, merged in stream order.
pub fn renewal_monte_carlo_parallel(
    theta: f64,
    n_components: usize,
    seed: u64,
    streams: usize,
) -> Result<RenewalSummary> {
    let streams = streams.max(1);
    let per = n_components / streams;
    let extra = n_components % streams;
    let parts: Vec<RenewalSummary> = (0..streams)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            renewal_monte_carlo(theta, per + usize::from(i < extra), &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let first = iter.next().expect("at least one stream");
    Ok(iter.fold(first, RenewalSummary::merge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn pochhammer_trivial_cases() {
        assert_eq!(q_pochhammer(0.0, 0.5, 1e-12).unwrap(), 1.0);
        assert!((q_pochhammer(0.3, 0.0, 1e-12).unwrap() - 0.7).abs() < 1e-15);
        assert!(q_pochhammer(1.0, 0.5, 1e-12).is_err());
        assert!(q_pochhammer(0.5, 1.0, 1e-12).is_err());
        assert!(q_pochhammer(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn euler_function_at_inverse_e() {
        let q = (-1.0f64).exp();
        let direct: f64 = (1..=60).map(|k| 1.0 - q.powi(k)).product();
        let got = q_pochhammer(q, q, 1e-15).unwrap();
        assert!((got - direct).abs() < 1e-14);
        assert!((got - 0.50443).abs() < 1e-5);
    }

    #[test]
    fn effective_length_values() {
        assert!((expected_component_length(1.0).unwrap() - 1.9824).abs() < 1e-4);
        assert!((expected_component_length(5.0).unwrap() - 1.0068).abs() < 1e-4);
        assert_eq!(expected_component_length(f64::INFINITY).unwrap(), 1.0);
        assert!(expected_component_length(0.0).is_err());
        assert!(expected_component_length(-1.0).is_err());
        assert!(expected_component_length(1e-3).unwrap().is_infinite());
    }

    #[test]
    fn modular_branch_matches_product() {
        for &theta in &[0.05f64, 0.1, 0.2, 0.25, 0.3, 0.6] {
            let q = (-theta).exp();
            let direct = q_pochhammer(q, q, 1e-16).unwrap().ln();
            let pi2 = std::f64::consts::PI.powi(2);
            let modular = -pi2 / (6.0 * theta) + 0.5 * (2.0 * std::f64::consts::PI / theta).ln() + theta / 24.0;
            assert!((direct - modular).abs() < 1e-10 * direct.abs(), "θ={theta}");
            assert!((log_euler(theta).unwrap() - direct).abs() < 1e-10 * direct.abs());
        }
    }

    #[test]
    fn effective_length_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..=500 {
            let v = expected_component_length(i as f64 * 0.01).unwrap();
            assert!(v < prev && v > 1.0);
            prev = v;
        }
    }

    #[test]
    fn point_mass_rows() {
        let row = RowDistribution::finite(&[1.0]).unwrap();
        let law = component_length_law(&row, Some(20)).unwrap();
        assert!(law.u.iter().all(|&u| u == 1.0));
        assert_eq!(law.pmf[0], 1.0);
        assert!(law.pmf[1..].iter().all(|&p| p == 0.0));
        assert_eq!(law.pgf(0.3), 0.3);
        assert!(component_length_law(&RowDistribution::finite(&[0.0, 1.0]).unwrap(), None).is_err());
    }

    #[test]
    fn two_routes_agree() {
        for &theta in &[0.5, 1.0, 2.0] {
            let law = component_length_law(&RowDistribution::geometric(theta).unwrap(), None).unwrap();
            let el = expected_component_length(theta).unwrap();
            assert!((law.mean() - el).abs() < 1e-4 * el, "θ={theta}: {} vs {el}", law.mean());
            assert!(law.pmf.iter().all(|&p| p >= -1e-12));
            assert!(law.pmf.iter().sum::<f64>() <= 1.0 + 1e-9);
            let long = component_length_law(&RowDistribution::geometric(theta).unwrap(), Some(200)).unwrap();
            for &z in &[0.2, 0.5, 0.8] {
                assert!((long.pgf(z) - long.pgf_from_u(z)).abs() < 1e-10);
            }
        }
        let law = component_length_law(&RowDistribution::geometric(1.0).unwrap(), Some(60)).unwrap();
        assert!((law.mean() - 1.9824).abs() < 1e-4);
    }

    #[test]
    fn large_theta_components_are_short() {
        let law = component_length_law(&RowDistribution::geometric(5.0).unwrap(), None).unwrap();
        assert!(law.pmf[0] >= 0.99);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = renewal_monte_carlo(5.0, 10_000, &mut rng).unwrap();
        let ones = s.lengths.iter().filter(|&&l| l == 1).count();
        assert!(ones as f64 / 10_000.0 > 0.98);
    }

    #[test]
    fn monte_carlo_matches_law() {
        let theta = 1.0;
        let s = renewal_monte_carlo_parallel(theta, 100_000, 17, 8).unwrap();
        assert_eq!(s.n_components(), 100_000);
        assert!((s.empirical_mean() - s.expected_length).abs() < 3.0 * s.standard_error());

        let law = component_length_law(&RowDistribution::geometric(theta).unwrap(), None).unwrap();
        let n = s.lengths.len() as f64;
        let mut observed = [0.0; 11];
        for &l in &s.lengths {
            observed[(l.min(11) - 1) as usize] += 1.0;
        }
        let mut chi2 = 0.0;
        let mut tail = 1.0;
        for (k, &obs) in observed.iter().enumerate() {
            let p = if k < 10 { law.pmf[k] } else { tail };
            tail -= if k < 10 { p } else { 0.0 };
            let e = n * p;
            chi2 += (obs - e).powi(2) / e;
        }
        let crit = ChiSquared::new(10.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "χ² = {chi2}");

        let m = s.empirical_mean();
        let x: Vec<f64> = s.lengths.iter().map(|&l| l as f64 - m).collect();
        let var: f64 = x.iter().map(|v| v * v).sum();
        let cov: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
        assert!((cov / var).abs() < 3.0 / n.sqrt());
    }

    #[test]
    fn cap_returns_partial() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        match renewal_monte_carlo_with_cap(0.3, 1_000_000, &mut rng, 500) {
            Err(Error::StreamCap { cap, partial: Some(p) }) => {
                assert_eq!(cap, 500);
                assert!(p.lengths.iter().sum::<u64>() <= 500);
                assert_eq!(p.positions, 500);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn reproducible() {
        let a = renewal_monte_carlo_parallel(1.0, 1000, 3, 4).unwrap();
        let b = renewal_monte_carlo_parallel(1.0, 1000, 3, 4).unwrap();
        assert_eq!(a, b);
    }
}
