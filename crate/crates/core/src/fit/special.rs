//! q-factorial, the mean-inversions function `g`, and truncated geometric
//! moments. Everything is evaluated in the dispersion `θ = -ln q`, which keeps
//! `1 - q^k` accurate through `expm1`.

use crate::error::{Error, Result};

fn check_q(q: f64) -> Result<()> {
    if (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::input(format!("q = {q} must lie in [0, 1)")))
    }
}

/// `ln ∏_{k=1}^{n} (1 - q^k) / (1 - q)`.
pub fn log_q_factorial(q: f64, n: usize) -> Result<f64> {
    check_q(q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let theta = -q.ln();
    Ok((2..=n).map(|m| log_stage_normalizer(theta, m as u64)).sum())
}

/// `f(q) = Σ_{π ∈ S_n} q^{inv(π)} = ∏_{k=1}^{n} (1 - q^k) / (1 - q)`.
pub fn q_factorial(q: f64, n: usize) -> Result<f64> {
    Ok(log_q_factorial(q, n)?.exp())
}

/// `ln Σ_{i<m} e^{-θ i} = ln (1 - e^{-mθ}) / (1 - e^{-θ})`.
pub(crate) fn log_stage_normalizer(theta: f64, m: u64) -> f64 {
    if m <= 1 || theta.is_infinite() {
        return 0.0;
    }
    let m_f = m as f64;
    if theta * m_f < 1e-6 {
        // (m-1)/2 θ is the first-order correction to ln m
        return m_f.ln() - theta * (m_f - 1.0) / 2.0;
    }
    ((-m_f * theta).exp_m1() / (-theta).exp_m1()).ln()
}

/// Mean of the truncated geometric law on `{0, …, m-1}` with weights `e^{-θ i}`:
/// `1/(e^θ - 1) - m/(e^{mθ} - 1)`.
pub fn stage_mean(theta: f64, m: u64) -> f64 {
    if m <= 1 || theta.is_infinite() {
        return 0.0;
    }
    let m_f = m as f64;
    if theta * m_f < 1e-2 {
        // cumulant expansion of the tilted discrete uniform
        let m2 = m_f * m_f;
        let m4 = m2 * m2;
        return (m_f - 1.0) / 2.0 - theta * (m2 - 1.0) / 12.0 + theta.powi(3) * (m4 - 1.0) / 720.0
            - theta.powi(5) * (m4 * m2 - 1.0) / 30240.0;
    }
    1.0 / theta.exp_m1() - m_f / (m_f * theta).exp_m1()
}

/// Variance of the same law, `-d(stage_mean)/dθ`.
pub fn stage_variance(theta: f64, m: u64) -> f64 {
    if m <= 1 || theta.is_infinite() {
        return 0.0;
    }
    let m_f = m as f64;
    if theta * m_f < 1e-2 {
        let m2 = m_f * m_f;
        let m4 = m2 * m2;
        return (m2 - 1.0) / 12.0 - theta * theta * (m4 - 1.0) / 240.0 + theta.powi(4) * (m4 * m2 - 1.0) / 6048.0;
    }
    let a = (theta / 2.0).sinh();
    let b = (m_f * theta / 2.0).sinh();
    1.0 / (4.0 * a * a) - m_f * m_f / (4.0 * b * b)
}

/// Expected inversions under Mallows' φ with dispersion `θ` on `S_n`.
pub(crate) fn mean_inversions_theta(theta: f64, n: usize) -> f64 {
    (2..=n as u64).map(|m| stage_mean(theta, m)).sum()
}

pub(crate) fn var_inversions_theta(theta: f64, n: usize) -> f64 {
    (2..=n as u64).map(|m| stage_variance(theta, m)).sum()
}

/// `g(q) = q f'(q) / f(q)`, the expected number of inversions at `q = e^{-θ}`.
/// Continuous on `[0, 1]`: `g(0) = 0` and `g(1) = n(n-1)/4`.
pub fn mean_inversions_g(q: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::input(format!("q = {q} must lie in [0, 1]")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if q == 1.0 {
        return Ok((n * n.saturating_sub(1)) as f64 / 4.0);
    }
    Ok(mean_inversions_theta(-q.ln(), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::permutations;

    /// Literal closed form with the removable singularity left in.
    fn g_closed_form(q: f64, n: usize) -> f64 {
        let mut acc = 0.0;
        for k in 1..n {
            let k_f = k as f64;
            acc += (1.0 - (k_f + 1.0) * q.powi(k as i32) + k_f * q.powi(k as i32 + 1))
                / ((1.0 - q) * (1.0 - q.powi(k as i32 + 1)));
        }
        q * acc
    }

    fn brute(q: f64, n: usize) -> (f64, f64) {
        let (mut f, mut num) = (0.0, 0.0);
        for p in permutations(n) {
            let inv = p.inversions() as f64;
            let w = q.powf(inv);
            f += w;
            num += inv * w;
        }
        (f, num / f)
    }

    #[test]
    fn q_factorial_examples() {
        for &q in &[0.0, 0.2, 0.7] {
            assert!((q_factorial(q, 2).unwrap() - (1.0 + q)).abs() < 1e-14);
            assert_eq!(q_factorial(0.0, 6).unwrap(), 1.0);
        }
        let (f, _) = brute(0.5, 4);
        assert!((q_factorial(0.5, 4).unwrap() - f).abs() < 1e-12 * f);
        assert!(q_factorial(1.0, 3).is_err());
        assert!(q_factorial(-0.1, 3).is_err());
    }

    #[test]
    fn g_examples() {
        let q = (-1.0f64).exp();
        let g2 = mean_inversions_g(q, 2).unwrap();
        assert!((g2 - q / (1.0 + q)).abs() < 1e-15);
        assert!((g2 - 0.268_941_421_369_995).abs() < 1e-12);
        assert_eq!(mean_inversions_g(0.0, 7).unwrap(), 0.0);
        let (_, g5) = brute(q, 5);
        assert!((mean_inversions_g(q, 5).unwrap() - g5).abs() < 1e-10 * g5);
    }

    #[test]
    fn g_matches_closed_form_and_is_continuous_at_one() {
        for n in 2..12 {
            for i in 1..100 {
                let q = i as f64 / 100.0;
                let a = mean_inversions_g(q, n).unwrap();
                let b = g_closed_form(q, n);
                assert!((a - b).abs() <= 1e-9 * b.max(1e-300), "n={n} q={q}: {a} vs {b}");
            }
            let limit = (n * (n - 1)) as f64 / 4.0;
            let near = mean_inversions_g(1.0 - 1e-12, n).unwrap();
            assert!((near - limit).abs() < 1e-8, "n={n}: {near} vs {limit}");
            assert_eq!(mean_inversions_g(1.0, n).unwrap(), limit);
        }
    }

    #[test]
    fn series_branch_joins_direct_branch() {
        for m in [2u64, 3, 10, 100, 1000] {
            let cut = 1e-2 / m as f64;
            let below = stage_mean(cut * (1.0 - 1e-9), m);
            let above = stage_mean(cut * (1.0 + 1e-9), m);
            assert!((below - above).abs() < 1e-11 * m as f64, "m={m}");
            let vb = stage_variance(cut * (1.0 - 1e-9), m);
            let va = stage_variance(cut * (1.0 + 1e-9), m);
            assert!((vb - va).abs() < 1e-8 * (m * m) as f64, "m={m}: {vb} {va}");
        }
    }

    #[test]
    fn variance_is_minus_derivative_of_mean() {
        for m in [2u64, 5, 9] {
            for &t in &[0.05, 0.3, 1.0, 3.0] {
                let h = 1e-5;
                let fd = -(stage_mean(t + h, m) - stage_mean(t - h, m)) / (2.0 * h);
                assert!((fd - stage_variance(t, m)).abs() < 1e-7, "m={m} t={t}");
            }
        }
    }

    #[test]
    fn g_strictly_decreasing_in_theta() {
        for n in 2..=10 {
            let mut prev = f64::INFINITY;
            let mut t = 0.01;
            while t <= 10.0 {
                let v = mean_inversions_theta(t, n);
                assert!(v < prev, "n={n} θ={t}");
                prev = v;
                t += 0.01;
            }
        }
    }
}
