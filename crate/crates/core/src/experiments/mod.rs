//! Monte Carlo and exact verification experiments, with reports that can be
//! written as CSV.
//!
//! Replicates draw from independent ChaCha streams keyed by experiment name
//! and replicate index, so results do not depend on thread scheduling.

pub mod bias;
pub mod center;
pub mod checks;
pub mod suites;
pub mod synthetic;

use std::fmt::Write as _;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use suites::{run_suite, SuiteOptions, SUITES};

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// A value reported for the original experiment.
    Reported,
    /// An exact computation (enumeration, closed form).
    Exact,
    /// A proven bound.
    Bound,
    /// An invariant that must hold identically.
    Identity,
    /// Informational only.
    None,
}

impl Source {
    fn as_str(self) -> &'static str {
        match self {
            Source::Reported => "reported",
            Source::Exact => "exact",
            Source::Bound => "bound",
            Source::Identity => "identity",
            Source::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub reference: f64,
    /// Human-readable acceptance rule.
    pub rule: String,
    pub source: Source,
    pub passed: bool,
    /// Non-gating checks are reported but do not fail the experiment.
    pub gating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub params: Vec<(String, String)>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn new(id: impl Into<String>) -> Self {
        ExperimentReport {
            id: id.into(),
            params: Vec::new(),
            checks: Vec::new(),
            runtime: Duration::ZERO,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        measured: f64,
        reference: f64,
        rule: impl Into<String>,
        source: Source,
        passed: bool,
    ) -> &mut Self {
        self.checks.push(Check {
            name: name.into(),
            measured,
            reference,
            rule: rule.into(),
            source,
            passed,
            gating: true,
        });
        self
    }

    /// A non-gating row.
    pub fn note(
        &mut self,
        name: impl Into<String>,
        measured: f64,
        reference: f64,
        rule: impl Into<String>,
        source: Source,
    ) -> &mut Self {
        let rule = rule.into();
        self.check(name, measured, reference, rule, source, true);
        let last = self.checks.last_mut().expect("just pushed");
        last.gating = false;
        self
    }

    /// A non-gating row whose rule was evaluated but is informational.
    pub fn soft_check(
        &mut self,
        name: impl Into<String>,
        measured: f64,
        reference: f64,
        rule: impl Into<String>,
        source: Source,
        passed: bool,
    ) -> &mut Self {
        self.check(name, measured, reference, rule, source, passed);
        self.checks.last_mut().expect("just pushed").gating = false;
        self
    }

    /// Whether every gating check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.gating).all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.gating && !c.passed).collect()
    }

    pub const CSV_HEADER: &'static str = "experiment,check,measured,reference,rule,source,gating,passed";

    /// CSV rows (no header). Runtime is left out so that reruns with the
    /// same seed are byte-identical.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.id,
                c.name,
                c.measured,
                c.reference,
                csv_field(&c.rule),
                c.source.as_str(),
                c.gating,
                c.passed
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows())
    }

    /// Human-readable summary, including runtime.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{status}] {} ({:.2} s)", self.id, self.runtime.as_secs_f64());
        if !self.params.is_empty() {
            let p: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "  params: {}", p.join(" "));
        }
        for c in &self.checks {
            let mark = match (c.gating, c.passed) {
                (false, _) => "info",
                (true, true) => "ok",
                (true, false) => "FAIL",
            };
            let _ = writeln!(
                out,
                "  {mark:>4} {}: measured {} reference {} ({}; {})",
                c.name,
                fmt_num(c.measured),
                fmt_num(c.reference),
                c.rule,
                c.source.as_str()
            );
        }
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Generator for replicate `index` of experiment `tag`.
pub fn replicate_rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    // FNV-1a of the tag keeps experiments on unrelated seeds
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h);
    rng.set_stream(index);
    rng
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
