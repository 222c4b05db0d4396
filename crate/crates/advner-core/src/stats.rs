//! Multi-run aggregation and the paired t-test used to compare two
//! experimental conditions (e.g. adversarial fine-tuning vs. augmented
//! re-training) across seed-matched runs.
//!
//! The two-sided p-value comes from the Student-t distribution evaluated via
//! the regularized incomplete beta function, computed in-tree with a Lentz
//! continued fraction to tolerance `BETA_EPS` (1e-12).

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("series `{0}` has no observations")]
    EmptySeries(String),
    #[error("series `{0}` repeats seed {1}")]
    DuplicateSeed(String, u64),
    #[error("paired test requires at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("series `{a}` and `{b}` differ in length ({len_a} vs {len_b})")]
    LengthMismatch {
        a: String,
        b: String,
        len_a: usize,
        len_b: usize,
    },
    #[error(
        "series `{a}` and `{b}` are not seed-paired at position {index}: {seed_a} vs {seed_b}"
    )]
    SeedMismatch {
        a: String,
        b: String,
        index: usize,
        seed_a: u64,
        seed_b: u64,
    },
    #[error("run-series line {line} is not valid JSON: {detail}")]
    BadLine { line: usize, detail: String },
}

/// F1 observations of one experimental condition across seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub condition: String,
    /// `(seed, f1)` pairs in run order; seeds are unique within a series.
    pub observations: Vec<(u64, f64)>,
}

impl RunSeries {
    pub fn new(
        condition: impl Into<String>,
        observations: Vec<(u64, f64)>,
    ) -> Result<Self, StatsError> {
        let condition = condition.into();
        let mut seen = std::collections::HashSet::new();
        for (seed, _) in &observations {
            if !seen.insert(*seed) {
                return Err(StatsError::DuplicateSeed(condition, *seed));
            }
        }
        Ok(Self {
            condition,
            observations,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|(_, v)| *v).collect()
    }
}

/// One line of a run-series JSON-lines file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunObservation {
    pub condition: String,
    pub seed: u64,
    pub f1: f64,
}

/// Parse a JSON-lines run-series file into one series per condition, in
/// first-appearance order.
pub fn parse_run_series(text: &str) -> Result<Vec<RunSeries>, StatsError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_condition: std::collections::HashMap<String, Vec<(u64, f64)>> =
        std::collections::HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let obs: RunObservation = serde_json::from_str(line).map_err(|e| StatsError::BadLine {
            line: lineno + 1,
            detail: e.to_string(),
        })?;
        if !by_condition.contains_key(&obs.condition) {
            order.push(obs.condition.clone());
        }
        by_condition
            .entry(obs.condition)
            .or_default()
            .push((obs.seed, obs.f1));
    }
    order
        .into_iter()
        .map(|name| {
            let observations = by_condition.remove(&name).unwrap_or_default();
            RunSeries::new(name, observations)
        })
        .collect()
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_sd(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Arithmetic mean and sample (n-1) standard deviation; sd is 0 for a single
/// observation.
pub fn summarize(series: &RunSeries) -> Result<(f64, f64), StatsError> {
    if series.observations.is_empty() {
        return Err(StatsError::EmptySeries(series.condition.clone()));
    }
    let values = series.values();
    let mean = mean_of(&values);
    Ok((mean, sample_sd(&values, mean)))
}

/// Result of a paired t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub mean_difference: f64,
    /// Set when all per-pair differences are identical and non-zero, which
    /// makes the statistic unbounded (p reported as 0).
    pub degenerate: bool,
}

impl TTestResult {
    pub fn significant_at(&self, threshold: f64) -> bool {
        self.p_value < threshold
    }
}

/// Two-sided paired t-test over seed-matched series.
///
/// The two series must carry the same seed sequence in the same order; the
/// statistic is computed on per-pair differences `a_i - b_i`.
pub fn paired_t_test(a: &RunSeries, b: &RunSeries) -> Result<TTestResult, StatsError> {
    if a.observations.len() != b.observations.len() {
        return Err(StatsError::LengthMismatch {
            a: a.condition.clone(),
            b: b.condition.clone(),
            len_a: a.observations.len(),
            len_b: b.observations.len(),
        });
    }
    if a.observations.len() < 2 {
        return Err(StatsError::TooFewObservations(a.observations.len()));
    }
    for (index, ((seed_a, _), (seed_b, _))) in
        a.observations.iter().zip(&b.observations).enumerate()
    {
        if seed_a != seed_b {
            return Err(StatsError::SeedMismatch {
                a: a.condition.clone(),
                b: b.condition.clone(),
                index,
                seed_a: *seed_a,
                seed_b: *seed_b,
            });
        }
    }

    let diffs: Vec<f64> = a
        .observations
        .iter()
        .zip(&b.observations)
        .map(|((_, va), (_, vb))| va - vb)
        .collect();
    let n = diffs.len();
    let df = (n - 1) as u64;
    let mean = mean_of(&diffs);
    let sd = sample_sd(&diffs, mean);

    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTestResult {
                t_statistic: 0.0,
                degrees_of_freedom: df,
                p_value: 1.0,
                mean_difference: 0.0,
                degenerate: false,
            }
        } else {
            TTestResult {
                t_statistic: f64::INFINITY.copysign(mean),
                degrees_of_freedom: df,
                p_value: 0.0,
                mean_difference: mean,
                degenerate: true,
            }
        });
    }

    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided_p(t, df as f64),
        mean_difference: mean,
        degenerate: false,
    })
}

/// Two-sided tail probability of Student's t: `P(|T_df| >= |t|)`.
///
/// Uses the identity `P(|T| >= t) = I_x(df/2, 1/2)` with
/// `x = df / (df + t^2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    reg_inc_beta(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// Convergence tolerance of the continued-fraction evaluation.
pub const BETA_EPS: f64 = 1e-12;
const MAX_ITER: usize = 500;
const TINY: f64 = 1e-300;

/// Natural log of the gamma function (Lanczos, g = 7, 9 coefficients).
#[allow(clippy::excessive_precision)]
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz's method).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// The continued fraction converges fastest for `x < (a+1)/(a+b+2)`; above
/// that point the symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)` is used.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}
