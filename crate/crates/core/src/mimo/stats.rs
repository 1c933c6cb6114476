//! Wilson score intervals and interval-based ordering checks.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Outcome of checking `rate(a) >= rate(b)` with 95% intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingVerdict {
    /// Intervals do not overlap and `a` is above `b`.
    Separated,
    /// Intervals overlap; the ordering is not contradicted.
    Overlap,
    /// Intervals do not overlap and `a` is below `b`.
    Violated,
}

impl OrderingVerdict {
    pub fn holds(&self) -> bool {
        !matches!(self, OrderingVerdict::Violated)
    }
}

/// Check `a_k / a_n >= b_k / b_n`.
pub fn compare_rates(a_k: u64, a_n: u64, b_k: u64, b_n: u64) -> OrderingVerdict {
    let (a_lo, a_hi) = wilson(a_k, a_n, Z_95);
    let (b_lo, b_hi) = wilson(b_k, b_n, Z_95);
    if a_lo > b_hi {
        OrderingVerdict::Separated
    } else if a_hi < b_lo {
        OrderingVerdict::Violated
    } else {
        OrderingVerdict::Overlap
    }
}
