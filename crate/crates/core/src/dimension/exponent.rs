//! Critical exponent from orbit distances: a counting slope and a
//! truncated Poincaré-series abscissa.

use serde::Serialize;

use super::boxcount::linear_fit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    /// Slope of `log N(R)` against `R`.
    pub delta_counting: f64,
    pub counting_stderr: f64,
    /// Abscissa where the length-`L` and length-`(L-2)` series terms balance.
    pub delta_series: f64,
    /// Fit window `[R_lo, R_hi]`.
    pub r_window: (f64, f64),
    /// Smallest distance among words of the maximal length.
    pub r_max: f64,
    pub word_length: usize,
}

/// Number of grid points used in the counting fit.
const COUNT_GRID: usize = 64;

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Estimates the critical exponent from `(word length, d(o, gamma o))`
/// pairs covering every reduced word of length at most `len`.
pub fn critical_exponent(samples: &[(usize, f64)], len: usize) -> Result<ExponentEstimate> {
    if samples.len() < 1000 {
        return Err(Error::Estimation(format!(
            "critical exponent needs at least 1000 distances, got {}",
            samples.len()
        )));
    }
    if len < 3 {
        return Err(Error::Estimation("critical exponent needs word length at least 3".into()));
    }
    if samples.iter().any(|(l, d)| *l > len || !d.is_finite() || *d < 0.0) {
        return Err(Error::Estimation("distances must be finite, nonnegative and of length at most L".into()));
    }
    let r_max = samples.iter().filter(|(l, _)| *l == len).map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    if !r_max.is_finite() || r_max <= 0.0 {
        return Err(Error::Estimation(format!("no positive distances at word length {len}")));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|(_, d)| *d).collect();
    sorted.sort_by(f64::total_cmp);
    let (r_lo, r_hi) = (0.2 * r_max, 0.9 * r_max);
    let rs: Vec<f64> = (0..COUNT_GRID).map(|i| r_lo + (r_hi - r_lo) * i as f64 / (COUNT_GRID - 1) as f64).collect();
    let counts: Vec<usize> = rs.iter().map(|r| sorted.partition_point(|d| d <= r)).collect();
    if counts[0] == 0 || counts[COUNT_GRID - 1] <= counts[0] {
        return Err(Error::Estimation("orbit count does not grow over the fit window".into()));
    }
    let logs: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (delta_counting, counting_stderr, _) = linear_fit(&rs, &logs);

    let top: Vec<f64> = samples.iter().filter(|(l, _)| *l == len).map(|(_, d)| *d).collect();
    let low: Vec<f64> = samples.iter().filter(|(l, _)| *l == len - 2).map(|(_, d)| *d).collect();
    if low.is_empty() {
        return Err(Error::Estimation(format!("no distances at word length {}", len - 2)));
    }
    let balance = |s: f64| log_sum_exp(top.iter().map(|d| -s * d)) - log_sum_exp(low.iter().map(|d| -s * d));
    let (mut a, mut b) = (0.0, 1.0);
    if balance(a) <= 0.0 {
        return Err(Error::Estimation("series terms do not grow with word length".into()));
    }
    while balance(b) > 0.0 {
        b *= 2.0;
        if b > 1e3 {
            return Err(Error::Estimation("series abscissa not bracketed".into()));
        }
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if balance(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(ExponentEstimate {
        delta_counting,
        counting_stderr,
        delta_series: 0.5 * (a + b),
        r_window: (r_lo, r_hi),
        r_max,
        word_length: len,
    })
}
