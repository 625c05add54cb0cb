//! Paired significance testing and multiplicity correction.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const WILCOXON_EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)` over the non-zero differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub exact: bool,
}

/// Average 1-based ranks, with tied values sharing the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WilcoxonMethod {
    /// Exact up to [`WILCOXON_EXACT_MAX_N`] non-zero differences, normal beyond.
    #[default]
    Auto,
    Exact,
    Normal,
}

/// Two-sided Wilcoxon signed-rank test on the paired differences `a - b`.
///
/// Zero differences are dropped. Up to [`WILCOXON_EXACT_MAX_N`] remaining
/// pairs the p-value comes from enumerating every sign assignment over the
/// (tie-averaged) ranks; beyond that, from the normal approximation with tie
/// and continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(a, b, WilcoxonMethod::Auto)
}

pub fn wilcoxon_signed_rank_with(a: &[f64], b: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            exact: true,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let total: f64 = ranks.iter().sum();
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let w = w_plus.min(total - w_plus);

    let exact = match method {
        WilcoxonMethod::Auto => n <= WILCOXON_EXACT_MAX_N,
        WilcoxonMethod::Exact if n > 24 => {
            return Err(Error::InvalidArgument(format!(
                "exact enumeration over {n} differences is too large"
            )))
        }
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    if exact {
        // ranks are multiples of 1/2; compare with a margin well below that
        let mut extreme = 0u64;
        for mask in 0u32..(1 << n) {
            let s: f64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ranks[i])
                .sum();
            if s.min(total - s) <= w + 1e-9 {
                extreme += 1;
            }
        }
        let p = extreme as f64 / (1u64 << n) as f64;
        return Ok(WilcoxonResult {
            statistic: w,
            p_value: p.min(1.0),
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((mean - w).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(WilcoxonResult {
        statistic: w,
        p_value: p,
        n,
        exact: false,
    })
}

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
pub fn bh_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        // rounding in p * m / m can land below p
        let q = (p[i] * m as f64 / (rank + 1) as f64).max(p[i]);
        running = running.min(q);
        adjusted[i] = running.min(1.0);
    }
    adjusted
}

/// Hypotheses rejected at false-discovery level `alpha`: adjusted p below `alpha`.
pub fn bh_reject(p: &[f64], alpha: f64) -> Vec<bool> {
    bh_adjust(p).into_iter().map(|q| q < alpha).collect()
}

/// Mean, sample standard deviation and normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary { n, mean, std })
    }

    /// Half-width `1.96 * std / sqrt(n)`.
    pub fn ci95_half_width(&self) -> f64 {
        1.96 * self.std / (self.n as f64).sqrt()
    }
}
