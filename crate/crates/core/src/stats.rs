//! Deterministic reductions for Monte Carlo estimates.

use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation in a fixed split order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                variance: f64::NAN,
                std_error: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mean = pairwise_sum(values) / n as f64;
        let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let variance = if n > 1 {
            pairwise_sum(&squares) / (n - 1) as f64
        } else {
            0.0
        };
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self {
            count: n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
            min,
            max,
        }
    }

    /// `|mean − target| ≤ k·σ + floor`.
    pub fn within(&self, target: f64, sigmas: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error + floor
    }
}
