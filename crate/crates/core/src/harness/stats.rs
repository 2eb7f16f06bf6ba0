//! Across-seed summaries and significance tests.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Half-width of the 95% interval, absent with fewer than two values.
    pub ci: Option<f64>,
}

impl Summary {
    pub fn lower(&self) -> f64 {
        self.mean - self.ci.unwrap_or(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci.unwrap_or(0.0)
    }

    /// True when both intervals exist and `self` lies strictly above `other`.
    pub fn above(&self, other: &Summary) -> bool {
        self.ci.is_some() && other.ci.is_some() && self.lower() > other.upper()
    }
}

/// Mean with a normal-approximation interval `1.96 * s / sqrt(n)`, where
/// `s` is the unbiased sample standard deviation. `None` for no values.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ci = (n >= 2).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Z_95 * (var / n as f64).sqrt()
    });
    Some(Summary { n, mean, ci })
}

/// One-sided paired t-test of `mean(a - b) > 0`; returns the p-value.
/// `None` when the inputs differ in length or hold fewer than two pairs.
pub fn paired_t_test_greater(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Some(if mean > 0.0 { 0.0 } else { 1.0 });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).ok()?;
    Some(1.0 - dist.cdf(t))
}
