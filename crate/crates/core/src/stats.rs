//! Monte Carlo reductions.
//!
//! Realizations are always collected in index order and reduced sequentially
//! with compensated summation, so statistics are bit-identical regardless of
//! how many worker threads produced them.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Mean, sample variance and standard error of i.i.d. samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
}

impl SampleStats {
    pub fn from_slice(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self { count, mean: f64::NAN, variance: f64::NAN, se: f64::NAN };
        }
        let mean = compensated_sum(samples.iter().copied()) / count as f64;
        let variance = if count > 1 {
            compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (count - 1) as f64
        } else {
            0.0
        };
        Self { count, mean, variance, se: (variance / count as f64).sqrt() }
    }

    pub fn from_iter(samples: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = samples.into_iter().collect();
        Self::from_slice(&v)
    }

    /// Control-variate estimate of `E samples`: subtracts `β·(c − E c)` with
    /// the sample-optimal `β`. Falls back to the plain mean when the control
    /// does not vary.
    pub fn with_control(samples: &[f64], control: &[f64], control_mean: f64) -> Self {
        assert_eq!(samples.len(), control.len(), "control must align with samples");
        let s = Self::from_slice(samples);
        let c = Self::from_slice(control);
        let beta = if c.variance > 0.0 {
            let cov = compensated_sum(samples.iter().zip(control).map(|(x, y)| (x - s.mean) * (y - c.mean)))
                / (samples.len() - 1) as f64;
            cov / c.variance
        } else {
            0.0
        };
        Self::from_iter(samples.iter().zip(control).map(|(x, y)| x - beta * (y - control_mean)))
    }

    /// Statistics of `a[i] - b[i]` for paired samples.
    pub fn paired_difference(a: &[f64], b: &[f64]) -> Self {
        assert_eq!(a.len(), b.len(), "paired samples must align");
        Self::from_iter(a.iter().zip(b).map(|(x, y)| x - y))
    }
}

/// Combined standard error of the difference of two independent estimates.
pub fn combined_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Per-column statistics of a realization-major table (`rows[r][c]`).
pub fn column_stats(rows: &[Vec<f64>]) -> Vec<SampleStats> {
    let cols = rows.first().map_or(0, Vec::len);
    (0..cols)
        .map(|c| SampleStats::from_iter(rows.iter().map(|row| row[c])))
        .collect()
}

/// Trapezoid rule on a possibly non-uniform abscissa.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    compensated_sum(xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])))
}

/// Least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// One checked statement of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Assertion {
    /// `value ≤ threshold + k·se`.
    pub fn at_most(name: impl Into<String>, value: f64, se: f64, threshold: f64, k: f64) -> Self {
        let pass = value <= threshold + k * se;
        Self { name: name.into(), value, se, threshold, pass }
    }

    /// `|value − target| ≤ k·se`.
    pub fn matches(name: impl Into<String>, value: f64, se: f64, target: f64, k: f64) -> Self {
        let pass = (value - target).abs() <= k * se;
        Self { name: name.into(), value, se, threshold: target, pass }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        let v = if pass { 1.0 } else { 0.0 };
        Self { name: name.into(), value: v, se: 0.0, threshold: 1.0, pass }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1e16, 1.0, -1e16];
        v.extend(std::iter::repeat(1e-3).take(1000));
        assert!((compensated_sum(v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sample_stats_of_known_data() {
        let s = SampleStats::from_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn control_variate_removes_shared_fluctuation() {
        let noise = [0.3, -1.2, 0.7, 2.0, -0.4, -1.4];
        let extra = [0.01, -0.02, 0.0, 0.015, -0.01, 0.005];
        let samples: Vec<f64> = noise.iter().zip(&extra).map(|(n, e)| 5.0 + 2.0 * n + e).collect();
        let plain = SampleStats::from_slice(&samples);
        let cv = SampleStats::with_control(&samples, &noise, 0.0);
        assert!(cv.se < 0.05 * plain.se);
        assert!((cv.mean - 5.0).abs() < 0.02);
        let flat = SampleStats::with_control(&samples, &[1.0; 6], 0.0);
        assert_eq!(flat.mean, plain.mean);
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        assert!((fitted_slope(&xs, &ys) + 0.5).abs() < 1e-14);
        assert!((trapezoid(&xs, &ys) - (6.0 - 0.25 * 9.0)).abs() < 1e-14);
    }
}
