use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the torus `[0, L)`; node `k` sits at `x = k·dx` and is the
/// center of its cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct PeriodicGrid {
    length: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    length: f64,
    n: usize,
}

impl TryFrom<GridRepr> for PeriodicGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        PeriodicGrid::new(r.length, r.n)
    }
}

impl From<PeriodicGrid> for GridRepr {
    fn from(g: PeriodicGrid) -> Self {
        GridRepr { length: g.length, n: g.n }
    }
}

impl PeriodicGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::config(format!("grid.length must be positive, got {length}")));
        }
        if n < 8 {
            return Err(Error::config(format!("grid.n must be at least 8, got {n}")));
        }
        if n % 2 != 0 {
            return Err(Error::config(format!("grid.n must be even, got {n}")));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.x(k))
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * self.length
    }

    /// Signed periodic lag of node `k` relative to node 0, in `(−L/2, L/2]`.
    pub fn lag(&self, k: usize) -> f64 {
        let k = k % self.n;
        if k <= self.n / 2 {
            self.x(k)
        } else {
            (k as f64 - self.n as f64) * self.dx()
        }
    }

    /// Wraps a position into `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let y = x.rem_euclid(self.length);
        // rem_euclid can return exactly L for tiny negative inputs
        if y >= self.length {
            0.0
        } else {
            y
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::GridMismatch { expected: self.n, found: len })
        }
    }

    /// Linear interpolation of a grid function at an arbitrary position.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let s = self.wrap(x) / self.dx();
        let i = (s.floor() as usize).min(self.n - 1);
        let frac = s - i as f64;
        let j = if i + 1 == self.n { 0 } else { i + 1 };
        values[i] + frac * (values[j] - values[i])
    }

    /// Trapezoid (equivalently rectangle) rule on the torus.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        crate::stats::compensated_sum(values.iter().copied()) * self.dx()
    }

    pub fn mean(&self, values: &[f64]) -> f64 {
        crate::stats::compensated_sum(values.iter().copied()) / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_small() {
        assert!(PeriodicGrid::new(16.0, 511).is_err());
        assert!(PeriodicGrid::new(16.0, 6).is_err());
        assert!(PeriodicGrid::new(0.0, 64).is_err());
    }

    #[test]
    fn spacing_is_consistent() {
        let g = PeriodicGrid::new(16.0, 512).unwrap();
        assert!((g.dx() * 512.0 - 16.0).abs() <= f64::EPSILON * 16.0);
        assert_eq!(g.lag(0), 0.0);
        assert_eq!(g.lag(511), -g.dx());
        assert_eq!(g.lag(256), 8.0);
    }

    #[test]
    fn interpolation_is_periodic() {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        let v: Vec<f64> = (0..8).map(|k| k as f64).collect();
        assert_eq!(g.interpolate(&v, 0.25), 2.0);
        assert!((g.interpolate(&v, 0.9375) - 3.5).abs() < 1e-12);
        assert!((g.interpolate(&v, -0.0625) - 3.5).abs() < 1e-12);
    }
}
