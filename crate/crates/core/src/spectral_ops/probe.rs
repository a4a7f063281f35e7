use serde::{Deserialize, Serialize};

use super::{heat_apply_with, weighted_sup_norm, Field, WeightSpec};
use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::grid_noise::PeriodicGrid;
use crate::stats::fitted_slope;

/// Weighted Hölder norm `‖v‖_{C_w^β}`; the seminorm is the largest difference
/// quotient over lags of one cell up to `⌈1/dx⌉` cells.
pub fn holder_norm(f: &Field, beta: f64, w: &WeightSpec) -> f64 {
    let sup = weighted_sup_norm(f, w);
    if beta == 0.0 {
        return sup;
    }
    let g = f.grid;
    let n = g.n();
    let ws = w.sample(&g);
    let max_lag = ((1.0 / g.dx()).ceil() as usize).clamp(1, n / 2);
    let mut semi = 0.0f64;
    for lag in 1..=max_lag {
        let denom = (lag as f64 * g.dx()).powf(beta);
        for k in 0..n {
            let d = (f.values[(k + lag) % n] - f.values[k]).abs();
            semi = semi.max(d / (ws[k] * denom));
        }
    }
    sup + semi
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatRateTable {
    pub beta: f64,
    pub times: Vec<f64>,
    /// `sup_f ‖G_t*f‖_{C_w^β} / ‖f‖_{L_w^∞}` over the probe family.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log ratio` against `log t`.
    pub exponent: f64,
}

/// Sharp-edged probes: square waves of a few periods with unit amplitude.
fn default_family(grid: &PeriodicGrid) -> Vec<Field> {
    [1.0, 2.0, 4.0]
        .iter()
        .map(|&period| {
            Field::from_fn(*grid, |x| if (x / period).rem_euclid(1.0) < 0.5 { 1.0 } else { -1.0 })
        })
        .collect()
}

/// Empirical rate of `G_t` from `L_w^∞` into `C_w^β`, expected to scale like
/// `t^{−β/2}` for small `t`.
pub fn heat_rate_probe(
    grid: &PeriodicGrid,
    beta: f64,
    w: &WeightSpec,
    times: &[f64],
) -> Result<HeatRateTable> {
    heat_rate_probe_with(&default_family(grid), beta, w, times)
}

pub fn heat_rate_probe_with(
    family: &[Field],
    beta: f64,
    w: &WeightSpec,
    times: &[f64],
) -> Result<HeatRateTable> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::config(format!("beta must lie in [0, 1], got {beta}")));
    }
    if family.is_empty() || times.len() < 2 || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::config("probe needs a nonempty family and at least two positive times"));
    }
    let spectral = Spectral::new(family[0].grid);
    let ratios: Vec<f64> = times
        .iter()
        .map(|&t| {
            family
                .iter()
                .map(|f| {
                    let base = weighted_sup_norm(f, w);
                    holder_norm(&heat_apply_with(&spectral, f, t), beta, w) / base
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    Ok(HeatRateTable { beta, times: times.to_vec(), ratios, exponent: fitted_slope(&lx, &ly) })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIMES: [f64; 4] = [0.004, 0.008, 0.016, 0.032];

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16.0, 512).unwrap()
    }

    #[test]
    fn beta_zero_rate_is_flat() {
        let g = grid();
        let t = heat_rate_probe(&g, 0.0, &WeightSpec::poly_ell(1.0, &g), &TIMES).unwrap();
        assert!(t.exponent.abs() <= 0.1, "exponent {}", t.exponent);
    }

    #[test]
    fn beta_one_rate_is_minus_half() {
        let g = grid();
        let t = heat_rate_probe(&g, 1.0, &WeightSpec::poly_ell(1.0, &g), &TIMES).unwrap();
        assert!((t.exponent + 0.5).abs() <= 0.15, "exponent {}", t.exponent);
    }

    #[test]
    fn constant_probe_is_flat() {
        let g = grid();
        let fam = vec![Field::constant(g, 2.0)];
        let t = heat_rate_probe_with(&fam, 1.0, &WeightSpec::sqrt_log(&g), &TIMES).unwrap();
        for r in &t.ratios {
            assert!((r - t.ratios[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_out_of_range() {
        let g = grid();
        assert!(heat_rate_probe(&g, 1.5, &WeightSpec::poly_ell(0.0, &g), &TIMES).is_err());
    }
}
