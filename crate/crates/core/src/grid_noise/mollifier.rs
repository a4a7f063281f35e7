use serde::{Deserialize, Serialize};

use super::PeriodicGrid;
use crate::error::{Error, Result};
use crate::fft::{Complex, Spectral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKind {
    /// Normalized Gaussian with standard deviation `width`.
    Gaussian,
    /// `exp(−1/(1 − (x/width)²))` on `|x| < width`, normalized to unit mass.
    Bump,
    /// Discrete delta `1/dx` at lag zero; smoothing becomes the identity.
    Delta,
}

/// A symmetric mollifier sampled at the grid lags, with the derived
/// quantities every other module needs.
#[derive(Debug, Clone)]
pub struct SampledMollifier {
    pub kind: MollifierKind,
    pub width: f64,
    pub grid: PeriodicGrid,
    /// `ρ` at lag `k·dx`, wrapped periodically.
    pub values: Vec<f64>,
    /// `‖ρ‖²`
    pub l2sq: f64,
    /// `‖∂ₓρ‖²`
    pub deriv_l2sq: f64,
    /// `ρ*ρ` at lag `k·dx`.
    pub selfconv: Vec<f64>,
    /// Real Fourier transfer function of `v ↦ dx·(ρ ⊛ v)`.
    pub transfer: Vec<f64>,
}

pub fn build_mollifier(
    kind: MollifierKind,
    width: f64,
    grid: PeriodicGrid,
) -> Result<SampledMollifier> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::config(format!("mollifier width must be positive, got {width}")));
    }
    if width > grid.length() / 8.0 {
        return Err(Error::config(format!(
            "mollifier width {width} exceeds L/8 = {} (the support must be at most one eighth of \
             the torus)",
            grid.length() / 8.0
        )));
    }
    let n = grid.n();
    let dx = grid.dx();
    let half = 0.5 * grid.length();
    let mut values = vec![0.0; n];
    match kind {
        MollifierKind::Gaussian => {
            let norm = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
            for (k, v) in values.iter_mut().enumerate() {
                let r = grid.lag(k);
                if r.abs() < half {
                    *v = norm * (-0.5 * r * r / (width * width)).exp();
                }
            }
        }
        MollifierKind::Bump => {
            for (k, v) in values.iter_mut().enumerate() {
                let s = grid.lag(k) / width;
                if s.abs() < 1.0 {
                    *v = (-1.0 / (1.0 - s * s)).exp();
                }
            }
            let mass = grid.integrate(&values);
            values.iter_mut().for_each(|v| *v /= mass);
        }
        MollifierKind::Delta => values[0] = 1.0 / dx,
    }
    // enforce exact symmetry against rounding in the lag computation
    for k in 1..n / 2 {
        let avg = 0.5 * (values[k] + values[n - k]);
        values[k] = avg;
        values[n - k] = avg;
    }

    let spectral = Spectral::new(grid);
    let rho_hat = spectral.forward(&values);
    let transfer: Vec<f64> = rho_hat.iter().map(|c| dx * c.re).collect();
    let selfconv = spectral.inverse(
        &transfer.iter().map(|t| Complex::new(t * t / dx, 0.0)).collect::<Vec<_>>(),
    );
    let nyq = spectral.nyquist();
    let deriv = spectral.apply(&values, |j, k| {
        if j == nyq {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, k)
        }
    });
    let l2sq = grid.integrate(&values.iter().map(|v| v * v).collect::<Vec<_>>());
    let deriv_l2sq = grid.integrate(&deriv.iter().map(|v| v * v).collect::<Vec<_>>());

    Ok(SampledMollifier { kind, width, grid, values, l2sq, deriv_l2sq, selfconv, transfer })
}

impl SampledMollifier {
    /// `ρ*²(0)`, the one-point variance rate of the smoothed noise.
    pub fn selfconv_zero(&self) -> f64 {
        self.selfconv[0]
    }

    /// `ρ*²(r)` at an arbitrary lag by periodic linear interpolation.
    pub fn selfconv_at(&self, r: f64) -> f64 {
        self.grid.interpolate(&self.selfconv, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16.0, 512).unwrap()
    }

    /// Composite Simpson on [-a, a] at high resolution.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_l2_matches_quadrature() {
        let sigma = 0.5;
        let m = build_mollifier(MollifierKind::Gaussian, sigma, grid()).unwrap();
        let rho = |x: f64| {
            (-0.5 * x * x / (sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let oracle = simpson(|x| rho(x) * rho(x), -8.0, 8.0, 200_000);
        assert!((oracle - 1.0 / (2.0 * sigma * std::f64::consts::PI.sqrt())).abs() < 1e-9);
        assert!((m.l2sq - oracle).abs() < 0.01 * oracle);
        let drho = |x: f64| -x / (sigma * sigma) * rho(x);
        let d_oracle = simpson(|x| drho(x) * drho(x), -8.0, 8.0, 200_000);
        assert!((m.deriv_l2sq - d_oracle).abs() < 1e-6 * d_oracle);
    }

    #[test]
    fn values_are_symmetric() {
        for &w in &[0.1, 0.5, 1.7] {
            let m = build_mollifier(MollifierKind::Gaussian, w, grid()).unwrap();
            for k in 1..512 {
                assert_eq!(m.values[k], m.values[512 - k]);
            }
        }
    }

    #[test]
    fn bump_selfconv_at_zero_is_l2() {
        let m = build_mollifier(MollifierKind::Bump, 1.0, grid()).unwrap();
        assert!((m.selfconv[0] - m.l2sq).abs() <= 1e-12 * m.l2sq);
        assert!((m.grid.integrate(&m.values) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selfconv_is_discrete_convolution() {
        let g = PeriodicGrid::new(4.0, 32).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.3, g).unwrap();
        for lag in 0..32 {
            let direct: f64 =
                (0..32).map(|j| m.values[j] * m.values[(lag + 32 - j) % 32]).sum::<f64>() * g.dx();
            assert!((direct - m.selfconv[lag]).abs() < 1e-12);
        }
    }

    #[test]
    fn width_rule_enforced() {
        let err = build_mollifier(MollifierKind::Gaussian, 2.5, grid()).unwrap_err();
        assert!(err.to_string().contains("L/8"));
    }
}
