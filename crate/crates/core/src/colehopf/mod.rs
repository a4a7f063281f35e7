//! The Cole–Hopf ladder: Burgers `u`, KPZ height `h` with `u = ∂ₓh`, and the
//! stochastic heat equation for `φ = e^{−h}`.
//!
//! On the torus a height with slope `a = mean(u)` is not periodic, so heights
//! are stored as `a·(x − c) + p(x)` with `p` periodic and `c` the midpoint.
//! `φ` carries only `e^{−p}`, and the slope is reinstated when converting back.

mod height;
mod ladder;
mod she;

pub use height::{kpz_height_from_burgers, normalization_bump, HeightTracker, KpzState};
pub use ladder::{ladder_consistency, run_ladder, LadderReport, LadderRun};
pub use she::{she_step, SheState, SheStepper};

use crate::fft::{Complex, Spectral};

/// Splits `f` into its mean and the periodic antiderivative of `f − mean`
/// (zero mean, Nyquist mode dropped).
pub(crate) fn periodic_antiderivative(spectral: &Spectral, f: &[f64]) -> (f64, Vec<f64>) {
    let mut spec = spectral.forward(f);
    let mean = spec[0].re / f.len() as f64;
    let nyq = spectral.nyquist();
    for (j, (c, &k)) in spec.iter_mut().zip(spectral.wavenumbers()).enumerate() {
        *c = if j == 0 || j == nyq { Complex::new(0.0, 0.0) } else { Complex::new(c.im / k, -c.re / k) };
    }
    (mean, spectral.inverse(&spec))
}

pub(crate) use crate::spectral_ops::ddx_with as spectral_derivative;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_noise::PeriodicGrid;

    #[test]
    fn antiderivative_inverts_the_derivative() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let s = Spectral::new(g);
        let k = std::f64::consts::PI / 8.0;
        let f: Vec<f64> = g.nodes().map(|x| 0.4 + (2.0 * k * x).cos() - 0.3 * (4.0 * k * x).sin()).collect();
        let (mean, p) = periodic_antiderivative(&s, &f);
        assert!((mean - 0.4).abs() < 1e-14);
        let back = spectral_derivative(&s, &p);
        for (a, b) in back.iter().zip(&f) {
            assert!((a + mean - b).abs() < 1e-12);
        }
    }
}
