//! Real-to-complex transforms on a periodic grid.
//!
//! Convention: `f̂_j = Σ_k f_k e^{−2πi jk/n}` for `j = 0..=n/2`, inverse scaled
//! by `1/n`. Wavenumbers are `k_j = 2πj/L`.

use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::grid_noise::PeriodicGrid;

pub use realfft::num_complex::Complex64 as Complex;

#[derive(Clone)]
pub struct Spectral {
    grid: PeriodicGrid,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    wavenumbers: Vec<f64>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: PeriodicGrid) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let n = grid.n();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wavenumbers = (0..=n / 2)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / grid.length())
            .collect();
        Self { grid, forward, inverse, wavenumbers }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Number of stored modes, `n/2 + 1`.
    pub fn modes(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn nyquist(&self) -> usize {
        self.wavenumbers.len() - 1
    }

    pub fn zero_spectrum(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.modes()]
    }

    /// Forward transform. `input` is used as scratch and left unspecified.
    pub fn forward_in_place(&self, input: &mut [f64], out: &mut [Complex64]) {
        self.forward
            .process(input, out)
            .expect("forward transform buffers sized by the plan");
    }

    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let mut buf = input.to_vec();
        let mut out = self.zero_spectrum();
        self.forward_in_place(&mut buf, &mut out);
        out
    }

    /// Inverse transform including the `1/n` factor. `spec` is used as scratch.
    pub fn inverse_in_place(&self, spec: &mut [Complex64], out: &mut [f64]) {
        let nyq = self.nyquist();
        spec[0].im = 0.0;
        spec[nyq].im = 0.0;
        self.inverse
            .process(spec, out)
            .expect("inverse transform buffers sized by the plan");
        let scale = 1.0 / self.grid.n() as f64;
        out.iter_mut().for_each(|v| *v *= scale);
    }

    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        let mut out = vec![0.0; self.grid.n()];
        self.inverse_in_place(&mut buf, &mut out);
        out
    }

    /// Applies the Fourier multiplier `m(j, k_j)` to a real field.
    pub fn apply(&self, f: &[f64], mut m: impl FnMut(usize, f64) -> Complex64) -> Vec<f64> {
        let mut spec = self.forward(f);
        for (j, (c, &k)) in spec.iter_mut().zip(&self.wavenumbers).enumerate() {
            *c *= m(j, k);
        }
        self.inverse(&spec)
    }
}
