//! Fourier-multiplier operators on the torus and weighted norms.

mod probe;
mod weights;

pub use probe::{heat_rate_probe, heat_rate_probe_with, holder_norm, HeatRateTable};
pub use weights::{
    weighted_l1_norm, weighted_sup_norm, y_g_inverse_weight, WeightKind, WeightSpec,
};

use crate::error::{ensure_finite, Error, Result};
use crate::fft::{Complex, Spectral};
use crate::grid_noise::PeriodicGrid;

/// A real field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        ensure_finite(&values, "field")?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.nodes().map(f).collect() }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n()] }
    }

    pub fn mean(&self) -> f64 {
        self.grid.mean(&self.values)
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn l2sq(&self) -> f64 {
        self.grid.integrate(&self.values.iter().map(|v| v * v).collect::<Vec<_>>())
    }
}

/// `G_t * f` via the multiplier `e^{−½k²t}`.
pub fn heat_apply(f: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return Err(Error::config(format!("heat time must be nonnegative, got {t}")));
    }
    let spectral = Spectral::new(f.grid);
    Ok(heat_apply_with(&spectral, f, t))
}

pub fn heat_apply_with(spectral: &Spectral, f: &Field, t: f64) -> Field {
    let values = spectral.apply(&f.values, |_, k| (-0.5 * k * k * t).exp().into());
    Field { grid: f.grid, values }
}

/// Spectral derivative; zero and Nyquist modes of the result vanish.
pub fn ddx(f: &Field) -> Field {
    let spectral = Spectral::new(f.grid);
    Field { grid: f.grid, values: ddx_with(&spectral, &f.values) }
}

pub fn ddx_with(spectral: &Spectral, values: &[f64]) -> Vec<f64> {
    let nyq = spectral.nyquist();
    spectral.apply(values, |j, k| if j == nyq { Complex::new(0.0, 0.0) } else { Complex::new(0.0, k) })
}

/// Exact periodic translation `f(· − a)`.
pub fn shift(f: &Field, a: f64) -> Field {
    let spectral = Spectral::new(f.grid);
    Field { grid: f.grid, values: shift_with(&spectral, &f.values, a) }
}

pub fn shift_with(spectral: &Spectral, values: &[f64], a: f64) -> Vec<f64> {
    let nyq = spectral.nyquist();
    spectral.apply(values, |j, k| {
        if j == nyq {
            // the sine component of the Nyquist mode is invisible on the grid
            Complex::new((k * a).cos(), 0.0)
        } else {
            Complex::from_polar(1.0, -k * a)
        }
    })
}
