use super::{periodic_antiderivative, spectral_derivative};
use crate::error::{Error, Result};
use crate::fft::{Complex, Spectral};
use crate::grid_noise::{PeriodicGrid, SampledMollifier};

/// Solution of the multiplicative heat equation, stored up to scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SheState {
    /// Periodic factor, renormalized to `max φ = 1` after every step.
    pub phi: Vec<f64>,
    /// The true periodic factor is `φ·e^{log_scale}`.
    pub log_scale: f64,
    /// Slope `a` of the height; also the spatial mean of `u`.
    pub slope: f64,
    pub center: f64,
    pub t: f64,
}

impl SheState {
    pub fn constant(grid: &PeriodicGrid) -> Self {
        Self { phi: vec![1.0; grid.n()], log_scale: 0.0, slope: 0.0, center: grid.midpoint(), t: 0.0 }
    }

    /// `φ(0) = e^{−h(0)}` with `h(0)` the `ζ`-normalized antiderivative of `u0`.
    pub fn from_burgers(grid: &PeriodicGrid, u0: &[f64], zeta: &[f64]) -> Result<Self> {
        grid.check_len(u0.len())?;
        grid.check_len(zeta.len())?;
        let spectral = Spectral::new(*grid);
        let (slope, p) = periodic_antiderivative(&spectral, u0);
        let center = grid.midpoint();
        let dx = grid.dx();
        let offset: f64 = grid
            .nodes()
            .zip(&p)
            .zip(zeta)
            .map(|((x, pv), z)| z * (slope * (x - center) + pv))
            .sum::<f64>()
            * dx;
        let pmin = p.iter().copied().fold(f64::INFINITY, f64::min);
        let phi = p.iter().map(|v| (-(v - pmin)).exp()).collect();
        Ok(Self { phi, log_scale: offset - pmin, slope, center, t: 0.0 })
    }

    /// `h = a·(x − c) − log φ − log_scale`.
    pub fn height(&self, grid: &PeriodicGrid) -> Vec<f64> {
        grid.nodes()
            .zip(&self.phi)
            .map(|(x, p)| self.slope * (x - self.center) - p.ln() - self.log_scale)
            .collect()
    }

    /// `a − ∂ₓφ/φ`, the Burgers field encoded by `φ`.
    pub fn burgers_field(&self, spectral: &Spectral) -> Vec<f64> {
        let d = spectral_derivative(spectral, &self.phi);
        d.iter().zip(&self.phi).map(|(dp, p)| self.slope - dp / p).collect()
    }
}

/// Reusable update `φ ← shift(G_dt * (φ·e^{−ΔV − ½dt·ρ*²(0)}), a·dt)`.
#[derive(Debug, Clone)]
pub struct SheStepper {
    spectral: Spectral,
    dt: f64,
    ito: f64,
    heat: Vec<f64>,
    dv: Vec<f64>,
    work: Vec<f64>,
    work_hat: Vec<Complex>,
}

impl SheStepper {
    /// `mollifier = None` gives the noise-free heat flow.
    pub fn new(spectral: Spectral, mollifier: Option<&SampledMollifier>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {dt}")));
        }
        let n = spectral.grid().n();
        let ito = match mollifier {
            Some(m) => {
                spectral.grid().check_len(m.values.len())?;
                0.5 * dt * m.selfconv_zero()
            }
            None => 0.0,
        };
        Ok(Self {
            heat: spectral.wavenumbers().iter().map(|k| (-0.5 * k * k * dt).exp()).collect(),
            work_hat: spectral.zero_spectrum(),
            dv: vec![0.0; n],
            work: vec![0.0; n],
            spectral,
            dt,
            ito,
        })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn step(&mut self, s: &mut SheState, dv: Option<&[f64]>) -> Result<()> {
        match dv {
            Some(dv) => {
                self.spectral.grid().check_len(dv.len())?;
                for ((w, p), v) in self.work.iter_mut().zip(&s.phi).zip(dv) {
                    *w = p * (-v - self.ito).exp();
                }
            }
            None => self.work.copy_from_slice(&s.phi),
        }
        self.propagate(s)
    }

    /// As [`step`](Self::step), with the increment given as a spectrum.
    pub fn step_spectral(&mut self, s: &mut SheState, dv_hat: &[Complex]) -> Result<()> {
        self.work_hat.copy_from_slice(dv_hat);
        self.spectral.inverse_in_place(&mut self.work_hat, &mut self.dv);
        for ((w, p), v) in self.work.iter_mut().zip(&s.phi).zip(&self.dv) {
            *w = p * (-v - self.ito).exp();
        }
        self.propagate(s)
    }

    fn propagate(&mut self, s: &mut SheState) -> Result<()> {
        let shift = s.slope * self.dt;
        let nyq = self.spectral.nyquist();
        self.spectral.forward_in_place(&mut self.work, &mut self.work_hat);
        for (j, (c, &k)) in self.work_hat.iter_mut().zip(self.spectral.wavenumbers()).enumerate() {
            let m = if j == nyq {
                Complex::new((k * shift).cos(), 0.0)
            } else {
                Complex::new((k * shift).cos(), -(k * shift).sin())
            };
            *c *= m * self.heat[j];
        }
        self.spectral.inverse_in_place(&mut self.work_hat, &mut s.phi);
        let max = s.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::NonFinite(format!("heat-equation state at t = {}", s.t)));
        }
        if let Some(bad) = s.phi.iter().find(|&&p| !(p > 0.0)) {
            return Err(Error::NonPositive(format!("phi = {bad:e} at t = {}", s.t)));
        }
        for p in s.phi.iter_mut() {
            *p /= max;
        }
        s.log_scale += max.ln() + 0.5 * s.slope * s.slope * self.dt;
        s.t += self.dt;
        Ok(())
    }
}

/// One step of the heat equation with multiplicative forcing `dv`.
pub fn she_step(s: &SheState, dv: &[f64], dt: f64, mollifier: &SampledMollifier) -> Result<SheState> {
    let mut stepper = SheStepper::new(Spectral::new(mollifier.grid), Some(mollifier), dt)?;
    let mut out = s.clone();
    stepper.step(&mut out, Some(dv))?;
    Ok(out)
}
