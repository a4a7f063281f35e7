use super::{PeriodicGrid, SampledMollifier};
use crate::error::Result;
use crate::fft::{Complex, Spectral};

/// The solution `ψ` of `dψ = ½∂ₓ²ψ dt + d(∂ₓV)`, `ψ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedField {
    pub psi: Vec<f64>,
    pub t: f64,
}

impl LinearizedField {
    pub fn zero(grid: &PeriodicGrid) -> Self {
        Self { psi: vec![0.0; grid.n()], t: 0.0 }
    }
}

/// One exponential-Euler step: per mode,
/// `ψ̂ ← e^{−½k²dt}·(ψ̂ + ik·ΔV̂)`. The zero mode stays zero and the
/// Nyquist mode receives no derivative forcing.
pub fn psi_step(
    field: &LinearizedField,
    dv: &[f64],
    dt: f64,
    spectral: &Spectral,
) -> Result<LinearizedField> {
    let grid = spectral.grid();
    grid.check_len(field.psi.len())?;
    grid.check_len(dv.len())?;
    let mut psi_hat = spectral.forward(&field.psi);
    let dv_hat = spectral.forward(dv);
    let nyq = spectral.nyquist();
    for (j, &k) in spectral.wavenumbers().iter().enumerate() {
        let decay = (-0.5 * k * k * dt).exp();
        let kick = if j == 0 || j == nyq { Complex::new(0.0, 0.0) } else { Complex::new(0.0, k) };
        psi_hat[j] = decay * (psi_hat[j] + kick * dv_hat[j]);
    }
    psi_hat[0] = Complex::new(0.0, 0.0);
    Ok(LinearizedField { psi: spectral.inverse(&psi_hat), t: field.t + dt })
}

/// `(ρ*² − G_{2t}*ρ*²)(r)` on the grid lags: the covariance of `ψ(t, ·)`
/// started from zero.
pub fn psi_stationary_covariance(
    mollifier: &SampledMollifier,
    t: f64,
    grid: &PeriodicGrid,
) -> Result<Vec<f64>> {
    grid.check_len(mollifier.values.len())?;
    if t < 0.0 {
        return Err(crate::Error::config(format!("time must be nonnegative, got {t}")));
    }
    let spectral = Spectral::new(*grid);
    Ok(spectral.apply(&mollifier.selfconv, |_, k| (1.0 - (-k * k * t).exp()).into()))
}

/// `E ⟨(∂ₓψ)²⟩` after `steps` exponential-Euler steps of size `dt` from
/// `ψ = 0`, with the derivative taken spectrally and the Nyquist mode
/// dropped. Exact for the discrete recursion, not its continuum limit.
pub fn psi_gradient_energy(mollifier: &SampledMollifier, dt: f64, steps: u64) -> Result<f64> {
    let grid = mollifier.grid;
    grid.check_len(mollifier.values.len())?;
    if !(dt > 0.0) {
        return Err(crate::Error::config(format!("dt must be positive, got {dt}")));
    }
    let spectral = Spectral::new(grid);
    let nyq = spectral.nyquist();
    let t = steps as f64 * dt;
    let curve = spectral.apply(&mollifier.selfconv, |j, k| {
        if j == 0 || j == nyq {
            return 0.0.into();
        }
        let x = k * k * dt;
        (k * k * x * (-x).exp() / -(-x).exp_m1() * -(-k * k * t).exp_m1()).into()
    });
    Ok(curve[0])
}

/// Fused noise pipeline used by the solvers: `ΔW → ΔV̂ → ψ̂`. The caller owns
/// the spectrum `ψ̂`, so one propagator can drive any number of states.
#[derive(Debug, Clone)]
pub struct ForcingPropagator {
    spectral: Spectral,
    transfer: Vec<f64>,
    decay: Vec<f64>,
    kick: Vec<f64>,
    dv_hat: Vec<Complex>,
    work: Vec<f64>,
    work_hat: Vec<Complex>,
    dt: f64,
}

impl ForcingPropagator {
    pub fn new(spectral: Spectral, mollifier: &SampledMollifier, dt: f64) -> Result<Self> {
        spectral.grid().check_len(mollifier.values.len())?;
        let nyq = spectral.nyquist();
        let ks = spectral.wavenumbers();
        let decay = ks.iter().map(|k| (-0.5 * k * k * dt).exp()).collect();
        let kick = ks
            .iter()
            .enumerate()
            .map(|(j, &k)| if j == 0 || j == nyq { 0.0 } else { k })
            .collect();
        let n = spectral.grid().n();
        Ok(Self {
            transfer: mollifier.transfer.clone(),
            dv_hat: spectral.zero_spectrum(),
            work_hat: spectral.zero_spectrum(),
            work: vec![0.0; n],
            spectral,
            decay,
            kick,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Heat-semigroup factors `e^{−½k²dt}` per mode.
    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    /// Consumes one white-noise increment and advances `psi_hat` one step.
    pub fn inject(&mut self, dw: &[f64], psi_hat: &mut [Complex]) {
        self.work.copy_from_slice(dw);
        self.spectral.forward_in_place(&mut self.work, &mut self.dv_hat);
        for j in 0..self.dv_hat.len() {
            let dv = self.dv_hat[j] * self.transfer[j];
            self.dv_hat[j] = dv;
            let p = psi_hat[j];
            // ψ̂ + ik·ΔV̂
            let forced = Complex::new(p.re - self.kick[j] * dv.im, p.im + self.kick[j] * dv.re);
            psi_hat[j] = forced * self.decay[j];
        }
    }

    /// Advances `psi_hat` with no forcing (pure heat flow).
    pub fn relax(&mut self, psi_hat: &mut [Complex]) {
        self.dv_hat.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (p, d) in psi_hat.iter_mut().zip(&self.decay) {
            *p *= *d;
        }
    }

    /// `ΔV̂` of the most recent step.
    pub fn last_dv_hat(&self) -> &[Complex] {
        &self.dv_hat
    }

    pub fn last_dv(&mut self, out: &mut [f64]) {
        self.work_hat.copy_from_slice(&self.dv_hat);
        self.spectral.inverse_in_place(&mut self.work_hat, out);
    }

    pub fn to_physical(&mut self, spec: &[Complex], out: &mut [f64]) {
        self.work_hat.copy_from_slice(spec);
        self.spectral.inverse_in_place(&mut self.work_hat, out);
    }

    pub fn to_spectrum(&mut self, values: &[f64], out: &mut [Complex]) {
        self.work.copy_from_slice(values);
        self.spectral.forward_in_place(&mut self.work, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_noise::{build_mollifier, sample_noise_path, smooth_increment, MollifierKind};

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16.0, 512).unwrap()
    }

    #[test]
    fn single_mode_decays_by_heat_factor() {
        let g = grid();
        let spectral = Spectral::new(g);
        let kx = 2.0 * std::f64::consts::PI / g.length();
        let psi: Vec<f64> = g.nodes().map(|x| (kx * x).sin()).collect();
        let dt = 0.01;
        let next = psi_step(&LinearizedField { psi: psi.clone(), t: 0.0 }, &vec![0.0; 512], dt, &spectral)
            .unwrap();
        let factor = (-0.5 * kx * kx * dt).exp();
        for (a, b) in next.psi.iter().zip(&psi) {
            assert!((a - factor * b).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_energy_matches_monte_carlo_and_continuum() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let spectral = Spectral::new(g);
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let dt = 0.01;
        let steps = 50;
        let exact = psi_gradient_energy(&m, dt, steps).unwrap();
        let mut prop = ForcingPropagator::new(spectral.clone(), &m, dt).unwrap();
        let samples: Vec<f64> = (0..400)
            .map(|r| {
                let path = sample_noise_path(9, dt, steps as usize, &g, r).unwrap();
                let mut psi_hat = spectral.zero_spectrum();
                for s in 0..steps as usize {
                    prop.inject(path.step(s), &mut psi_hat);
                }
                let d = crate::spectral_ops::ddx_with(&spectral, &spectral.inverse(&psi_hat));
                d.iter().map(|v| v * v).sum::<f64>() / 128.0
            })
            .collect();
        let st = crate::stats::SampleStats::from_slice(&samples);
        assert!((st.mean - exact).abs() < 5.0 * st.se, "{} vs {exact} (se {})", st.mean, st.se);
        let long = psi_gradient_energy(&m, 1e-6, 100_000_000).unwrap();
        assert!((long / m.deriv_l2sq - 1.0).abs() < 1e-3, "{long} vs {}", m.deriv_l2sq);
        assert_eq!(psi_gradient_energy(&m, dt, 0).unwrap(), 0.0);
    }

    #[test]
    fn fused_propagator_matches_reference_step() {
        let g = grid();
        let spectral = Spectral::new(g);
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let dt = 1e-3;
        let path = sample_noise_path(4, dt, 20, &g, 0).unwrap();
        let mut prop = ForcingPropagator::new(spectral.clone(), &m, dt).unwrap();
        let mut psi_hat = spectral.zero_spectrum();
        let mut field = LinearizedField::zero(&g);
        for s in 0..20 {
            let dv = smooth_increment(path.step(s), &m).unwrap();
            field = psi_step(&field, &dv, dt, &spectral).unwrap();
            prop.inject(path.step(s), &mut psi_hat);
        }
        let mut psi = vec![0.0; 512];
        prop.to_physical(&psi_hat, &mut psi);
        let scale = field.psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in psi.iter().zip(&field.psi) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
        let mean: f64 = field.psi.iter().sum::<f64>() / 512.0;
        assert!(mean.abs() <= 1e-10 * scale);
    }

    #[test]
    fn covariance_curve_limits() {
        let g = grid();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let c0 = psi_stationary_covariance(&m, 0.0, &g).unwrap();
        assert!(c0.iter().all(|v| v.abs() < 1e-14));
        let cinf = psi_stationary_covariance(&m, 1e3, &g).unwrap();
        // the zero mode never builds up: ψ has zero spatial mean
        let offset = g.mean(&m.selfconv);
        for (a, b) in cinf.iter().zip(&m.selfconv) {
            assert!((a - (b - offset)).abs() < 1e-6);
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=10 {
            let v = psi_stationary_covariance(&m, 0.1 * i as f64, &g).unwrap()[0];
            assert!(v >= prev);
            prev = v;
        }
    }
}
