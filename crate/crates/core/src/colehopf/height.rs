use super::{periodic_antiderivative, spectral_derivative};
use crate::burgers::{run_observed, BurgersEnsemble, BurgersStepper, RunOptions, Trajectory};
use crate::error::{Error, Result};
use crate::fft::{Complex, Spectral};
use crate::grid_noise::{NoisePath, PeriodicGrid, SampledMollifier};

/// KPZ height at one time: `h = slope·(x − center) + periodic part`.
#[derive(Debug, Clone, PartialEq)]
pub struct KpzState {
    pub h: Vec<f64>,
    pub t: f64,
    pub zeta: Vec<f64>,
    pub slope: f64,
    pub center: f64,
}

impl KpzState {
    /// `∂ₓh`, differentiating only the periodic part.
    pub fn gradient(&self, spectral: &Spectral) -> Vec<f64> {
        let grid = spectral.grid();
        let periodic: Vec<f64> =
            grid.nodes().zip(&self.h).map(|(x, h)| h - self.slope * (x - self.center)).collect();
        spectral_derivative(spectral, &periodic).into_iter().map(|d| d + self.slope).collect()
    }

    pub fn zeta_moment(&self, grid: &PeriodicGrid) -> f64 {
        self.h.iter().zip(&self.zeta).map(|(a, b)| a * b).sum::<f64>() * grid.dx()
    }
}

/// Smooth compactly supported bump at the midpoint with unit discrete integral.
pub fn normalization_bump(grid: &PeriodicGrid, half_width: f64) -> Result<Vec<f64>> {
    if !(half_width >= 2.0 * grid.dx() && half_width <= 0.25 * grid.length()) {
        return Err(Error::config(format!(
            "normalization half-width {half_width} must lie in [2dx, L/4]"
        )));
    }
    let c = grid.midpoint();
    let raw: Vec<f64> = grid
        .nodes()
        .map(|x| {
            let r = (x - c) / half_width;
            if r.abs() < 1.0 { (-1.0 / (1.0 - r * r)).exp() } else { 0.0 }
        })
        .collect();
    let mass = grid.integrate(&raw);
    Ok(raw.into_iter().map(|v| v / mass).collect())
}

/// Accumulates the time integrals and stochastic convolution that assemble
/// the height of one ensemble component, fed once per step.
#[derive(Debug, Clone)]
pub struct HeightTracker {
    spectral: Spectral,
    component: usize,
    zeta: Vec<f64>,
    dzeta: Vec<f64>,
    decay: Vec<f64>,
    omega_hat: Vec<Complex>,
    noise_l2sq: f64,
    dt: f64,
    running: f64,
    pending: Option<f64>,
    slope: f64,
    t: f64,
}

impl HeightTracker {
    pub fn new(
        grid: PeriodicGrid,
        zeta: Vec<f64>,
        mollifier: Option<&SampledMollifier>,
        dt: f64,
        component: usize,
    ) -> Result<Self> {
        grid.check_len(zeta.len())?;
        let spectral = Spectral::new(grid);
        Ok(Self {
            dzeta: spectral_derivative(&spectral, &zeta),
            decay: spectral.wavenumbers().iter().map(|k| (-0.5 * k * k * dt).exp()).collect(),
            omega_hat: spectral.zero_spectrum(),
            noise_l2sq: mollifier.map_or(0.0, |m| m.l2sq),
            spectral,
            component,
            zeta,
            dt,
            running: 0.0,
            pending: None,
            slope: 0.0,
            t: 0.0,
        })
    }

    /// `∫[θζ′ + (θ+ψ)²ζ]` for the current state.
    fn integrand(&self, ens: &BurgersEnsemble) -> f64 {
        let theta = &ens.thetas[self.component];
        let mut acc = 0.0;
        for k in 0..theta.len() {
            let u = theta[k] + ens.psi.psi[k];
            acc += theta[k] * self.dzeta[k] + u * u * self.zeta[k];
        }
        acc * ens.grid.dx()
    }

    /// Call on the initial state, then after every step with that step's
    /// `ΔV̂` (`None` without noise).
    pub fn observe(&mut self, ens: &BurgersEnsemble, dv_hat: Option<&[Complex]>) {
        match self.pending {
            None => {
                self.slope = ens.grid.mean(&ens.thetas[self.component]);
            }
            Some(prev) => {
                self.running += self.dt * prev;
                match dv_hat {
                    Some(dv) => {
                        for ((w, d), v) in self.omega_hat.iter_mut().zip(&self.decay).zip(dv) {
                            *w = (*w + v) * d;
                        }
                    }
                    None => {
                        for (w, d) in self.omega_hat.iter_mut().zip(&self.decay) {
                            *w *= d;
                        }
                    }
                }
            }
        }
        self.t = ens.t;
        self.pending = Some(self.integrand(ens));
    }

    /// Observer adaptor for [`run_observed`].
    pub fn observe_step(&mut self, ens: &BurgersEnsemble, stepper: &BurgersStepper) {
        let dv = if self.pending.is_some() { stepper.forcing().map(|f| f.last_dv_hat()) } else { None };
        self.observe(ens, dv);
    }

    /// Height at the state most recently observed.
    pub fn height(&self, ens: &BurgersEnsemble) -> KpzState {
        let grid = ens.grid;
        let center = grid.midpoint();
        let (slope, p) = periodic_antiderivative(&self.spectral, &ens.thetas[self.component]);
        let anti: Vec<f64> = grid.nodes().zip(&p).map(|(x, v)| slope * (x - center) + v).collect();
        let norm: f64 = anti.iter().zip(&self.zeta).map(|(a, z)| a * z).sum::<f64>() * grid.dx();
        let omega = self.spectral.inverse(&self.omega_hat);
        let drift = -0.5 * self.running + 0.5 * self.t * self.noise_l2sq;
        let h = anti.iter().zip(&omega).map(|(a, w)| a - norm + w + drift).collect();
        KpzState { h, t: self.t, zeta: self.zeta.clone(), slope: self.slope, center }
    }

    /// Mean height over the grid at the most recent state.
    pub fn mean_height(&self, ens: &BurgersEnsemble) -> f64 {
        ens.grid.mean(&self.height(ens).h)
    }
}

/// Rebuilds the KPZ height of component `component` at every snapshot of
/// `traj`, replaying the run with its noise path.
pub fn kpz_height_from_burgers(
    traj: &Trajectory,
    component: usize,
    noise: Option<&NoisePath>,
    mollifier: Option<&SampledMollifier>,
    zeta: &[f64],
) -> Result<Vec<KpzState>> {
    if mollifier.is_some() && noise.is_none() {
        return Err(Error::MissingNoise("height reconstruction needs the run's noise path".into()));
    }
    if noise.is_some() && mollifier.is_none() {
        return Err(Error::config("noise path given without a mollifier"));
    }
    if component >= traj.initials.len() {
        return Err(Error::config(format!("component {component} out of range")));
    }
    let grid = traj.grid;
    let mut tracker = HeightTracker::new(grid, zeta.to_vec(), mollifier, traj.scheme.dt, component)?;
    let targets: Vec<u64> = traj.snapshots.iter().map(|s| s.steps).collect();
    let mut heights = Vec::with_capacity(targets.len());
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let replay = run_observed(
        traj.initials.clone(),
        grid,
        noise.map(|p| Box::new(p.cursor()) as Box<_>),
        mollifier,
        traj.scheme,
        &RunOptions::at(&times),
        |ens, stepper| {
            tracker.observe_step(ens, stepper);
            if targets.contains(&ens.steps) && heights.len() < targets.len() {
                heights.push(tracker.height(ens));
            }
            Ok(())
        },
    )?;
    if replay.snapshots != traj.snapshots {
        return Err(Error::Format("trajectory does not match the supplied noise path".into()));
    }
    Ok(heights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::{run, SchemeConfig};
    use crate::grid_noise::{build_mollifier, sample_noise_path, MollifierKind};

    #[test]
    fn zero_data_without_noise_stays_flat() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let zeta = normalization_bump(&g, 1.0).unwrap();
        let traj = run(vec![vec![0.0; 128]], g, None, None, SchemeConfig::default(), &RunOptions::at(&[0.0, 0.5]))
            .unwrap();
        let hs = kpz_height_from_burgers(&traj, 0, None, None, &zeta).unwrap();
        assert!(hs.iter().all(|s| s.h.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn gradient_of_height_recovers_burgers() {
        let g = PeriodicGrid::new(16.0, 512).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let zeta = normalization_bump(&g, 1.0).unwrap();
        let path = sample_noise_path(8, 1e-3, 5000, &g, 0).unwrap();
        let u0: Vec<f64> = g.nodes().map(|x| 0.3 + 0.5 * (x * std::f64::consts::PI / 8.0).sin()).collect();
        let traj = run(
            vec![u0],
            g,
            Some(Box::new(path.cursor())),
            Some(&m),
            SchemeConfig::default(),
            &RunOptions::every(0.5, 5.0),
        )
        .unwrap();
        let hs = kpz_height_from_burgers(&traj, 0, Some(&path), Some(&m), &zeta).unwrap();
        assert_eq!(hs.len(), traj.snapshots.len());
        assert!(hs[0].zeta_moment(&g).abs() < 1e-10);
        let spectral = Spectral::new(g);
        for (h, s) in hs.iter().zip(&traj.snapshots) {
            let u = s.u(0);
            let du = h.gradient(&spectral);
            // a grid-scale mode (−1)^k has no periodic antiderivative
            let nyq = u.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -*v }).sum::<f64>() / 512.0;
            assert!(nyq.abs() < 1e-6);
            let err = du
                .iter()
                .zip(&u)
                .enumerate()
                .map(|(k, (a, b))| (a - b + if k % 2 == 0 { nyq } else { -nyq }).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "t = {}: {err:e}", s.t);
        }
    }

    #[test]
    fn missing_noise_is_reported() {
        let g = PeriodicGrid::new(16.0, 64).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 1.0, g).unwrap();
        let zeta = normalization_bump(&g, 1.0).unwrap();
        let traj = run(vec![vec![0.0; 64]], g, None, None, SchemeConfig::default(), &RunOptions::at(&[0.0])).unwrap();
        let err = kpz_height_from_burgers(&traj, 0, None, Some(&m), &zeta).unwrap_err();
        assert!(matches!(err, Error::MissingNoise(_)));
    }
}
