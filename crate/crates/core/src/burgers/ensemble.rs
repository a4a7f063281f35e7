use super::{flux_divergence, FluxKind, PeriodicHeatSolver, SchemeConfig};
use crate::error::{ensure_finite, Error, Result};
use crate::fft::{Complex, Spectral};
use crate::grid_noise::{ForcingPropagator, LinearizedField, NoiseSource, PeriodicGrid, SampledMollifier};

/// `N` Burgers components sharing one linearized field `ψ`.
#[derive(Debug, Clone)]
pub struct BurgersEnsemble {
    pub grid: PeriodicGrid,
    /// `θᵢ = uᵢ − ψ`
    pub thetas: Vec<Vec<f64>>,
    pub psi: LinearizedField,
    pub t: f64,
    pub steps: u64,
    psi_hat: Vec<Complex>,
}

impl BurgersEnsemble {
    /// Ensemble at `t = 0` with `ψ = 0`, so `θᵢ(0) = uᵢ(0)`.
    pub fn from_initials(grid: PeriodicGrid, initials: Vec<Vec<f64>>) -> Result<Self> {
        if initials.is_empty() {
            return Err(Error::config("ensemble needs at least one component"));
        }
        for (i, u) in initials.iter().enumerate() {
            grid.check_len(u.len())?;
            ensure_finite(u, &format!("initial condition {i}"))?;
        }
        Ok(Self {
            grid,
            thetas: initials,
            psi: LinearizedField::zero(&grid),
            t: 0.0,
            steps: 0,
            psi_hat: vec![Complex::new(0.0, 0.0); grid.n() / 2 + 1],
        })
    }

    pub fn components(&self) -> usize {
        self.thetas.len()
    }

    pub fn u_into(&self, i: usize, out: &mut [f64]) {
        for ((o, th), ps) in out.iter_mut().zip(&self.thetas[i]).zip(&self.psi.psi) {
            *o = th + ps;
        }
    }

    pub fn u(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.n()];
        self.u_into(i, &mut out);
        out
    }

    pub fn psi_hat(&self) -> &[Complex] {
        &self.psi_hat
    }

    /// Reorders components; `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut out = self.clone();
        out.thetas = order.iter().map(|&i| self.thetas[i].clone()).collect();
        out
    }
}

/// One-step update for a [`BurgersEnsemble`].
#[derive(Debug, Clone)]
pub struct BurgersStepper {
    grid: PeriodicGrid,
    cfg: SchemeConfig,
    solver: PeriodicHeatSolver,
    forcing: Option<ForcingPropagator>,
    u: Vec<f64>,
    div: Vec<f64>,
    rhs: Vec<f64>,
}

impl BurgersStepper {
    /// `mollifier = None` disables the noise entirely.
    pub fn new(
        grid: PeriodicGrid,
        mollifier: Option<&SampledMollifier>,
        cfg: SchemeConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let dx = grid.dx();
        let forcing = match mollifier {
            Some(m) => Some(ForcingPropagator::new(Spectral::new(grid), m, cfg.dt)?),
            None => None,
        };
        let n = grid.n();
        Ok(Self {
            grid,
            cfg,
            solver: PeriodicHeatSolver::new(n, cfg.dt / (2.0 * dx * dx)),
            forcing,
            u: vec![0.0; n],
            div: vec![0.0; n],
            rhs: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn forcing(&self) -> Option<&ForcingPropagator> {
        self.forcing.as_ref()
    }

    pub fn forcing_mut(&mut self) -> Option<&mut ForcingPropagator> {
        self.forcing.as_mut()
    }

    /// `dt·max|u|/dx` over the whole ensemble.
    pub fn courant(&self, ens: &BurgersEnsemble) -> f64 {
        let mut vmax = 0.0f64;
        for th in &ens.thetas {
            for (a, b) in th.iter().zip(&ens.psi.psi) {
                vmax = vmax.max((a + b).abs());
            }
        }
        self.cfg.dt * vmax / self.grid.dx()
    }

    /// Advances every component by `dt` using the shared increment `dw`
    /// (`None` for a noise-free step). Transport and diffusion of `θ` use the
    /// current `ψ`; `ψ` is updated afterwards.
    pub fn step(&mut self, ens: &mut BurgersEnsemble, dw: Option<&[f64]>) -> Result<()> {
        self.grid.check_len(ens.psi.psi.len())?;
        let courant = self.courant(ens);
        if !courant.is_finite() {
            return Err(Error::NonFinite(format!("ensemble state at t = {}", ens.t)));
        }
        if courant > self.cfg.cfl_safety {
            return Err(Error::Cfl { time: ens.t, courant, limit: self.cfg.cfl_safety });
        }
        let dt = self.cfg.dt;
        let lambda = dt / self.grid.dx();
        let alpha = courant / lambda;
        for theta in ens.thetas.iter_mut() {
            if self.cfg.flux == FluxKind::None {
                self.rhs.copy_from_slice(theta);
            } else {
                for ((u, th), ps) in self.u.iter_mut().zip(theta.iter()).zip(&ens.psi.psi) {
                    *u = th + ps;
                }
                flux_divergence(self.cfg.flux, &self.u, alpha, &mut self.div);
                for ((r, th), d) in self.rhs.iter_mut().zip(theta.iter()).zip(&self.div) {
                    *r = th - lambda * d;
                }
            }
            self.solver.solve(&self.rhs, theta);
        }
        match (dw, self.forcing.as_mut()) {
            (Some(dw), Some(forcing)) => {
                self.grid.check_len(dw.len())?;
                forcing.inject(dw, &mut ens.psi_hat);
                forcing.to_physical(&ens.psi_hat, &mut ens.psi.psi);
            }
            (None, Some(forcing)) => {
                if ens.psi_hat.iter().any(|c| c.norm_sqr() > 0.0) {
                    forcing.relax(&mut ens.psi_hat);
                    forcing.to_physical(&ens.psi_hat, &mut ens.psi.psi);
                }
            }
            (Some(_), None) => {
                return Err(Error::config("noise increment supplied to a noise-free stepper"))
            }
            (None, None) => {}
        }
        ens.steps += 1;
        ens.t = ens.steps as f64 * dt;
        ens.psi.t = ens.t;
        Ok(())
    }
}

/// An ensemble bundled with its stepper and noise source.
pub struct Simulation<'a> {
    pub ensemble: BurgersEnsemble,
    pub stepper: BurgersStepper,
    noise: Option<Box<dyn NoiseSource + Send + 'a>>,
    dw: Vec<f64>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        initials: Vec<Vec<f64>>,
        grid: PeriodicGrid,
        mollifier: Option<&SampledMollifier>,
        cfg: SchemeConfig,
        noise: Option<Box<dyn NoiseSource + Send + 'a>>,
    ) -> Result<Self> {
        if mollifier.is_some() != noise.is_some() {
            return Err(Error::config("a mollifier and a noise source must be given together"));
        }
        if let Some(src) = &noise {
            grid.check_len(src.cells())?;
            if (src.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
                return Err(Error::config(format!(
                    "noise dt {} does not match scheme dt {}",
                    src.dt(),
                    cfg.dt
                )));
            }
        }
        Ok(Self {
            ensemble: BurgersEnsemble::from_initials(grid, initials)?,
            stepper: BurgersStepper::new(grid, mollifier, cfg)?,
            noise,
            dw: vec![0.0; grid.n()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.stepper.config().dt
    }

    pub fn is_forced(&self) -> bool {
        self.noise.is_some()
    }

    pub fn advance(&mut self) -> Result<()> {
        match self.noise.as_mut() {
            Some(src) => {
                src.next_increment(&mut self.dw)?;
                self.stepper.step(&mut self.ensemble, Some(&self.dw))
            }
            None => self.stepper.step(&mut self.ensemble, None),
        }
    }

    /// Steps until the step count reaches `⌊t/dt⌋`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let target = steps_for(t, self.dt());
        while self.ensemble.steps < target {
            self.advance()?;
        }
        Ok(())
    }

    pub fn last_dv_hat(&self) -> Option<&[Complex]> {
        self.stepper.forcing().map(|f| f.last_dv_hat())
    }
}

/// Number of whole steps of size `dt` in `t`, tolerating rounding in `t`.
pub fn steps_for(t: f64, dt: f64) -> u64 {
    (t / dt + 1e-9).floor().max(0.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_noise::{build_mollifier, sample_noise_path, MollifierKind, WhiteNoise};

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16.0, 512).unwrap()
    }

    #[test]
    fn constants_are_steady_without_noise() {
        let g = grid();
        let mut sim = Simulation::new(
            vec![vec![0.8; 512], vec![-1.3; 512]],
            g,
            None,
            SchemeConfig::default(),
            None,
        )
        .unwrap();
        sim.advance_to(1.0).unwrap();
        for (i, a) in [0.8, -1.3].iter().enumerate() {
            assert!(sim.ensemble.u(i).iter().all(|v| (v - a).abs() < 1e-13));
        }
    }

    #[test]
    fn mean_is_conserved_with_noise() {
        let g = grid();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let u0: Vec<f64> = g.nodes().map(|x| 0.3 + (x * 0.7).sin()).collect();
        let mean0 = g.mean(&u0);
        let noise = WhiteNoise::new(3, 0, 1e-3, &g).unwrap();
        let mut sim =
            Simulation::new(vec![u0], g, Some(&m), SchemeConfig::default(), Some(Box::new(noise)))
                .unwrap();
        for _ in 0..500 {
            sim.advance().unwrap();
            assert!((g.mean(&sim.ensemble.u(0)) - mean0).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_reports_time() {
        let g = grid();
        let cfg = SchemeConfig::new(0.1, FluxKind::EngquistOsher, 0.9).unwrap();
        let mut sim = Simulation::new(vec![vec![1.0; 512]], g, None, cfg, None).unwrap();
        match sim.advance() {
            Err(Error::Cfl { time, courant, .. }) => {
                assert_eq!(time, 0.0);
                assert!(courant > 3.0);
            }
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[test]
    fn permuting_components_permutes_outputs() {
        let g = grid();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let path = sample_noise_path(9, 1e-3, 200, &g, 0).unwrap();
        let a: Vec<f64> = g.nodes().map(|x| (x * 0.4).sin()).collect();
        let b: Vec<f64> = g.nodes().map(|x| 0.5 * (x * 0.8).cos() - 0.2).collect();
        let c = vec![0.25; 512];
        let run = |init: Vec<Vec<f64>>| {
            let mut sim = Simulation::new(
                init,
                g,
                Some(&m),
                SchemeConfig::default(),
                Some(Box::new(path.cursor())),
            )
            .unwrap();
            sim.advance_to(0.2).unwrap();
            sim.ensemble
        };
        let e1 = run(vec![a.clone(), b.clone(), c.clone()]);
        let e2 = run(vec![c, a, b]);
        assert_eq!(e1.u(0), e2.u(1));
        assert_eq!(e1.u(1), e2.u(2));
        assert_eq!(e1.u(2), e2.u(0));
    }
}
