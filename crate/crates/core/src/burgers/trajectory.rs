use super::ensemble::steps_for;
use super::{BurgersEnsemble, BurgersStepper, SchemeConfig, Simulation};
use crate::error::{Error, Result};
use crate::grid_noise::{NoiseSource, PeriodicGrid, SampledMollifier};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Requested times; each is rounded down to a multiple of `dt`.
    pub snapshot_times: Vec<f64>,
}

impl RunOptions {
    pub fn at(times: &[f64]) -> Self {
        Self { snapshot_times: times.to_vec() }
    }

    /// Snapshots at every multiple of `every` up to `t_end`, including 0.
    pub fn every(every: f64, t_end: f64) -> Self {
        let count = (t_end / every + 1e-9).floor() as usize;
        Self { snapshot_times: (0..=count).map(|k| k as f64 * every).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub steps: u64,
    pub thetas: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
}

impl Snapshot {
    fn capture(ens: &BurgersEnsemble) -> Self {
        Self { t: ens.t, steps: ens.steps, thetas: ens.thetas.clone(), psi: ens.psi.psi.clone() }
    }

    pub fn u(&self, i: usize) -> Vec<f64> {
        self.thetas[i].iter().zip(&self.psi).map(|(a, b)| a + b).collect()
    }

    pub fn components(&self) -> usize {
        self.thetas.len()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: PeriodicGrid,
    pub scheme: SchemeConfig,
    pub initials: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }
}

/// Runs an ensemble and records snapshots. Deterministic in its inputs.
pub fn run<'a>(
    initials: Vec<Vec<f64>>,
    grid: PeriodicGrid,
    noise: Option<Box<dyn NoiseSource + Send + 'a>>,
    mollifier: Option<&SampledMollifier>,
    cfg: SchemeConfig,
    options: &RunOptions,
) -> Result<Trajectory> {
    run_observed(initials, grid, noise, mollifier, cfg, options, |_, _| Ok(()))
}

/// As [`run`], calling `observer` on the initial state and after every step.
pub fn run_observed<'a>(
    initials: Vec<Vec<f64>>,
    grid: PeriodicGrid,
    noise: Option<Box<dyn NoiseSource + Send + 'a>>,
    mollifier: Option<&SampledMollifier>,
    cfg: SchemeConfig,
    options: &RunOptions,
    mut observer: impl FnMut(&BurgersEnsemble, &BurgersStepper) -> Result<()>,
) -> Result<Trajectory> {
    let mut targets: Vec<u64> = Vec::with_capacity(options.snapshot_times.len());
    for &t in &options.snapshot_times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::config(format!("snapshot time {t} must be finite and nonnegative")));
        }
        targets.push(steps_for(t, cfg.dt));
    }
    targets.sort_unstable();
    targets.dedup();
    let mut sim = Simulation::new(initials.clone(), grid, mollifier, cfg, noise)?;
    observer(&sim.ensemble, &sim.stepper)?;
    let mut snapshots = Vec::with_capacity(targets.len());
    for target in targets {
        while sim.ensemble.steps < target {
            sim.advance()?;
            observer(&sim.ensemble, &sim.stepper)?;
        }
        snapshots.push(Snapshot::capture(&sim.ensemble));
    }
    Ok(Trajectory { grid, scheme: cfg, initials, snapshots })
}
