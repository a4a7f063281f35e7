use serde::{Deserialize, Serialize};

use super::{SheState, SheStepper};
use crate::burgers::{run_observed, steps_for, RunOptions, SchemeConfig, Trajectory};
use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::grid_noise::{NoiseSource, PeriodicGrid, SampledMollifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub times: Vec<f64>,
    /// `‖u + ∂ₓφ/φ − a‖_{L¹} / ‖u‖_{L¹}` per snapshot.
    pub mismatch: Vec<f64>,
    pub sup: f64,
}

/// A Burgers trajectory and the heat-equation states at the same snapshots.
#[derive(Debug, Clone)]
pub struct LadderRun {
    pub burgers: Trajectory,
    pub she: Vec<SheState>,
}

/// Solves Burgers and the heat equation side by side with one noise source.
pub fn run_ladder<'a>(
    grid: PeriodicGrid,
    mollifier: Option<&SampledMollifier>,
    cfg: SchemeConfig,
    u0: Vec<f64>,
    noise: Option<Box<dyn NoiseSource + Send + 'a>>,
    times: &[f64],
    zeta: &[f64],
) -> Result<LadderRun> {
    let mut state = SheState::from_burgers(&grid, &u0, zeta)?;
    let mut stepper = SheStepper::new(Spectral::new(grid), mollifier, cfg.dt)?;
    let options = RunOptions::at(times);
    let mut targets: Vec<u64> =
        times.iter().map(|&t| steps_for(t, cfg.dt)).collect();
    targets.sort_unstable();
    targets.dedup();
    let mut states = Vec::with_capacity(targets.len());
    let burgers = run_observed(vec![u0], grid, noise, mollifier, cfg, &options, |ens, bs| {
        if ens.steps > 0 {
            match bs.forcing() {
                Some(f) => stepper.step_spectral(&mut state, f.last_dv_hat())?,
                None => stepper.step(&mut state, None)?,
            }
        }
        if targets.get(states.len()) == Some(&ens.steps) {
            states.push(state.clone());
        }
        Ok(())
    })?;
    Ok(LadderRun { burgers, she: states })
}

/// Relative `L¹` gap between `u` and the Burgers field encoded by `φ`.
pub fn ladder_consistency(u: &Trajectory, component: usize, phi: &[SheState]) -> Result<LadderReport> {
    if phi.len() != u.snapshots.len() {
        return Err(Error::config(format!(
            "{} heat-equation states for {} snapshots",
            phi.len(),
            u.snapshots.len()
        )));
    }
    let spectral = Spectral::new(u.grid);
    let mut times = Vec::with_capacity(phi.len());
    let mut mismatch = Vec::with_capacity(phi.len());
    for (snap, s) in u.snapshots.iter().zip(phi) {
        if let Some(bad) = s.phi.iter().find(|&&p| !(p > 0.0)) {
            return Err(Error::NonPositive(format!("phi = {bad:e} at t = {}", s.t)));
        }
        let uu = snap.u(component);
        let uc = s.burgers_field(&spectral);
        let diff: f64 = uu.iter().zip(&uc).map(|(a, b)| (a - b).abs()).sum();
        let norm: f64 = uu.iter().map(|a| a.abs()).sum();
        times.push(snap.t);
        mismatch.push(if norm > 0.0 { diff / norm } else { diff });
    }
    let sup = mismatch.iter().copied().fold(0.0, f64::max);
    Ok(LadderReport { times, mismatch, sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::FluxKind;
    use crate::colehopf::normalization_bump;

    #[test]
    fn noise_free_sine_ladder() {
        let g = PeriodicGrid::new(16.0, 512).unwrap();
        let zeta = normalization_bump(&g, 1.0).unwrap();
        let k = 2.0 * std::f64::consts::PI / 16.0;
        let u0: Vec<f64> = g.nodes().map(|x| (k * x).sin()).collect();
        let cfg = SchemeConfig::new(1e-4, FluxKind::EngquistOsher, 0.9).unwrap();
        let run = run_ladder(g, None, cfg, u0, None, &[0.1, 0.25, 0.5], &zeta).unwrap();
        let rep = ladder_consistency(&run.burgers, 0, &run.she).unwrap();
        assert!(rep.sup < 1e-3, "{rep:?}");
    }

    #[test]
    fn constant_ladder_is_exact() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let zeta = normalization_bump(&g, 1.0).unwrap();
        let run = run_ladder(g, None, SchemeConfig::default(), vec![0.6; 128], None, &[0.3], &zeta).unwrap();
        let rep = ladder_consistency(&run.burgers, 0, &run.she).unwrap();
        assert!(rep.sup < 1e-12);
    }
}
