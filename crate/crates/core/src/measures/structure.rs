use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{per_realization, Assertion, Dynamics};
use crate::burgers::{compare, DissipationFunction, DissipationMonitor, DissipationReport};
use crate::error::{Error, Result};
use crate::grid_noise::PeriodicGrid;
use crate::rng::{stream, stream_id, tag};

/// Smooth random field: `mean` plus `modes` Fourier modes with Gaussian
/// coefficients scaled so the sample has roughly the given standard deviation.
pub fn random_field(grid: &PeriodicGrid, mean: f64, amplitude: f64, modes: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream(seed, stream_id(tag::INITIAL_DATA, index));
    let coeffs: Vec<(f64, f64)> =
        (0..modes).map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let scale = amplitude / (modes.max(1) as f64).sqrt();
    let base = 2.0 * std::f64::consts::PI / grid.length();
    grid.nodes()
        .map(|x| {
            mean + scale
                * coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, (a, b))| {
                        let k = base * (m + 1) as f64;
                        a * (k * x).cos() + b * (k * x).sin()
                    })
                    .sum::<f64>()
        })
        .collect()
}

/// Worst per-step defects of the exact discrete invariants over all paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub paths: usize,
    pub steps: u64,
    /// `max (u₁ − u₂)⁺` for the ordered pair `u₁ ≤ u₂`, relative to the data scale.
    pub comparison_defect: f64,
    /// Largest one-step relative increase of `‖u₁ − w‖_{L¹}`.
    pub l1_increase: f64,
    /// Largest relative drift of `∫(u₁ − w)`.
    pub mass_drift: f64,
    /// Largest one-step relative increase of the coupled `Y_G` distance.
    pub yg_increase: f64,
    pub assertions: Vec<Assertion>,
}

impl StructureReport {
    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

#[derive(Default)]
struct PathDefects {
    comparison: f64,
    l1: f64,
    mass: f64,
    yg: f64,
}

/// Per path: `u₁` random, `u₂ = u₁ + |bump|` above it, and an independent
/// random `w` that crosses `u₁`, all driven by one noise path.
pub fn structure_audit(
    dynamics: &Dynamics,
    paths: usize,
    t_end: f64,
    amplitude: f64,
    seed: u64,
    rel_tol: f64,
) -> Result<StructureReport> {
    if paths == 0 {
        return Err(Error::InsufficientRealizations { got: 0, min: 1 });
    }
    let grid = dynamics.grid;
    let defects = per_realization(paths, |r| {
        let u1 = random_field(&grid, 0.0, amplitude, 4, seed, 3 * r);
        let lift = random_field(&grid, 0.0, amplitude, 2, seed, 3 * r + 1);
        let u2: Vec<f64> = u1.iter().zip(&lift).map(|(a, b)| a + b.abs()).collect();
        let w = random_field(&grid, 0.1 * amplitude, amplitude, 4, seed, 3 * r + 2);
        let scale = u1.iter().chain(&u2).chain(&w).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut sim = dynamics.simulation(vec![u1, u2, w], seed, r)?;
        let first = compare(&sim.ensemble, 0, 2);
        let mass0: f64 = grid.integrate(&first.eta);
        let mass_scale = first.l1.max(mass0.abs()).max(f64::MIN_POSITIVE);
        let mut l1 = first.l1;
        let mut yg = dynamics.yg_distance(&sim.ensemble.u(0), &sim.ensemble.u(2));
        let mut d = PathDefects::default();
        while sim.ensemble.t < t_end - 0.5 * sim.dt() {
            sim.advance()?;
            let (a, b, c) = (sim.ensemble.u(0), sim.ensemble.u(1), sim.ensemble.u(2));
            let over = a.iter().zip(&b).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
            d.comparison = d.comparison.max(over.max(0.0) / scale);
            let diag = compare(&sim.ensemble, 0, 2);
            d.l1 = d.l1.max((diag.l1 - l1) / l1.max(f64::MIN_POSITIVE));
            d.mass = d.mass.max((grid.integrate(&diag.eta) - mass0).abs() / mass_scale);
            let y = dynamics.yg_distance(&a, &c);
            d.yg = d.yg.max((y - yg) / yg.max(f64::MIN_POSITIVE));
            l1 = diag.l1;
            yg = y;
        }
        Ok(d)
    })?;
    let worst = |f: fn(&PathDefects) -> f64| defects.iter().map(f).fold(0.0, f64::max);
    let mut report = StructureReport {
        paths,
        steps: crate::burgers::steps_for(t_end, dynamics.scheme.dt),
        comparison_defect: worst(|d| d.comparison),
        l1_increase: worst(|d| d.l1),
        mass_drift: worst(|d| d.mass),
        yg_increase: worst(|d| d.yg),
        assertions: vec![],
    };
    report.assertions = vec![
        Assertion::at_most("comparison_preserved", report.comparison_defect, 0.0, rel_tol, 0.0),
        Assertion::at_most("l1_nonincreasing", report.l1_increase, 0.0, rel_tol, 0.0),
        Assertion::at_most("mass_conserved", report.mass_drift, 0.0, rel_tol, 0.0),
        Assertion::at_most("yg_nonincreasing", report.yg_increase, 0.0, rel_tol, 0.0),
    ];
    Ok(report)
}

/// Step-by-step crossing-dissipation audits on random coupled pairs.
pub fn dissipation_runs(
    dynamics: &Dynamics,
    runs: usize,
    t_end: f64,
    amplitude: f64,
    functions: &[DissipationFunction],
    seed: u64,
) -> Result<Vec<DissipationReport>> {
    let grid = dynamics.grid;
    let nested = per_realization(runs, |r| {
        let u1 = random_field(&grid, 0.0, amplitude, 4, seed, 2 * r);
        let u2 = random_field(&grid, 0.0, amplitude, 4, seed, 2 * r + 1);
        let mut sim = dynamics.simulation(vec![u1, u2], seed, r)?;
        let mut monitors: Vec<DissipationMonitor> =
            functions.iter().map(|&f| DissipationMonitor::new(f, 0, 1)).collect();
        monitors.iter_mut().for_each(|m| m.observe(&sim.ensemble));
        while sim.ensemble.t < t_end - 0.5 * sim.dt() {
            sim.advance()?;
            monitors.iter_mut().for_each(|m| m.observe(&sim.ensemble));
        }
        Ok(monitors.iter().map(DissipationMonitor::report).collect::<Vec<_>>())
    })?;
    Ok(nested.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::SchemeConfig;
    use crate::grid_noise::{build_mollifier, MollifierKind};

    fn dynamics(n: usize) -> Dynamics {
        let g = PeriodicGrid::new(16.0, n).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        Dynamics::new(g, Some(m), SchemeConfig::default())
    }

    #[test]
    fn random_fields_are_reproducible_and_scaled() {
        let g = PeriodicGrid::new(16.0, 256).unwrap();
        let a = random_field(&g, 0.3, 1.0, 4, 7, 2);
        assert_eq!(a, random_field(&g, 0.3, 1.0, 4, 7, 2));
        assert_ne!(a, random_field(&g, 0.3, 1.0, 4, 7, 3));
        assert!((g.mean(&a) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn short_structure_audit_passes() {
        let rep = structure_audit(&dynamics(128), 4, 0.3, 1.0, 1, 1e-12).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert_eq!(rep.steps, 300);
    }

    #[test]
    fn dissipation_runs_cover_every_function() {
        let fs = [DissipationFunction::Abs, DissipationFunction::PosPart];
        let reps = dissipation_runs(&dynamics(128), 3, 0.2, 1.0, &fs, 2).unwrap();
        assert_eq!(reps.len(), 6);
        assert!(reps.iter().all(|r| r.holds(1e-3)), "{:?}", reps.iter().map(|r| r.min_slack).collect::<Vec<_>>());
    }
}
