use serde::{Deserialize, Serialize};

use super::{per_realization, spatial_mean_sq, Assertion, Dynamics};
use crate::burgers::steps_for;
use crate::error::{Error, Result};
use crate::stats::SampleStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WassersteinCurve {
    pub times: Vec<f64>,
    /// Shared-noise coupling upper bound `Ê‖uᵢ(t) − uⱼ(t)‖`.
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    /// Realizations in which the distance increased at some step by more
    /// than `1e−12` relative.
    pub monotone_violations: usize,
    pub realizations: usize,
}

impl WassersteinCurve {
    pub fn final_ratio(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN) / self.mean[0]
    }
}

/// Couples two initial conditions through shared noise and tracks their
/// distance at every step.
pub fn coupled_wasserstein_bound(
    dynamics: &Dynamics,
    ui: &[f64],
    uj: &[f64],
    times: &[f64],
    realizations: usize,
    seed: u64,
) -> Result<WassersteinCurve> {
    if realizations == 0 {
        return Err(Error::InsufficientRealizations { got: 0, min: 1 });
    }
    let dt = dynamics.scheme.dt;
    let targets: Vec<u64> = times.iter().map(|&t| steps_for(t, dt)).collect();
    if targets.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("coupling times must be nondecreasing"));
    }
    let rows = per_realization(realizations, |r| {
        let mut sim = dynamics.simulation(vec![ui.to_vec(), uj.to_vec()], seed, r)?;
        let dist = |sim: &crate::burgers::Simulation| {
            dynamics.yg_distance(&sim.ensemble.u(0), &sim.ensemble.u(1))
        };
        let mut prev = dist(&sim);
        let scale = prev;
        let mut violated = false;
        let mut row = Vec::with_capacity(targets.len());
        for &target in &targets {
            while sim.ensemble.steps < target {
                sim.advance()?;
                let d = dist(&sim);
                if d > prev + 1e-12 * scale {
                    violated = true;
                }
                prev = d;
            }
            row.push(prev);
        }
        Ok((row, violated))
    })?;
    let mut curve = WassersteinCurve {
        times: targets.iter().map(|&s| s as f64 * dt).collect(),
        mean: vec![],
        se: vec![],
        monotone_violations: rows.iter().filter(|(_, v)| *v).count(),
        realizations,
    };
    for k in 0..targets.len() {
        let s = SampleStats::from_iter(rows.iter().map(|(row, _)| row[k]));
        curve.mean.push(s.mean);
        curve.se.push(s.se);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub realizations: usize,
    pub constant_sign: usize,
    pub fraction: f64,
    /// Smallest `min_x |u₁ − u₂|` over the sign-constant realizations.
    pub min_gap: f64,
    pub burn_in: f64,
}

/// Fraction of realizations in which `u₁ − u₂` has one strict sign on the
/// whole grid after `burn_in`.
pub fn ordering_audit(
    dynamics: &Dynamics,
    u1: &[f64],
    u2: &[f64],
    burn_in: f64,
    realizations: usize,
    seed: u64,
) -> Result<OrderingReport> {
    if realizations == 0 {
        return Err(Error::InsufficientRealizations { got: 0, min: 1 });
    }
    let gaps = per_realization(realizations, |r| {
        let mut sim = dynamics.simulation(vec![u1.to_vec(), u2.to_vec()], seed, r)?;
        sim.advance_to(burn_in)?;
        let (a, b) = (sim.ensemble.u(0), sim.ensemble.u(1));
        let pos = a.iter().zip(&b).all(|(x, y)| x > y);
        let neg = a.iter().zip(&b).all(|(x, y)| x < y);
        let identical = a == b;
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(f64::INFINITY, f64::min);
        Ok(if pos || neg || identical { Some(gap) } else { None })
    })?;
    let constant_sign = gaps.iter().filter(|g| g.is_some()).count();
    Ok(OrderingReport {
        realizations,
        constant_sign,
        fraction: constant_sign as f64 / realizations as f64,
        min_gap: gaps.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        burn_in,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComparison {
    pub from_constant: SampleStats,
    pub from_other: SampleStats,
    pub assertion: Assertion,
}

/// Compares `Var u(X)` after `burn_in` for an ensemble started from the
/// constant `mean(other)` against one started from `other`.
pub fn variance_minimality(
    dynamics: &Dynamics,
    other: &[f64],
    burn_in: f64,
    realizations: usize,
    seed: u64,
) -> Result<VarianceComparison> {
    let a = dynamics.grid.mean(other);
    let constant = vec![a; other.len()];
    let rows = per_realization(realizations, |r| {
        let mut sim = dynamics.simulation(vec![constant.clone(), other.to_vec()], seed, r)?;
        sim.advance_to(burn_in)?;
        Ok((spatial_mean_sq(&sim.ensemble.u(0), a), spatial_mean_sq(&sim.ensemble.u(1), a)))
    })?;
    let from_constant = SampleStats::from_iter(rows.iter().map(|r| r.0));
    let from_other = SampleStats::from_iter(rows.iter().map(|r| r.1));
    let diff = SampleStats::from_iter(rows.iter().map(|r| r.0 - r.1));
    Ok(VarianceComparison {
        from_constant,
        from_other,
        assertion: Assertion::at_most("variance_minimality", diff.mean, diff.se, 0.0, 5.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::SchemeConfig;
    use crate::grid_noise::{build_mollifier, MollifierKind, PeriodicGrid};

    fn dynamics(n: usize) -> Dynamics {
        let g = PeriodicGrid::new(16.0, n).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        Dynamics::new(g, Some(m), SchemeConfig::default())
    }

    #[test]
    fn identical_data_has_zero_distance() {
        let d = dynamics(64);
        let u: Vec<f64> = d.grid.nodes().map(|x| (x * std::f64::consts::PI / 8.0).sin()).collect();
        let c = coupled_wasserstein_bound(&d, &u, &u, &[0.0, 0.2], 4, 1).unwrap();
        assert!(c.mean.iter().all(|&m| m == 0.0));
        assert_eq!(c.monotone_violations, 0);
    }

    #[test]
    fn coupled_distance_is_monotone() {
        let d = dynamics(128);
        let k = std::f64::consts::PI / 8.0;
        let u: Vec<f64> = d.grid.nodes().map(|x| (k * x).sin()).collect();
        let c = coupled_wasserstein_bound(&d, &vec![0.0; 128], &u, &[0.0, 0.5, 1.0, 2.0], 6, 3).unwrap();
        assert_eq!(c.monotone_violations, 0);
        assert!(c.mean.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ordered_data_stays_ordered() {
        let d = dynamics(128);
        let k = std::f64::consts::PI / 8.0;
        let lo: Vec<f64> = d.grid.nodes().map(|x| (k * x).sin()).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + 1.0).collect();
        let rep = ordering_audit(&d, &hi, &lo, 1.0, 5, 2).unwrap();
        assert_eq!(rep.fraction, 1.0);
        let same = ordering_audit(&d, &lo, &lo, 0.5, 3, 2).unwrap();
        assert_eq!(same.fraction, 1.0);
        assert_eq!(same.min_gap, 0.0);
    }
}
