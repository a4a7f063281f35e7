//! Empirical invariant-measure machinery: time-randomized snapshots,
//! shared-noise couplings, moment identities, shear invariance and the
//! basin-of-attraction sandwich.
//!
//! Every experiment is a pure function of its inputs and a master seed.
//! Realizations run in parallel and are reduced in index order, so results do
//! not depend on the thread count.

mod basin;
mod coupling;
mod kb;
mod moments;
mod shear;
mod structure;

pub use basin::{sandwich, stability_experiment, BasinDecomposition, Sandwich, StabilityReport};
pub use coupling::{
    coupled_wasserstein_bound, ordering_audit, variance_minimality, OrderingReport,
    VarianceComparison, WassersteinCurve,
};
pub use kb::{kb_average, MeasureEstimate};
pub use moments::{
    height_balance, height_curve, moment_curve, stationary_moment_audit, HeightCurve, MomentAudit,
    MomentCurve,
};
pub use shear::{shear_audit, ShearReport, ShearStatistic};
pub use structure::{dissipation_runs, random_field, structure_audit, StructureReport};

use rayon::prelude::*;

use crate::burgers::{SchemeConfig, Simulation};
use crate::error::Result;
use crate::grid_noise::{PeriodicGrid, SampledMollifier, WhiteNoise};
use crate::rng::{stream_id, tag};
use crate::spectral_ops::y_g_inverse_weight;
use crate::stats::compensated_sum;
pub use crate::stats::Assertion;

/// Grid, forcing and scheme shared by all realizations of an experiment.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub grid: PeriodicGrid,
    /// `None` switches the noise off.
    pub mollifier: Option<SampledMollifier>,
    pub scheme: SchemeConfig,
    yg_scale: f64,
}

impl Dynamics {
    pub fn new(grid: PeriodicGrid, mollifier: Option<SampledMollifier>, scheme: SchemeConfig) -> Self {
        let yg_scale = grid.dx() * y_g_inverse_weight(&grid, grid.midpoint());
        Self { grid, mollifier, scheme, yg_scale }
    }

    /// Simulation driven by noise stream `index` of `seed`.
    pub fn simulation(&self, initials: Vec<Vec<f64>>, seed: u64, index: u64) -> Result<Simulation<'static>> {
        let noise = match &self.mollifier {
            Some(_) => Some(Box::new(WhiteNoise::new(
                seed,
                stream_id(tag::NOISE, index),
                self.scheme.dt,
                &self.grid,
            )?) as Box<_>),
            None => None,
        };
        Simulation::new(initials, self.grid, self.mollifier.as_ref(), self.scheme, noise)
    }

    pub fn noise_l2sq(&self) -> f64 {
        self.mollifier.as_ref().map_or(0.0, |m| m.l2sq)
    }

    pub fn noise_deriv_l2sq(&self) -> f64 {
        self.mollifier.as_ref().map_or(0.0, |m| m.deriv_l2sq)
    }

    /// `‖a − b‖` in the period-averaged weighted `L¹` space, whose weight is
    /// constant on the torus.
    pub fn yg_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.yg_scale * compensated_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
    }
}

/// Runs `f(r)` for `r = 0..count` in parallel, keeping index order.
pub(crate) fn per_realization<T: Send>(
    count: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..count as u64).into_par_iter().map(f).collect()
}

pub(crate) fn spatial_mean_sq(values: &[f64], shift: f64) -> f64 {
    values.iter().map(|v| (v - shift) * (v - shift)).sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_ops::{weighted_l1_norm, Field, WeightSpec};

    #[test]
    fn cached_yg_distance_matches_weighted_norm() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let d = Dynamics::new(g, None, SchemeConfig::default());
        let a: Vec<f64> = g.nodes().map(|x| (x * 0.3).sin()).collect();
        let b = vec![0.1; 128];
        let diff = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let want = weighted_l1_norm(&Field { grid: g, values: diff }, &WeightSpec::y_g(&g));
        assert!((d.yg_distance(&a, &b) - want).abs() < 1e-14 * want);
    }
}
