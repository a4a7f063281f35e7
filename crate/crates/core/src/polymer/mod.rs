//! Feynman–Kac directed polymers in the smoothed noise field.
//!
//! `Z_t = E_X exp(−∫₀ᵗ dV(s, X_s) − ½t·ρ*²(0))` over Brownian paths started at
//! the origin, estimated by sequential importance resampling. `−log Z_t` has the
//! law of the KPZ height `h(t, 0)` from flat data, so its mean is `γ(t)`.

mod estimate;

pub use estimate::{estimate_gamma, simulate_realization, simulate_runs, GammaCurve, GammaRun};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_noise::PeriodicGrid;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerConfig {
    pub paths: usize,
    pub dt: f64,
    pub t_max: f64,
    pub resample_threshold: f64,
}

impl PolymerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 100 {
            return Err(Error::config(format!("polymer.paths must be at least 100, got {}", self.paths)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("polymer.dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::config(format!("polymer.t_max must be positive, got {}", self.t_max)));
        }
        let ratio = self.t_max / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::config("polymer.dt must divide polymer.t_max"));
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return Err(Error::config(format!(
                "polymer.resample_threshold must lie in (0, 1], got {}",
                self.resample_threshold
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// Weighted path cloud. Positions are not wrapped; the field is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymerEnsemble {
    pub positions: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub t: f64,
    /// `log` of the normalization removed at each resampling.
    pub log_norm: f64,
}

impl PolymerEnsemble {
    pub fn at_origin(paths: usize) -> Self {
        Self { positions: vec![0.0; paths], log_weights: vec![0.0; paths], t: 0.0, log_norm: 0.0 }
    }

    pub fn paths(&self) -> usize {
        self.positions.len()
    }

    fn max_log_weight(&self) -> f64 {
        self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `log Ẑ_t`.
    pub fn log_partition(&self) -> f64 {
        let m = self.max_log_weight();
        let s: f64 = self.log_weights.iter().map(|l| (l - m).exp()).sum();
        self.log_norm + m + (s / self.paths() as f64).ln()
    }

    /// `(Σw)² / Σw²`, in `[1, M]`.
    pub fn ess(&self) -> f64 {
        let m = self.max_log_weight();
        let (mut s1, mut s2) = (0.0, 0.0);
        for l in &self.log_weights {
            let w = (l - m).exp();
            s1 += w;
            s2 += w * w;
        }
        (s1 * s1 / s2).clamp(1.0, self.paths() as f64)
    }

    /// Weights normalized to sum to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let m = self.max_log_weight();
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }

    /// Systematic resampling; the mean weight moves into `log_norm`.
    pub fn resample(&mut self, rng: &mut StreamRng) {
        let m = self.paths();
        let logz = self.log_partition();
        let w = self.normalized_weights();
        let u0: f64 = rng.gen::<f64>() / m as f64;
        let mut out = Vec::with_capacity(m);
        let mut cum = w[0];
        let mut i = 0;
        for k in 0..m {
            let target = u0 + k as f64 / m as f64;
            while cum < target && i + 1 < m {
                i += 1;
                cum += w[i];
            }
            out.push(self.positions[i]);
        }
        self.positions = out;
        self.log_weights.iter_mut().for_each(|l| *l = 0.0);
        self.log_norm = logz;
    }
}

/// One step: diffuse, reweight by the field increment `dv` (physical, on the
/// grid), and resample when `ESS < threshold·M`. Returns the pre-resampling ESS.
#[allow(clippy::too_many_arguments)]
pub fn polymer_advance(
    ens: &mut PolymerEnsemble,
    dv: &[f64],
    grid: &PeriodicGrid,
    dt: f64,
    ito_rate: f64,
    threshold: f64,
    rng: &mut StreamRng,
    resample_rng: &mut StreamRng,
) -> Result<f64> {
    grid.check_len(dv.len())?;
    let sd = dt.sqrt();
    let correction = 0.5 * dt * ito_rate;
    for (x, lw) in ens.positions.iter_mut().zip(ens.log_weights.iter_mut()) {
        let z: f64 = rng.sample(StandardNormal);
        *x += sd * z;
        *lw += -grid.interpolate(dv, *x) - correction;
    }
    ens.t += dt;
    let ess = ens.ess();
    if !ess.is_finite() {
        return Err(Error::NonFinite(format!("polymer weights at t = {}", ens.t)));
    }
    if ess < threshold * ens.paths() as f64 {
        ens.resample(resample_rng);
    }
    Ok(ess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::SampleStats;

    #[test]
    fn zero_field_keeps_flat_weights() {
        let g = PeriodicGrid::new(16.0, 64).unwrap();
        let mut e = PolymerEnsemble::at_origin(200);
        let (mut r1, mut r2) = (stream(1, 0), stream(1, 1));
        for _ in 0..50 {
            polymer_advance(&mut e, &[0.0; 64], &g, 1e-2, 0.0, 0.5, &mut r1, &mut r2).unwrap();
        }
        assert!(e.log_weights.iter().all(|&l| l == 0.0));
        assert_eq!(e.log_partition(), 0.0);
        assert_eq!(e.ess(), 200.0);
    }

    #[test]
    fn positions_have_brownian_variance() {
        let g = PeriodicGrid::new(16.0, 64).unwrap();
        let mut e = PolymerEnsemble::at_origin(20_000);
        let (mut r1, mut r2) = (stream(2, 0), stream(2, 1));
        let steps = 40;
        for _ in 0..steps {
            polymer_advance(&mut e, &[0.0; 64], &g, 1e-2, 0.0, 0.5, &mut r1, &mut r2).unwrap();
        }
        let sq: Vec<f64> = e.positions.iter().map(|x| x * x).collect();
        let s = SampleStats::from_slice(&sq);
        assert!((s.mean - steps as f64 * 1e-2).abs() < 5.0 * s.se);
    }

    #[test]
    fn uniform_resampling_permutes_the_cloud() {
        let mut e = PolymerEnsemble::at_origin(300);
        e.positions = (0..300).map(|i| i as f64 * 0.1).collect();
        let before = e.positions.clone();
        e.resample(&mut stream(3, 0));
        let mut after = e.positions.clone();
        after.sort_by(f64::total_cmp);
        assert_eq!(after, before);
        assert_eq!(e.log_norm, 0.0);
    }

    #[test]
    fn resampling_preserves_the_partition_function() {
        let mut e = PolymerEnsemble::at_origin(500);
        e.log_weights = (0..500).map(|i| -(i as f64) * 0.01).collect();
        let z = e.log_partition();
        e.resample(&mut stream(4, 0));
        assert!((e.log_partition() - z).abs() < 1e-12);
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = PolymerConfig { paths: 10, dt: 1e-3, t_max: 1.0, resample_threshold: 0.5 };
        assert!(bad.validate().unwrap_err().to_string().contains("polymer.paths"));
        let bad = PolymerConfig { paths: 100, dt: 0.3, t_max: 1.0, resample_threshold: 0.5 };
        assert!(bad.validate().unwrap_err().to_string().contains("divide"));
    }
}
