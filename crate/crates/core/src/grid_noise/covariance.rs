use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{psi_stationary_covariance, ForcingPropagator, NoiseSource, PeriodicGrid, SampledMollifier, WhiteNoise};
use crate::error::{Error, Result};
use crate::fft::{Complex, Spectral};
use crate::rng::{stream_id, tag};
use crate::stats::SampleStats;

pub const MIN_COVARIANCE_REALIZATIONS: usize = 100;

/// Monte Carlo covariance of `ψ(t, ·)` against the analytic curve, per lag
/// `r = k·dx`, `k = 0..=n/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub times: Vec<f64>,
    pub lags: Vec<f64>,
    pub estimate: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub oracle: Vec<Vec<f64>>,
    pub max_abs_z: f64,
    pub realizations: usize,
}

impl CovarianceReport {
    pub fn pass(&self, k_se: f64) -> bool {
        self.max_abs_z <= k_se
    }

    pub fn csv_rows(&self) -> Vec<[f64; 5]> {
        let mut rows = vec![];
        for (i, &t) in self.times.iter().enumerate() {
            for (k, &r) in self.lags.iter().enumerate() {
                rows.push([t, r, self.estimate[i][k], self.se[i][k], self.oracle[i][k]]);
            }
        }
        rows
    }
}

/// Spatially averaged `ψ(x)ψ(x+r)` of one realization at each requested step.
fn realization(
    propagator: &mut ForcingPropagator,
    noise: &mut WhiteNoise,
    steps: &[u64],
) -> Result<Vec<Vec<f64>>> {
    let spectral = propagator.spectral().clone();
    let n = spectral.grid().n();
    let mut psi_hat = spectral.zero_spectrum();
    let mut dw = vec![0.0; n];
    let mut power = spectral.zero_spectrum();
    let mut auto = vec![0.0; n];
    let mut out = Vec::with_capacity(steps.len());
    let mut done = 0u64;
    for &s in steps {
        while done < s {
            noise.next_increment(&mut dw)?;
            propagator.inject(&dw, &mut psi_hat);
            done += 1;
        }
        for (p, z) in power.iter_mut().zip(&psi_hat) {
            *p = Complex::new(z.norm_sqr() / n as f64, 0.0);
        }
        spectral.inverse_in_place(&mut power, &mut auto);
        out.push(auto[..=n / 2].to_vec());
    }
    Ok(out)
}

pub fn covariance_check(
    grid: &PeriodicGrid,
    mollifier: &SampledMollifier,
    dt: f64,
    times: &[f64],
    realizations: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    if realizations < MIN_COVARIANCE_REALIZATIONS {
        return Err(Error::InsufficientRealizations { got: realizations, min: MIN_COVARIANCE_REALIZATIONS });
    }
    let steps: Vec<u64> = times.iter().map(|&t| (t / dt + 1e-9).floor() as u64).collect();
    if steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("covariance times must increase"));
    }
    let spectral = Spectral::new(*grid);
    let base = ForcingPropagator::new(spectral, mollifier, dt)?;
    let samples: Vec<Vec<Vec<f64>>> = (0..realizations)
        .into_par_iter()
        .map_init(
            || base.clone(),
            |prop, r| {
                let mut noise = WhiteNoise::new(seed, stream_id(tag::NOISE, r as u64), dt, grid)?;
                realization(prop, &mut noise, &steps)
            },
        )
        .collect::<Result<_>>()?;
    let lags: Vec<f64> = (0..=grid.n() / 2).map(|k| k as f64 * grid.dx()).collect();
    let mut report = CovarianceReport {
        times: steps.iter().map(|&s| s as f64 * dt).collect(),
        lags,
        estimate: vec![],
        se: vec![],
        oracle: vec![],
        max_abs_z: 0.0,
        realizations,
    };
    for i in 0..steps.len() {
        let curve = psi_stationary_covariance(mollifier, report.times[i], grid)?;
        let mut est = vec![];
        let mut se = vec![];
        for k in 0..report.lags.len() {
            let s = SampleStats::from_iter(samples.iter().map(|row| row[i][k]));
            let z = (s.mean - curve[k]).abs() / s.se.max(f64::MIN_POSITIVE);
            report.max_abs_z = report.max_abs_z.max(z);
            est.push(s.mean);
            se.push(s.se);
        }
        report.estimate.push(est);
        report.se.push(se);
        report.oracle.push(curve[..report.lags.len()].to_vec());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_noise::{build_mollifier, MollifierKind};

    #[test]
    fn too_few_realizations_is_rejected() {
        let g = PeriodicGrid::new(16.0, 64).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let err = covariance_check(&g, &m, 1e-3, &[0.1], 10, 1).unwrap_err();
        assert!(err.to_string().contains("insufficient realizations"));
    }

    #[test]
    fn small_ensemble_matches_curve() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let rep = covariance_check(&g, &m, 2e-3, &[0.1, 0.4], 200, 3).unwrap();
        assert!(rep.pass(5.0), "{}", rep.max_abs_z);
        assert_eq!(rep.lags.len(), 65);
    }
}
