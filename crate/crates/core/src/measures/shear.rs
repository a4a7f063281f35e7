use serde::{Deserialize, Serialize};

use super::{per_realization, Dynamics};
use crate::burgers::steps_for;
use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::spectral_ops::shift_with;
use crate::stats::{combined_se, SampleStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearStatistic {
    pub shear: f64,
    pub t: f64,
    pub point: usize,
    /// `mean`, `second_moment` or `lag_product_<cells>`.
    pub name: String,
    pub reference: f64,
    pub reference_se: f64,
    pub sheared: f64,
    pub sheared_se: f64,
    /// Difference in units of the combined SE.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearReport {
    pub statistics: Vec<ShearStatistic>,
    pub max_abs_z: f64,
    /// Largest `|mean(u_c) − mean(v)|` over all sheared runs and times.
    pub mean_defect: f64,
    pub realizations: usize,
}

impl ShearReport {
    pub fn pass(&self, k: f64) -> bool {
        self.max_abs_z <= k
    }
}

/// Compares `u(t, x + ct) − c` started from `v + c` against `u` started from
/// `v`, with independent noise, at fixed grid points.
#[allow(clippy::too_many_arguments)]
pub fn shear_audit(
    dynamics: &Dynamics,
    v: &[f64],
    shears: &[f64],
    times: &[f64],
    realizations: usize,
    seed: u64,
    points: &[usize],
    lags: &[usize],
) -> Result<ShearReport> {
    let grid = dynamics.grid;
    grid.check_len(v.len())?;
    let n = grid.n();
    if points.iter().any(|&p| p >= n) {
        return Err(Error::config("shear evaluation point outside the grid"));
    }
    if realizations < 2 {
        return Err(Error::InsufficientRealizations { got: realizations, min: 2 });
    }
    let dt = dynamics.scheme.dt;
    let steps: Vec<u64> = times.iter().map(|&t| steps_for(t, dt)).collect();
    let runs = 1 + shears.len() as u64;
    let stats_per_point = 2 + lags.len();
    let mean_v = grid.mean(v);
    let rows = per_realization(realizations, |r| {
        let spectral = Spectral::new(grid);
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(runs as usize);
        let mut defect = 0.0f64;
        for (i, c) in std::iter::once(0.0).chain(shears.iter().copied()).enumerate() {
            let start: Vec<f64> = v.iter().map(|x| x + c).collect();
            let mut sim = dynamics.simulation(vec![start], seed, r * runs + i as u64)?;
            let mut values = Vec::with_capacity(steps.len() * points.len() * stats_per_point);
            for &s in &steps {
                sim.advance_to(s as f64 * dt)?;
                let u = sim.ensemble.u(0);
                let uc: Vec<f64> = if i == 0 {
                    u
                } else {
                    shift_with(&spectral, &u, -c * sim.ensemble.t).into_iter().map(|x| x - c).collect()
                };
                defect = defect.max((grid.mean(&uc) - mean_v).abs());
                for &p in points {
                    values.push(uc[p]);
                    values.push(uc[p] * uc[p]);
                    for &l in lags {
                        values.push(uc[p] * uc[(p + l) % n]);
                    }
                }
            }
            out.push(values);
        }
        Ok((out, defect))
    })?;
    let mut statistics = vec![];
    let column = |run: usize, idx: usize| SampleStats::from_iter(rows.iter().map(|(o, _)| o[run][idx]));
    for (si, &c) in shears.iter().enumerate() {
        let mut idx = 0;
        for &s in &steps {
            for &p in points {
                for q in 0..stats_per_point {
                    let name = match q {
                        0 => "mean".to_string(),
                        1 => "second_moment".to_string(),
                        _ => format!("lag_product_{}", lags[q - 2]),
                    };
                    let a = column(0, idx);
                    let b = column(si + 1, idx);
                    let se = combined_se(a.se, b.se);
                    statistics.push(ShearStatistic {
                        shear: c,
                        t: s as f64 * dt,
                        point: p,
                        name,
                        reference: a.mean,
                        reference_se: a.se,
                        sheared: b.mean,
                        sheared_se: b.se,
                        z: if se > 0.0 { (b.mean - a.mean) / se } else if a.mean == b.mean { 0.0 } else { f64::INFINITY },
                    });
                    idx += 1;
                }
            }
        }
    }
    Ok(ShearReport {
        max_abs_z: statistics.iter().map(|s| s.z.abs()).fold(0.0, f64::max),
        mean_defect: rows.iter().map(|(_, d)| *d).fold(0.0, f64::max),
        statistics,
        realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::SchemeConfig;
    use crate::grid_noise::{build_mollifier, MollifierKind, PeriodicGrid};

    #[test]
    fn noise_free_shear_is_exact() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let d = Dynamics::new(g, None, SchemeConfig::default());
        let v: Vec<f64> = g.nodes().map(|x| 0.5 * (x * std::f64::consts::PI / 8.0).sin()).collect();
        let rep = shear_audit(&d, &v, &[1.0], &[0.5], 2, 1, &[0, 40], &[1, 4]).unwrap();
        assert!(rep.mean_defect < 1e-12);
        for s in &rep.statistics {
            assert!((s.reference - s.sheared).abs() < 1e-2, "{s:?}");
        }
    }

    #[test]
    fn shear_zero_with_noise_agrees() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let d = Dynamics::new(g, Some(m), SchemeConfig::default());
        let rep = shear_audit(&d, &vec![0.0; 128], &[0.0], &[0.5], 40, 2, &[10, 70], &[1, 4, 16]).unwrap();
        assert!(rep.pass(5.0), "{}", rep.max_abs_z);
        assert!(rep.mean_defect < 1e-12);
    }
}
