use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{per_realization, Dynamics};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_id, tag};

/// One field per realization, sampled at an independent uniform time in
/// `[burn_in, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub snapshots: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    /// Uniformly drawn grid cell per snapshot.
    pub eval_points: Vec<usize>,
    pub seed: u64,
    pub burn_in: f64,
    pub t_end: f64,
}

impl MeasureEstimate {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// `u(X)` for each snapshot.
    pub fn point_values(&self) -> Vec<f64> {
        self.snapshots.iter().zip(&self.eval_points).map(|(s, &k)| s[k]).collect()
    }

    /// Pointwise average over snapshots.
    pub fn mean_field(&self) -> Vec<f64> {
        let n = self.snapshots[0].len();
        let mut out = vec![0.0; n];
        for s in &self.snapshots {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= self.len() as f64);
        out
    }
}

pub const MIN_SNAPSHOTS: usize = 30;

/// Krylov–Bogoliubov snapshots started from `initial`.
pub fn kb_average(
    dynamics: &Dynamics,
    initial: &[f64],
    burn_in: f64,
    t_end: f64,
    realizations: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    if realizations < MIN_SNAPSHOTS {
        return Err(Error::InsufficientRealizations { got: realizations, min: MIN_SNAPSHOTS });
    }
    if !(burn_in >= 0.0 && t_end > burn_in) {
        return Err(Error::config(format!("need 0 <= burn_in < t_end, got {burn_in}, {t_end}")));
    }
    dynamics.grid.check_len(initial.len())?;
    let n = dynamics.grid.n();
    let samples = per_realization(realizations, |r| {
        let mut clock = stream(seed, stream_id(tag::SNAPSHOT_TIME, r));
        let t = clock.gen_range(burn_in..t_end);
        let point = stream(seed, stream_id(tag::EVAL_POINT, r)).gen_range(0..n);
        let mut sim = dynamics.simulation(vec![initial.to_vec()], seed, r)?;
        sim.advance_to(t)?;
        Ok((sim.ensemble.u(0), sim.ensemble.t, point))
    })?;
    let mut out = MeasureEstimate {
        snapshots: Vec::with_capacity(realizations),
        times: Vec::with_capacity(realizations),
        eval_points: Vec::with_capacity(realizations),
        seed,
        burn_in,
        t_end,
    };
    for (u, t, k) in samples {
        out.snapshots.push(u);
        out.times.push(t);
        out.eval_points.push(k);
    }
    Ok(out)
}
