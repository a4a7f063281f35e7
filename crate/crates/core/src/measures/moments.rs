use serde::{Deserialize, Serialize};

use super::{per_realization, spatial_mean_sq, Assertion, Dynamics, MeasureEstimate};
use crate::burgers::steps_for;
use crate::colehopf::HeightTracker;
use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::grid_noise::psi_gradient_energy;
use crate::spectral_ops::ddx_with;
use crate::stats::{combined_se, SampleStats};

fn gradient_sq(spectral: &Spectral, u: &[f64]) -> f64 {
    spatial_mean_sq(&ddx_with(spectral, u), 0.0)
}

fn check_times(times: &[f64], dt: f64) -> Result<Vec<u64>> {
    let steps: Vec<u64> = times.iter().map(|&t| steps_for(t, dt)).collect();
    if steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("times must be strictly increasing after rounding to steps"));
    }
    Ok(steps)
}

/// Second moments of `u − a` and `∂ₓu` over time, from `u(0) ≡ a`.
///
/// `gradient` uses the gradient energy of the forced heat part `ψ`, whose
/// mean is known exactly, as a control variate; `gradient_plain` is the raw
/// sample mean of the same realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCurve {
    pub times: Vec<f64>,
    pub variance: Vec<SampleStats>,
    pub gradient: Vec<SampleStats>,
    pub gradient_plain: Vec<SampleStats>,
    pub variance_bound: f64,
    pub gradient_bound: f64,
}

impl MomentCurve {
    /// Bounds at every time within `k` SE, and the final gradient moment within
    /// `rel_tol` of its bound.
    pub fn assertions(&self, k: f64, rel_tol: f64) -> Vec<Assertion> {
        let mut out = vec![];
        for (j, t) in self.times.iter().enumerate() {
            let v = &self.variance[j];
            let g = &self.gradient[j];
            out.push(Assertion::at_most(format!("variance_bound@t={t}"), v.mean, v.se, self.variance_bound, k));
            out.push(Assertion::at_most(format!("gradient_bound@t={t}"), g.mean, g.se, self.gradient_bound, k));
        }
        if let Some(g) = self.gradient.last() {
            let rel = (g.mean / self.gradient_bound - 1.0).abs();
            out.push(Assertion {
                name: "gradient_equality_final".into(),
                value: rel,
                se: g.se / self.gradient_bound,
                threshold: rel_tol,
                pass: rel <= rel_tol,
            });
        }
        out
    }
}

pub fn moment_curve(
    dynamics: &Dynamics,
    a: f64,
    times: &[f64],
    realizations: usize,
    seed: u64,
) -> Result<MomentCurve> {
    let steps = check_times(times, dynamics.scheme.dt)?;
    let n = dynamics.grid.n();
    let rows = per_realization(realizations, |r| {
        let spectral = Spectral::new(dynamics.grid);
        let mut sim = dynamics.simulation(vec![vec![a; n]], seed, r)?;
        let mut row = Vec::with_capacity(steps.len());
        for &s in &steps {
            while sim.ensemble.steps < s {
                sim.advance()?;
            }
            let u = sim.ensemble.u(0);
            let psi = spectral.inverse(sim.ensemble.psi_hat());
            row.push([spatial_mean_sq(&u, a), gradient_sq(&spectral, &u), gradient_sq(&spectral, &psi)]);
        }
        Ok(row)
    })?;
    let col = |j: usize, c: usize| -> Vec<f64> { rows.iter().map(|row| row[j][c]).collect() };
    let mut gradient = Vec::with_capacity(steps.len());
    for (j, &s) in steps.iter().enumerate() {
        let control_mean = match &dynamics.mollifier {
            Some(m) => psi_gradient_energy(m, dynamics.scheme.dt, s)?,
            None => 0.0,
        };
        gradient.push(SampleStats::with_control(&col(j, 1), &col(j, 2), control_mean));
    }
    Ok(MomentCurve {
        times: steps.iter().map(|&s| s as f64 * dynamics.scheme.dt).collect(),
        variance: (0..steps.len()).map(|j| SampleStats::from_slice(&col(j, 0))).collect(),
        gradient,
        gradient_plain: (0..steps.len()).map(|j| SampleStats::from_slice(&col(j, 1))).collect(),
        variance_bound: dynamics.noise_l2sq(),
        gradient_bound: dynamics.noise_deriv_l2sq(),
    })
}

/// Mean KPZ height and `u` second moment over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightCurve {
    pub times: Vec<f64>,
    pub mean_h: Vec<f64>,
    pub se_h: Vec<f64>,
    /// Spatial second moment of `u − a`.
    pub var_u: Vec<f64>,
    pub se_var: Vec<f64>,
    /// Per interval: `E[Δh] − ½‖ρ‖²Δt + ½E∫(u − a)²` with its SE; zero in
    /// expectation.
    pub balance_residual: Vec<f64>,
    pub balance_se: Vec<f64>,
    /// Paired first and second differences of the mean height.
    pub increments: Vec<SampleStats>,
    pub second_differences: Vec<SampleStats>,
}

impl HeightCurve {
    pub fn assertions(&self, k: f64) -> Vec<Assertion> {
        let mut out = vec![];
        for (j, d) in self.increments.iter().enumerate() {
            out.push(Assertion::at_most(format!("height_nondecreasing#{j}"), -d.mean, d.se, 0.0, k));
        }
        for (j, d) in self.second_differences.iter().enumerate() {
            out.push(Assertion::at_most(format!("height_concave#{j}"), d.mean, d.se, 0.0, k));
        }
        for (j, (r, s)) in self.balance_residual.iter().zip(&self.balance_se).enumerate() {
            out.push(Assertion::matches(format!("kpz_balance#{j}"), *r, *s, 0.0, k));
        }
        out
    }

    /// Rows `t, mean_h, se_h, var_u, se`.
    pub fn csv_rows(&self) -> Vec<[f64; 5]> {
        (0..self.times.len())
            .map(|j| [self.times[j], self.mean_h[j], self.se_h[j], self.var_u[j], self.se_var[j]])
            .collect()
    }
}

/// Heights from `initial` (normally `u ≡ 0`), tracked exactly along each run.
pub fn height_curve(
    dynamics: &Dynamics,
    initial: &[f64],
    zeta: &[f64],
    times: &[f64],
    realizations: usize,
    seed: u64,
) -> Result<HeightCurve> {
    let dt = dynamics.scheme.dt;
    let steps = check_times(times, dt)?;
    let a = dynamics.grid.mean(initial);
    let rows = per_realization(realizations, |r| {
        let mut sim = dynamics.simulation(vec![initial.to_vec()], seed, r)?;
        let mut tracker =
            HeightTracker::new(dynamics.grid, zeta.to_vec(), dynamics.mollifier.as_ref(), dt, 0)?;
        tracker.observe(&sim.ensemble, None);
        let mut energy = 0.0;
        let mut current = spatial_mean_sq(&sim.ensemble.u(0), a);
        let mut row = Vec::with_capacity(steps.len());
        for &s in &steps {
            while sim.ensemble.steps < s {
                energy += dt * current;
                sim.advance()?;
                tracker.observe_step(&sim.ensemble, &sim.stepper);
                current = spatial_mean_sq(&sim.ensemble.u(0), a);
            }
            row.push((tracker.mean_height(&sim.ensemble), current, energy));
        }
        Ok(row)
    })?;
    let k = steps.len();
    let stats = |f: &dyn Fn(&[(f64, f64, f64)]) -> f64| SampleStats::from_iter(rows.iter().map(|r| f(r)));
    let mut curve = HeightCurve {
        times: steps.iter().map(|&s| s as f64 * dt).collect(),
        mean_h: vec![],
        se_h: vec![],
        var_u: vec![],
        se_var: vec![],
        balance_residual: vec![],
        balance_se: vec![],
        increments: vec![],
        second_differences: vec![],
    };
    for j in 0..k {
        let h = stats(&|r| r[j].0);
        let v = stats(&|r| r[j].1);
        curve.mean_h.push(h.mean);
        curve.se_h.push(h.se);
        curve.var_u.push(v.mean);
        curve.se_var.push(v.se);
    }
    let l2 = dynamics.noise_l2sq();
    for j in 1..k {
        let span = curve.times[j] - curve.times[j - 1];
        let b = stats(&|r| {
            (r[j].0 - r[j - 1].0) - 0.5 * l2 * span + 0.5 * (r[j].2 - r[j - 1].2) + 0.5 * a * a * span
        });
        curve.balance_residual.push(b.mean);
        curve.balance_se.push(b.se);
        curve.increments.push(stats(&|r| r[j].0 - r[j - 1].0));
        if j + 1 < k {
            let (t0, t1, t2) = (curve.times[j - 1], curve.times[j], curve.times[j + 1]);
            curve.second_differences.push(stats(&|r| {
                (r[j + 1].0 - r[j].0) / (t2 - t1) - (r[j].0 - r[j - 1].0) / (t1 - t0)
            }));
        }
    }
    Ok(curve)
}

/// `mean_x[h(T) − h(0)]` for the height started from each snapshot of
/// `measure`, driven by fresh noise.
pub fn height_balance(
    dynamics: &Dynamics,
    measure: &MeasureEstimate,
    zeta: &[f64],
    window: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let dt = dynamics.scheme.dt;
    let offset = 1u64 << 39;
    per_realization(measure.len(), |r| {
        let v = measure.snapshots[r as usize].clone();
        let mut sim = dynamics.simulation(vec![v], seed, offset + r)?;
        let mut tracker =
            HeightTracker::new(dynamics.grid, zeta.to_vec(), dynamics.mollifier.as_ref(), dt, 0)?;
        tracker.observe(&sim.ensemble, None);
        let h0 = tracker.mean_height(&sim.ensemble);
        let target = steps_for(window, dt);
        while sim.ensemble.steps < target {
            sim.advance()?;
            tracker.observe_step(&sim.ensemble, &sim.stepper);
        }
        Ok(tracker.mean_height(&sim.ensemble) - h0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentAudit {
    pub assertions: Vec<Assertion>,
    /// Set when the noise is off and the bounds say nothing.
    pub vacuous: bool,
}

impl MomentAudit {
    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// Checks the stationary moment identities on a snapshot set; `balance` is
/// the output of [`height_balance`] over `window`.
pub fn stationary_moment_audit(
    dynamics: &Dynamics,
    measure: &MeasureEstimate,
    balance: Option<(&[f64], f64)>,
    k: f64,
) -> Result<MomentAudit> {
    if measure.len() < super::kb::MIN_SNAPSHOTS {
        return Err(Error::InsufficientRealizations {
            got: measure.len(),
            min: super::kb::MIN_SNAPSHOTS,
        });
    }
    let spectral = Spectral::new(dynamics.grid);
    let l2 = dynamics.noise_l2sq();
    let dl2 = dynamics.noise_deriv_l2sq();
    let var = SampleStats::from_iter(measure.snapshots.iter().map(|u| {
        let a = dynamics.grid.mean(u);
        spatial_mean_sq(u, a)
    }));
    let grad = SampleStats::from_iter(measure.snapshots.iter().map(|u| gradient_sq(&spectral, u)));
    let mut assertions = vec![
        Assertion::at_most("stationary_variance_bound", var.mean, var.se, l2, k),
        Assertion::matches("stationary_gradient_identity", grad.mean, grad.se, dl2, k),
    ];
    if let Some((dh, window)) = balance {
        if dh.len() != measure.len() {
            return Err(Error::config("height balance does not match the snapshot set"));
        }
        let second = SampleStats::from_iter(measure.snapshots.iter().map(|u| spatial_mean_sq(u, 0.0)));
        let drift = SampleStats::from_slice(dh);
        let target = l2 - 2.0 / window * drift.mean;
        let se = combined_se(second.se, 2.0 / window * drift.se);
        assertions.push(Assertion::matches("stationary_height_balance", second.mean, se, target, k));
    }
    Ok(MomentAudit { assertions, vacuous: dynamics.mollifier.is_none() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::SchemeConfig;
    use crate::colehopf::normalization_bump;
    use crate::grid_noise::{build_mollifier, MollifierKind, PeriodicGrid};
    use crate::measures::kb_average;

    #[test]
    fn noise_off_moments_vanish_and_audit_is_vacuous() {
        let g = PeriodicGrid::new(16.0, 64).unwrap();
        let d = Dynamics::new(g, None, SchemeConfig::default());
        let c = moment_curve(&d, 0.5, &[0.1, 0.2], 3, 1).unwrap();
        assert!(c.variance.iter().all(|s| s.mean.abs() < 1e-24));
        let est = kb_average(&d, &vec![0.5; 64], 0.0, 0.2, 30, 1).unwrap();
        assert!(stationary_moment_audit(&d, &est, None, 5.0).unwrap().vacuous);
    }

    #[test]
    fn control_variate_tightens_gradient_estimate() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let d = Dynamics::new(g, Some(m), SchemeConfig::default());
        let c = moment_curve(&d, 0.0, &[0.5, 1.0], 40, 3).unwrap();
        for (cv, plain) in c.gradient.iter().zip(&c.gradient_plain) {
            assert!(cv.se < 0.7 * plain.se, "{cv:?} vs {plain:?}");
            assert!((cv.mean - plain.mean).abs() < 5.0 * plain.se);
        }
    }

    #[test]
    fn short_height_curve_grows() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let d = Dynamics::new(g, Some(m), SchemeConfig::default());
        let zeta = normalization_bump(&g, 1.0).unwrap();
        let c = height_curve(&d, &vec![0.0; 128], &zeta, &[0.0, 0.1, 0.2, 0.4], 40, 5).unwrap();
        assert_eq!(c.mean_h[0], 0.0);
        assert!(c.mean_h[3] > 0.0);
        assert!(c.assertions(5.0).iter().all(|a| a.pass), "{:?}", c.assertions(5.0));
    }
}
