use serde::{Deserialize, Serialize};

use super::{per_realization, Assertion, Dynamics};
use crate::burgers::steps_for;
use crate::error::{Error, Result};
use crate::grid_noise::PeriodicGrid;
use crate::stats::SampleStats;

/// `v = v_per + v_int + v_z` with `v_int`, `v_z` localized near the midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinDecomposition {
    pub v_per: Vec<f64>,
    pub v_int: Vec<f64>,
    pub v_z: Vec<f64>,
    /// Period of `v_per`; must divide the torus length.
    pub period: f64,
    pub target_mean: f64,
}

fn smooth_bump(y: f64, radius: f64) -> f64 {
    let r = y / radius;
    if r.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

impl BasinDecomposition {
    /// Constant background `a` plus a mass-free dipole and an odd decaying
    /// bump, both inside `|x − mid| < L/8`.
    pub fn default_bump(grid: &PeriodicGrid, a: f64) -> Self {
        let mid = grid.midpoint();
        let reach = grid.length() / 8.0;
        let v_int = grid
            .nodes()
            .map(|x| {
                let y = x - mid;
                0.75 * (smooth_bump(y + 0.45 * reach, 0.5 * reach) - smooth_bump(y - 0.45 * reach, 0.5 * reach))
            })
            .collect();
        let v_z = grid
            .nodes()
            .map(|x| {
                let y = x - mid;
                0.2 * (y / (0.4 * reach)) * smooth_bump(y, 0.95 * reach)
            })
            .collect();
        Self {
            v_per: vec![a; grid.n()],
            v_int,
            v_z,
            period: grid.length(),
            target_mean: a,
        }
    }

    pub fn constant(grid: &PeriodicGrid, a: f64) -> Self {
        Self {
            v_per: vec![a; grid.n()],
            v_int: vec![0.0; grid.n()],
            v_z: vec![0.0; grid.n()],
            period: grid.length(),
            target_mean: a,
        }
    }

    pub fn field(&self) -> Vec<f64> {
        self.v_per.iter().zip(&self.v_int).zip(&self.v_z).map(|((a, b), c)| a + b + c).collect()
    }

    /// Number of `v_per` periods in the torus.
    fn periods(&self, grid: &PeriodicGrid) -> Result<usize> {
        let p = grid.length() / self.period;
        let cells = self.period / grid.dx();
        if !(p >= 1.0) || (p - p.round()).abs() > 1e-9 || (cells - cells.round()).abs() > 1e-9 {
            return Err(Error::config(format!(
                "basin.period {} must be a whole number of cells dividing the torus length",
                self.period
            )));
        }
        Ok(p.round() as usize)
    }

    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        for f in [&self.v_per, &self.v_int, &self.v_z] {
            grid.check_len(f.len())?;
        }
        let p = self.periods(grid)?;
        let shift = grid.n() / p;
        let n = grid.n();
        if (0..n).any(|k| (self.v_per[k] - self.v_per[(k + shift) % n]).abs() > 1e-12) {
            return Err(Error::config("basin.v_per is not periodic with basin.period"));
        }
        if (grid.mean(&self.v_per) - self.target_mean).abs() > 1e-12 {
            return Err(Error::config("basin.target_mean must equal the mean of v_per"));
        }
        let mid = grid.midpoint();
        let reach = grid.length() / 8.0;
        for (name, f) in [("v_int", &self.v_int), ("v_z", &self.v_z)] {
            if grid.nodes().zip(f.iter()).any(|(x, v)| (x - mid).abs() > reach && *v != 0.0) {
                return Err(Error::config(format!("basin.{name} must vanish outside |x - mid| <= L/8")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub v_minus: Vec<f64>,
    pub v_plus: Vec<f64>,
    pub k: usize,
    /// `K·period`
    pub window: f64,
    /// Radially nonincreasing envelope of `|v_z|`.
    pub envelope: Vec<f64>,
    /// `max_m |v_int(x + m·window)|`
    pub translate_sup: Vec<f64>,
    pub eps: f64,
}

impl Sandwich {
    pub fn mean_gap(&self, grid: &PeriodicGrid) -> f64 {
        grid.mean(&self.v_plus) - grid.mean(&self.v_minus)
    }
}

/// Builds `v₋ ≤ v ≤ v₊` whose averages lie within `eps` of the target mean.
pub fn sandwich(decomp: &BasinDecomposition, grid: &PeriodicGrid, eps: f64) -> Result<Sandwich> {
    if !(eps > 0.0) {
        return Err(Error::config(format!("sandwich eps must be positive, got {eps}")));
    }
    decomp.validate(grid)?;
    let n = grid.n();
    let mid = grid.midpoint();
    let dist: Vec<f64> = grid.nodes().map(|x| (x - mid).abs()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dist[j].total_cmp(&dist[i]));
    let mut envelope = vec![0.0; n];
    let mut running = 0.0f64;
    let mut k = 0;
    while k < n {
        // ties in distance share one envelope value
        let mut end = k;
        while end < n && dist[order[end]] == dist[order[k]] {
            running = running.max(decomp.v_z[order[end]].abs());
            end += 1;
        }
        for &i in &order[k..end] {
            envelope[i] = running;
        }
        k = end;
    }
    let int_l1: f64 = decomp.v_int.iter().map(|v| v.abs()).sum::<f64>() * grid.dx();
    let periods = decomp.periods(grid)?;
    let choice = (1..=periods).filter(|k| periods % k == 0).find(|&k| {
        let window = k as f64 * decomp.period;
        let env: f64 = envelope
            .iter()
            .zip(&dist)
            .filter(|(_, d)| **d <= 0.5 * window)
            .map(|(e, _)| e)
            .sum::<f64>()
            * grid.dx();
        int_l1.max(env) / window < 0.5 * eps
    });
    let Some(k) = choice else {
        return Err(Error::DomainTooSmall(format!(
            "eps = {eps} needs an averaging window longer than the torus (L = {}); use a larger domain",
            grid.length()
        )));
    };
    let window = k as f64 * decomp.period;
    let stride = n / (periods / k);
    let copies = periods / k;
    let translate_sup: Vec<f64> = (0..n)
        .map(|i| (0..copies).map(|m| decomp.v_int[(i + m * stride) % n].abs()).fold(0.0, f64::max))
        .collect();
    let v_minus = (0..n).map(|i| decomp.v_per[i] - envelope[i] - translate_sup[i]).collect();
    let v_plus = (0..n).map(|i| decomp.v_per[i] + envelope[i] + translate_sup[i]).collect();
    Ok(Sandwich { v_minus, v_plus, k, window, envelope, translate_sup, eps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `Ê‖u(t) − u_a(t)‖` with SE.
    pub distance: Vec<f64>,
    pub distance_se: Vec<f64>,
    pub eps: Vec<f64>,
    /// Per eps, `Ê‖u₊(t) − u₋(t)‖`.
    pub ceiling: Vec<Vec<f64>>,
    pub ceiling_se: Vec<Vec<f64>>,
    /// Per eps, the ordered stationary gap `‖ρ‖`-free limit of the ceiling.
    pub ceiling_limit: Vec<f64>,
    pub sandwich_violations: usize,
    pub final_ratio: f64,
    pub assertions: Vec<Assertion>,
    pub realizations: usize,
}

/// Evolves `v`, the constant `a` and every sandwich pair under shared noise.
pub fn stability_experiment(
    dynamics: &Dynamics,
    decomp: &BasinDecomposition,
    eps_schedule: &[f64],
    times: &[f64],
    realizations: usize,
    seed: u64,
    k_se: f64,
) -> Result<StabilityReport> {
    let grid = dynamics.grid;
    let sandwiches: Vec<Sandwich> =
        eps_schedule.iter().map(|&e| sandwich(decomp, &grid, e)).collect::<Result<_>>()?;
    let a = decomp.target_mean;
    let mut initials = vec![decomp.field(), vec![a; grid.n()]];
    for s in &sandwiches {
        initials.push(s.v_minus.clone());
        initials.push(s.v_plus.clone());
    }
    let dt = dynamics.scheme.dt;
    let steps: Vec<u64> = times.iter().map(|&t| steps_for(t, dt)).collect();
    if steps.first() != Some(&0) || steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("stability times must start at 0 and increase"));
    }
    let ne = sandwiches.len();
    let rows = per_realization(realizations, |r| {
        let mut sim = dynamics.simulation(initials.clone(), seed, r)?;
        let mut violations = 0usize;
        let mut row = Vec::with_capacity(steps.len());
        for &s in &steps {
            while sim.ensemble.steps < s {
                sim.advance()?;
                let u = sim.ensemble.u(0);
                for e in 0..ne {
                    let lo = sim.ensemble.u(2 + 2 * e);
                    let hi = sim.ensemble.u(3 + 2 * e);
                    if (0..u.len()).any(|i| lo[i] > u[i] || u[i] > hi[i]) {
                        violations += 1;
                    }
                }
            }
            let u = sim.ensemble.u(0);
            let mut vals = vec![dynamics.yg_distance(&u, &sim.ensemble.u(1))];
            for e in 0..ne {
                vals.push(dynamics.yg_distance(&sim.ensemble.u(3 + 2 * e), &sim.ensemble.u(2 + 2 * e)));
            }
            row.push(vals);
        }
        Ok((row, violations))
    })?;
    let stat = |j: usize, q: usize| SampleStats::from_iter(rows.iter().map(|(row, _)| row[j][q]));
    let kt = steps.len();
    let distance_stats: Vec<SampleStats> = (0..kt).map(|j| stat(j, 0)).collect();
    let weight = std::f64::consts::PI / (2.0 * grid.length());
    let mut report = StabilityReport {
        times: steps.iter().map(|&s| s as f64 * dt).collect(),
        distance: distance_stats.iter().map(|s| s.mean).collect(),
        distance_se: distance_stats.iter().map(|s| s.se).collect(),
        eps: eps_schedule.to_vec(),
        ceiling: (0..ne).map(|e| (0..kt).map(|j| stat(j, 1 + e).mean).collect()).collect(),
        ceiling_se: (0..ne).map(|e| (0..kt).map(|j| stat(j, 1 + e).se).collect()).collect(),
        ceiling_limit: sandwiches.iter().map(|s| weight * grid.length() * s.mean_gap(&grid)).collect(),
        sandwich_violations: rows.iter().map(|(_, v)| v).sum(),
        final_ratio: distance_stats[kt - 1].mean / distance_stats[0].mean,
        assertions: vec![],
        realizations,
    };
    let mut assertions = vec![Assertion::flag("sandwich_exact", report.sandwich_violations == 0)];
    for j in 1..kt {
        let d = SampleStats::from_iter(rows.iter().map(|(row, _)| row[j][0] - row[j - 1][0]));
        assertions.push(Assertion::at_most(format!("distance_decreasing#{j}"), d.mean, d.se, 0.0, k_se));
    }
    for e in 0..ne {
        let last = kt - 1;
        let d = SampleStats::from_iter(rows.iter().map(|(row, _)| row[last][0] - row[last][1 + e]));
        assertions.push(Assertion::at_most(format!("below_ceiling@eps={}", eps_schedule[e]), d.mean, d.se, 0.0, k_se));
        let c = stat(last, 1 + e);
        let limit = report.ceiling_limit[e];
        assertions.push(Assertion {
            name: format!("ceiling_limit@eps={}", eps_schedule[e]),
            value: c.mean,
            se: c.se,
            threshold: limit,
            pass: (c.mean - limit).abs() <= k_se * c.se + 1e-10 * limit.abs().max(1e-300),
        });
    }
    report.assertions = assertions;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::SchemeConfig;
    use crate::grid_noise::{build_mollifier, MollifierKind};

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16.0, 256).unwrap()
    }

    #[test]
    fn trivial_decomposition_gives_trivial_sandwich() {
        let g = grid();
        let d = BasinDecomposition::constant(&g, 0.3);
        let s = sandwich(&d, &g, 0.1).unwrap();
        assert_eq!(s.k, 1);
        assert_eq!(s.v_minus, d.v_per);
        assert_eq!(s.v_plus, d.v_per);
    }

    #[test]
    fn bump_sandwich_brackets_and_averages() {
        let g = grid();
        let mut d = BasinDecomposition::default_bump(&g, 0.0);
        d.v_int = vec![0.0; 256];
        let eps = 0.2;
        let s = sandwich(&d, &g, eps).unwrap();
        let v = d.field();
        for i in 0..256 {
            assert!(s.v_minus[i] <= v[i] && v[i] <= s.v_plus[i]);
            assert!(s.v_plus[i] - s.v_minus[i] >= 0.0);
        }
        assert!(s.mean_gap(&g) < 2.0 * eps);
        assert!(g.mean(&s.v_plus) - d.target_mean < eps);
    }

    #[test]
    fn envelope_is_radially_monotone() {
        let g = grid();
        let d = BasinDecomposition::default_bump(&g, 0.0);
        let s = sandwich(&d, &g, 0.5).unwrap();
        let mid = 128;
        for k in 0..127 {
            assert!(s.envelope[mid + k] >= s.envelope[mid + k + 1]);
            assert!(s.envelope[mid + k] >= d.v_z[mid + k].abs());
        }
    }

    #[test]
    fn tiny_eps_needs_a_larger_domain() {
        let g = grid();
        let d = BasinDecomposition::default_bump(&g, 0.0);
        assert!(matches!(sandwich(&d, &g, 1e-4), Err(Error::DomainTooSmall(_))));
    }

    #[test]
    fn validation_rejects_wide_perturbations() {
        let g = grid();
        let mut d = BasinDecomposition::default_bump(&g, 0.0);
        d.v_z[0] = 1.0;
        assert!(d.validate(&g).unwrap_err().to_string().contains("v_z"));
    }

    #[test]
    fn constant_decomposition_has_zero_distances() {
        let g = PeriodicGrid::new(16.0, 128).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let dynamics = Dynamics::new(g, Some(m), SchemeConfig::default());
        let d = BasinDecomposition::constant(&g, 0.2);
        let rep = stability_experiment(&dynamics, &d, &[0.5], &[0.0, 0.2], 3, 1, 5.0).unwrap();
        assert!(rep.distance.iter().all(|&x| x == 0.0));
        assert_eq!(rep.sandwich_violations, 0);
    }
}
