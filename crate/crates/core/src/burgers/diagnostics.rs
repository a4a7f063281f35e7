use serde::{Deserialize, Serialize};

use super::{BurgersEnsemble, Trajectory};
use crate::error::{Error, Result};
use crate::grid_noise::PeriodicGrid;
use crate::stats::{compensated_sum, trapezoid};

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceDiagnostics {
    /// `uᵢ − uⱼ`
    pub eta: Vec<f64>,
    /// `uᵢ + uⱼ`
    pub xi: Vec<f64>,
    pub l1: f64,
    pub pos_part_l1: f64,
    /// Sum of `|η′|` over the zeros of `η`.
    pub crossing_sum: f64,
}

impl DifferenceDiagnostics {
    pub fn from_pair(grid: &PeriodicGrid, a: &[f64], b: &[f64]) -> Self {
        let eta: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let xi = a.iter().zip(b).map(|(x, y)| x + y).collect();
        let dx = grid.dx();
        Self {
            l1: dx * compensated_sum(eta.iter().map(|e| e.abs())),
            pos_part_l1: dx * compensated_sum(eta.iter().map(|e| e.max(0.0))),
            crossing_sum: crossing_sum(&eta, dx),
            eta,
            xi,
        }
    }
}

pub fn compare(ens: &BurgersEnsemble, i: usize, j: usize) -> DifferenceDiagnostics {
    DifferenceDiagnostics::from_pair(&ens.grid, &ens.u(i), &ens.u(j))
}

/// Secant-slope estimate of `Σ |η′(y)|` over sign changes of a periodic
/// sample. Runs of exact zeros between opposite signs count as one crossing.
pub fn crossing_sum(eta: &[f64], dx: f64) -> f64 {
    let n = eta.len();
    let Some(start) = eta.iter().position(|&e| e != 0.0) else {
        return 0.0;
    };
    let mut total = 0.0;
    let mut prev = start;
    for step in 1..=n {
        let k = (start + step) % n;
        if eta[k] == 0.0 {
            continue;
        }
        let gap = if k > prev { k - prev } else { k + n - prev };
        if (eta[k] > 0.0) != (eta[prev] > 0.0) {
            total += (eta[k] - eta[prev]).abs() / (gap as f64 * dx);
        }
        prev = k;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipationFunction {
    Abs,
    PosPart,
}

impl DissipationFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Self::Abs => x.abs(),
            Self::PosPart => x.max(0.0),
        }
    }

    /// Lower bound on `F″` in the distributional sense at 0.
    pub fn curvature(self) -> f64 {
        match self {
            Self::Abs => 2.0,
            Self::PosPart => 1.0,
        }
    }

    pub fn integral(self, grid: &PeriodicGrid, eta: &[f64]) -> f64 {
        grid.dx() * compensated_sum(eta.iter().map(|&e| self.eval(e)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub function: DissipationFunction,
    pub times: Vec<f64>,
    /// `∫F∘η(t)`
    pub mass: Vec<f64>,
    /// `(c₁/4)∫₀ᵗ crossing_sum ds`
    pub dissipated: Vec<f64>,
    /// `∫F∘η(0) − mass − dissipated`, per time.
    pub slack: Vec<f64>,
    pub min_slack: f64,
    pub initial_l1: f64,
}

impl DissipationReport {
    /// Slack no worse than `−rel_tol·‖η(0)‖_{L¹}`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.min_slack >= -rel_tol * self.initial_l1
    }

    fn build(function: DissipationFunction, times: Vec<f64>, mass: Vec<f64>, crossings: &[f64], initial_l1: f64) -> Self {
        let c = function.curvature() / 4.0;
        let mut dissipated = vec![0.0; times.len()];
        for k in 1..times.len() {
            dissipated[k] = dissipated[k - 1]
                + c * 0.5 * (times[k] - times[k - 1]) * (crossings[k] + crossings[k - 1]);
        }
        let slack: Vec<f64> =
            mass.iter().zip(&dissipated).map(|(m, d)| mass[0] - m - d).collect();
        let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
        Self { function, times, mass, dissipated, slack, min_slack, initial_l1 }
    }
}

/// Audits the crossing-dissipation inequality from trajectory snapshots.
pub fn f_dissipation_audit(
    traj: &Trajectory,
    i: usize,
    j: usize,
    function: DissipationFunction,
) -> Result<DissipationReport> {
    let snaps = &traj.snapshots;
    if snaps.len() < 2 {
        return Err(Error::config("dissipation audit needs at least two snapshots"));
    }
    let limit = 10.0 * traj.scheme.dt * (1.0 + 1e-9);
    if snaps.windows(2).any(|w| w[1].t - w[0].t > limit) {
        return Err(Error::config("dissipation audit needs snapshots at most 10 steps apart"));
    }
    let n_comp = snaps[0].components();
    if i == j || i >= n_comp || j >= n_comp {
        return Err(Error::config(format!("invalid component pair ({i}, {j})")));
    }
    let mut mass = Vec::with_capacity(snaps.len());
    let mut crossings = Vec::with_capacity(snaps.len());
    let mut initial_l1 = 0.0;
    for (k, s) in snaps.iter().enumerate() {
        let d = DifferenceDiagnostics::from_pair(&traj.grid, &s.u(i), &s.u(j));
        if k == 0 {
            initial_l1 = d.l1;
        }
        mass.push(function.integral(&traj.grid, &d.eta));
        crossings.push(d.crossing_sum);
    }
    let times = snaps.iter().map(|s| s.t).collect();
    Ok(DissipationReport::build(function, times, mass, &crossings, initial_l1))
}

/// Online version of [`f_dissipation_audit`], fed once per step.
#[derive(Debug, Clone)]
pub struct DissipationMonitor {
    function: DissipationFunction,
    i: usize,
    j: usize,
    times: Vec<f64>,
    mass: Vec<f64>,
    crossings: Vec<f64>,
    initial_l1: Option<f64>,
}

impl DissipationMonitor {
    pub fn new(function: DissipationFunction, i: usize, j: usize) -> Self {
        Self { function, i, j, times: vec![], mass: vec![], crossings: vec![], initial_l1: None }
    }

    pub fn observe(&mut self, ens: &BurgersEnsemble) {
        let d = compare(ens, self.i, self.j);
        self.initial_l1.get_or_insert(d.l1);
        self.times.push(ens.t);
        self.mass.push(self.function.integral(&ens.grid, &d.eta));
        self.crossings.push(d.crossing_sum);
    }

    pub fn report(&self) -> DissipationReport {
        DissipationReport::build(
            self.function,
            self.times.clone(),
            self.mass.clone(),
            &self.crossings,
            self.initial_l1.unwrap_or(0.0),
        )
    }
}

/// `∫₀ᵗ` by the trapezoid rule, exposed for callers that sample their own
/// crossing sums.
pub fn integrate_crossings(times: &[f64], crossings: &[f64]) -> f64 {
    trapezoid(times, crossings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::{run, RunOptions, SchemeConfig};
    use crate::burgers::FluxKind;

    #[test]
    fn crossing_sum_of_a_sampled_sine() {
        let g = PeriodicGrid::new(16.0, 512).unwrap();
        let k = 2.0 * std::f64::consts::PI / 16.0;
        let eta: Vec<f64> = g.nodes().map(|x| (k * (x + 0.013)).sin()).collect();
        // two zeros, each with |η′| = k
        assert!((crossing_sum(&eta, g.dx()) - 2.0 * k).abs() < 1e-4);
    }

    #[test]
    fn crossing_sum_handles_exact_zeros() {
        assert_eq!(crossing_sum(&[0.0; 8], 1.0), 0.0);
        // 1, 0, −1 : one crossing with slope 1, and the wrap-around −1 → 1
        let eta = [1.0, 0.0, -1.0, -1.0];
        assert!((crossing_sum(&eta, 1.0) - 3.0).abs() < 1e-15);
        // tangency
        assert_eq!(crossing_sum(&[1.0, 0.0, 1.0, 2.0], 1.0), 0.0);
    }

    #[test]
    fn identical_components_have_zero_diagnostics() {
        let g = PeriodicGrid::new(16.0, 64).unwrap();
        let u: Vec<f64> = g.nodes().map(|x| x.sin()).collect();
        let d = DifferenceDiagnostics::from_pair(&g, &u, &u);
        assert_eq!((d.l1, d.pos_part_l1, d.crossing_sum), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_crossing_audit_has_nonnegative_slack() {
        let g = PeriodicGrid::new(16.0, 512).unwrap();
        let k = 2.0 * std::f64::consts::PI / 16.0;
        let u1: Vec<f64> = g.nodes().map(|x| (k * x).sin()).collect();
        let cfg = SchemeConfig::new(2e-4, FluxKind::EngquistOsher, 0.9).unwrap();
        let traj = run(vec![u1, vec![0.0; 512]], g, None, None, cfg, &RunOptions::every(1e-3, 0.5)).unwrap();
        for f in [DissipationFunction::Abs, DissipationFunction::PosPart] {
            let rep = f_dissipation_audit(&traj, 0, 1, f).unwrap();
            assert!(rep.holds(1e-3), "{f:?}: {}", rep.min_slack);
            assert!(rep.dissipated.last().unwrap() > &0.0);
        }
    }

    #[test]
    fn ordered_pair_under_heat_flow_keeps_its_mass() {
        let g = PeriodicGrid::new(16.0, 256).unwrap();
        let u1: Vec<f64> = g.nodes().map(|x| 1.5 + (x * 0.785).cos()).collect();
        let cfg = SchemeConfig::new(1e-3, FluxKind::None, 0.9).unwrap();
        let traj = run(vec![u1, vec![0.0; 256]], g, None, None, cfg, &RunOptions::every(5e-3, 0.5)).unwrap();
        let rep = f_dissipation_audit(&traj, 0, 1, DissipationFunction::Abs).unwrap();
        assert!(rep.dissipated.iter().all(|&d| d == 0.0));
        for m in &rep.mass {
            assert!((m - rep.mass[0]).abs() < 1e-12 * rep.mass[0]);
        }
    }
}
