//! Experiment configuration.
//!
//! One JSON file carries the physical setup shared by every suite plus an
//! optional parameter block per suite. Every statistical threshold lives in
//! the file.

use std::path::{Path, PathBuf};

use burgerlab_core::burgers::{DissipationFunction, FluxKind, SchemeConfig};
use burgerlab_core::grid_noise::{build_mollifier, MollifierKind, PeriodicGrid, SampledMollifier};
use burgerlab_core::measures::{random_field, BasinDecomposition, Dynamics};
use burgerlab_core::polymer::PolymerConfig;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub mollifier: MollifierSection,
    pub scheme: SchemeSection,
    pub noise: NoiseSection,
    pub statistics: StatisticsSection,
    pub suites: Suites,
    /// Relative paths resolve against the current directory.
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSection {
    pub kind: MollifierKind,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub dt: f64,
    pub flux: FluxKind,
    pub cfl_safety: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub seed: u64,
    /// Horizon of `simulate`.
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatisticsSection {
    /// Standard errors allowed in every statistical comparison.
    pub k_se: f64,
}

/// Initial condition recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant { value: f64 },
    /// `mean + amplitude·sin(2π·mode·x/L)`
    Sine { mean: f64, amplitude: f64, mode: u32 },
    /// Random smooth field from the initial-data stream `index`.
    Random { mean: f64, amplitude: f64, modes: usize, index: u64 },
    BasinDefault { mean: f64 },
}

impl InitialSpec {
    pub fn sample(&self, grid: &PeriodicGrid, seed: u64) -> Vec<f64> {
        match *self {
            InitialSpec::Constant { value } => vec![value; grid.n()],
            InitialSpec::Sine { mean, amplitude, mode } => {
                let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.length();
                grid.nodes().map(|x| mean + amplitude * (k * x).sin()).collect()
            }
            InitialSpec::Random { mean, amplitude, modes, index } => {
                random_field(grid, mean, amplitude, modes, seed, index)
            }
            InitialSpec::BasinDefault { mean } => BasinDecomposition::default_bump(grid, mean).field(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suites {
    pub simulate: Option<SimulateSuite>,
    pub covariance: Option<CovarianceSuite>,
    pub structure: Option<StructureSuite>,
    pub moments: Option<MomentsSuite>,
    pub gamma: Option<GammaSuite>,
    pub shear: Option<ShearSuite>,
    pub stability: Option<StabilitySuite>,
    pub ordering: Option<OrderingSuite>,
    pub ladder: Option<LadderSuite>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSuite {
    pub initials: Vec<InitialSpec>,
    pub snapshot_times: Vec<f64>,
    pub save_noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSuite {
    pub times: Vec<f64>,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSuite {
    pub paths: usize,
    pub t_end: f64,
    pub amplitude: f64,
    pub rel_tol: f64,
    pub dissipation: DissipationBlock,
    pub sandwich: SandwichBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationBlock {
    pub runs: usize,
    pub t_end: f64,
    pub amplitude: f64,
    pub functions: Vec<DissipationFunction>,
    /// Allowed negative slack relative to the initial `L¹` mass.
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichBlock {
    pub mean: f64,
    pub eps: Vec<f64>,
    pub realizations: usize,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSuite {
    pub mean: f64,
    pub times: Vec<f64>,
    pub realizations: usize,
    /// Allowed relative gap between the final gradient moment and its bound.
    pub gradient_rel_tol: f64,
    pub stationary: Option<StationaryBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryBlock {
    pub burn_in: f64,
    pub t_end: f64,
    pub snapshots: usize,
    /// Height-balance window; `None` skips the balance identity.
    pub window: Option<f64>,
    pub zeta_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSuite {
    pub times: Vec<f64>,
    /// Subset of `times` where the two estimates are compared.
    pub compare_times: Vec<f64>,
    pub realizations: usize,
    pub polymer: PolymerConfig,
    pub zeta_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearSuite {
    pub initial: InitialSpec,
    pub shears: Vec<f64>,
    pub times: Vec<f64>,
    pub realizations: usize,
    pub points: Vec<usize>,
    pub lags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySuite {
    pub mean: f64,
    pub eps: Vec<f64>,
    pub times: Vec<f64>,
    pub realizations: usize,
    /// Upper bound on `E d(T) / E d(0)`.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingSuite {
    pub upper: InitialSpec,
    pub lower: InitialSpec,
    pub burn_in: f64,
    pub realizations: usize,
    pub min_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSuite {
    pub initial: InitialSpec,
    pub coarse_cells: usize,
    pub coarse_dt: f64,
    pub levels: usize,
    pub times: Vec<f64>,
    /// Accepted range of each refinement ratio of the final mismatch.
    pub ratio_band: [f64; 2],
    pub zeta_half_width: f64,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), HarnessError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn increasing(field: &str, v: &[f64]) -> Result<(), HarnessError> {
    if v.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    if v.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(field, "must be nonnegative and strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> PeriodicGrid {
        PeriodicGrid::new(self.grid.length, self.grid.cells).expect("validated grid")
    }

    pub fn grid_with(&self, cells: usize) -> Result<PeriodicGrid, HarnessError> {
        Ok(PeriodicGrid::new(self.grid.length, cells)?)
    }

    pub fn mollifier_on(&self, grid: PeriodicGrid) -> Result<SampledMollifier, HarnessError> {
        Ok(build_mollifier(self.mollifier.kind, self.mollifier.width, grid)?)
    }

    pub fn scheme_with(&self, dt: f64) -> Result<SchemeConfig, HarnessError> {
        Ok(SchemeConfig::new(dt, self.scheme.flux, self.scheme.cfl_safety)?)
    }

    pub fn dynamics(&self) -> Result<Dynamics, HarnessError> {
        let grid = self.grid();
        Ok(Dynamics::new(grid, Some(self.mollifier_on(grid)?), self.scheme_with(self.scheme.dt)?))
    }

    /// Initial data used anywhere in the file, for the CFL guess.
    fn initial_amplitude(&self) -> f64 {
        let grid = self.grid();
        let sup = |spec: &InitialSpec, shift: f64| {
            spec.sample(&grid, self.noise.seed).iter().fold(0.0f64, |m, v| m.max((v + shift).abs()))
        };
        let s = &self.suites;
        let mut amp = 0.0f64;
        if let Some(b) = &s.simulate {
            amp = b.initials.iter().map(|i| sup(i, 0.0)).fold(amp, f64::max);
        }
        if let Some(b) = &s.structure {
            amp = amp.max(3.0 * b.amplitude).max(3.0 * b.dissipation.amplitude);
            amp = amp.max(sup(&InitialSpec::BasinDefault { mean: b.sandwich.mean }, 0.0));
        }
        if let Some(b) = &s.moments {
            amp = amp.max(b.mean.abs());
        }
        if let Some(b) = &s.shear {
            for c in &b.shears {
                amp = amp.max(sup(&b.initial, *c));
            }
        }
        if let Some(b) = &s.stability {
            amp = amp.max(sup(&InitialSpec::BasinDefault { mean: b.mean }, 0.0));
        }
        if let Some(b) = &s.ordering {
            amp = amp.max(sup(&b.upper, 0.0)).max(sup(&b.lower, 0.0));
        }
        if let Some(b) = &s.ladder {
            amp = amp.max(sup(&b.initial, 0.0));
        }
        amp
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        positive("grid.length", self.grid.length)?;
        if self.grid.cells < 8 || self.grid.cells % 2 != 0 {
            return Err(invalid("grid.cells", format!("must be even and at least 8, got {}", self.grid.cells)));
        }
        let grid = self.grid();
        let dx = grid.dx();
        let w = self.mollifier.width;
        if !(w >= 4.0 * dx && w <= grid.length() / 8.0) {
            return Err(invalid(
                "mollifier.width",
                format!("{w} outside [4·dx, L/8] = [{}, {}]", 4.0 * dx, grid.length() / 8.0),
            ));
        }
        positive("scheme.dt", self.scheme.dt)?;
        if !(self.scheme.cfl_safety > 0.0 && self.scheme.cfl_safety <= 1.0) {
            return Err(invalid("scheme.cfl_safety", "must lie in (0, 1]"));
        }
        positive("noise.t_max", self.noise.t_max)?;
        positive("statistics.k_se", self.statistics.k_se)?;
        let m = self.mollifier_on(grid)?;
        let guess = self.initial_amplitude() + 3.0 * m.l2sq.sqrt();
        let limit = self.scheme.cfl_safety * dx / guess;
        if self.scheme.dt > limit {
            return Err(invalid(
                "scheme.dt",
                format!("{} exceeds cfl_safety·dx/|u|_guess = {limit:.3e} (|u|_guess = {guess:.3})", self.scheme.dt),
            ));
        }
        self.validate_suites(&grid)
    }

    fn validate_suites(&self, grid: &PeriodicGrid) -> Result<(), HarnessError> {
        let s = &self.suites;
        if let Some(b) = &s.simulate {
            if b.initials.is_empty() {
                return Err(invalid("suites.simulate.initials", "must not be empty"));
            }
            increasing("suites.simulate.snapshot_times", &b.snapshot_times)?;
            if b.snapshot_times.last().copied().unwrap_or(0.0) > self.noise.t_max {
                return Err(invalid("suites.simulate.snapshot_times", "must not exceed noise.t_max"));
            }
        }
        if let Some(b) = &s.covariance {
            increasing("suites.covariance.times", &b.times)?;
        }
        if let Some(b) = &s.structure {
            positive("suites.structure.t_end", b.t_end)?;
            positive("suites.structure.rel_tol", b.rel_tol)?;
            positive("suites.structure.dissipation.t_end", b.dissipation.t_end)?;
            positive("suites.structure.dissipation.rel_tol", b.dissipation.rel_tol)?;
            if b.dissipation.functions.is_empty() {
                return Err(invalid("suites.structure.dissipation.functions", "must not be empty"));
            }
            positive("suites.structure.sandwich.t_end", b.sandwich.t_end)?;
        }
        if let Some(b) = &s.moments {
            increasing("suites.moments.times", &b.times)?;
            positive("suites.moments.gradient_rel_tol", b.gradient_rel_tol)?;
            if let Some(st) = &b.stationary {
                if !(st.t_end > st.burn_in) {
                    return Err(invalid("suites.moments.stationary.t_end", "must exceed burn_in"));
                }
            }
        }
        if let Some(b) = &s.gamma {
            increasing("suites.gamma.times", &b.times)?;
            if b.compare_times.iter().any(|t| !b.times.contains(t)) {
                return Err(invalid("suites.gamma.compare_times", "every entry must appear in suites.gamma.times"));
            }
            b.polymer.validate()?;
            if b.times.last().copied().unwrap_or(0.0) > b.polymer.t_max {
                return Err(invalid("suites.gamma.times", "must not exceed polymer.t_max"));
            }
        }
        if let Some(b) = &s.shear {
            increasing("suites.shear.times", &b.times)?;
            if b.points.iter().any(|&p| p >= grid.n()) {
                return Err(invalid("suites.shear.points", "must be grid indices"));
            }
        }
        if let Some(b) = &s.stability {
            increasing("suites.stability.times", &b.times)?;
            if b.times[0] != 0.0 {
                return Err(invalid("suites.stability.times", "must start at 0"));
            }
            positive("suites.stability.max_ratio", b.max_ratio)?;
        }
        if let Some(b) = &s.ordering {
            positive("suites.ordering.burn_in", b.burn_in)?;
            if !(b.min_fraction > 0.0 && b.min_fraction <= 1.0) {
                return Err(invalid("suites.ordering.min_fraction", "must lie in (0, 1]"));
            }
        }
        if let Some(b) = &s.ladder {
            if b.levels < 2 {
                return Err(invalid("suites.ladder.levels", "need at least two levels"));
            }
            if b.coarse_cells < 8 || b.coarse_cells % 2 != 0 {
                return Err(invalid("suites.ladder.coarse_cells", "must be even and at least 8"));
            }
            positive("suites.ladder.coarse_dt", b.coarse_dt)?;
            increasing("suites.ladder.times", &b.times)?;
            if !(b.ratio_band[0] < b.ratio_band[1]) {
                return Err(invalid("suites.ladder.ratio_band", "lower bound must be below upper bound"));
            }
        }
        Ok(())
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
