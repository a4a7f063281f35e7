//! Experiment drivers. Each suite turns a config block into checks, a JSON
//! report and plot-ready tables; nothing here touches the filesystem.

use burgerlab_core::burgers::{run, steps_for, RunOptions};
use burgerlab_core::colehopf::{ladder_consistency, normalization_bump, run_ladder};
use burgerlab_core::grid_noise::{covariance_check, sample_noise_path, Coarsened, NoisePath, NoiseSource, WhiteNoise};
use burgerlab_core::io::FieldFile;
use burgerlab_core::measures::{
    dissipation_runs, height_balance, height_curve, kb_average, moment_curve, ordering_audit, shear_audit,
    stability_experiment, stationary_moment_audit, structure_audit, Assertion, BasinDecomposition,
};
use burgerlab_core::polymer::estimate_gamma;
use burgerlab_core::rng::{stream_id, tag};
use burgerlab_core::stats::combined_se;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub se: f64,
}

impl Check {
    fn from_assertion(prefix: &str, a: &Assertion) -> Self {
        Self { name: format!("{prefix}.{}", a.name), pass: a.pass, value: a.value, threshold: a.threshold, se: a.se }
    }

    fn new(name: impl Into<String>, pass: bool, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), pass, value, threshold, se: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutcome {
    pub suite: String,
    pub checks: Vec<Check>,
    pub report: serde_json::Value,
    pub tables: Vec<Table>,
    pub fields: Vec<(String, FieldFile)>,
    pub noise: Option<(String, NoisePath)>,
    pub seeds: Vec<u64>,
}

impl SuiteOutcome {
    fn new(suite: &str, seeds: Vec<u64>) -> Self {
        Self { suite: suite.into(), seeds, ..Default::default() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Checks whose name starts with `prefix`.
    pub fn checks_under<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }

    fn table(&mut self, file: &str, header: Vec<&'static str>, rows: Vec<Vec<f64>>) {
        self.tables.push(Table { file: file.into(), header, rows });
    }
}

fn block<'a, T>(b: &'a Option<T>, name: &str) -> Result<&'a T, HarnessError> {
    b.as_ref().ok_or_else(|| HarnessError::Config(format!("suites.{name}: block missing from config")))
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.simulate, "simulate")?;
    let seed = cfg.noise.seed;
    let grid = cfg.grid();
    let m = cfg.mollifier_on(grid)?;
    let scheme = cfg.scheme_with(cfg.scheme.dt)?;
    let initials: Vec<Vec<f64>> = b.initials.iter().map(|i| i.sample(&grid, seed)).collect();
    let steps = steps_for(*b.snapshot_times.last().unwrap(), scheme.dt) as usize;
    let options = RunOptions::at(&b.snapshot_times);
    let mut out = SuiteOutcome::new("simulate", vec![seed]);
    let traj = if b.save_noise {
        let path = sample_noise_path(seed, scheme.dt, steps.max(1), &grid, stream_id(tag::NOISE, 0))?;
        let traj = run(initials, grid, Some(Box::new(path.cursor())), Some(&m), scheme, &options)?;
        out.noise = Some(("noise.bnp".into(), path));
        traj
    } else {
        let noise = WhiteNoise::new(seed, stream_id(tag::NOISE, 0), scheme.dt, &grid)?;
        run(initials, grid, Some(Box::new(noise)), Some(&m), scheme, &options)?
    };
    let mut rows = vec![];
    for (j, snap) in traj.snapshots.iter().enumerate() {
        for i in 0..snap.components() {
            let u = snap.u(i);
            rows.push(vec![snap.t, i as f64, grid.mean(&u), u.iter().fold(0.0f64, |a, v| a.max(v.abs()))]);
            out.fields.push((
                format!("u_c{i}_s{j:03}.bfd"),
                FieldFile { t: snap.t, length: grid.length(), values: u },
            ));
        }
    }
    let finite = traj.snapshots.iter().all(|s| (0..s.components()).all(|i| s.u(i).iter().all(|v| v.is_finite())));
    out.checks.push(Check::new("simulate.finite", finite, finite as u8 as f64, 1.0));
    out.report = json!({ "times": traj.times(), "components": b.initials.len(), "steps": steps });
    out.table("snapshots.csv", vec!["t", "component", "mean", "sup"], rows);
    Ok(out)
}

pub fn covariance(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.covariance, "covariance")?;
    let grid = cfg.grid();
    let m = cfg.mollifier_on(grid)?;
    let seed = cfg.noise.seed;
    let rep = covariance_check(&grid, &m, cfg.scheme.dt, &b.times, b.realizations, seed)?;
    let mut out = SuiteOutcome::new("covariance", vec![seed]);
    let k = cfg.statistics.k_se;
    out.checks.push(Check::new("covariance.all_lags_within_k_se", rep.pass(k), rep.max_abs_z, k));
    out.table(
        "covariance.csv",
        vec!["t", "lag", "estimate", "se", "oracle"],
        rep.csv_rows().iter().map(|r| r.to_vec()).collect(),
    );
    out.report = json!({ "times": rep.times, "max_abs_z": rep.max_abs_z, "realizations": rep.realizations });
    Ok(out)
}

pub fn structure(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.structure, "structure")?;
    let seed = cfg.noise.seed;
    let dynamics = cfg.dynamics()?;
    let mut out = SuiteOutcome::new("structure", vec![seed]);
    let rep = structure_audit(&dynamics, b.paths, b.t_end, b.amplitude, seed, b.rel_tol)?;
    out.checks.extend(rep.assertions.iter().map(|a| Check::from_assertion("structure", a)));

    let d = &b.dissipation;
    let reports = dissipation_runs(&dynamics, d.runs, d.t_end, d.amplitude, &d.functions, seed)?;
    let mut rows = vec![];
    for f in &d.functions {
        let mine: Vec<_> = reports.iter().filter(|r| r.function == *f).collect();
        let worst = mine.iter().map(|r| r.min_slack / r.initial_l1.max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min);
        let name = serde_json::to_value(f).unwrap().as_str().unwrap_or("f").to_string();
        out.checks.push(Check::new(format!("dissipation.{name}"), mine.iter().all(|r| r.holds(d.rel_tol)), worst, -d.rel_tol));
        for (run, r) in mine.iter().enumerate() {
            rows.push(vec![run as f64, *f as u8 as f64, r.initial_l1, r.min_slack, *r.slack.last().unwrap(), *r.dissipated.last().unwrap()]);
        }
    }
    out.table("dissipation.csv", vec!["run", "function", "initial_l1", "min_slack", "final_slack", "dissipated"], rows);

    let s = &b.sandwich;
    let decomp = BasinDecomposition::default_bump(&dynamics.grid, s.mean);
    let stab = stability_experiment(&dynamics, &decomp, &s.eps, &[0.0, s.t_end], s.realizations, seed, cfg.statistics.k_se)?;
    out.checks.push(Check::new("sandwich.exact", stab.sandwich_violations == 0, stab.sandwich_violations as f64, 0.0));
    out.report = json!({ "structure": to_json(&rep), "sandwich_violations": stab.sandwich_violations });
    Ok(out)
}

pub fn moments(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.moments, "moments")?;
    let seed = cfg.noise.seed;
    let dynamics = cfg.dynamics()?;
    let k = cfg.statistics.k_se;
    let mut out = SuiteOutcome::new("moments", vec![seed]);
    let curve = moment_curve(&dynamics, b.mean, &b.times, b.realizations, seed)?;
    out.checks.extend(curve.assertions(k, b.gradient_rel_tol).iter().map(|a| Check::from_assertion("moments", a)));
    out.table(
        "moments.csv",
        vec!["t", "variance", "variance_se", "gradient_sq", "gradient_sq_se", "gradient_sq_plain", "gradient_sq_plain_se"],
        (0..curve.times.len())
            .map(|j| vec![curve.times[j], curve.variance[j].mean, curve.variance[j].se, curve.gradient[j].mean, curve.gradient[j].se, curve.gradient_plain[j].mean, curve.gradient_plain[j].se])
            .collect(),
    );
    let mut report = json!({ "curve": to_json(&curve) });
    if let Some(st) = &b.stationary {
        let initial = vec![b.mean; dynamics.grid.n()];
        let measure = kb_average(&dynamics, &initial, st.burn_in, st.t_end, st.snapshots, seed)?;
        let audit = match st.window {
            Some(w) => {
                let zeta = normalization_bump(&dynamics.grid, st.zeta_half_width)?;
                let dh = height_balance(&dynamics, &measure, &zeta, w, seed)?;
                stationary_moment_audit(&dynamics, &measure, Some((&dh, w)), k)?
            }
            None => stationary_moment_audit(&dynamics, &measure, None, k)?,
        };
        out.checks.extend(audit.assertions.iter().map(|a| Check::from_assertion("stationary", a)));
        report["stationary"] = to_json(&audit);
    }
    out.report = report;
    Ok(out)
}

pub fn gamma(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.gamma, "gamma")?;
    let seed = cfg.noise.seed;
    let polymer_seed = seed.wrapping_add(1);
    let dynamics = cfg.dynamics()?;
    let grid = dynamics.grid;
    let m = dynamics.mollifier.clone().expect("noise on");
    let k = cfg.statistics.k_se;
    let mut out = SuiteOutcome::new("gamma", vec![seed, polymer_seed]);
    let zeta = normalization_bump(&grid, b.zeta_half_width)?;
    let pde = height_curve(&dynamics, &vec![0.0; grid.n()], &zeta, &b.times, b.realizations, seed)?;
    let poly = estimate_gamma(&grid, &m, &b.polymer, b.realizations, polymer_seed, &b.times)?;
    out.checks.extend(pde.assertions(k).iter().map(|a| Check::from_assertion("pde", a)));
    out.checks.extend(poly.assertions(k).iter().map(|a| Check::from_assertion("polymer", a)));
    out.checks.push(Check::new("polymer.ess_not_collapsed", !poly.ess_collapsed, poly.ess_min, 0.01 * b.polymer.paths as f64));
    if b.times[0] == 0.0 {
        let half = 0.5 * m.l2sq;
        let overlap = poly.gamma_prime_overlap[0];
        let dev = (overlap - half).abs() / half;
        out.checks.push(Check::new("polymer.overlap_at_zero", dev <= 1e-12, dev, 1e-12));
    }
    for &t in &b.compare_times {
        let j = b.times.iter().position(|s| *s == t).expect("validated");
        let se = combined_se(pde.se_h[j], poly.se[j]);
        let a = Assertion::matches(format!("feynman_kac@t={t}"), poly.gamma[j], se, pde.mean_h[j], k);
        out.checks.push(Check::from_assertion("cross", &a));
    }
    out.table(
        "gamma.csv",
        vec!["t", "pde_mean_h", "pde_se", "polymer_gamma", "polymer_se", "overlap_prime", "overlap_prime_se", "bias_gap"],
        (0..b.times.len())
            .map(|j| {
                vec![pde.times[j], pde.mean_h[j], pde.se_h[j], poly.gamma[j], poly.se[j], poly.gamma_prime_overlap[j], poly.se_prime[j], poly.bias_gap[j]]
            })
            .collect(),
    );
    out.report = json!({ "pde": to_json(&pde), "polymer": to_json(&poly) });
    Ok(out)
}

pub fn shear(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.shear, "shear")?;
    let seed = cfg.noise.seed;
    let dynamics = cfg.dynamics()?;
    let k = cfg.statistics.k_se;
    let v = b.initial.sample(&dynamics.grid, seed);
    let rep = shear_audit(&dynamics, &v, &b.shears, &b.times, b.realizations, seed, &b.points, &b.lags)?;
    let mut out = SuiteOutcome::new("shear", vec![seed]);
    out.checks.push(Check::new("shear.moments_within_k_se", rep.pass(k), rep.max_abs_z, k));
    out.checks.push(Check::new("shear.mean_conserved", rep.mean_defect <= 1e-10, rep.mean_defect, 1e-10));
    out.table(
        "shear.csv",
        vec!["shear", "t", "point", "statistic", "reference", "reference_se", "sheared", "sheared_se", "z"],
        rep.statistics
            .iter()
            .map(|s| {
                let stat = match s.name.as_str() {
                    "mean" => 0.0,
                    "second_moment" => -1.0,
                    other => other.trim_start_matches("lag_product_").parse().unwrap_or(f64::NAN),
                };
                vec![s.shear, s.t, s.point as f64, stat, s.reference, s.reference_se, s.sheared, s.sheared_se, s.z]
            })
            .collect(),
    );
    out.report = to_json(&rep);
    Ok(out)
}

pub fn stability(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.stability, "stability")?;
    let seed = cfg.noise.seed;
    let dynamics = cfg.dynamics()?;
    let decomp = BasinDecomposition::default_bump(&dynamics.grid, b.mean);
    let rep = stability_experiment(&dynamics, &decomp, &b.eps, &b.times, b.realizations, seed, cfg.statistics.k_se)?;
    let mut out = SuiteOutcome::new("stability", vec![seed]);
    out.checks.extend(rep.assertions.iter().map(|a| Check::from_assertion("stability", a)));
    out.checks.push(Check::new("stability.final_ratio", rep.final_ratio <= b.max_ratio, rep.final_ratio, b.max_ratio));
    let mut header = vec!["t", "distance", "distance_se"];
    header.extend(std::iter::repeat("ceiling").take(b.eps.len()));
    out.table(
        "stability.csv",
        header,
        (0..rep.times.len())
            .map(|j| {
                let mut row = vec![rep.times[j], rep.distance[j], rep.distance_se[j]];
                row.extend(rep.ceiling.iter().map(|c| c[j]));
                row
            })
            .collect(),
    );
    out.report = to_json(&rep);
    Ok(out)
}

pub fn ordering(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.ordering, "ordering")?;
    let seed = cfg.noise.seed;
    let dynamics = cfg.dynamics()?;
    let upper = b.upper.sample(&dynamics.grid, seed);
    let lower = b.lower.sample(&dynamics.grid, seed);
    let rep = ordering_audit(&dynamics, &upper, &lower, b.burn_in, b.realizations, seed)?;
    let mut out = SuiteOutcome::new("ordering", vec![seed]);
    out.checks.push(Check::new("ordering.sign_constant_fraction", rep.fraction >= b.min_fraction, rep.fraction, b.min_fraction));
    out.report = to_json(&rep);
    Ok(out)
}

fn coarsened(fine: WhiteNoise, times: usize) -> Box<dyn NoiseSource + Send> {
    let mut src: Box<dyn NoiseSource + Send> = Box::new(fine);
    for _ in 0..times {
        src = Box::new(Coarsened::new(src));
    }
    src
}

pub fn ladder(cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    let b = block(&cfg.suites.ladder, "ladder")?;
    let seed = cfg.noise.seed;
    let top = b.levels - 1;
    let fine_grid = cfg.grid_with(b.coarse_cells << top)?;
    let fine_dt = b.coarse_dt / (1u64 << top) as f64;
    let mut out = SuiteOutcome::new("ladder", vec![seed]);
    let mut finals = vec![];
    let mut rows = vec![];
    for level in 0..b.levels {
        let grid = cfg.grid_with(b.coarse_cells << level)?;
        let dt = b.coarse_dt / (1u64 << level) as f64;
        let m = cfg.mollifier_on(grid)?;
        let fine = WhiteNoise::new(seed, stream_id(tag::NOISE, 0), fine_dt, &fine_grid)?;
        let zeta = normalization_bump(&grid, b.zeta_half_width)?;
        let u0 = b.initial.sample(&grid, seed);
        let lr = run_ladder(grid, Some(&m), cfg.scheme_with(dt)?, u0, Some(coarsened(fine, top - level)), &b.times, &zeta)?;
        let rep = ladder_consistency(&lr.burgers, 0, &lr.she)?;
        for (t, mm) in rep.times.iter().zip(&rep.mismatch) {
            rows.push(vec![grid.n() as f64, dt, *t, *mm]);
        }
        finals.push(*rep.mismatch.last().unwrap());
    }
    for (j, w) in finals.windows(2).enumerate() {
        let ratio = w[1] / w[0];
        let pass = ratio >= b.ratio_band[0] && ratio <= b.ratio_band[1];
        out.checks.push(Check {
            name: format!("ladder.halving#{j}"),
            pass,
            value: ratio,
            threshold: 0.5,
            se: 0.0,
        });
    }
    out.table("ladder.csv", vec!["cells", "dt", "t", "mismatch"], rows);
    out.report = json!({ "final_mismatch": finals });
    Ok(out)
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 9] =
    ["simulate", "covariance", "structure", "moments", "gamma", "shear", "stability", "ordering", "ladder"];

pub fn run_suite(name: &str, cfg: &ExperimentConfig) -> Result<SuiteOutcome, HarnessError> {
    match name {
        "simulate" => simulate(cfg),
        "covariance" => covariance(cfg),
        "structure" => structure(cfg),
        "moments" => moments(cfg),
        "gamma" => gamma(cfg),
        "shear" => shear(cfg),
        "stability" => stability(cfg),
        "ordering" => ordering(cfg),
        "ladder" => ladder(cfg),
        other => Err(HarnessError::Config(format!("unknown suite {other}"))),
    }
}

