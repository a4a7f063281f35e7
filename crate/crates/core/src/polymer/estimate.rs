use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{polymer_advance, PolymerConfig, PolymerEnsemble};
use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::grid_noise::{ForcingPropagator, NoiseSource, PeriodicGrid, SampledMollifier, WhiteNoise};
use crate::rng::{stream, stream_id, tag};
use crate::stats::{trapezoid, Assertion, SampleStats};

/// One noise realization with two independent path clouds `A`, `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRun {
    /// `−log((Ẑ_A + Ẑ_B)/2)`, the `2M`-path estimate.
    pub neg_log_z: Vec<f64>,
    /// `−½(log Ẑ_A + log Ẑ_B)`, the `M`-path estimate.
    pub neg_log_z_small: Vec<f64>,
    /// Weighted pair average of `½ρ*²(X − X̃)`.
    pub overlap: Vec<f64>,
    pub ess_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub se: Vec<f64>,
    pub gamma_prime_overlap: Vec<f64>,
    pub se_prime: Vec<f64>,
    /// `γ̂` at `M` paths minus `γ̂` at `2M`; positive values indicate the
    /// small-sample bias of `−log`.
    pub bias_gap: Vec<f64>,
    pub bias_gap_se: Vec<f64>,
    /// `∫₀ᵗ γ̂′` by the trapezoid rule over the recorded times.
    pub integrated_prime: Vec<f64>,
    pub integrated_prime_se: Vec<f64>,
    /// Paired first and second differences of `γ̂` over the recorded times.
    pub increments: Vec<SampleStats>,
    pub second_differences: Vec<SampleStats>,
    pub ess_min: f64,
    pub ess_collapsed: bool,
    pub realizations: usize,
}

impl GammaCurve {
    pub fn from_runs(times: Vec<f64>, runs: &[GammaRun], paths: usize) -> Self {
        let k = times.len();
        let col = |f: &dyn Fn(&GammaRun, usize) -> f64, j: usize| {
            SampleStats::from_iter(runs.iter().map(|r| f(r, j)))
        };
        let mut out = Self {
            gamma: vec![],
            se: vec![],
            gamma_prime_overlap: vec![],
            se_prime: vec![],
            bias_gap: vec![],
            bias_gap_se: vec![],
            integrated_prime: vec![],
            integrated_prime_se: vec![],
            increments: vec![],
            second_differences: vec![],
            ess_min: runs.iter().map(|r| r.ess_min).fold(f64::INFINITY, f64::min),
            ess_collapsed: false,
            realizations: runs.len(),
            times,
        };
        for j in 0..k {
            let g = col(&|r, j| r.neg_log_z[j], j);
            let p = col(&|r, j| r.overlap[j], j);
            let b = col(&|r, j| r.neg_log_z_small[j] - r.neg_log_z[j], j);
            let times = &out.times;
            let ip = SampleStats::from_iter(
                runs.iter().map(|r| trapezoid(&times[..=j], &r.overlap[..=j])),
            );
            out.gamma.push(g.mean);
            out.se.push(g.se);
            out.gamma_prime_overlap.push(p.mean);
            out.se_prime.push(p.se);
            out.bias_gap.push(b.mean);
            out.bias_gap_se.push(b.se);
            out.integrated_prime.push(ip.mean);
            out.integrated_prime_se.push(ip.se);
        }
        let t = &out.times;
        for j in 1..k {
            out.increments.push(col(&|r, j| r.neg_log_z[j] - r.neg_log_z[j - 1], j));
            if j + 1 < k {
                out.second_differences.push(col(
                    &|r, j| {
                        let z = &r.neg_log_z;
                        (z[j + 1] - z[j]) / (t[j + 1] - t[j]) - (z[j] - z[j - 1]) / (t[j] - t[j - 1])
                    },
                    j,
                ));
            }
        }
        out.ess_collapsed = out.ess_min < 0.01 * paths as f64;
        out
    }

    /// Nondecreasing and concave within `k` SE.
    pub fn assertions(&self, k: f64) -> Vec<Assertion> {
        let mut out = vec![];
        for (j, d) in self.increments.iter().enumerate() {
            out.push(Assertion::at_most(format!("gamma_nondecreasing#{j}"), -d.mean, d.se, 0.0, k));
        }
        for (j, d) in self.second_differences.iter().enumerate() {
            out.push(Assertion::at_most(format!("gamma_concave#{j}"), d.mean, d.se, 0.0, k));
        }
        out
    }

    /// Rows `t, gamma, se, gamma_prime, se_prime, ess_min`.
    pub fn csv_rows(&self) -> Vec<[f64; 6]> {
        (0..self.times.len())
            .map(|j| {
                [
                    self.times[j],
                    self.gamma[j],
                    self.se[j],
                    self.gamma_prime_overlap[j],
                    self.se_prime[j],
                    self.ess_min,
                ]
            })
            .collect()
    }
}

/// `½ Σ_{k,l} a_k b_l s_{k−l} / (Σa Σb)` for binned clouds.
fn binned_overlap(a: &[f64], b: &[f64], selfconv: &[f64]) -> f64 {
    let n = a.len();
    let bs: Vec<(usize, f64)> = b.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
    let (mut acc, mut sa) = (0.0, 0.0);
    for (k, &av) in a.iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        sa += av;
        let mut inner = 0.0;
        for &(l, bv) in &bs {
            inner += bv * selfconv[(k + n - l) % n];
        }
        acc += av * inner;
    }
    let sb: f64 = bs.iter().map(|(_, v)| v).sum();
    0.5 * acc / (sa * sb)
}

/// Linear (cloud-in-cell) deposit of relative weights onto the grid.
fn deposit(ens: &PolymerEnsemble, grid: &PeriodicGrid, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let m = ens.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = grid.n();
    for (x, l) in ens.positions.iter().zip(&ens.log_weights) {
        let w = (l - m).exp();
        let s = grid.wrap(*x) / grid.dx();
        let i = (s.floor() as usize).min(n - 1);
        let f = s - i as f64;
        out[i] += w * (1.0 - f);
        if f > 0.0 {
            out[(i + 1) % n] += w * f;
        }
    }
}

fn record_steps(times: &[f64], dt: f64, steps: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let s = (t / dt + 1e-9).floor();
        if !(s >= 0.0) || s as usize > steps {
            return Err(Error::config(format!("record time {t} outside [0, t_max]")));
        }
        out.push(s as usize);
    }
    if out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("record times must be strictly increasing after rounding"));
    }
    Ok(out)
}

/// Simulates one noise realization (`index`) with both path clouds.
pub fn simulate_realization(
    grid: &PeriodicGrid,
    mollifier: &SampledMollifier,
    cfg: &PolymerConfig,
    seed: u64,
    index: u64,
    record: &[usize],
) -> Result<GammaRun> {
    let mut noise = WhiteNoise::new(seed, stream_id(tag::NOISE, index), cfg.dt, grid)?;
    let mut forcing = ForcingPropagator::new(Spectral::new(*grid), mollifier, cfg.dt)?;
    let mut scratch = forcing.spectral().zero_spectrum();
    let mut clouds = [PolymerEnsemble::at_origin(cfg.paths), PolymerEnsemble::at_origin(cfg.paths)];
    let mut path_rngs =
        [0, 1].map(|e| stream(seed, stream_id(tag::POLYMER_PATHS, 2 * index + e)));
    let mut resample_rngs = [0, 1].map(|e| stream(seed, stream_id(tag::RESAMPLE, 2 * index + e)));
    let n = grid.n();
    let (mut dw, mut dv) = (vec![0.0; n], vec![0.0; n]);
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    let ito = mollifier.selfconv_zero();
    let mut run = GammaRun {
        neg_log_z: Vec::with_capacity(record.len()),
        neg_log_z_small: Vec::with_capacity(record.len()),
        overlap: Vec::with_capacity(record.len()),
        ess_min: cfg.paths as f64,
    };
    let mut next = 0;
    let last = *record.last().unwrap_or(&0);
    for step in 0..=last {
        if step > 0 {
            noise.next_increment(&mut dw)?;
            forcing.inject(&dw, &mut scratch);
            forcing.last_dv(&mut dv);
            for e in 0..2 {
                let ess = polymer_advance(
                    &mut clouds[e],
                    &dv,
                    grid,
                    cfg.dt,
                    ito,
                    cfg.resample_threshold,
                    &mut path_rngs[e],
                    &mut resample_rngs[e],
                )?;
                run.ess_min = run.ess_min.min(ess);
            }
        }
        if record.get(next) == Some(&step) {
            let (la, lb) = (clouds[0].log_partition(), clouds[1].log_partition());
            let hi = la.max(lb);
            let pooled = hi + (0.5 * ((la - hi).exp() + (lb - hi).exp())).ln();
            run.neg_log_z.push(-pooled);
            run.neg_log_z_small.push(-0.5 * (la + lb));
            deposit(&clouds[0], grid, &mut a);
            deposit(&clouds[1], grid, &mut b);
            run.overlap.push(binned_overlap(&a, &b, &mollifier.selfconv));
            next += 1;
        }
    }
    Ok(run)
}

/// Runs `realizations` independent noise realizations in parallel.
pub fn simulate_runs(
    grid: &PeriodicGrid,
    mollifier: &SampledMollifier,
    cfg: &PolymerConfig,
    realizations: usize,
    seed: u64,
    times: &[f64],
) -> Result<(Vec<f64>, Vec<GammaRun>)> {
    cfg.validate()?;
    grid.check_len(mollifier.values.len())?;
    let record = record_steps(times, cfg.dt, cfg.steps())?;
    let runs = (0..realizations as u64)
        .into_par_iter()
        .map(|r| simulate_realization(grid, mollifier, cfg, seed, r, &record))
        .collect::<Result<Vec<_>>>()?;
    let times = record.iter().map(|&s| s as f64 * cfg.dt).collect();
    Ok((times, runs))
}

/// `γ̂(t)` and the overlap estimate of `γ̂′(t)` at the requested times.
pub fn estimate_gamma(
    grid: &PeriodicGrid,
    mollifier: &SampledMollifier,
    cfg: &PolymerConfig,
    realizations: usize,
    seed: u64,
    times: &[f64],
) -> Result<GammaCurve> {
    if realizations < 50 {
        return Err(Error::InsufficientRealizations { got: realizations, min: 50 });
    }
    let (times, runs) = simulate_runs(grid, mollifier, cfg, realizations, seed, times)?;
    Ok(GammaCurve::from_runs(times, &runs, cfg.paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_noise::{build_mollifier, MollifierKind};

    fn setup() -> (PeriodicGrid, SampledMollifier, PolymerConfig) {
        let g = PeriodicGrid::new(16.0, 256).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let cfg = PolymerConfig { paths: 200, dt: 1e-2, t_max: 1.0, resample_threshold: 0.5 };
        (g, m, cfg)
    }

    #[test]
    fn overlap_at_time_zero_is_half_the_noise_variance() {
        let (g, m, cfg) = setup();
        let curve = estimate_gamma(&g, &m, &cfg, 50, 1, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(curve.gamma_prime_overlap[0], 0.5 * m.selfconv_zero());
        assert_eq!(curve.se_prime[0], 0.0);
        assert_eq!(curve.gamma[0], 0.0);
        assert!(curve.ess_min >= 1.0 && curve.ess_min <= 200.0);
        assert!(curve.gamma[2] > 0.0);
    }

    #[test]
    fn binned_overlap_matches_pair_sum() {
        let (g, m, _) = setup();
        let mut e1 = PolymerEnsemble::at_origin(4);
        let mut e2 = PolymerEnsemble::at_origin(3);
        // exactly on grid nodes so the deposit is exact
        e1.positions = vec![0.0, 0.125, -0.25, 1.0];
        e1.log_weights = vec![0.0, -0.3, -1.0, 0.2];
        e2.positions = vec![0.5, -0.0625, 16.0];
        e2.log_weights = vec![-0.1, 0.0, -0.5];
        let (mut a, mut b) = (vec![0.0; 256], vec![0.0; 256]);
        deposit(&e1, &g, &mut a);
        deposit(&e2, &g, &mut b);
        let got = binned_overlap(&a, &b, &m.selfconv);
        let w1 = e1.normalized_weights();
        let w2 = e2.normalized_weights();
        let mut want = 0.0;
        for (x, p) in e1.positions.iter().zip(&w1) {
            for (y, q) in e2.positions.iter().zip(&w2) {
                want += 0.5 * p * q * m.selfconv_at(x - y);
            }
        }
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn rejects_too_few_realizations() {
        let (g, m, cfg) = setup();
        assert!(matches!(
            estimate_gamma(&g, &m, &cfg, 10, 1, &[0.0]),
            Err(Error::InsufficientRealizations { .. })
        ));
    }
}
