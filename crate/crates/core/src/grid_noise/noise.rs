use rand_distr::{Distribution, StandardNormal};

use super::{PeriodicGrid, SampledMollifier};
use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::rng::{self, StreamRng};

/// Supplier of white-noise increments `ΔW` per cell and step, each
/// `Normal(0, dt/dx)` and independent.
pub trait NoiseSource {
    fn cells(&self) -> usize;
    fn dt(&self) -> f64;
    fn next_increment(&mut self, out: &mut [f64]) -> Result<()>;
}

impl<S: NoiseSource + ?Sized> NoiseSource for Box<S> {
    fn cells(&self) -> usize {
        (**self).cells()
    }

    fn dt(&self) -> f64 {
        (**self).dt()
    }

    fn next_increment(&mut self, out: &mut [f64]) -> Result<()> {
        (**self).next_increment(out)
    }
}

/// Unbounded counter-based noise stream.
#[derive(Debug, Clone)]
pub struct WhiteNoise {
    rng: StreamRng,
    cells: usize,
    dt: f64,
    scale: f64,
}

impl WhiteNoise {
    pub fn new(seed: u64, stream_id: u64, dt: f64, grid: &PeriodicGrid) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config(format!("noise dt must be positive, got {dt}")));
        }
        Ok(Self {
            rng: rng::stream(seed, stream_id),
            cells: grid.n(),
            dt,
            scale: (dt / grid.dx()).sqrt(),
        })
    }
}

impl NoiseSource for WhiteNoise {
    fn cells(&self) -> usize {
        self.cells
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn next_increment(&mut self, out: &mut [f64]) -> Result<()> {
        if out.len() != self.cells {
            return Err(Error::GridMismatch { expected: self.cells, found: out.len() });
        }
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v = self.scale * z;
        }
        Ok(())
    }
}

/// A materialized noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub seed: u64,
    pub dt: f64,
    pub steps: usize,
    pub n: usize,
    /// Row-major `steps × n`.
    pub increments: Vec<f64>,
}

pub fn sample_noise_path(
    seed: u64,
    dt: f64,
    steps: usize,
    grid: &PeriodicGrid,
    rng_stream_id: u64,
) -> Result<NoisePath> {
    if steps == 0 {
        return Err(Error::config("noise path needs at least one step"));
    }
    let mut source = WhiteNoise::new(seed, rng_stream_id, dt, grid)?;
    let n = grid.n();
    let mut increments = vec![0.0; steps * n];
    for row in increments.chunks_exact_mut(n) {
        source.next_increment(row)?;
    }
    Ok(NoisePath { seed, dt, steps, n, increments })
}

impl NoisePath {
    pub fn step(&self, s: usize) -> &[f64] {
        &self.increments[s * self.n..(s + 1) * self.n]
    }

    pub fn cursor(&self) -> PathCursor<'_> {
        PathCursor { path: self, next: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct PathCursor<'a> {
    path: &'a NoisePath,
    next: usize,
}

impl NoiseSource for PathCursor<'_> {
    fn cells(&self) -> usize {
        self.path.n
    }

    fn dt(&self) -> f64 {
        self.path.dt
    }

    fn next_increment(&mut self, out: &mut [f64]) -> Result<()> {
        if self.next >= self.path.steps {
            return Err(Error::MissingNoise(format!(
                "noise path exhausted after {} steps",
                self.path.steps
            )));
        }
        if out.len() != self.path.n {
            return Err(Error::GridMismatch { expected: self.path.n, found: out.len() });
        }
        out.copy_from_slice(self.path.step(self.next));
        self.next += 1;
        Ok(())
    }
}

/// Aggregates a fine source on `(2n, dt/2)` into the consistent coarse
/// source on `(n, dt)`: coarse cell `k` is the union of fine cells `2k` and
/// `2k+1`, and the Brownian sheet increments over the four fine blocks add.
#[derive(Debug, Clone)]
pub struct Coarsened<S> {
    fine: S,
    buf: Vec<f64>,
}

impl<S: NoiseSource> Coarsened<S> {
    pub fn new(fine: S) -> Self {
        let buf = vec![0.0; fine.cells()];
        Self { fine, buf }
    }
}

impl<S: NoiseSource> NoiseSource for Coarsened<S> {
    fn cells(&self) -> usize {
        self.fine.cells() / 2
    }

    fn dt(&self) -> f64 {
        2.0 * self.fine.dt()
    }

    fn next_increment(&mut self, out: &mut [f64]) -> Result<()> {
        if out.len() != self.cells() {
            return Err(Error::GridMismatch { expected: self.cells(), found: out.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..2 {
            self.fine.next_increment(&mut self.buf)?;
            for (k, v) in out.iter_mut().enumerate() {
                *v += 0.5 * (self.buf[2 * k] + self.buf[2 * k + 1]);
            }
        }
        Ok(())
    }
}

/// `ΔV = dx·(ρ ⊛ ΔW)` on the torus.
pub fn smooth_increment(w: &[f64], mollifier: &SampledMollifier) -> Result<Vec<f64>> {
    mollifier.grid.check_len(w.len())?;
    let spectral = Spectral::new(mollifier.grid);
    Ok(spectral.apply(w, |j, _| mollifier.transfer[j].into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_noise::{build_mollifier, MollifierKind};
    use crate::rng::{stream_id, tag};
    use crate::stats::SampleStats;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16.0, 512).unwrap()
    }

    #[test]
    fn same_seed_reproduces_bit_exactly() {
        let a = sample_noise_path(1, 0.01, 100, &grid(), 0).unwrap();
        let b = sample_noise_path(1, 0.01, 100, &grid(), 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pooled_variance_matches_dt_over_dx() {
        let g = grid();
        let p = sample_noise_path(1, 0.01, 100, &g, 0).unwrap();
        let sq: Vec<f64> = p.increments.iter().map(|x| x * x).collect();
        let s = SampleStats::from_slice(&sq);
        let target = 0.01 / g.dx();
        assert!((s.mean - target).abs() < 5.0 * s.se, "{} vs {target} (se {})", s.mean, s.se);
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let g = grid();
        let a = sample_noise_path(1, 0.01, 100, &g, stream_id(tag::NOISE, 0)).unwrap();
        let b = sample_noise_path(1, 0.01, 100, &g, stream_id(tag::NOISE, 1)).unwrap();
        let products: Vec<f64> =
            a.increments.iter().zip(&b.increments).map(|(x, y)| x * y).collect();
        let s = SampleStats::from_slice(&products);
        assert!(s.mean.abs() < 5.0 * s.se);
    }

    #[test]
    fn zero_increment_smooths_to_zero() {
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, grid()).unwrap();
        let dv = smooth_increment(&vec![0.0; 512], &m).unwrap();
        assert!(dv.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_mollifier_is_identity() {
        let g = grid();
        let m = build_mollifier(MollifierKind::Delta, g.dx(), g).unwrap();
        let p = sample_noise_path(3, 0.01, 1, &g, 0).unwrap();
        let dv = smooth_increment(p.step(0), &m).unwrap();
        for (a, b) in dv.iter().zip(p.step(0)) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, grid()).unwrap();
        assert!(matches!(smooth_increment(&[0.0; 16], &m), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn smoothed_covariance_matches_selfconv() {
        // Monte Carlo over 10⁴ increments against dt·ρ*² at every lag.
        let g = PeriodicGrid::new(16.0, 64).unwrap();
        let m = build_mollifier(MollifierKind::Gaussian, 0.5, g).unwrap();
        let dt = 0.01;
        let p = sample_noise_path(11, dt, 10_000, &g, 0).unwrap();
        let spectral = Spectral::new(g);
        let rows: Vec<Vec<f64>> = (0..p.steps)
            .map(|s| spectral.apply(p.step(s), |j, _| m.transfer[j].into()))
            .collect();
        for lag in 0..64 {
            // pooled over base points within each sample, one value per sample
            let per_sample: Vec<f64> = rows
                .iter()
                .map(|dv| (0..64).map(|x| dv[x] * dv[(x + lag) % 64]).sum::<f64>() / 64.0)
                .collect();
            let s = SampleStats::from_slice(&per_sample);
            let target = dt * m.selfconv[lag];
            assert!((s.mean - target).abs() < 5.0 * s.se, "lag {lag}: {} vs {target}", s.mean);
        }
    }

    #[test]
    fn coarsened_noise_has_coarse_variance() {
        let fine = PeriodicGrid::new(16.0, 128).unwrap();
        let coarse = PeriodicGrid::new(16.0, 64).unwrap();
        let mut src = Coarsened::new(WhiteNoise::new(5, 0, 0.005, &fine).unwrap());
        assert_eq!(src.cells(), 64);
        assert!((src.dt() - 0.01).abs() < 1e-15);
        let mut buf = vec![0.0; 64];
        let mut sq = Vec::new();
        for _ in 0..400 {
            src.next_increment(&mut buf).unwrap();
            sq.extend(buf.iter().map(|x| x * x));
        }
        let s = SampleStats::from_slice(&sq);
        let target = 0.01 / coarse.dx();
        assert!((s.mean - target).abs() < 5.0 * s.se);
    }
}
