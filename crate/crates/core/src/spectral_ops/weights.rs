use serde::{Deserialize, Serialize};

use super::Field;
use crate::grid_noise::PeriodicGrid;

/// `⟨x⟩ = √(4 + x²)`
pub fn bracket(x: f64) -> f64 {
    (4.0 + x * x).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightKind {
    /// `⟨x⟩^ℓ`
    PolyEll { ell: f64 },
    /// `⟨x⟩^{1/2} log⟨x⟩`
    SqrtLog,
    /// Period-aggregated `p_G` for `G = L·ℤ`; constant on the torus.
    YG,
}

/// A positive weight centered at `center` (the torus midpoint by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub center: f64,
}

impl WeightSpec {
    pub fn poly_ell(ell: f64, grid: &PeriodicGrid) -> Self {
        Self { kind: WeightKind::PolyEll { ell }, center: grid.midpoint() }
    }

    pub fn sqrt_log(grid: &PeriodicGrid) -> Self {
        Self { kind: WeightKind::SqrtLog, center: grid.midpoint() }
    }

    pub fn y_g(grid: &PeriodicGrid) -> Self {
        Self { kind: WeightKind::YG, center: grid.midpoint() }
    }

    /// Weight values at the grid nodes.
    pub fn sample(&self, grid: &PeriodicGrid) -> Vec<f64> {
        match self.kind {
            WeightKind::PolyEll { ell } => {
                grid.nodes().map(|x| bracket(self.offset(grid, x)).powf(ell)).collect()
            }
            WeightKind::SqrtLog => grid
                .nodes()
                .map(|x| {
                    let b = bracket(self.offset(grid, x));
                    b.sqrt() * b.ln()
                })
                .collect(),
            WeightKind::YG => vec![1.0 / y_g_inverse_weight(grid, self.center); grid.n()],
        }
    }

    fn offset(&self, grid: &PeriodicGrid, x: f64) -> f64 {
        let half = 0.5 * grid.length();
        (x - self.center + half).rem_euclid(grid.length()) - half
    }
}

/// `1/p_G = (1/p₂) * λ_G` for `G = L·ℤ`: the lattice sum of `1/⟨·⟩²` over
/// the period translates of the torus, averaged over one period, with the
/// analytic tail beyond the summed translates added back.
pub fn y_g_inverse_weight(grid: &PeriodicGrid, center: f64) -> f64 {
    const TRANSLATES: i64 = 64;
    let l = grid.length();
    let dx = grid.dx();
    let half = 0.5 * l;
    let mut acc = crate::stats::CompensatedSum::new();
    for m in -TRANSLATES..=TRANSLATES {
        for x in grid.nodes() {
            let y = (x - center + half).rem_euclid(l) - half + m as f64 * l;
            acc.add(dx / (4.0 + y * y));
        }
    }
    let reach = (TRANSLATES as f64 + 0.5) * l;
    let tail = std::f64::consts::FRAC_PI_2 - (0.5 * reach).atan();
    (acc.value() + tail) / l
}

pub fn weighted_sup_norm(f: &Field, w: &WeightSpec) -> f64 {
    let ws = w.sample(&f.grid);
    f.values.iter().zip(&ws).fold(0.0, |m, (v, w)| m.max(v.abs() / w))
}

pub fn weighted_l1_norm(f: &Field, w: &WeightSpec) -> f64 {
    let ws = w.sample(&f.grid);
    crate::stats::compensated_sum(f.values.iter().zip(&ws).map(|(v, w)| v.abs() / w)) * f.grid.dx()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16.0, 512).unwrap()
    }

    #[test]
    fn zero_and_unit_fields() {
        let g = grid();
        let w0 = WeightSpec::poly_ell(0.0, &g);
        assert_eq!(weighted_sup_norm(&Field::constant(g, 0.0), &w0), 0.0);
        assert_eq!(weighted_l1_norm(&Field::constant(g, 0.0), &w0), 0.0);
        assert!((weighted_sup_norm(&Field::constant(g, 1.0), &w0) - 1.0).abs() < 1e-15);
        assert!((weighted_l1_norm(&Field::constant(g, 1.0), &w0) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn poly_two_l1_matches_quadrature() {
        let g = grid();
        // Simpson oracle of ∫₀ᴸ ⟨x − L/2⟩⁻² dx
        let m = 100_000;
        let h = 16.0 / m as f64;
        let f = |x: f64| 1.0 / (4.0 + (x - 8.0) * (x - 8.0));
        let mut s = f(0.0) + f(16.0);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let oracle = s * h / 3.0;
        let got = weighted_l1_norm(&Field::constant(g, 1.0), &WeightSpec::poly_ell(2.0, &g));
        assert!((got - oracle).abs() < 0.01 * oracle);
    }

    #[test]
    fn weights_are_positive() {
        let g = grid();
        for w in [WeightSpec::poly_ell(-1.5, &g), WeightSpec::sqrt_log(&g), WeightSpec::y_g(&g)] {
            assert!(w.sample(&g).iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn y_g_weight_is_half_pi_over_period() {
        let g = grid();
        let inv = y_g_inverse_weight(&g, g.midpoint());
        assert!((inv - std::f64::consts::FRAC_PI_2 / 16.0).abs() < 1e-8);
        // independent of where the weight is centered
        assert!((y_g_inverse_weight(&g, 1.3) - inv).abs() < 1e-10);
    }
}
