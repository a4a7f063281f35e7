//! Periodic grid, mollified noise and the linearized field `ψ`.

mod covariance;
mod grid;
mod mollifier;
mod noise;
mod psi;

pub use covariance::{covariance_check, CovarianceReport, MIN_COVARIANCE_REALIZATIONS};
pub use grid::PeriodicGrid;
pub use mollifier::{build_mollifier, MollifierKind, SampledMollifier};
pub use noise::{
    sample_noise_path, smooth_increment, Coarsened, NoisePath, NoiseSource, PathCursor, WhiteNoise,
};
pub use psi::{psi_gradient_energy, psi_stationary_covariance, psi_step, ForcingPropagator, LinearizedField};
