//! Numerical laboratory for the one-dimensional stochastic Burgers equation
//!
//! ```text
//! du = ½[∂ₓ²u − ∂ₓ(u²)] dt + d(∂ₓV),   V = ρ * W,
//! ```
//!
//! on a periodic grid, together with the KPZ height `h` (`u = ∂ₓh`), the
//! multiplicative stochastic heat equation `φ = e^{−h}`, a Feynman–Kac
//! directed-polymer estimator for `γ(t) = E h(t, x)`, and the statistical
//! machinery used to probe invariant measures of the dynamics.
//!
//! The solver writes `u = θ + ψ`, where `ψ` solves the noise-forced heat
//! equation exactly in Fourier space and `θ` solves a random-coefficient
//! conservation law with a monotone, conservative finite-volume scheme. The
//! discrete dynamics therefore preserve comparison, `L¹` contraction and
//! conservation of mass exactly, which the test suites assert to machine
//! precision.

pub mod burgers;
pub mod colehopf;
pub mod error;
pub mod fft;
pub mod grid_noise;
pub mod io;
pub mod measures;
pub mod polymer;
pub mod rng;
pub mod spectral_ops;
pub mod stats;

pub use error::{Error, Result};
pub use grid_noise::{
    build_mollifier, sample_noise_path, LinearizedField, MollifierKind, NoisePath, NoiseSource,
    PeriodicGrid, SampledMollifier,
};
pub use spectral_ops::{Field, WeightSpec};
