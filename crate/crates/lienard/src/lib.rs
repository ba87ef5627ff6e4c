//! Simulation and analysis toolkit for noisy Liénard-type self-sustained
//! oscillators.
//!
//! The toolkit integrates the complex-amplitude form, the second-order
//! phase-space form, and the explicit system+reservoir form of a family of
//! nonlinearly damped oscillators, generates fluctuation–dissipation-matched
//! noise (including the vacuum, `θ = 0`, case), and verifies limit-cycle
//! structure against independent analytical oracles.
//!
//! Units: `ħ = 1` and the Boltzmann constant `K = 1`; temperature enters only
//! through `θ = K·T`.

pub mod analysis;
pub mod config;
pub mod driver;
pub mod dynamics;
pub mod model;
pub mod noise;
pub mod presets;

pub use model::{DampingSpec, Family, RadialPolynomial, SystemParams};
pub use noise::{BathConfig, BathSample, NoiseSpec};
