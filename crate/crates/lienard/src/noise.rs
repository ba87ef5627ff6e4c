//! Quantum noise generation and verification.
//!
//! The internal noise channel carries the fluctuation–dissipation intensity
//!
//! ```text
//! D = 2(n+1)·γ_{n+1}·coth[(n+1)·ω₀ / (2θ)]
//! ```
//!
//! which stays strictly positive at `θ = 0` (vacuum fluctuations, `coth → 1`).
//! The complex noise `f` driving the amplitude equation is circular white
//! noise with `⟨f f*⟩ = (D/2)δ` and `⟨ff⟩ = 0`, so the real combination
//! `ξ = f + f*` carries the full intensity `D`.
//!
//! The explicit reservoir is a uniform grid of `N` modes on
//! `[ω_min, ω_max]`; mode `k` gets the effective coupling
//! `g_k = g(ω_k)·√(ρ(ω_k)·Δω)`, which realizes the continuum pair `(g, ρ)`
//! and the damping rate `γ_{n+1} = (n+1)·π·g²(Ω)·ρ(Ω)` at the resonance
//! `Ω = (n+1)ω₀`. Initial bath amplitudes are drawn from the thermal Wigner
//! distribution with `⟨|μ_k|²⟩ = coth(ω_k/2θ)/2` (`= n̄_k + ½`), which is what
//! closes the fluctuation–dissipation relation for the synthesized noise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SystemParams;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("bath must contain at least one mode")]
    EmptyBath,
    #[error("bath window is invalid: omega_min = {omega_min}, omega_max = {omega_max}")]
    InvalidWindow { omega_min: f64, omega_max: f64 },
    #[error("profile value at omega = {omega} is not finite and nonnegative")]
    InvalidProfile { omega: f64 },
    #[error("resonance (n+1)·omega0 = {resonance} lies outside the bath window [{omega_min}, {omega_max}]")]
    ResonanceOutsideWindow {
        resonance: f64,
        omega_min: f64,
        omega_max: f64,
    },
    #[error("autocorrelation estimate needs at least {needed} ensemble members (got {got})")]
    EnsembleTooSmall { needed: usize, got: usize },
    #[error("ensemble members must share one nonzero length")]
    RaggedEnsemble,
    #[error("max_lag {max_lag} must be smaller than the series length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
}

/// Which noise channel drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSpec {
    /// FDR-matched internal noise at the run temperature.
    Internal,
    /// The `θ = 0` limit of the internal noise.
    Vacuum,
    /// Balance-breaking additive noise of free intensity.
    External { intensity: f64 },
    /// Deterministic run.
    None,
}

/// `coth(x)`, with the `x → ∞` limit handled exactly.
pub fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Bose–Einstein occupation `n̄(ω) = 1/(e^{ω/θ} − 1)`; zero at `θ = 0`.
pub fn bose_occupation(omega: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    1.0 / f64::exp_m1(omega / theta)
}

/// Thermal width `⟨|μ|²⟩ = n̄(ω) + ½ = coth(ω/2θ)/2` of a bath mode.
pub fn thermal_width(omega: f64, theta: f64) -> f64 {
    bose_occupation(omega, theta) + 0.5
}

/// Noise intensity `D` (the δ-weight of `⟨ξ(t)ξ(t′)⟩`) for a given channel.
///
/// `Internal` at `θ = 0` silently degrades to `Vacuum` (`coth → 1`).
pub fn noise_intensity(params: &SystemParams, spec: &NoiseSpec) -> f64 {
    let n1 = (params.n + 1) as f64;
    match spec {
        NoiseSpec::Internal => {
            let base = 2.0 * n1 * params.gamma;
            if params.theta == 0.0 {
                base
            } else {
                base * coth(n1 * params.omega0 / (2.0 * params.theta))
            }
        }
        NoiseSpec::Vacuum => 2.0 * n1 * params.gamma,
        NoiseSpec::External { intensity } => *intensity,
        NoiseSpec::None => 0.0,
    }
}

/// Deterministic RNG for a (seed, stream) pair. Ensemble members use the same
/// seed with distinct streams.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One real Gaussian increment with variance `D·dt`.
#[inline]
pub fn real_increment<R: Rng + ?Sized>(rng: &mut R, d: f64, dt: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (d * dt).sqrt() * z
}

/// One circular complex Gaussian increment with `⟨dW dW*⟩ = (D/2)·dt`.
#[inline]
pub fn complex_increment<R: Rng + ?Sized>(rng: &mut R, d: f64, dt: f64) -> Complex64 {
    let sigma = (d * dt / 4.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sigma * re, sigma * im)
}

/// i.i.d. real Gaussian increments with mean 0 and variance `D·dt`.
pub fn sample_noise_increments(d: f64, dt: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, 0);
    (0..count).map(|_| real_increment(&mut rng, d, dt)).collect()
}

/// Circular complex Gaussian increments with `⟨dW dW*⟩ = (D/2)·dt` and
/// `⟨dW dW⟩ = 0`, so `dW + dW*` has variance `D·dt`.
pub fn sample_complex_noise_increments(d: f64, dt: f64, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng_for(seed, 0);
    (0..count)
        .map(|_| complex_increment(&mut rng, d, dt))
        .collect()
}

/// Frequency profile, either constant or tabulated with linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Flat(f64),
    Table(Vec<(f64, f64)>),
}

impl Profile {
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            Profile::Flat(v) => *v,
            Profile::Table(points) => {
                if points.is_empty() {
                    return 0.0;
                }
                if omega <= points[0].0 {
                    return points[0].1;
                }
                for pair in points.windows(2) {
                    let (x0, y0) = pair[0];
                    let (x1, y1) = pair[1];
                    if omega <= x1 {
                        let s = (omega - x0) / (x1 - x0);
                        return y0 + s * (y1 - y0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }
}

/// Discretized reservoir: `N` modes uniformly spaced over a frequency window,
/// with tabulated coupling `g(ω)` and density of states `ρ(ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    pub modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub coupling: Profile,
    pub density: Profile,
}

impl BathConfig {
    pub fn new(
        modes: usize,
        omega_min: f64,
        omega_max: f64,
        coupling: Profile,
        density: Profile,
    ) -> Result<Self, NoiseError> {
        if modes == 0 {
            return Err(NoiseError::EmptyBath);
        }
        if !(omega_min > 0.0 && omega_max > omega_min) {
            return Err(NoiseError::InvalidWindow {
                omega_min,
                omega_max,
            });
        }
        let config = Self {
            modes,
            omega_min,
            omega_max,
            coupling,
            density,
        };
        for &omega in &config.mode_frequencies() {
            let g = config.coupling.eval(omega);
            let rho = config.density.eval(omega);
            if !g.is_finite() || g < 0.0 || !rho.is_finite() || rho < 0.0 {
                return Err(NoiseError::InvalidProfile { omega });
            }
        }
        Ok(config)
    }

    /// Uniform flat-spectrum bath whose continuum damping rate at the
    /// resonance `Ω` equals `gamma`: `g²ρ = gamma / ((n+1)·π)` with
    /// `ρ = 1/Δω`.
    pub fn flat_for_gamma(
        modes: usize,
        omega_min: f64,
        omega_max: f64,
        n: usize,
        gamma: f64,
    ) -> Result<Self, NoiseError> {
        let delta = (omega_max - omega_min) / modes as f64;
        let rho = 1.0 / delta;
        let g = (gamma / ((n + 1) as f64 * std::f64::consts::PI * rho)).sqrt();
        Self::new(
            modes,
            omega_min,
            omega_max,
            Profile::Flat(g),
            Profile::Flat(rho),
        )
    }

    pub fn delta_omega(&self) -> f64 {
        (self.omega_max - self.omega_min) / self.modes as f64
    }

    /// Midpoint frequency grid `ω_k = ω_min + (k + ½)·Δω`.
    pub fn mode_frequencies(&self) -> Vec<f64> {
        let delta = self.delta_omega();
        (0..self.modes)
            .map(|k| self.omega_min + (k as f64 + 0.5) * delta)
            .collect()
    }

    /// Per-mode couplings `g_k = g(ω_k)·√(ρ(ω_k)·Δω)` realizing the continuum
    /// `(g, ρ)` pair on the discrete grid.
    pub fn effective_couplings(&self) -> Vec<f64> {
        let delta = self.delta_omega();
        self.mode_frequencies()
            .iter()
            .map(|&w| self.coupling.eval(w) * (self.density.eval(w) * delta).sqrt())
            .collect()
    }

    /// Time `2π/Δω` after which the discrete bath echoes back.
    pub fn recurrence_time(&self) -> f64 {
        std::f64::consts::TAU / self.delta_omega()
    }

    /// The resonance `Ω = (n+1)·ω₀`, checked to lie inside the window.
    pub fn resonance(&self, params: &SystemParams) -> Result<f64, NoiseError> {
        let resonance = (params.n + 1) as f64 * params.omega0;
        if resonance <= self.omega_min || resonance >= self.omega_max {
            return Err(NoiseError::ResonanceOutsideWindow {
                resonance,
                omega_min: self.omega_min,
                omega_max: self.omega_max,
            });
        }
        Ok(resonance)
    }
}

/// Continuum damping rate `γ_{n+1} = (n+1)·π·g²(Ω)·ρ(Ω)` at `Ω = (n+1)ω₀`.
pub fn gamma_from_bath(config: &BathConfig, params: &SystemParams) -> Result<f64, NoiseError> {
    let resonance = config.resonance(params)?;
    let g = config.coupling.eval(resonance);
    let rho = config.density.eval(resonance);
    Ok((params.n + 1) as f64 * std::f64::consts::PI * g * g * rho)
}

/// Initial bath c-numbers `μ_k(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSample {
    pub mu: Vec<Complex64>,
}

/// Draw `μ_k(0)` from the thermal Wigner distribution:
/// independent complex Gaussians with `⟨μ_k⟩ = 0` and
/// `⟨|μ_k|²⟩ = coth(ω_k/2θ)/2` (vacuum width ½ at `θ = 0`).
pub fn sample_wigner_bath(config: &BathConfig, theta: f64, seed: u64) -> BathSample {
    let mut rng = rng_for(seed, 0);
    let mu = config
        .mode_frequencies()
        .iter()
        .map(|&omega| {
            let sigma = (thermal_width(omega, theta) / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    BathSample { mu }
}

/// Uniform time grid `t_i = t0 + i·dt`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.t0 + i as f64 * self.dt).collect()
    }
}

/// Positive-frequency bath noise in the rotating frame:
/// `f(t) = (n+1)·Σ_k g_k·μ_k(0)·exp[−i(ω_k − (n+1)ω₀)t]`.
///
/// The real noise is `ξ(t) = f + f* = 2·Re f`.
pub fn synthesize_bath_noise(
    sample: &BathSample,
    config: &BathConfig,
    params: &SystemParams,
    grid: &TimeGrid,
) -> Result<Vec<Complex64>, NoiseError> {
    if sample.mu.is_empty() || config.modes == 0 {
        return Err(NoiseError::EmptyBath);
    }
    let resonance = config.resonance(params)?;
    let n1 = (params.n + 1) as f64;
    let couplings = config.effective_couplings();
    let freqs = config.mode_frequencies();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len];
    for ((&omega, &g), &mu) in freqs.iter().zip(&couplings).zip(&sample.mu) {
        let detuning = omega - resonance;
        // Phase recurrence: one complex exp per mode, then multiplies.
        let step = Complex64::from_polar(1.0, -detuning * grid.dt);
        let mut phase = Complex64::from_polar(1.0, -detuning * grid.t0);
        let weight = n1 * g * mu;
        for value in out.iter_mut() {
            *value += weight * phase;
            phase *= step;
        }
    }
    Ok(out)
}

/// `ξ = f + f*`.
pub fn real_noise_from(f: &[Complex64]) -> Vec<f64> {
    f.iter().map(|z| 2.0 * z.re).collect()
}

/// Lag-covariance estimate of an ensemble of real series.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocovariance {
    pub dt: f64,
    /// `C(j·dt)` for `j = 0..=max_lag`.
    pub values: Vec<f64>,
}

impl Autocovariance {
    /// Trapezoid integral of `C(τ)` over `τ ∈ [−τ_max, τ_max]` (C is even),
    /// which estimates the δ-weight `D` of a white process.
    pub fn integrated_intensity(&self) -> f64 {
        let last = self.values.len() - 1;
        if last == 0 {
            return self.values[0] * self.dt;
        }
        let mut sum = self.values[0] + self.values[last];
        for &c in &self.values[1..last] {
            sum += 2.0 * c;
        }
        sum * self.dt
    }
}

/// Unbiased lag-covariance estimate over an ensemble of equally long series,
/// averaging over both members and time origins.
pub fn estimate_autocorrelation(
    members: &[Vec<f64>],
    dt: f64,
    max_lag: usize,
) -> Result<Autocovariance, NoiseError> {
    if members.len() < 100 {
        return Err(NoiseError::EnsembleTooSmall {
            needed: 100,
            got: members.len(),
        });
    }
    let len = members[0].len();
    if len == 0 || members.iter().any(|m| m.len() != len) {
        return Err(NoiseError::RaggedEnsemble);
    }
    if max_lag >= len {
        return Err(NoiseError::LagTooLarge { max_lag, len });
    }
    let total = (members.len() * len) as f64;
    let mean = members.iter().flatten().sum::<f64>() / total;
    let mut values = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let mut acc = 0.0;
        for series in members {
            for i in 0..len - lag {
                acc += (series[i] - mean) * (series[i + lag] - mean);
            }
        }
        values.push(acc / (members.len() * (len - lag)) as f64);
    }
    Ok(Autocovariance { dt, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(n: usize, gamma: f64, theta: f64) -> SystemParams {
        SystemParams::new(1.0, gamma, n, theta).unwrap()
    }

    #[test]
    fn bose_occupation_limits() {
        assert_eq!(bose_occupation(1.0, 0.0), 0.0);
        assert_relative_eq!(
            bose_occupation(1.0, 1.0),
            1.0 / (std::f64::consts::E - 1.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn occupation_coth_identity() {
        let mut rng = rng_for(7, 0);
        for _ in 0..20 {
            let omega = rng.gen_range(0.1..5.0);
            let theta = rng.gen_range(0.05..20.0);
            let lhs = 2.0 * bose_occupation(omega, theta) + 1.0;
            assert_relative_eq!(lhs, coth(omega / (2.0 * theta)), max_relative = 1e-12);
        }
    }

    #[test]
    fn intensity_examples() {
        let d = noise_intensity(&params(1, 0.5, 0.0), &NoiseSpec::Internal);
        assert_eq!(d, 2.0);

        let d = noise_intensity(&params(1, 1.0, 50.0), &NoiseSpec::Internal);
        assert_relative_eq!(d, 4.0 * coth(0.02), max_relative = 1e-15);
        // 4·(1/x + x/3 − x³/45 + …) at x = 0.02.
        assert_relative_eq!(d, 200.026_665_955_58, max_relative = 1e-11);

        assert_eq!(noise_intensity(&params(1, 1.0, 5.0), &NoiseSpec::None), 0.0);
        assert_eq!(
            noise_intensity(&params(1, 1.0, 5.0), &NoiseSpec::External { intensity: 0.25 }),
            0.25
        );
    }

    #[test]
    fn internal_at_zero_theta_equals_vacuum() {
        let p = params(2, 0.7, 0.0);
        assert_eq!(
            noise_intensity(&p, &NoiseSpec::Internal),
            noise_intensity(&p, &NoiseSpec::Vacuum)
        );
        // Vacuum floor is strictly positive.
        assert!(noise_intensity(&p, &NoiseSpec::Vacuum) > 0.0);
    }

    #[test]
    fn real_increments_statistics() {
        let d = 3.0;
        let dt = 0.01;
        let samples = sample_noise_increments(d, dt, 1_000_000, 42);
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let sigma = (d * dt / samples.len() as f64).sqrt();
        assert!(mean.abs() < 4.0 * sigma, "mean {mean} vs 4σ {}", 4.0 * sigma);
        let var = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
        assert_relative_eq!(var, d * dt, max_relative = 0.01);

        assert!(sample_noise_increments(0.0, dt, 100, 1).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn complex_increments_statistics() {
        let d = 2.0;
        let dt = 0.02;
        let samples = sample_complex_noise_increments(d, dt, 1_000_000, 9);
        let n = samples.len() as f64;
        let var_re = samples.iter().map(|z| z.re * z.re).sum::<f64>() / n;
        let var_im = samples.iter().map(|z| z.im * z.im).sum::<f64>() / n;
        let cross = samples.iter().map(|z| z.re * z.im).sum::<f64>() / n;
        assert_relative_eq!(var_re, d * dt / 4.0, max_relative = 0.01);
        assert_relative_eq!(var_im, d * dt / 4.0, max_relative = 0.01);
        assert!(cross.abs() < 4.0 * d * dt / 4.0 / n.sqrt());

        // ξ increments: dW + dW* has variance D·dt.
        let var_xi = samples.iter().map(|z| (2.0 * z.re).powi(2)).sum::<f64>() / n;
        assert_relative_eq!(var_xi, d * dt, max_relative = 0.01);

        assert!(sample_complex_noise_increments(0.0, dt, 50, 3)
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn wigner_bath_widths() {
        let config = BathConfig::new(
            64,
            0.5,
            3.5,
            Profile::Flat(1.0),
            Profile::Flat(1.0),
        )
        .unwrap();
        // Vacuum: ⟨|μ|²⟩ = ½ for every mode.
        let mut acc = 0.0;
        let reps = 2000;
        for rep in 0..reps {
            let sample = sample_wigner_bath(&config, 0.0, rep);
            acc += sample.mu.iter().map(|m| m.norm_sqr()).sum::<f64>();
        }
        let mean = acc / (reps * 64) as f64;
        assert_relative_eq!(mean, 0.5, max_relative = 0.02);

        // High temperature: ⟨|μ_k|²⟩ ≈ θ/ω_k.
        let theta = 200.0;
        let freqs = config.mode_frequencies();
        let mut acc = vec![0.0; 64];
        for rep in 0..reps {
            let sample = sample_wigner_bath(&config, theta, 10_000 + rep);
            for (a, m) in acc.iter_mut().zip(&sample.mu) {
                *a += m.norm_sqr();
            }
        }
        for (a, &w) in acc.iter().zip(&freqs) {
            assert_relative_eq!(a / reps as f64, theta / w, max_relative = 0.1);
        }

        // Determinism.
        assert_eq!(
            sample_wigner_bath(&config, 1.0, 4),
            sample_wigner_bath(&config, 1.0, 4)
        );
    }

    #[test]
    fn single_resonant_mode_gives_constant_f() {
        // One mode exactly at the resonance: zero detuning, f(t) constant.
        let config = BathConfig::new(1, 1.9, 2.1, Profile::Flat(0.3), Profile::Flat(5.0)).unwrap();
        let p = params(1, 0.1, 0.0);
        let sample = BathSample {
            mu: vec![Complex64::new(0.7, -0.2)],
        };
        let grid = TimeGrid {
            t0: 0.0,
            dt: 0.1,
            len: 64,
        };
        let f = synthesize_bath_noise(&sample, &config, &p, &grid).unwrap();
        let g_eff = config.effective_couplings()[0];
        let expected = 2.0 * g_eff * sample.mu[0];
        for z in &f {
            assert_relative_eq!(z.re, expected.re, max_relative = 1e-12);
            assert_relative_eq!(z.im, expected.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn synthesized_noise_is_zero_mean() {
        let config = BathConfig::flat_for_gamma(128, 1.0, 3.0, 1, 0.05).unwrap();
        let p = params(1, 0.05, 1.0);
        let grid = TimeGrid {
            t0: 0.0,
            dt: 0.25,
            len: 40,
        };
        let members = 400;
        let mut mean = vec![0.0; grid.len];
        let mut mean_sq = vec![0.0; grid.len];
        for seed in 0..members {
            let sample = sample_wigner_bath(&config, p.theta, seed);
            let f = synthesize_bath_noise(&sample, &config, &p, &grid).unwrap();
            for (i, x) in real_noise_from(&f).iter().enumerate() {
                mean[i] += x;
                mean_sq[i] += x * x;
            }
        }
        for i in 0..grid.len {
            let m = mean[i] / members as f64;
            let var = mean_sq[i] / members as f64 - m * m;
            let sigma = (var / members as f64).sqrt();
            assert!(m.abs() < 4.0 * sigma, "t index {i}: mean {m} vs 4σ {sigma}");
        }
    }

    #[test]
    fn ensemble_autocovariance_matches_cosine_sum() {
        // Small bath, moderate ensemble: the estimated C(τ) must match the
        // direct cosine sum Σ (n+1)²·g_k²·coth(ω_k/2θ)·cos(Δ_k·τ).
        let config = BathConfig::new(8, 1.0, 3.0, Profile::Flat(0.2), Profile::Flat(1.5)).unwrap();
        let p = params(1, 0.1, 2.0);
        let grid = TimeGrid {
            t0: 0.0,
            dt: 0.2,
            len: 400,
        };
        let members: Vec<Vec<f64>> = (0..4000)
            .map(|seed| {
                let sample = sample_wigner_bath(&config, p.theta, seed);
                real_noise_from(&synthesize_bath_noise(&sample, &config, &p, &grid).unwrap())
            })
            .collect();
        let est = estimate_autocorrelation(&members, grid.dt, 30).unwrap();

        let resonance = config.resonance(&p).unwrap();
        let couplings = config.effective_couplings();
        let freqs = config.mode_frequencies();
        for (lag, &c_hat) in est.values.iter().enumerate() {
            let tau = lag as f64 * grid.dt;
            let direct: f64 = freqs
                .iter()
                .zip(&couplings)
                .map(|(&w, &g)| {
                    4.0 * g * g * coth(w / (2.0 * p.theta)) * ((w - resonance) * tau).cos()
                })
                .sum();
            assert_relative_eq!(c_hat, direct, max_relative = 0.08, epsilon = 0.01);
        }
    }

    #[test]
    fn white_noise_integrated_intensity_recovers_d() {
        // FDR closure at the generator level, 10^4-member ensemble.
        let d = 5.0;
        let dt = 0.05;
        let members: Vec<Vec<f64>> = (0..10_000)
            .map(|seed| {
                sample_noise_increments(d, dt, 100, seed)
                    .into_iter()
                    .map(|dw| dw / dt)
                    .collect()
            })
            .collect();
        let est = estimate_autocorrelation(&members, dt, 10).unwrap();
        assert_relative_eq!(est.integrated_intensity(), d, max_relative = 0.10);
    }

    #[test]
    fn zero_input_gives_zero_autocovariance() {
        let members = vec![vec![0.0; 256]; 100];
        let est = estimate_autocorrelation(&members, 0.1, 10).unwrap();
        assert!(est.values.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn autocorrelation_input_validation() {
        let members = vec![vec![0.0; 16]; 10];
        assert_eq!(
            estimate_autocorrelation(&members, 0.1, 4).unwrap_err(),
            NoiseError::EnsembleTooSmall { needed: 100, got: 10 }
        );
        let members = vec![vec![0.0; 16]; 100];
        assert!(matches!(
            estimate_autocorrelation(&members, 0.1, 16).unwrap_err(),
            NoiseError::LagTooLarge { .. }
        ));
    }

    #[test]
    fn gamma_from_bath_examples() {
        let p = params(1, 0.1, 0.0);
        let config = BathConfig::new(32, 1.0, 3.0, Profile::Flat(0.2), Profile::Flat(1.5)).unwrap();
        let expected = 2.0 * std::f64::consts::PI * 0.04 * 1.5;
        assert_relative_eq!(gamma_from_bath(&config, &p).unwrap(), expected, max_relative = 1e-14);

        // Doubling g²ρ doubles γ.
        let doubled =
            BathConfig::new(32, 1.0, 3.0, Profile::Flat(0.2), Profile::Flat(3.0)).unwrap();
        assert_relative_eq!(
            gamma_from_bath(&doubled, &p).unwrap(),
            2.0 * expected,
            max_relative = 1e-14
        );

        // Resonance outside the window errors.
        let narrow = BathConfig::new(8, 3.0, 4.0, Profile::Flat(0.2), Profile::Flat(1.0)).unwrap();
        assert!(matches!(
            gamma_from_bath(&narrow, &p).unwrap_err(),
            NoiseError::ResonanceOutsideWindow { .. }
        ));
    }

    #[test]
    fn flat_for_gamma_round_trips() {
        let p = params(1, 0.0125, 0.0);
        let config = BathConfig::flat_for_gamma(512, 1.0, 3.0, 1, 0.0125).unwrap();
        assert_relative_eq!(gamma_from_bath(&config, &p).unwrap(), 0.0125, max_relative = 1e-12);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            sample_noise_increments(1.0, 0.1, 64, 5),
            sample_noise_increments(1.0, 0.1, 64, 5)
        );
        assert_eq!(
            sample_complex_noise_increments(1.0, 0.1, 64, 5),
            sample_complex_noise_increments(1.0, 0.1, 64, 5)
        );
    }

    proptest! {
        #[test]
        fn intensity_is_monotone_in_theta(
            gamma in 0.01f64..5.0,
            n in 1usize..4,
            theta1 in 0.0f64..20.0,
            dtheta in 0.0f64..20.0,
        ) {
            let p1 = params(n, gamma, theta1);
            let p2 = params(n, gamma, theta1 + dtheta);
            let d1 = noise_intensity(&p1, &NoiseSpec::Internal);
            let d2 = noise_intensity(&p2, &NoiseSpec::Internal);
            prop_assert!(d2 >= d1 - 1e-12 * d1.abs());
            // Never below the vacuum floor.
            prop_assert!(d1 >= noise_intensity(&p1, &NoiseSpec::Vacuum) - 1e-12);
        }
    }
}
