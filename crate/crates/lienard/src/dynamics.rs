//! Time-stepping for the three representations of the system.
//!
//! The complex amplitude equation is integrated in the rotating frame exactly
//! as written,
//!
//! ```text
//! dα = −(γ_{n+1}/m_n)·P(|α|²)·α·dt + (α*)^n·dW,
//! ```
//!
//! with no `−iω₀α` term; the frame rotation is reinstated only in
//! [`amplitude_to_phase`]. The second-order form steps `(ẋ = v,
//! v̇ = −ω₀²x − (γ/m_n)·F·v + η)` where `F` is the damping polynomial in `x`
//! (Position family) or in `v` (Velocity family) and `η` is an additive real
//! white-noise increment of intensity `κ·D` (κ configurable, default 1). The
//! explicit-bath form integrates the coupled deterministic system
//!
//! ```text
//! dα/dt  = −iω₀α + (n+1)·Σ_k g_k (α*)^n μ_k
//! dμ_k/dt = −iω_k μ_k − g_k α^{n+1}
//! ```
//!
//! from Wigner-sampled initial bath amplitudes.
//!
//! Euler–Maruyama implements the Itô reading, Heun (predictor–corrector with
//! the same noise increment and predictor-averaged diffusion) the
//! Stratonovich one.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{self, DampingSpec, Family, SystemParams};
use crate::noise::{
    self, BathConfig, BathSample, NoiseError, NoiseSpec, complex_increment, real_increment,
};

/// States larger than this abort integration. The continuum flow contracts
/// at large radius for every valid spec, but an explicit scheme driven into
/// its stiffness limit (coarse dt against strong polynomial damping) diverges
/// and must fail loudly rather than hang.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Default timestep fraction of the period, `dt = 1e-3·(2π/ω₀)`.
pub const DEFAULT_DT_PERIODS: f64 = 1e-3;

/// Largest `dt/(2π/ω₀)` accepted without the explicit override flag.
pub const MAX_DT_PERIODS: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state blew up at step {step} (t = {time:.6e}): |state| = {magnitude:.3e}")]
    BlowUp { step: u64, time: f64, magnitude: f64 },
    #[error("timestep {dt} is not positive and finite")]
    InvalidTimestep { dt: f64 },
    #[error(
        "timestep {dt:.3e} exceeds {MAX_DT_PERIODS}·(2π/ω₀) = {limit:.3e}; \
         set allow_coarse_dt to override"
    )]
    CoarseTimestep { dt: f64, limit: f64 },
    #[error("total time {t_total} is not positive and finite")]
    InvalidDuration { t_total: f64 },
    #[error("bath timestep {dt:.3e} does not resolve the fastest bath mode (need dt <= {limit:.3e})")]
    BathTimestep { dt: f64, limit: f64 },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
}

/// Slowly-varying complex amplitude `α(t)` (rotating frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeState {
    pub alpha: Complex64,
}

/// Phase-space pair `(x, ẋ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EulerMaruyama,
    Heun,
}

/// Integration scheme: method plus timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorScheme {
    pub method: Method,
    pub dt: f64,
    /// Permit `dt` above the `0.01·(2π/ω₀)` guard.
    #[serde(default)]
    pub allow_coarse_dt: bool,
}

impl IntegratorScheme {
    pub fn heun(dt: f64) -> Self {
        Self {
            method: Method::Heun,
            dt,
            allow_coarse_dt: false,
        }
    }

    pub fn euler_maruyama(dt: f64) -> Self {
        Self {
            method: Method::EulerMaruyama,
            dt,
            allow_coarse_dt: false,
        }
    }

    pub fn validate(&self, params: &SystemParams) -> Result<(), DynamicsError> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(DynamicsError::InvalidTimestep { dt: self.dt });
        }
        let limit = MAX_DT_PERIODS * params.period();
        if !self.allow_coarse_dt && self.dt > limit {
            return Err(DynamicsError::CoarseTimestep { dt: self.dt, limit });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Amplitude,
    Phase,
}

fn eval_poly(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

/// Integer power of a complex number (`n` is the small nonlinearity order).
fn cpow(z: Complex64, n: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        acc *= z;
    }
    acc
}

/// Deterministic drift of the amplitude equation:
/// `−(γ_{n+1}/m_n)·P(|α|²)·α`.
pub fn drift_amplitude(alpha: Complex64, params: &SystemParams, spec: &DampingSpec) -> Complex64 {
    let rate = params.gamma / spec.leading();
    -rate * eval_poly(spec.m(), alpha.norm_sqr()) * alpha
}

/// Noise insertion for one amplitude step.
#[derive(Debug, Clone, Copy)]
enum AmplitudeNoise {
    /// FDR-matched multiplicative noise `(α*)^n·dW`, `⟨dW dW*⟩ = (D/2)dt`.
    Multiplicative { d: f64 },
    /// External additive noise mapped through the rotating frame:
    /// `⟨dW dW*⟩ = D/(4ω₀²)·dt`.
    Additive { d_eff: f64 },
    Off,
}

impl AmplitudeNoise {
    fn build(params: &SystemParams, noise: &NoiseSpec) -> Self {
        match noise {
            NoiseSpec::Internal | NoiseSpec::Vacuum => AmplitudeNoise::Multiplicative {
                d: noise::noise_intensity(params, noise),
            },
            NoiseSpec::External { .. } => {
                let d = noise::noise_intensity(params, noise);
                AmplitudeNoise::Additive {
                    d_eff: d / (2.0 * params.omega0 * params.omega0),
                }
            }
            NoiseSpec::None => AmplitudeNoise::Off,
        }
    }
}

fn check_amplitude(alpha: Complex64) -> Result<Complex64, DynamicsError> {
    let magnitude = alpha.norm();
    if !magnitude.is_finite() || magnitude > BLOWUP_THRESHOLD {
        return Err(DynamicsError::BlowUp {
            step: 0,
            time: f64::NAN,
            magnitude,
        });
    }
    Ok(alpha)
}

fn step_amplitude_inner<R: Rng + ?Sized>(
    alpha: Complex64,
    params: &SystemParams,
    spec: &DampingSpec,
    channel: AmplitudeNoise,
    scheme: &IntegratorScheme,
    rng: &mut R,
) -> Result<Complex64, DynamicsError> {
    let dt = scheme.dt;
    let n = spec.order();
    let (dw, multiplicative) = match channel {
        AmplitudeNoise::Multiplicative { d } => (complex_increment(rng, d, dt), true),
        AmplitudeNoise::Additive { d_eff } => (complex_increment(rng, d_eff, dt), false),
        AmplitudeNoise::Off => (Complex64::new(0.0, 0.0), true),
    };
    let diffusion = |a: Complex64| {
        if multiplicative {
            cpow(a.conj(), n) * dw
        } else {
            dw
        }
    };
    let next = match scheme.method {
        Method::EulerMaruyama => alpha + drift_amplitude(alpha, params, spec) * dt + diffusion(alpha),
        Method::Heun => {
            let k1 = drift_amplitude(alpha, params, spec);
            let predictor = alpha + k1 * dt + diffusion(alpha);
            let k2 = drift_amplitude(predictor, params, spec);
            alpha + 0.5 * dt * (k1 + k2) + 0.5 * (diffusion(alpha) + diffusion(predictor))
        }
    };
    check_amplitude(next)
}

/// One step of the amplitude equation.
pub fn step_amplitude<R: Rng + ?Sized>(
    state: AmplitudeState,
    params: &SystemParams,
    spec: &DampingSpec,
    noise: &NoiseSpec,
    scheme: &IntegratorScheme,
    rng: &mut R,
) -> Result<AmplitudeState, DynamicsError> {
    let channel = AmplitudeNoise::build(params, noise);
    step_amplitude_inner(state.alpha, params, spec, channel, scheme, rng)
        .map(|alpha| AmplitudeState { alpha })
}

/// Cached second-order drift: `(ẋ = v, v̇ = −ω₀²x − rate·F(y)·v)` with `y`
/// the family variable.
struct PhaseDrift {
    omega0_sq: f64,
    rate: f64,
    coeffs: Vec<f64>,
    family: Family,
}

impl PhaseDrift {
    fn new(params: &SystemParams, spec: &DampingSpec) -> Self {
        Self {
            omega0_sq: params.omega0 * params.omega0,
            rate: params.gamma / spec.leading(),
            coeffs: spec.phase_coeffs(),
            family: spec.family(),
        }
    }

    #[inline]
    fn eval(&self, s: PhaseState) -> (f64, f64) {
        let y = match self.family {
            Family::Position => s.x,
            Family::Velocity => s.v,
        };
        let damping = self.rate * eval_poly(&self.coeffs, y * y);
        (s.v, -self.omega0_sq * s.x - damping * s.v)
    }
}

fn check_phase(state: PhaseState) -> Result<PhaseState, DynamicsError> {
    let magnitude = state.x.abs().max(state.v.abs());
    if !magnitude.is_finite() || magnitude > BLOWUP_THRESHOLD {
        return Err(DynamicsError::BlowUp {
            step: 0,
            time: f64::NAN,
            magnitude,
        });
    }
    Ok(state)
}

fn step_phase_inner<R: Rng + ?Sized>(
    state: PhaseState,
    drift: &PhaseDrift,
    eta_intensity: f64,
    scheme: &IntegratorScheme,
    rng: &mut R,
) -> Result<PhaseState, DynamicsError> {
    let dt = scheme.dt;
    let dv_noise = if eta_intensity > 0.0 {
        real_increment(rng, eta_intensity, dt)
    } else {
        0.0
    };
    let next = match scheme.method {
        Method::EulerMaruyama => {
            let (dx, dv) = drift.eval(state);
            PhaseState {
                x: state.x + dx * dt,
                v: state.v + dv * dt + dv_noise,
            }
        }
        Method::Heun => {
            let (dx1, dv1) = drift.eval(state);
            let predictor = PhaseState {
                x: state.x + dx1 * dt,
                v: state.v + dv1 * dt + dv_noise,
            };
            let (dx2, dv2) = drift.eval(predictor);
            PhaseState {
                x: state.x + 0.5 * dt * (dx1 + dx2),
                v: state.v + 0.5 * dt * (dv1 + dv2) + dv_noise,
            }
        }
    };
    check_phase(next)
}

/// One step of the second-order system. `kappa` scales the noise intensity
/// entering the `v̇` equation (`η` has intensity `κ·D`).
pub fn step_phase<R: Rng + ?Sized>(
    state: PhaseState,
    params: &SystemParams,
    spec: &DampingSpec,
    noise: &NoiseSpec,
    kappa: f64,
    scheme: &IntegratorScheme,
    rng: &mut R,
) -> Result<PhaseState, DynamicsError> {
    let drift = PhaseDrift::new(params, spec);
    let eta = kappa * noise::noise_intensity(params, noise);
    step_phase_inner(state, &drift, eta, scheme, rng)
}

/// Rotating amplitude to phase space at time `t`.
///
/// Position family: `x = 2·Re(α e^{iω₀t})`, `ẋ = −2ω₀·Im(α e^{iω₀t})`.
/// Velocity family: `x = 2·Re(α e^{iω₀t})/ω₀`, `ẋ = −2·Im(α e^{iω₀t})`.
pub fn amplitude_to_phase(
    alpha: Complex64,
    t: f64,
    params: &SystemParams,
    family: Family,
) -> PhaseState {
    let z = alpha * Complex64::from_polar(1.0, params.omega0 * t);
    match family {
        Family::Position => PhaseState {
            x: 2.0 * z.re,
            v: -2.0 * params.omega0 * z.im,
        },
        Family::Velocity => PhaseState {
            x: 2.0 * z.re / params.omega0,
            v: -2.0 * z.im,
        },
    }
}

/// Exact inverse of [`amplitude_to_phase`].
pub fn phase_to_amplitude(
    state: PhaseState,
    t: f64,
    params: &SystemParams,
    family: Family,
) -> Complex64 {
    let z = match family {
        Family::Position => Complex64::new(state.x / 2.0, -state.v / (2.0 * params.omega0)),
        Family::Velocity => Complex64::new(params.omega0 * state.x / 2.0, -state.v / 2.0),
    };
    z * Complex64::from_polar(1.0, -params.omega0 * t)
}

/// Sampled trajectory plus everything needed to replay it bit-exactly.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    /// Spacing of stored samples (`integration_dt · sample_every`).
    pub dt: f64,
    pub data: TrajectoryData,
    pub meta: TrajectoryMeta,
}

#[derive(Debug, Clone)]
pub enum TrajectoryData {
    Amplitude(Vec<Complex64>),
    Phase(Vec<PhaseState>),
}

#[derive(Debug, Clone)]
pub struct TrajectoryMeta {
    pub seed: u64,
    pub stream: u64,
    pub scheme: IntegratorScheme,
    pub sample_every: usize,
    pub representation: Representation,
    pub spec: DampingSpec,
    pub params: SystemParams,
    pub noise: NoiseSpec,
    pub kappa: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        match &self.data {
            TrajectoryData::Amplitude(v) => v.len(),
            TrajectoryData::Phase(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    /// Radius `r = |α|` of each sample; phase samples are mapped through the
    /// family's substitution (`½√(x² + v²/ω₀²)` for Position,
    /// `½√(ω₀²x² + v²)` for Velocity).
    pub fn radius_series(&self) -> Vec<f64> {
        let omega0 = self.meta.params.omega0;
        match &self.data {
            TrajectoryData::Amplitude(samples) => samples.iter().map(|a| a.norm()).collect(),
            TrajectoryData::Phase(samples) => samples
                .iter()
                .map(|s| match self.meta.spec.family() {
                    Family::Position => 0.5 * (s.x * s.x + (s.v / omega0).powi(2)).sqrt(),
                    Family::Velocity => 0.5 * ((omega0 * s.x).powi(2) + s.v * s.v).sqrt(),
                })
                .collect(),
        }
    }

    pub fn phase_samples(&self) -> Option<&[PhaseState]> {
        match &self.data {
            TrajectoryData::Phase(v) => Some(v),
            TrajectoryData::Amplitude(_) => None,
        }
    }

    pub fn amplitude_samples(&self) -> Option<&[Complex64]> {
        match &self.data {
            TrajectoryData::Amplitude(v) => Some(v),
            TrajectoryData::Phase(_) => None,
        }
    }
}

/// Integration settings shared by a run.
#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub scheme: IntegratorScheme,
    pub t_total: f64,
    pub seed: u64,
    /// RNG stream, distinct per ensemble member.
    pub stream: u64,
    pub representation: Representation,
    /// Store every k-th step (k ≥ 1).
    pub sample_every: usize,
    pub kappa: f64,
}

impl RunSettings {
    pub fn new(scheme: IntegratorScheme, t_total: f64, seed: u64, representation: Representation) -> Self {
        Self {
            scheme,
            t_total,
            seed,
            stream: 0,
            representation,
            sample_every: 1,
            kappa: 1.0,
        }
    }
}

fn blow_up_at(err: DynamicsError, step: u64, dt: f64) -> DynamicsError {
    match err {
        DynamicsError::BlowUp { magnitude, .. } => DynamicsError::BlowUp {
            step,
            time: step as f64 * dt,
            magnitude,
        },
        other => other,
    }
}

/// Integrate one trajectory. The initial condition is always a phase-space
/// pair; amplitude-representation runs convert it through
/// [`phase_to_amplitude`] at `t = 0`.
pub fn integrate(
    initial: PhaseState,
    params: &SystemParams,
    spec: &DampingSpec,
    noise: &NoiseSpec,
    settings: &RunSettings,
) -> Result<Trajectory, DynamicsError> {
    params.check_spec(spec)?;
    settings.scheme.validate(params)?;
    if !settings.t_total.is_finite() || settings.t_total <= 0.0 {
        return Err(DynamicsError::InvalidDuration {
            t_total: settings.t_total,
        });
    }
    let dt = settings.scheme.dt;
    let stride = settings.sample_every.max(1);
    let steps = (settings.t_total / dt).round().max(1.0) as u64;
    let mut rng = noise::rng_for(settings.seed, settings.stream);

    let meta = TrajectoryMeta {
        seed: settings.seed,
        stream: settings.stream,
        scheme: settings.scheme,
        sample_every: stride,
        representation: settings.representation,
        spec: spec.clone(),
        params: *params,
        noise: *noise,
        kappa: settings.kappa,
    };

    let capacity = (steps / stride as u64 + 1) as usize;
    let data = match settings.representation {
        Representation::Amplitude => {
            let channel = AmplitudeNoise::build(params, noise);
            let mut alpha = phase_to_amplitude(initial, 0.0, params, spec.family());
            let mut samples = Vec::with_capacity(capacity);
            samples.push(alpha);
            for step in 0..steps {
                alpha =
                    step_amplitude_inner(alpha, params, spec, channel, &settings.scheme, &mut rng)
                        .map_err(|e| blow_up_at(e, step + 1, dt))?;
                if (step + 1) % stride as u64 == 0 {
                    samples.push(alpha);
                }
            }
            TrajectoryData::Amplitude(samples)
        }
        Representation::Phase => {
            let drift = PhaseDrift::new(params, spec);
            let eta = settings.kappa * noise::noise_intensity(params, noise);
            let mut state = initial;
            let mut samples = Vec::with_capacity(capacity);
            samples.push(state);
            for step in 0..steps {
                state = step_phase_inner(state, &drift, eta, &settings.scheme, &mut rng)
                    .map_err(|e| blow_up_at(e, step + 1, dt))?;
                if (step + 1) % stride as u64 == 0 {
                    samples.push(state);
                }
            }
            TrajectoryData::Phase(samples)
        }
    };

    Ok(Trajectory {
        t0: 0.0,
        dt: dt * stride as f64,
        data,
        meta,
    })
}

/// Result of an explicit system+bath integration.
#[derive(Debug, Clone)]
pub struct BathRun {
    pub t0: f64,
    /// Spacing of stored samples.
    pub dt: f64,
    /// Lab-frame system amplitude `⟨â⟩(t)`.
    pub alpha: Vec<Complex64>,
    /// Collective bath force `(n+1)·Σ_k g_k μ_k(t)` at the same samples.
    pub bath_force: Vec<Complex64>,
    /// Set when `t_total` exceeds the bath recurrence time `2π/Δω`.
    pub recurrence_warning: bool,
}

/// Deterministic Heun integration of the coupled system+reservoir equations
/// from sampled bath initial conditions. The reduced `α`-trajectory exhibits
/// emergent damping and noise.
pub fn integrate_bath_system(
    sample: &BathSample,
    config: &BathConfig,
    params: &SystemParams,
    alpha0: Complex64,
    t_total: f64,
    dt: f64,
    sample_every: usize,
) -> Result<BathRun, DynamicsError> {
    if sample.mu.len() != config.modes || config.modes == 0 {
        return Err(NoiseError::EmptyBath.into());
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(DynamicsError::InvalidTimestep { dt });
    }
    let limit = 0.1 / config.omega_max;
    if dt > limit {
        return Err(DynamicsError::BathTimestep { dt, limit });
    }
    if !t_total.is_finite() || t_total <= 0.0 {
        return Err(DynamicsError::InvalidDuration { t_total });
    }
    config.resonance(params)?;

    let n = params.n;
    let n1 = (n + 1) as f64;
    let freqs = config.mode_frequencies();
    let couplings = config.effective_couplings();
    let stride = sample_every.max(1);
    let steps = (t_total / dt).round().max(1.0) as u64;

    let mut alpha = alpha0;
    let mut mu = sample.mu.clone();
    let modes = mu.len();

    let force = |mu: &[Complex64]| -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (m, &g) in mu.iter().zip(&couplings) {
            s += g * m;
        }
        n1 * s
    };

    // d/dt of (alpha, mu) written into scratch buffers.
    let i_unit = Complex64::new(0.0, 1.0);
    let derivative = |a: Complex64, mu: &[Complex64], da: &mut Complex64, dmu: &mut [Complex64]| {
        let a_n1 = cpow(a, n + 1);
        let mut s = Complex64::new(0.0, 0.0);
        for ((m, &g), (&w, d)) in mu
            .iter()
            .zip(&couplings)
            .zip(freqs.iter().zip(dmu.iter_mut()))
        {
            s += g * m;
            *d = -i_unit * w * m - g * a_n1;
        }
        *da = -i_unit * params.omega0 * a + n1 * cpow(a.conj(), n) * s;
    };

    let capacity = (steps / stride as u64 + 1) as usize;
    let mut alpha_samples = Vec::with_capacity(capacity);
    let mut force_samples = Vec::with_capacity(capacity);
    alpha_samples.push(alpha);
    force_samples.push(force(&mu));

    let mut k1_mu = vec![Complex64::new(0.0, 0.0); modes];
    let mut k2_mu = vec![Complex64::new(0.0, 0.0); modes];
    let mut mu_pred = vec![Complex64::new(0.0, 0.0); modes];
    let mut k1_a = Complex64::new(0.0, 0.0);
    let mut k2_a = Complex64::new(0.0, 0.0);

    for step in 0..steps {
        derivative(alpha, &mu, &mut k1_a, &mut k1_mu);
        let alpha_pred = alpha + k1_a * dt;
        for ((p, m), k) in mu_pred.iter_mut().zip(&mu).zip(&k1_mu) {
            *p = m + k * dt;
        }
        derivative(alpha_pred, &mu_pred, &mut k2_a, &mut k2_mu);
        alpha += 0.5 * dt * (k1_a + k2_a);
        for ((m, k1), k2) in mu.iter_mut().zip(&k1_mu).zip(&k2_mu) {
            *m += 0.5 * dt * (k1 + k2);
        }
        check_amplitude(alpha).map_err(|e| blow_up_at(e, step + 1, dt))?;
        if (step + 1) % stride as u64 == 0 {
            alpha_samples.push(alpha);
            force_samples.push(force(&mu));
        }
    }

    Ok(BathRun {
        t0: 0.0,
        dt: dt * stride as f64,
        alpha: alpha_samples,
        bath_force: force_samples,
        recurrence_warning: t_total > config.recurrence_time(),
    })
}
