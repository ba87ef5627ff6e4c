//! Bundled run configurations.
//!
//! The `fig*` presets bundle the standard phase-portrait scenarios for this
//! oscillator family; the `table1_*` presets carry the three degree-4 damping
//! rows. The `(a)` variants are
//! deterministic, the `(b)` variants use internal FDR-matched noise, and
//! `fig1c` uses external noise with the intensity the internal channel would
//! have at the same temperature. Run lengths, timesteps, and the initial
//! conditions `(0.1, 0)` / `(4, 0)` are toolkit choices; the stiff `fig5`
//! pair needs a much finer step because its `ẋ⁶` damping reacts violently to
//! the noise-driven velocity excursions.

use std::f64::consts::TAU;

use crate::config::{
    Basis, ConfigError, DampingConfig, NoiseConfig, NoiseKind, OutputConfig, ParamsConfig,
    RunConfig, RunConfigFile,
};
use crate::dynamics::{Method, Representation};
use crate::model::{gamma_for_epsilon, DampingSpec, Family, SystemParams};
use crate::noise::{noise_intensity, NoiseSpec};

pub const PRESET_NAMES: [&str; 14] = [
    "fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a",
    "fig5b", "table1_1", "table1_2", "table1_3",
];

struct PresetDef {
    family: Family,
    basis: Basis,
    coeffs: &'static [f64],
    epsilon: f64,
    theta: f64,
    noise: NoiseKind,
    dt_periods: f64,
    periods: f64,
    sample_every: usize,
    seed: u64,
}

fn def(name: &str) -> Option<PresetDef> {
    let fig1 = |noise, seed| PresetDef {
        family: Family::Position,
        basis: Basis::A,
        coeffs: &[0.0, 1.0],
        epsilon: 0.01,
        theta: 50.0,
        noise,
        dt_periods: 1e-3,
        periods: 400.0,
        sample_every: 10,
        seed,
    };
    let fig2 = |noise, seed| PresetDef {
        family: Family::Position,
        basis: Basis::A,
        coeffs: &[-1.0, 1.0],
        epsilon: 2.0,
        theta: 0.0,
        noise,
        dt_periods: 1e-3,
        periods: 400.0,
        sample_every: 10,
        seed,
    };
    let fig3 = |noise, seed| PresetDef {
        family: Family::Velocity,
        basis: Basis::Beta,
        coeffs: &[-1.0, 1.0],
        epsilon: 1.0,
        theta: 10.0,
        noise,
        dt_periods: 2.5e-4,
        periods: 200.0,
        sample_every: 40,
        seed,
    };
    let fig4 = |noise, seed| PresetDef {
        family: Family::Position,
        basis: Basis::A,
        coeffs: &[-1.0, 1.0, -0.144, 0.005],
        epsilon: 0.01,
        theta: 0.0,
        noise,
        dt_periods: 1e-3,
        periods: 600.0,
        sample_every: 10,
        seed,
    };
    let fig5 = |noise, seed| PresetDef {
        family: Family::Velocity,
        basis: Basis::Beta,
        coeffs: &[-1.0, -1.0, 1.0, 1.0],
        epsilon: 1.5,
        theta: 20.0,
        noise,
        dt_periods: 2e-6,
        periods: 150.0,
        sample_every: 2000,
        seed,
    };
    let table1 = |coeffs, seed| PresetDef {
        family: Family::Position,
        basis: Basis::M,
        coeffs,
        epsilon: 0.1,
        theta: 0.0,
        noise: NoiseKind::None,
        dt_periods: 1e-3,
        periods: 200.0,
        sample_every: 10,
        seed,
    };
    Some(match name {
        "fig1a" => fig1(NoiseKind::None, 101),
        "fig1b" => fig1(NoiseKind::Internal, 102),
        "fig1c" => fig1(NoiseKind::External, 103),
        "fig2a" => fig2(NoiseKind::None, 201),
        "fig2b" => fig2(NoiseKind::Internal, 202),
        "fig3a" => fig3(NoiseKind::None, 301),
        "fig3b" => fig3(NoiseKind::Internal, 302),
        "fig4a" => fig4(NoiseKind::None, 401),
        "fig4b" => fig4(NoiseKind::Internal, 402),
        "fig5a" => fig5(NoiseKind::None, 501),
        "fig5b" => fig5(NoiseKind::Internal, 502),
        "table1_1" => table1(&[-1.0, 1.0, 2.0], 601),
        "table1_2" => table1(&[0.0, -1.0, 2.0], 602),
        "table1_3" => table1(&[-1.0, 0.0, 2.0], 603),
        _ => return None,
    })
}

/// The bundled configuration for a preset name.
pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    let def = def(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    let omega0 = 1.0;
    let spec = match def.basis {
        Basis::A => DampingSpec::from_a(def.family, def.coeffs),
        Basis::M => DampingSpec::from_m(def.family, def.coeffs.to_vec()),
        Basis::Beta => DampingSpec::from_beta(def.family, def.coeffs),
    }
    .expect("preset coefficients are valid");
    let gamma = gamma_for_epsilon(def.epsilon, &spec);
    let (noise_kind, intensity) = match def.noise {
        NoiseKind::External => {
            // Intensity matched to the internal channel at the same
            // temperature; the insertion point is what differs.
            let params = SystemParams::new(omega0, gamma, spec.order(), def.theta)
                .expect("preset parameters are valid");
            let d = noise_intensity(&params, &NoiseSpec::Internal);
            (NoiseKind::External, Some(d))
        }
        kind => (kind, None),
    };
    let file = RunConfigFile {
        scheme: Method::Heun,
        dt: Some(def.dt_periods * TAU / omega0),
        allow_coarse_dt: false,
        representation: Representation::Phase,
        t_total: def.periods * TAU / omega0,
        seed: def.seed,
        ensemble_size: 1,
        sample_every: def.sample_every,
        kappa: 1.0,
        burn_in: 0.3,
        initial: vec![[0.1, 0.0], [4.0, 0.0]],
        damping: DampingConfig {
            family: def.family,
            basis: def.basis,
            coeffs: def.coeffs.to_vec(),
        },
        params: ParamsConfig {
            omega0,
            gamma,
            n: spec.order(),
            theta: def.theta,
        },
        noise: NoiseConfig {
            kind: noise_kind,
            intensity,
        },
        outputs: OutputConfig {
            dir: format!("runs/{name}"),
        },
    };
    file.validate()
}
