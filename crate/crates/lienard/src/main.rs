//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
//! 4 statistical test failure (`noise-check`), 1 i/o failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use lienard::analysis::{self, linear_fit};
use lienard::config::{self, ConfigError};
use lienard::driver::{self, DriverError, RunSummary};
use lienard::dynamics::{integrate_bath_system, DynamicsError};
use lienard::model::{DampingSpec, Family, ModelError, SystemParams};
use lienard::noise::{
    estimate_autocorrelation, gamma_from_bath, noise_intensity, rng_for, sample_wigner_bath,
    BathConfig, NoiseError, NoiseSpec,
};
use lienard::presets;

#[derive(Parser)]
#[command(name = "lienard", version, about = "Noisy Liénard-type oscillator toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML or JSON config file.
    Simulate {
        /// Path to the config document.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's outputs.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Limit-cycle census from the radial polynomial.
    Census(SpecArgs),
    /// Krylov-Bogoliubov averaging oracle for the second-order equation.
    Average(SpecArgs),
    /// Statistical check that generated noise carries the configured
    /// intensity (exit code 4 on failure).
    NoiseCheck(NoiseCheckArgs),
    /// Explicit system+reservoir integration from Wigner-sampled initial
    /// conditions.
    Bath(BathArgs),
    /// Run a bundled preset (or print/list them).
    Preset {
        /// Preset name, e.g. fig2b. See --list.
        name: Option<String>,
        /// Output directory (defaults to runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset config as TOML instead of running it.
        #[arg(long)]
        print: bool,
        /// List available preset names.
        #[arg(long)]
        list: bool,
    },
    /// Re-run a manifest written by a previous run; outputs are
    /// byte-identical.
    Replay {
        /// Path to manifest.json.
        manifest: PathBuf,
        /// Output directory (defaults to the embedded outputs.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Config-field overrides mirroring RunConfig.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_total: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    ensemble_size: Option<usize>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long, value_enum)]
    representation: Option<RepresentationArg>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

impl Overrides {
    fn apply(&self, file: &mut config::RunConfigFile) {
        if let Some(seed) = self.seed {
            file.seed = seed;
        }
        if let Some(t_total) = self.t_total {
            file.t_total = t_total;
        }
        if let Some(dt) = self.dt {
            file.dt = Some(dt);
        }
        if let Some(size) = self.ensemble_size {
            file.ensemble_size = size;
        }
        if let Some(stride) = self.sample_every {
            file.sample_every = stride;
        }
        if let Some(kappa) = self.kappa {
            file.kappa = kappa;
        }
        if let Some(burn_in) = self.burn_in {
            file.burn_in = burn_in;
        }
        if let Some(rep) = self.representation {
            file.representation = match rep {
                RepresentationArg::Amplitude => lienard::dynamics::Representation::Amplitude,
                RepresentationArg::Phase => lienard::dynamics::Representation::Phase,
            };
        }
        if let Some(scheme) = self.scheme {
            file.scheme = match scheme {
                SchemeArg::EulerMaruyama => lienard::dynamics::Method::EulerMaruyama,
                SchemeArg::Heun => lienard::dynamics::Method::Heun,
            };
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RepresentationArg {
    Amplitude,
    Phase,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    EulerMaruyama,
    Heun,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Position,
    Velocity,
}

impl From<FamilyArg> for Family {
    fn from(value: FamilyArg) -> Self {
        match value {
            FamilyArg::Position => Family::Position,
            FamilyArg::Velocity => Family::Velocity,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    A,
    M,
    Beta,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Internal,
    Vacuum,
    External,
    None,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Position)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = BasisArg::M)]
    basis: BasisArg,
    /// Damping coefficients, lowest degree first, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    coeffs: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
}

#[derive(Args)]
struct NoiseCheckArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Internal)]
    kind: KindArg,
    /// Intensity for external noise.
    #[arg(long)]
    intensity: Option<f64>,
    #[arg(long, default_value_t = 200)]
    members: usize,
    #[arg(long, default_value_t = 4000)]
    len: usize,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 20)]
    max_lag: usize,
    /// Relative tolerance on the integrated autocovariance.
    #[arg(long, default_value_t = 0.10)]
    tolerance: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Optional CSV output of the estimated C(lag).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BathArgs {
    #[arg(long, default_value_t = 1024)]
    modes: usize,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,
    /// Bath window lower edge (default 0.5·(n+1)ω₀).
    #[arg(long)]
    omega_min: Option<f64>,
    /// Bath window upper edge (default 1.5·(n+1)ω₀).
    #[arg(long)]
    omega_max: Option<f64>,
    /// Flat-spectrum damping rate the bath realizes at the resonance.
    #[arg(long, default_value_t = 1e-3)]
    gamma_target: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, default_value_t = 5.0)]
    alpha0_re: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha0_im: f64,
    #[arg(long, default_value_t = 200.0)]
    t_total: f64,
    /// Integration step (default 0.05/ω_max).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 20)]
    sample_every: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "bath_out")]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error on {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("statistical test failed: {0}")]
    StatFailure(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Driver(e) => e.exit_code(),
            CliError::Config(_) | CliError::Model(_) | CliError::Noise(_) | CliError::Usage(_) => 2,
            CliError::Dynamics(DynamicsError::BlowUp { .. }) => 3,
            CliError::Dynamics(_) => 2,
            CliError::Io(..) => 1,
            CliError::StatFailure(_) => 4,
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn print_summary(summary: &RunSummary) {
    println!("wrote {} trajectory file(s) to {}", summary.trajectory_files.len(), summary.out_dir.display());
    print!("{}", summary.census);
    if let Some(stats) = &summary.stats {
        println!(
            "mean_r={:.6e} var_r={:.6e} window_drift={:.6e}",
            stats.mean_r, stats.var_r, stats.window_drift
        );
    }
    println!("manifest: {}", summary.manifest_file.display());
}

fn build_spec(args: &SpecArgs) -> Result<(DampingSpec, SystemParams), CliError> {
    let family = args.family.into();
    let spec = match args.basis {
        BasisArg::A => DampingSpec::from_a(family, &args.coeffs),
        BasisArg::M => DampingSpec::from_m(family, args.coeffs.clone()),
        BasisArg::Beta => DampingSpec::from_beta(family, &args.coeffs),
    }?;
    let params = SystemParams::new(args.omega0, args.gamma, spec.order(), args.theta)?;
    Ok((spec, params))
}

fn cmd_census(args: &SpecArgs) -> Result<(), CliError> {
    let (spec, params) = build_spec(args)?;
    print!("{}", analysis::limit_cycle_census(&spec, &params));
    Ok(())
}

fn cmd_average(args: &SpecArgs) -> Result<(), CliError> {
    let (spec, params) = build_spec(args)?;
    let roots = analysis::averaging_amplitude_condition(&spec, &params);
    println!("roots={}", roots.len());
    for root in roots {
        println!("amplitude={:.12e} stable={}", root.amplitude, root.stability);
    }
    Ok(())
}

fn cmd_noise_check(args: &NoiseCheckArgs) -> Result<(), CliError> {
    let params = SystemParams::new(args.omega0, args.gamma, args.n, args.theta)?;
    let spec = match (args.kind, args.intensity) {
        (KindArg::External, Some(intensity)) => NoiseSpec::External { intensity },
        (KindArg::External, None) => {
            return Err(CliError::Usage("--intensity is required with --kind external".into()));
        }
        (_, Some(_)) => {
            return Err(CliError::Usage("--intensity is only valid with --kind external".into()));
        }
        (KindArg::Internal, None) => NoiseSpec::Internal,
        (KindArg::Vacuum, None) => NoiseSpec::Vacuum,
        (KindArg::None, None) => NoiseSpec::None,
    };
    let d = noise_intensity(&params, &spec);
    let members: Vec<Vec<f64>> = (0..args.members)
        .map(|m| {
            let mut rng = rng_for(args.seed, m as u64);
            (0..args.len)
                .map(|_| lienard::noise::real_increment(&mut rng, d, args.dt) / args.dt)
                .collect()
        })
        .collect();
    let est = estimate_autocorrelation(&members, args.dt, args.max_lag)?;
    if let Some(path) = &args.out {
        let mut csv = String::from("lag,C\n");
        for (i, c) in est.values.iter().enumerate() {
            csv.push_str(&format!("{:.16e},{:.16e}\n", i as f64 * est.dt, c));
        }
        write_file(path, &csv)?;
    }
    let estimated = est.integrated_intensity();
    let total = (args.members * args.len) as f64;
    let mean: f64 = members.iter().flatten().sum::<f64>() / total;
    let mean_sigma = (d.max(f64::MIN_POSITIVE) / args.dt / total).sqrt();

    let rel_err = (estimated - d).abs() / d.abs().max(f64::MIN_POSITIVE);
    println!(
        "noise-check: D={d:.6e} estimated={estimated:.6e} rel_err={rel_err:.3e} mean={mean:.3e}"
    );
    if d == 0.0 {
        if estimated.abs() > 1e-12 {
            return Err(CliError::StatFailure(format!(
                "expected zero intensity, estimated {estimated:.3e}"
            )));
        }
        println!("noise-check: PASS");
        return Ok(());
    }
    if rel_err > args.tolerance {
        return Err(CliError::StatFailure(format!(
            "integrated autocovariance {estimated:.6e} deviates from D = {d:.6e} by {rel_err:.3e} (> {})",
            args.tolerance
        )));
    }
    if mean.abs() > 4.0 * mean_sigma {
        return Err(CliError::StatFailure(format!(
            "sample mean {mean:.3e} exceeds the 4 sigma bound {:.3e}",
            4.0 * mean_sigma
        )));
    }
    println!("noise-check: PASS");
    Ok(())
}

fn cmd_bath(args: &BathArgs) -> Result<(), CliError> {
    if !args.gamma_target.is_finite() || args.gamma_target <= 0.0 {
        return Err(CliError::Usage("--gamma-target must be positive".into()));
    }
    let resonance = (args.n + 1) as f64 * args.omega0;
    let omega_min = args.omega_min.unwrap_or(0.5 * resonance);
    let omega_max = args.omega_max.unwrap_or(1.5 * resonance);
    let config = BathConfig::flat_for_gamma(
        args.modes,
        omega_min,
        omega_max,
        args.n,
        args.gamma_target,
    )?;
    let params = SystemParams::new(args.omega0, args.gamma_target, args.n, args.theta)?;
    let gamma = gamma_from_bath(&config, &params)?;
    let dt = args.dt.unwrap_or(0.05 / omega_max);
    let sample = sample_wigner_bath(&config, args.theta, args.seed);
    let alpha0 = Complex64::new(args.alpha0_re, args.alpha0_im);
    let run = integrate_bath_system(
        &sample,
        &config,
        &params,
        alpha0,
        args.t_total,
        dt,
        args.sample_every,
    )?;
    if run.recurrence_warning {
        eprintln!(
            "warning: t_total {} exceeds the bath recurrence time {:.3e}; the reservoir echoes back",
            args.t_total,
            config.recurrence_time()
        );
    }
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io(args.out.clone(), e))?;
    let mut csv = String::from("t,re_alpha,im_alpha,abs_alpha\n");
    for (i, a) in run.alpha.iter().enumerate() {
        let t = run.t0 + i as f64 * run.dt;
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            t,
            a.re,
            a.im,
            a.norm()
        ));
    }
    write_file(&args.out.join("bath_alpha.csv"), &csv)?;
    let mut csv = String::from("t,re_force,im_force\n");
    for (i, f) in run.bath_force.iter().enumerate() {
        let t = run.t0 + i as f64 * run.dt;
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", t, f.re, f.im));
    }
    write_file(&args.out.join("bath_force.csv"), &csv)?;

    // Indicative single-trajectory decay fit: 1/|α|² grows linearly at rate
    // 2γ for the top-degree damping the bare bath produces.
    let times: Vec<f64> = (0..run.alpha.len()).map(|i| run.t0 + i as f64 * run.dt).collect();
    let inv_u: Vec<f64> = run
        .alpha
        .iter()
        .map(|a| 1.0 / a.norm_sqr().max(1e-12))
        .collect();
    let (slope, _, _) = linear_fit(&times, &inv_u);
    println!(
        "gamma_from_bath={gamma:.6e} fitted_gamma={:.6e} (single trajectory)",
        slope / 2.0
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            overrides,
        } => {
            let text = read_file(&config)?;
            let mut file = config::parse_config_file(&text)?;
            overrides.apply(&mut file);
            let config = file.validate()?;
            let summary = driver::run(&config, out.as_deref())?;
            print_summary(&summary);
            Ok(())
        }
        Command::Census(args) => cmd_census(&args),
        Command::Average(args) => cmd_average(&args),
        Command::NoiseCheck(args) => cmd_noise_check(&args),
        Command::Bath(args) => cmd_bath(&args),
        Command::Preset {
            name,
            out,
            print,
            list,
        } => {
            if list {
                for name in presets::PRESET_NAMES {
                    println!("{name}");
                }
                return Ok(());
            }
            let name = name.ok_or_else(|| {
                CliError::Usage("preset name required (try --list)".into())
            })?;
            let config = presets::preset(&name)?;
            if print {
                print!("{}", config.to_toml());
                return Ok(());
            }
            let summary = driver::run(&config, out.as_deref())?;
            print_summary(&summary);
            Ok(())
        }
        Command::Replay { manifest, out } => {
            let text = read_file(&manifest)?;
            let summary = driver::replay(&text, out.as_deref())?;
            print_summary(&summary);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
