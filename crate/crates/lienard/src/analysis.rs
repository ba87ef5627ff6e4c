//! Limit-cycle structure and trajectory statistics.
//!
//! Two independent routes determine cycle structure: [`limit_cycle_census`]
//! finds the positive roots of the radial polynomial `P(u)` directly, while
//! [`averaging_amplitude_condition`] solves the Krylov–Bogoliubov condition
//! `∫₀^{2π} f(R cos φ)·sin²φ dφ = 0` (or the velocity-family analogue) by
//! plain quadrature on the second-order equation's damping polynomial. For
//! simple roots the two must agree on count, stability pattern, and
//! amplitudes; that agreement is the toolkit's central cross-check.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{Trajectory, TrajectoryData};
use crate::model::{radial_polynomial, DampingSpec, Family, SystemParams};

/// Bisection/Newton roots below this `|P'(u)|` are reported degenerate
/// rather than classified.
const DEGENERATE_SLOPE: f64 = 1e-8;

/// Quadrature resolution for the averaging condition. Periodic trapezoid on
/// 2048 nodes is exact for the trigonometric polynomials that arise here.
const QUADRATURE_POINTS: usize = 2048;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("trajectory too short: {got:.1} periods after burn-in, need at least {needed:.1}")]
    TooShort { got: f64, needed: f64 },
    #[error("operation requires a phase-representation trajectory")]
    NotPhaseRepresentation,
    #[error("no section crossings found")]
    NoCrossings,
    #[error("ensembles are mismatched: {0}")]
    MismatchedEnsembles(String),
    #[error("ensemble is empty")]
    EmptyEnsemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    /// Repeated root; stability undetermined.
    Degenerate,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Stable => write!(f, "true"),
            Stability::Unstable => write!(f, "false"),
            Stability::Degenerate => write!(f, "degenerate"),
        }
    }
}

/// One limit cycle found by the census.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cycle {
    /// Root of `P(u)`, `u = |α|²`.
    pub u_root: f64,
    /// `√u_root = |α|` on the cycle.
    pub radius: f64,
    /// `2·radius`: x-amplitude (Position family, ω₀ = 1) or ẋ-amplitude
    /// (Velocity family).
    pub amplitude: f64,
    pub stability: Stability,
    /// `|P(u_root)|` after polishing.
    pub residual: f64,
}

/// Limit cycles of a spec, sorted by increasing radius.
#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub cycles: Vec<Cycle>,
}

impl std::fmt::Display for CycleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.cycles.is_empty() {
            return writeln!(f, "cycles=0");
        }
        writeln!(f, "cycles={}", self.cycles.len())?;
        for c in &self.cycles {
            writeln!(
                f,
                "u_root={:.12e} radius={:.12e} amplitude={:.12e} stable={} residual={:.3e}",
                c.u_root, c.radius, c.amplitude, c.stability, c.residual
            )?;
        }
        Ok(())
    }
}

/// Find all positive simple roots of the radial polynomial: bracketed
/// bisection on sign changes over a log-spaced grid `u ∈ [1e−8, 1e8]`,
/// refined by Newton. Stable iff `(γ/m_n)·P'(u*) > 0`.
pub fn limit_cycle_census(spec: &DampingSpec, params: &SystemParams) -> CycleReport {
    let poly = radial_polynomial(spec);
    let rate_sign = (params.gamma / spec.leading()).signum();

    const GRID: usize = 6000;
    let mut cycles = Vec::new();
    let mut prev_u = 1e-8;
    let mut prev_p = poly.eval(prev_u);
    for i in 1..GRID {
        let u = 10f64.powf(-8.0 + 16.0 * i as f64 / (GRID - 1) as f64);
        let p = poly.eval(u);
        if prev_p == 0.0 {
            // Grid point landed exactly on a root.
            push_cycle(&mut cycles, &poly, prev_u, rate_sign);
        } else if prev_p * p < 0.0 {
            let root = refine_root(&poly, prev_u, u);
            push_cycle(&mut cycles, &poly, root, rate_sign);
        }
        prev_u = u;
        prev_p = p;
    }
    debug_assert!(cycles.len() <= spec.order());
    CycleReport { cycles }
}

fn push_cycle(cycles: &mut Vec<Cycle>, poly: &crate::model::RadialPolynomial, u: f64, rate_sign: f64) {
    if cycles.iter().any(|c| (c.u_root - u).abs() <= 1e-12 * u) {
        return;
    }
    let slope = poly.eval_derivative(u);
    let stability = if slope.abs() < DEGENERATE_SLOPE {
        Stability::Degenerate
    } else if rate_sign * slope > 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    let radius = u.sqrt();
    cycles.push(Cycle {
        u_root: u,
        radius,
        amplitude: 2.0 * radius,
        stability,
        residual: poly.eval(u).abs(),
    });
}

fn refine_root(poly: &crate::model::RadialPolynomial, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = poly.eval(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = poly.eval(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    let mut root = 0.5 * (lo + hi);
    for _ in 0..4 {
        let slope = poly.eval_derivative(root);
        if slope.abs() < DEGENERATE_SLOPE {
            break;
        }
        let next = root - poly.eval(root) / slope;
        if next.is_finite() && next > 0.0 {
            root = next;
        }
    }
    root
}

/// One root of the averaging condition.
#[derive(Debug, Clone, Copy)]
pub struct AveragedCycle {
    /// x-amplitude (Position family) or ẋ-amplitude (Velocity family).
    pub amplitude: f64,
    pub stability: Stability,
}

/// Krylov–Bogoliubov averaging oracle: roots `R > 0` of
/// `I(R) = ∫₀^{2π} f(R cos φ)·sin²φ dφ` (Position family, ω₀ = 1) or of the
/// velocity-family quadrature `∫ h(V sin φ)·sin²φ dφ`, evaluated by a
/// 2048-point trapezoid rule. Independent of the census route.
pub fn averaging_amplitude_condition(
    spec: &DampingSpec,
    params: &SystemParams,
) -> Vec<AveragedCycle> {
    let coeffs = spec.phase_coeffs();
    let family = spec.family();
    let rate_sign = (params.gamma / spec.leading()).signum();
    let integral = |r: f64| averaging_integral(&coeffs, family, r);

    // Cauchy bound on the radial roots translated to amplitude.
    let m = spec.m();
    let leading = spec.leading().abs();
    let u_bound = 1.0
        + m[..m.len() - 1]
            .iter()
            .map(|c| c.abs() / leading)
            .fold(0.0, f64::max);
    let r_max = 2.5 * u_bound.sqrt().max(1.0);

    const GRID: usize = 1200;
    let mut out = Vec::new();
    let mut prev_r = r_max * 1e-6;
    let mut prev_i = integral(prev_r);
    for k in 1..=GRID {
        let r = r_max * k as f64 / GRID as f64;
        let value = integral(r);
        if prev_i * value < 0.0 {
            let root = bisect(&integral, prev_r, r);
            let h = 1e-7 * r_max;
            let slope = (integral(root + h) - integral(root - h)) / (2.0 * h);
            let stability = if slope.abs() < DEGENERATE_SLOPE {
                Stability::Degenerate
            } else if rate_sign * slope > 0.0 {
                Stability::Stable
            } else {
                Stability::Unstable
            };
            out.push(AveragedCycle {
                amplitude: root,
                stability,
            });
        }
        prev_r = r;
        prev_i = value;
    }
    out
}

fn averaging_integral(coeffs: &[f64], family: Family, r: f64) -> f64 {
    let step = std::f64::consts::TAU / QUADRATURE_POINTS as f64;
    let mut acc = 0.0;
    for i in 0..QUADRATURE_POINTS {
        let phi = i as f64 * step;
        let (sin, cos) = phi.sin_cos();
        // Position family damps in x = R·cos φ; velocity family in
        // ẋ = −V·sin φ (even polynomial, sign immaterial).
        let y = match family {
            Family::Position => r * cos,
            Family::Velocity => r * sin,
        };
        let y_sq = y * y;
        let f = coeffs.iter().rev().fold(0.0, |acc, &c| acc * y_sq + c);
        acc += f * sin * sin;
    }
    acc * step
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-15 * hi.abs() {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    0.5 * (lo + hi)
}

/// Histogram of radius samples.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(samples: &[f64], bins: usize) -> Self {
        let max = samples.iter().copied().fold(0.0f64, f64::max);
        let top = if max > 0.0 { max * (1.0 + 1e-9) } else { 1.0 };
        let width = top / bins as f64;
        let mut counts = vec![0u64; bins];
        for &r in samples {
            let idx = ((r / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        Self { edges, counts }
    }
}

/// Radius statistics of a trajectory after burn-in.
#[derive(Debug, Clone, Serialize)]
pub struct RadialStats {
    pub mean_r: f64,
    pub var_r: f64,
    pub histogram: Histogram,
    /// Relative change of mean_r between the two halves of the retained run.
    pub window_drift: f64,
    pub samples: usize,
}

/// Statistics of `r(t)` after discarding the first `burn_in_fraction` of the
/// run. Requires at least 100 periods of retained data.
pub fn radial_statistics(
    traj: &Trajectory,
    burn_in_fraction: f64,
) -> Result<RadialStats, AnalysisError> {
    let radii = traj.radius_series();
    let start = (radii.len() as f64 * burn_in_fraction.clamp(0.0, 0.9)) as usize;
    let retained = &radii[start..];
    let kept_periods = retained.len() as f64 * traj.dt / traj.meta.params.period();
    if kept_periods < 100.0 {
        return Err(AnalysisError::TooShort {
            got: kept_periods,
            needed: 100.0,
        });
    }
    Ok(radial_stats_of(retained))
}

fn radial_stats_of(retained: &[f64]) -> RadialStats {
    let n = retained.len() as f64;
    let mean = retained.iter().sum::<f64>() / n;
    let var = retained.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let half = retained.len() / 2;
    let m1 = retained[..half].iter().sum::<f64>() / half as f64;
    let m2 = retained[half..].iter().sum::<f64>() / (retained.len() - half) as f64;
    let drift = (m2 - m1).abs() / (0.5 * (m1 + m2)).abs().max(f64::MIN_POSITIVE);
    RadialStats {
        mean_r: mean,
        var_r: var,
        histogram: Histogram::build(retained, 64),
        window_drift: drift,
        samples: retained.len(),
    }
}

/// Pooled radius statistics of an equally sampled trajectory ensemble:
/// mean/variance/histogram over all retained samples, drift from the
/// per-index pooled mean. Each trajectory must retain at least 100 periods.
pub fn pooled_radial_statistics(
    ensemble: &[Trajectory],
    burn_in_fraction: f64,
) -> Result<RadialStats, AnalysisError> {
    if ensemble.is_empty() {
        return Err(AnalysisError::EmptyEnsemble);
    }
    let len = ensemble[0].len();
    let dt = ensemble[0].dt;
    for traj in ensemble {
        if traj.len() != len || traj.dt != dt {
            return Err(AnalysisError::MismatchedEnsembles(
                "trajectory lengths or sampling steps differ".into(),
            ));
        }
    }
    let start = (len as f64 * burn_in_fraction.clamp(0.0, 0.9)) as usize;
    let kept_periods = (len - start) as f64 * dt / ensemble[0].meta.params.period();
    if kept_periods < 100.0 {
        return Err(AnalysisError::TooShort {
            got: kept_periods,
            needed: 100.0,
        });
    }
    let radii: Vec<Vec<f64>> = ensemble.iter().map(|t| t.radius_series()).collect();
    let all: Vec<f64> = radii.iter().flat_map(|r| r[start..].iter().copied()).collect();
    let mut stats = radial_stats_of(&all);
    // Drift from the time-resolved pooled mean, not the concatenation.
    let pooled: Vec<f64> = (start..len)
        .map(|i| radii.iter().map(|r| r[i]).sum::<f64>() / radii.len() as f64)
        .collect();
    let half = pooled.len() / 2;
    let m1 = pooled[..half].iter().sum::<f64>() / half as f64;
    let m2 = pooled[half..].iter().sum::<f64>() / (pooled.len() - half) as f64;
    stats.window_drift = (m2 - m1).abs() / (0.5 * (m1 + m2)).abs().max(f64::MIN_POSITIVE);
    Ok(stats)
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, slope standard
/// error)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mean_x).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - mean_x) * (yi - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let dof = (x.len().max(3) - 2) as f64;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let se = (ss_res / dof / sxx).sqrt();
    (slope, intercept, se)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceClass {
    Preserved,
    Destroyed,
}

/// Stationarity record for one ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStability {
    pub window_drift: f64,
    /// Linear growth rate of var_r over time windows.
    pub var_slope: f64,
    pub var_slope_se: f64,
    pub classification: BalanceClass,
}

impl std::fmt::Display for EnsembleStability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "window_drift={:.6e} var_slope={:.6e} var_slope_se={:.6e} classification={}",
            self.window_drift,
            self.var_slope,
            self.var_slope_se,
            match self.classification {
                BalanceClass::Preserved => "preserved",
                BalanceClass::Destroyed => "destroyed",
            }
        )
    }
}

/// Comparison of an internally driven ensemble against an externally driven
/// one.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceDiagnostic {
    pub internal: EnsembleStability,
    pub external: EnsembleStability,
}

impl std::fmt::Display for BalanceDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "internal: {}", self.internal)?;
        writeln!(f, "external: {}", self.external)
    }
}

/// Windows used for the variance-growth fit.
const STABILITY_WINDOWS: usize = 8;
/// Two-sided 95% Student-t quantile at STABILITY_WINDOWS − 2 = 6 dof.
const T_95_6DOF: f64 = 2.447;

/// Classify stationarity of one trajectory ensemble: window drift of the
/// pooled mean radius, and a linear fit of var_r over time windows.
/// "Destroyed" means drift ≥ 5% or significantly positive variance growth.
pub fn ensemble_stability(
    ensemble: &[Trajectory],
    burn_in_fraction: f64,
) -> Result<EnsembleStability, AnalysisError> {
    if ensemble.is_empty() {
        return Err(AnalysisError::EmptyEnsemble);
    }
    let len = ensemble[0].len();
    let dt = ensemble[0].dt;
    for traj in ensemble {
        if traj.len() != len || traj.dt != dt {
            return Err(AnalysisError::MismatchedEnsembles(
                "trajectory lengths or sampling steps differ".into(),
            ));
        }
    }
    let start = (len as f64 * burn_in_fraction.clamp(0.0, 0.9)) as usize;
    let kept = len - start;
    if kept < STABILITY_WINDOWS * 4 {
        return Err(AnalysisError::TooShort {
            got: kept as f64,
            needed: (STABILITY_WINDOWS * 4) as f64,
        });
    }
    let radii: Vec<Vec<f64>> = ensemble.iter().map(|t| t.radius_series()).collect();

    // Pooled mean over members, per retained sample index.
    let pooled: Vec<f64> = (start..len)
        .map(|i| radii.iter().map(|r| r[i]).sum::<f64>() / radii.len() as f64)
        .collect();
    let half = pooled.len() / 2;
    let m1 = pooled[..half].iter().sum::<f64>() / half as f64;
    let m2 = pooled[half..].iter().sum::<f64>() / (pooled.len() - half) as f64;
    let drift = (m2 - m1).abs() / (0.5 * (m1 + m2)).abs().max(f64::MIN_POSITIVE);

    // var_r pooled across members within each time window.
    let window = kept / STABILITY_WINDOWS;
    let mut times = Vec::with_capacity(STABILITY_WINDOWS);
    let mut vars = Vec::with_capacity(STABILITY_WINDOWS);
    for w in 0..STABILITY_WINDOWS {
        let lo = start + w * window;
        let hi = if w + 1 == STABILITY_WINDOWS {
            len
        } else {
            lo + window
        };
        let mut acc = 0.0;
        let mut acc_sq = 0.0;
        let mut count = 0.0;
        for member in &radii {
            for &r in &member[lo..hi] {
                acc += r;
                acc_sq += r * r;
                count += 1.0;
            }
        }
        let mean = acc / count;
        vars.push(acc_sq / count - mean * mean);
        times.push(dt * (0.5 * (lo + hi) as f64));
    }
    let (slope, _, se) = linear_fit(&times, &vars);

    let growing = slope > 0.0 && slope > T_95_6DOF * se;
    let classification = if drift < 0.05 && !growing {
        BalanceClass::Preserved
    } else {
        BalanceClass::Destroyed
    };
    Ok(EnsembleStability {
        window_drift: drift,
        var_slope: slope,
        var_slope_se: se,
        classification,
    })
}

/// Compare detailed-balance preservation between two matched ensembles.
pub fn balance_diagnostic(
    internal: &[Trajectory],
    external: &[Trajectory],
    burn_in_fraction: f64,
) -> Result<BalanceDiagnostic, AnalysisError> {
    if internal.is_empty() || external.is_empty() {
        return Err(AnalysisError::EmptyEnsemble);
    }
    let spec_a = &internal[0].meta.spec;
    let spec_b = &external[0].meta.spec;
    if spec_a != spec_b {
        return Err(AnalysisError::MismatchedEnsembles(
            "damping specs differ between ensembles".into(),
        ));
    }
    if internal[0].len() != external[0].len() {
        return Err(AnalysisError::MismatchedEnsembles(
            "run lengths differ between ensembles".into(),
        ));
    }
    Ok(BalanceDiagnostic {
        internal: ensemble_stability(internal, burn_in_fraction)?,
        external: ensemble_stability(external, burn_in_fraction)?,
    })
}

/// Radii at successive crossings of a phase-plane section, by linear
/// interpolation between samples.
///
/// The section is the ray at polar angle `section_phase` in the normalized
/// `(x, v/ω₀)` plane (Velocity family: `(ω₀x, v)`), crossed in the direction
/// of motion. The default `0.0` is the positive x-axis, reached as `v` falls
/// through zero from `v > 0`.
pub fn poincare_radii(traj: &Trajectory, section_phase: f64) -> Result<Vec<f64>, AnalysisError> {
    let samples = match &traj.data {
        TrajectoryData::Phase(s) => s,
        TrajectoryData::Amplitude(_) => return Err(AnalysisError::NotPhaseRepresentation),
    };
    let omega0 = traj.meta.params.omega0;
    let family = traj.meta.spec.family();
    let normalized = |s: &crate::dynamics::PhaseState| -> (f64, f64) {
        match family {
            Family::Position => (s.x, s.v / omega0),
            Family::Velocity => (omega0 * s.x, s.v),
        }
    };
    let (sin_s, cos_s) = section_phase.sin_cos();
    // Along/transverse components of (p, −q) relative to the section ray.
    let project = |p: f64, q: f64| -> (f64, f64) {
        let a = p * cos_s + (-q) * sin_s;
        let b = -p * sin_s + (-q) * cos_s;
        (a, b)
    };
    let mut out = Vec::new();
    let mut prev = normalized(&samples[0]);
    let (mut prev_a, mut prev_b) = project(prev.0, prev.1);
    for s in &samples[1..] {
        let cur = normalized(s);
        let (a, b) = project(cur.0, cur.1);
        if prev_b < 0.0 && b >= 0.0 {
            let frac = prev_b / (prev_b - b);
            let p = prev.0 + frac * (cur.0 - prev.0);
            let q = prev.1 + frac * (cur.1 - prev.1);
            let along = prev_a + frac * (a - prev_a);
            if along > 0.0 {
                out.push(0.5 * (p * p + q * q).sqrt());
            }
        }
        prev = cur;
        prev_a = a;
        prev_b = b;
    }
    if out.is_empty() {
        return Err(AnalysisError::NoCrossings);
    }
    Ok(out)
}
