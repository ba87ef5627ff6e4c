//! Run driver: integrates ensembles, writes CSV/report files, and replays
//! manifests.
//!
//! Trajectory CSVs carry full double precision (17 significant digits) so a
//! replay from the manifest is byte-identical. Ensemble members integrate in
//! parallel; files are written afterwards by the calling thread in index
//! order.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{self, AnalysisError, CycleReport, RadialStats};
use crate::config::{ConfigError, Manifest, RunConfig};
use crate::dynamics::{integrate, DynamicsError, Trajectory, TrajectoryData};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl DriverError {
    /// Process exit code: 2 config, 3 numerical blow-up, 1 i/o.
    pub fn exit_code(&self) -> u8 {
        match self {
            DriverError::Config(_) => 2,
            DriverError::Dynamics(DynamicsError::BlowUp { .. }) => 3,
            DriverError::Dynamics(_) => 2,
            DriverError::Analysis(_) => 2,
            DriverError::Io { .. } => 1,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), DriverError> {
    let mut file = fs::File::create(path).map_err(|source| DriverError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(contents.as_bytes())
        .map_err(|source| DriverError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Integrate every (initial condition × ensemble member) trajectory of a run.
/// Member `k` of initial condition `i` uses RNG stream `i·ensemble_size + k`.
pub fn run_trajectories(config: &RunConfig) -> Result<Vec<Trajectory>, DynamicsError> {
    let jobs: Vec<(usize, crate::dynamics::PhaseState)> = (0..config.trajectory_count())
        .map(|idx| (idx, config.initial[idx / config.ensemble_size]))
        .collect();
    jobs.into_par_iter()
        .map(|(idx, ic)| {
            let settings = config.settings_for(idx as u64);
            integrate(ic, &config.params, &config.spec, &config.noise, &settings)
        })
        .collect()
}

/// CSV rendering of a trajectory: `t,x,v` (phase) or
/// `t,re_alpha,im_alpha,abs_alpha` (amplitude), 17 significant digits.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 64);
    match &traj.data {
        TrajectoryData::Phase(samples) => {
            out.push_str("t,x,v\n");
            for (i, s) in samples.iter().enumerate() {
                out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", traj.time(i), s.x, s.v));
            }
        }
        TrajectoryData::Amplitude(samples) => {
            out.push_str("t,re_alpha,im_alpha,abs_alpha\n");
            for (i, a) in samples.iter().enumerate() {
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    traj.time(i),
                    a.re,
                    a.im,
                    a.norm()
                ));
            }
        }
    }
    out
}

/// Key-value rendering of radius statistics plus the histogram.
pub fn radial_stats_text(stats: &RadialStats) -> String {
    let mut out = format!(
        "mean_r={:.12e}\nvar_r={:.12e}\nwindow_drift={:.12e}\nsamples={}\nhistogram=bin_lo,bin_hi,count\n",
        stats.mean_r, stats.var_r, stats.window_drift, stats.samples
    );
    for (i, count) in stats.histogram.counts.iter().enumerate() {
        out.push_str(&format!(
            "{:.12e},{:.12e},{}\n",
            stats.histogram.edges[i],
            stats.histogram.edges[i + 1],
            count
        ));
    }
    out
}

/// Files and reports produced by one run.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub trajectory_files: Vec<PathBuf>,
    pub census: CycleReport,
    pub stats: Option<RadialStats>,
    pub manifest_file: PathBuf,
}

/// Execute a run: trajectory CSVs, cycle census, radius statistics, and a
/// replay manifest, all under `out_dir` (defaults to the config's own
/// output directory).
pub fn run(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunSummary, DriverError> {
    let out_dir = out_dir.unwrap_or(&config.out_dir).to_path_buf();
    fs::create_dir_all(&out_dir).map_err(|source| DriverError::Io {
        path: out_dir.clone(),
        source,
    })?;

    let census = analysis::limit_cycle_census(&config.spec, &config.params);
    write_file(&out_dir.join("cycles.txt"), &census.to_string())?;

    let trajectories = run_trajectories(config)?;
    let mut trajectory_files = Vec::with_capacity(trajectories.len());
    for (idx, traj) in trajectories.iter().enumerate() {
        let path = out_dir.join(format!("trajectory_{idx:03}.csv"));
        write_file(&path, &trajectory_csv(traj))?;
        trajectory_files.push(path);
    }

    let stats = match analysis::pooled_radial_statistics(&trajectories, config.burn_in) {
        Ok(stats) => {
            write_file(&out_dir.join("radial_stats.txt"), &radial_stats_text(&stats))?;
            Some(stats)
        }
        Err(reason) => {
            write_file(
                &out_dir.join("radial_stats.txt"),
                &format!("unavailable={reason}\n"),
            )?;
            None
        }
    };

    let manifest_file = out_dir.join("manifest.json");
    write_file(&manifest_file, &Manifest::new(config).to_json())?;

    Ok(RunSummary {
        out_dir,
        trajectory_files,
        census,
        stats,
        manifest_file,
    })
}

/// Re-run a manifest. Identical toolkit version and config reproduce every
/// output byte for byte.
pub fn replay(manifest_text: &str, out_dir: Option<&Path>) -> Result<RunSummary, DriverError> {
    let manifest = Manifest::parse(manifest_text)?;
    let config = manifest.config.validate()?;
    run(&config, out_dir)
}
