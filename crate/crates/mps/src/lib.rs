//! Experiment harness for the `mpspline` library: a small config language,
//! committed presets, and drivers that write CSV results.

pub mod config;
pub mod experiments;
pub mod expr;
pub mod output;
pub mod presets;
pub mod report;

use std::path::Path;
use std::time::Instant;

use config::{ConfigError, ExperimentConfig, ExperimentKind, RawConfig};
pub use report::RunReport;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical error: {0}")]
    Numerical(#[from] mpspline::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

/// Command-line overrides applied on top of the preset and the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<String>,
    pub seed: Option<u64>,
}

/// Builds the configuration from an optional preset, an optional config file
/// (its keys override the preset) and the command-line overrides.
pub fn load_config(preset: Option<&str>, text: Option<&str>, ov: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = match preset {
        Some(name) => {
            let body = presets::get(name).ok_or_else(|| ConfigError {
                line: None,
                message: format!("unknown preset `{name}` (known: {})", presets::names().collect::<Vec<_>>().join(", ")),
            })?;
            RawConfig::parse(body)?
        }
        None => RawConfig::default(),
    };
    match text {
        Some(t) => raw.overlay(&RawConfig::parse(t)?),
        None if preset.is_none() => return Err(ConfigError { line: None, message: "give a config file or --preset".into() }),
        None => {}
    }
    if let Some(m) = &ov.mode {
        config::parse_mode(m).map_err(|message| ConfigError { line: None, message })?;
        raw.set("plan", "modes", m);
    }
    if let Some(s) = ov.seed {
        raw.set("experiment", "seed", &s.to_string());
    }
    ExperimentConfig::from_raw(&raw)
}

/// Runs one experiment, writing its files into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport, RunError> {
    std::fs::create_dir_all(dir)?;
    let mut report = RunReport { name: cfg.name.clone(), config_echo: cfg.echo(), ..Default::default() };
    let t0 = Instant::now();
    match cfg.kind {
        ExperimentKind::Interpolation => experiments::interpolation(cfg, dir, &mut report)?,
        ExperimentKind::Advection => experiments::advection(cfg, dir, &mut report)?,
        ExperimentKind::Stability => experiments::stability(cfg, dir, &mut report)?,
        ExperimentKind::Coefficients => experiments::coefficients(cfg, dir, &mut report)?,
        ExperimentKind::Convergence => experiments::convergence(cfg, dir, &mut report)?,
    }
    report.timing("total", t0.elapsed());
    report.write(dir)?;
    Ok(report)
}
