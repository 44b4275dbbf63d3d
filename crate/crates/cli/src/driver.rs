//! The run, study and verify commands.

use std::fs;
use std::path::{Path, PathBuf};

use nsk_core::consistency::{refinement_study, ConvergenceReport};
use nsk_core::diagnostics::DiagnosticsRow;
use nsk_core::mesh::Mesh;
use nsk_core::timeloop::integrate;
use nsk_core::NskError;
use nsk_oracles::OracleError;
use thiserror::Error;

use crate::config::{
    build_initial, check_floor, parse_config, project_initial, Config, ConfigError, RunConfig,
    StudyConfig,
};
use crate::output::{write_diagnostics, write_report, DIAGNOSTICS_FILE};
use crate::snapshot::{io_err, write_snapshot, IoError};
use crate::verify::{run_verify, SuiteReport, VerifyScope};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("runtime failure: {0}")]
    Runtime(NskError),
    #[error("I/O error: {0}")]
    Io(#[from] IoError),
}

impl CliError {
    /// 1 validation or verification, 2 runtime, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Verification(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<NskError> for CliError {
    fn from(e: NskError) -> Self {
        match e.root() {
            NskError::InvalidParam(_) | NskError::StencilWidth { .. } => {
                CliError::Config(ConfigError::Invalid(e.to_string()))
            }
            _ => CliError::Runtime(e),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Core(e) => e.into(),
            other => CliError::Verification(other.to_string()),
        }
    }
}

pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_config(&text)?)
}

fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub steps: usize,
    pub rows: Vec<DiagnosticsRow<f64>>,
    pub snapshots: Vec<PathBuf>,
}

/// Integrates `cfg` and writes diagnostics.csv plus one snapshot per record.
pub fn execute_run(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let params = cfg.fluid_params()?;
    let controls = cfg.time_controls()?;
    let s0 = build_initial(cfg, cfg.mesh()?)?;
    check_floor(&s0, &params)?;
    ensure_dir(dir)?;
    let traj = integrate(&s0, &params, &controls)?;
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &traj.diagnostics)?;
    let mut snapshots = Vec::new();
    if cfg.output.snapshots {
        for (k, (state, &t)) in traj.states.iter().zip(&traj.times).enumerate() {
            snapshots.push(write_snapshot(state, t, dir, k, cfg.output.format)?);
        }
    }
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        steps: traj.steps,
        rows: traj.diagnostics,
        snapshots,
    })
}

/// Runs every level of `cfg` and writes report.csv and report.json.
pub fn execute_study(cfg: &StudyConfig, dir: &Path) -> Result<ConvergenceReport<f64>, CliError> {
    cfg.validate()?;
    let base = &cfg.base;
    let params = base.fluid_params()?;
    let controls = base.time_controls()?;
    let initial = base.initial.clone();
    let problem = move |mesh: Mesh<f64>| {
        let s = project_initial(&initial, mesh)?;
        check_floor(&s, &params).map_err(|e| NskError::InvalidParam(e.to_string()))?;
        Ok(s)
    };
    ensure_dir(dir)?;
    let report = refinement_study(&problem, &params, &controls, &cfg.levels(), &cfg.settings())?;
    write_report(dir, &report)?;
    Ok(report)
}

fn out_dir(out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    out.map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.dir.clone())
}

pub fn run_command(config: &Path, out: Option<&Path>) -> Result<RunOutcome, CliError> {
    match load_config(config)? {
        Config::Run(cfg) => execute_run(&cfg, &out_dir(out, &cfg)),
        Config::Study(_) => {
            Err(ConfigError::Invalid("`run` expects a document of kind \"run\"".into()).into())
        }
    }
}

pub fn study_command(
    config: &Path,
    out: Option<&Path>,
) -> Result<(PathBuf, ConvergenceReport<f64>), CliError> {
    match load_config(config)? {
        Config::Study(cfg) => {
            let dir = out_dir(out, &cfg.base);
            let report = execute_study(&cfg, &dir)?;
            Ok((dir, report))
        }
        Config::Run(_) => {
            Err(ConfigError::Invalid("`study` expects a document of kind \"study\"".into()).into())
        }
    }
}

/// Every suite's report; failures are reported, not raised.
pub fn verify_command(quick: bool) -> Result<Vec<SuiteReport>, CliError> {
    let scope = if quick {
        VerifyScope::quick()
    } else {
        VerifyScope::full()
    };
    Ok(run_verify(&scope)?)
}
