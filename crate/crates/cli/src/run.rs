//! Executes a [`RunConfig`] and writes its artifacts.

use std::path::{Path, PathBuf};

use ccsb_core::hamiltonians::{NormalOrderedHamiltonian, TrappedBosonsModel, TunnellingBathModel};
use ccsb_core::observables::{ft_spectrum, RecorderSpec, SeriesRecorder, TimeSeries, Value};
use ccsb_core::oracle::{App1OracleSpec, TrappedBosonsOracle, TunnellingBathOracle};
use ccsb_core::propagator::{propagate, Checkpoint, Observer, PropagationSummary, RecordContext, WavefunctionState};
use ccsb_core::sampling::{initial_state, InitialTarget, Projection};
use serde::Serialize;
use serde_json::json;

use crate::config::{Application, RunConfig};
use crate::{CliError, CliResult, OUTPUT_ROOT_ENV};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const OBSERVABLES_FILE: &str = "observables.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum RunStatus {
    Completed,
    /// The norm left the guard band; the series ends at the offending record.
    NormGuard {
        t: f64,
        norm: f64,
        initial: f64,
    },
}

#[derive(Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub hash: String,
    pub status: RunStatus,
    pub series: TimeSeries,
    pub spectrum: Option<TimeSeries>,
    /// Final state of engine runs.
    pub checkpoint: Option<Checkpoint>,
    pub metadata: serde_json::Value,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        match self.status {
            RunStatus::Completed => 0,
            RunStatus::NormGuard { .. } => 3,
        }
    }
}

/// Where a run writes: an absolute `run.output`, else `run.output` (or
/// "run") below `$CCSB_OUTPUT_ROOT`, else below `runs/`.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    let name = config.run.output.clone().unwrap_or_else(|| "run".into());
    if name.is_absolute() {
        return name;
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| "runs".into());
    root.join(name)
}

/// Record times shared by engine and oracle runs.
pub fn record_times(config: &RunConfig) -> Vec<f64> {
    let interval = config.propagator.record_interval();
    let t_end = config.run.t_end;
    let segments = (t_end / interval - 1e-9).ceil().max(1.0) as usize;
    (0..=segments).map(|i| if i == segments { t_end } else { i as f64 * interval }).collect()
}

/// Runs `config`. Checkpoints go to `checkpoint_dir` when given; `resume`
/// continues an earlier engine run from its checkpoint.
pub fn execute(config: &RunConfig, checkpoint_dir: Option<&Path>, resume: Option<Checkpoint>) -> CliResult<RunOutcome> {
    config.validate()?;
    let hash = config.hash();
    if let Some(c) = &resume {
        if config.run.application.is_oracle() {
            return Err(CliError::Config("oracle runs cannot be resumed".into()));
        }
        if c.settings_hash != config.dynamics_hash() {
            return Err(CliError::Config("checkpoint was written by a different configuration".into()));
        }
        if c.t >= config.run.t_end {
            return Err(CliError::Config(format!("checkpoint time {} is not before t_end", c.t)));
        }
    }
    match config.run.application {
        Application::App1 => {
            let p = config.app1.as_ref().expect("validated");
            let h = TunnellingBathModel::with_coupling(p.eta, p.lambda, p.omega, p.dimension, p.coupling)?;
            let spec = RecorderSpec {
                particle_modes: h.particle_modes(),
                mirror: config.observables.ccf.then(|| p.mirror()),
                density_grid: None,
                solver_diagnostics: config.observables.solver_diagnostics,
            };
            run_engine(config, hash, &h, &p.target(), spec, checkpoint_dir, resume)
        }
        Application::App2 => {
            let p = config.app2.as_ref().expect("validated");
            let h = TrappedBosonsModel::new(p.xi, p.lambda0, p.omega, p.bosons)?;
            let grid = if config.observables.density { Some(config.grid.points()?) } else { None };
            let spec = RecorderSpec {
                particle_modes: h.particle_modes(),
                mirror: None,
                density_grid: grid,
                solver_diagnostics: config.observables.solver_diagnostics,
            };
            run_engine(config, hash, &h, &p.target(), spec, checkpoint_dir, resume)
        }
        Application::OracleApp1 => run_oracle_app1(config, hash),
        Application::OracleApp2 => run_oracle_app2(config, hash),
    }
}

/// [`execute`] on a dedicated pool of `workers` threads.
pub fn execute_with_workers(
    config: &RunConfig,
    checkpoint_dir: Option<&Path>,
    resume: Option<Checkpoint>,
    workers: usize,
) -> CliResult<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| execute(config, checkpoint_dir, resume))
}

struct Recording<'a> {
    recorder: SeriesRecorder,
    seed: u64,
    dynamics: &'a str,
    every: usize,
    dir: Option<&'a Path>,
}

impl Observer for Recording<'_> {
    fn observe(&mut self, state: &WavefunctionState, ctx: &RecordContext) -> ccsb_core::Result<()> {
        self.recorder.observe(state, ctx)?;
        if let Some(dir) = self.dir {
            if self.every > 0 && ctx.index > 0 && ctx.index % self.every == 0 {
                Checkpoint::capture(state, self.seed, self.dynamics).write(&dir.join(CHECKPOINT_FILE))?;
            }
        }
        Ok(())
    }
}

fn run_engine<H: NormalOrderedHamiltonian>(
    config: &RunConfig,
    hash: String,
    h: &H,
    target: &InitialTarget,
    spec: RecorderSpec,
    checkpoint_dir: Option<&Path>,
    resume: Option<Checkpoint>,
) -> CliResult<RunOutcome> {
    let settings = &config.propagator;
    let (mut state, projection) = match &resume {
        Some(c) => (c.restore()?, None),
        None => {
            let (s, p) = initial_state(&config.sampling, target, settings.svd_cutoff)?;
            (s, Some(p))
        }
    };
    let t_start = state.t;
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let dynamics = config.dynamics_hash();
    let mut rec = Recording {
        recorder: SeriesRecorder::new(spec),
        seed: config.sampling.seed,
        dynamics: &dynamics,
        every: config.run.checkpoint_every,
        dir: checkpoint_dir,
    };
    let (status, summary) = match propagate(h, &mut state, settings, config.run.t_end, &mut rec) {
        Ok(s) => (RunStatus::Completed, Some(s)),
        Err(ccsb_core::Error::NormGuard { t, norm, initial }) => (RunStatus::NormGuard { t, norm, initial }, None),
        Err(e) => return Err(e.into()),
    };
    let checkpoint = Checkpoint::capture(&state, config.sampling.seed, &dynamics);
    let mut series = rec.recorder.series;
    let min_density = rec.recorder.min_density;
    stamp(&mut series, config, &hash);
    let spectrum = spectrum_of(config, &series, &hash)?;
    let mut metadata = base_metadata(config, &hash, &status);
    metadata["start_time"] = json!(t_start);
    metadata["configurations"] = json!(state.len());
    metadata["projection"] = projection.as_ref().map_or(serde_json::Value::Null, projection_json);
    metadata["propagation"] = summary.as_ref().map_or(serde_json::Value::Null, summary_json);
    if min_density.is_finite() {
        metadata["min_density"] = json!(min_density);
    }
    Ok(RunOutcome { config: config.clone(), hash, status, series, spectrum, checkpoint: Some(checkpoint), metadata })
}

fn run_oracle_app1(config: &RunConfig, hash: String) -> CliResult<RunOutcome> {
    let p = config.app1.as_ref().expect("validated");
    let spec = App1OracleSpec {
        dimension: p.dimension,
        omega: p.omega,
        levels: config.oracle.levels,
        eta: p.eta,
        lambda: p.lambda,
        coupling: p.coupling,
        initial: (p.initial_q, p.initial_p),
        mirror: (p.mirror_q, p.mirror_p),
    };
    let oracle = TunnellingBathOracle::new(spec)?;
    let times = record_times(config);
    let run = oracle.propagate(&times, config.oracle.krylov())?;
    let mut series = TimeSeries::new("t");
    for i in 0..times.len() {
        let norm = run.norm[i];
        series.push(
            times[i],
            &[
                ("norm", Value::Real(norm)),
                ("energy", Value::Real(run.energy[i])),
                ("ccf", Value::Complex(run.ccf[i])),
                ("ccf_normalized", Value::Complex(run.ccf[i] / norm.sqrt())),
            ],
        )?;
    }
    stamp(&mut series, config, &hash);
    let spectrum = spectrum_of(config, &series, &hash)?;
    let status = RunStatus::Completed;
    let mut metadata = base_metadata(config, &hash, &status);
    metadata["representability"] = json!(run.representability);
    metadata["basis_size"] = json!(oracle.hamiltonian.dim());
    Ok(RunOutcome { config: config.clone(), hash, status, series, spectrum, checkpoint: None, metadata })
}

fn run_oracle_app2(config: &RunConfig, hash: String) -> CliResult<RunOutcome> {
    let p = config.app2.as_ref().expect("validated");
    let oracle = TrappedBosonsOracle::new(p.bosons, p.omega, p.xi, p.lambda0)?;
    let times = record_times(config);
    let run = oracle.propagate(&times, config.oracle.krylov())?;
    let mut series = TimeSeries::new("t");
    for i in 0..times.len() {
        let number: f64 = (0..run.rho[i].nrows()).map(|a| run.rho[i][[a, a]].re).sum();
        series.push(
            times[i],
            &[
                ("norm", Value::Real(run.norm[i])),
                ("particle_number", Value::Real(number)),
                ("density_mean", Value::Real(run.mean[i])),
                ("density_variance", Value::Real(run.variance[i])),
                ("energy", Value::Real(run.energy[i])),
            ],
        )?;
    }
    stamp(&mut series, config, &hash);
    let status = RunStatus::Completed;
    let mut metadata = base_metadata(config, &hash, &status);
    metadata["basis_size"] = json!(oracle.basis.len());
    Ok(RunOutcome { config: config.clone(), hash, status, series, spectrum: None, checkpoint: None, metadata })
}

fn stamp(series: &mut TimeSeries, config: &RunConfig, hash: &str) {
    series.metadata.insert("config_hash".into(), hash.into());
    series.metadata.insert("version".into(), VERSION.into());
    series.metadata.insert("application".into(), format!("{:?}", config.run.application));
    series.metadata.insert("seed".into(), config.sampling.seed.to_string());
}

fn spectrum_of(config: &RunConfig, series: &TimeSeries, hash: &str) -> CliResult<Option<TimeSeries>> {
    if !config.observables.spectrum || series.column("ccf").is_none() || series.t.len() < 2 {
        return Ok(None);
    }
    let mut s = ft_spectrum(series, "ccf", config.observables.window, config.observables.zero_pad)?;
    stamp(&mut s, config, hash);
    Ok(Some(s))
}

fn base_metadata(config: &RunConfig, hash: &str, status: &RunStatus) -> serde_json::Value {
    json!({
        "version": VERSION,
        "config_hash": hash,
        "application": config.run.application,
        "seed": config.sampling.seed,
        "status": status,
        "config": config.to_toml(),
    })
}

fn projection_json(p: &Projection) -> serde_json::Value {
    json!({
        "norm": p.norm,
        "fidelity": p.fidelity,
        "residual": p.residual,
        "rank": p.solve.rank,
        "dimension": p.solve.dimension,
        "condition": p.solve.condition,
    })
}

fn summary_json(s: &PropagationSummary) -> serde_json::Value {
    json!({
        "records": s.records,
        "rhs_evaluations": s.rhs_evaluations,
        "accepted_steps": s.accepted_steps,
        "rejected_steps": s.rejected_steps,
    })
}

/// Writes observables, spectrum, metadata and the final checkpoint to `dir`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    outcome.series.write_csv_file(&dir.join(OBSERVABLES_FILE))?;
    if let Some(s) = &outcome.spectrum {
        s.write_csv_file(&dir.join(SPECTRUM_FILE))?;
    }
    if let Some(c) = &outcome.checkpoint {
        c.write(&dir.join(CHECKPOINT_FILE))?;
    }
    let path = dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(&outcome.metadata).expect("metadata serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(application: &str) -> RunConfig {
        RunConfig::parse(&format!(
            r#"
[run]
application = "{application}"
t_end = 0.2

[app2]
xi = 2.1
lambda0 = 0.05
bosons = 2
omega = 3

[sampling]
configurations = 6
sigma_empty = 10.0

[propagator]
dt = 0.05
record_every = 2
"#
        ))
        .unwrap()
    }

    #[test]
    fn record_times_end_exactly() {
        let c = tiny("app2");
        let t = record_times(&c);
        assert_eq!(t.len(), 3);
        assert_eq!(*t.last().unwrap(), 0.2);
    }

    #[test]
    fn engine_and_oracle_share_the_time_axis() {
        let a = execute(&tiny("app2"), None, None).unwrap();
        let b = execute(&tiny("oracle-app2"), None, None).unwrap();
        assert_eq!(a.status, RunStatus::Completed);
        assert_eq!(a.series.t, b.series.t);
        assert_eq!(a.series.metadata["config_hash"], a.hash);
        assert!(a.spectrum.is_none());
    }

    #[test]
    fn resume_continues_from_checkpoint() {
        let mut c = tiny("app2");
        c.run.t_end = 0.1;
        let first = execute(&c, None, None).unwrap();
        let ck = first.checkpoint.unwrap();
        let mut reseeded = tiny("app2");
        reseeded.sampling.seed = 9;
        assert!(matches!(execute(&reseeded, None, Some(ck.clone())), Err(CliError::Config(_))));
        let resumed = execute(&tiny("app2"), None, Some(ck)).unwrap();
        assert_eq!(resumed.series.t.first(), Some(&0.1));
        assert_eq!(resumed.series.t.last(), Some(&0.2));
    }
}
