//! Run configuration: a sectioned `key = value` file (TOML syntax).

use std::path::{Path, PathBuf};

use ccsb_core::basis::OccupationVector;
use ccsb_core::hamiltonians::CouplingForm;
use ccsb_core::observables::{DensityGrid, Window};
use ccsb_core::oracle::KrylovSettings;
use ccsb_core::propagator::PropagatorSettings;
use ccsb_core::sampling::{InitialTarget, SamplingSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Application {
    App1,
    App2,
    OracleApp1,
    OracleApp2,
}

impl Application {
    pub fn is_oracle(self) -> bool {
        matches!(self, Application::OracleApp1 | Application::OracleApp2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub application: Application,
    pub t_end: f64,
    /// Output directory name below the output root, or an absolute path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Write a restart checkpoint every this many records; 0 keeps only the
    /// final one.
    #[serde(default)]
    pub checkpoint_every: usize,
}

/// Tunnelling mode coupled to a bath of M − 1 bosons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct App1Params {
    pub eta: f64,
    pub lambda: f64,
    pub dimension: usize,
    pub omega: usize,
    #[serde(default)]
    pub coupling: CouplingForm,
    #[serde(default = "default_initial_q")]
    pub initial_q: f64,
    #[serde(default)]
    pub initial_p: f64,
    #[serde(default = "default_mirror_q")]
    pub mirror_q: f64,
    #[serde(default)]
    pub mirror_p: f64,
}

fn default_initial_q() -> f64 {
    -2.5
}

fn default_mirror_q() -> f64 {
    2.5
}

impl App1Params {
    pub fn bath(&self) -> OccupationVector {
        OccupationVector::condensed(self.dimension.saturating_sub(1) as u32, self.omega + 1)
    }

    pub fn target(&self) -> InitialTarget {
        InitialTarget::TunnellingBath { q: self.initial_q, p: self.initial_p, bath: self.bath() }
    }

    pub fn mirror(&self) -> InitialTarget {
        InitialTarget::TunnellingBath { q: self.mirror_q, p: self.mirror_p, bath: self.bath() }
    }
}

/// N bosons in a displaced harmonic trap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct App2Params {
    pub xi: f64,
    pub lambda0: f64,
    pub bosons: u32,
    pub omega: usize,
}

impl App2Params {
    pub fn target(&self) -> InitialTarget {
        InitialTarget::Fock { occupation: OccupationVector::condensed(self.bosons, self.omega + 1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSpec {
    /// Cross-correlation with the mirror wavepacket (app1 only).
    pub ccf: bool,
    /// One-body density mean and variance (app2 only).
    pub density: bool,
    pub solver_diagnostics: bool,
    /// Write the spectrum of Re CCF next to the observables.
    pub spectrum: bool,
    pub window: Window,
    pub zero_pad: usize,
}

impl Default for ObservableSpec {
    fn default() -> Self {
        ObservableSpec {
            ccf: true,
            density: true,
            solver_diagnostics: true,
            spectrum: true,
            window: Window::Hann,
            zero_pad: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Tunnelling-mode levels of the product basis.
    pub levels: usize,
    pub tolerance: f64,
    pub subspace: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        let k = KrylovSettings::default();
        OracleSection { levels: 40, tolerance: k.tolerance, subspace: k.subspace }
    }
}

impl OracleSection {
    pub fn krylov(&self) -> KrylovSettings {
        KrylovSettings { tolerance: self.tolerance, subspace: self.subspace }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app1: Option<App1Params>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app2: Option<App2Params>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub propagator: PropagatorSettings,
    #[serde(default)]
    pub observables: ObservableSpec,
    #[serde(default)]
    pub grid: DensityGrid,
    #[serde(default)]
    pub oracle: OracleSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file, or the config embedded in a run's metadata JSON.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let meta: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
            let embedded = meta
                .get("config")
                .and_then(|c| c.as_str())
                .ok_or_else(|| CliError::Config(format!("{} has no embedded config", path.display())))?;
            return Self::parse(embedded);
        }
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical config, ignoring where outputs go.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run.output = None;
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Hash of everything that determines the trajectory, so a checkpoint
    /// can be resumed with a later `t_end` or different observables.
    pub fn dynamics_hash(&self) -> String {
        let mut c = self.clone();
        c.run.t_end = 0.0;
        c.run.checkpoint_every = 0;
        c.observables = ObservableSpec::default();
        c.grid = DensityGrid::default();
        c.oracle = OracleSection::default();
        c.hash()
    }

    pub fn validate(&self) -> CliResult<()> {
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!("application {:?} needs a [{section}] section", self.run.application)))
            }
        };
        match self.run.application {
            Application::App1 | Application::OracleApp1 => need(self.app1.is_some(), "app1")?,
            Application::App2 | Application::OracleApp2 => need(self.app2.is_some(), "app2")?,
        }
        if !(self.run.t_end > 0.0 && self.run.t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end must be positive, got {}", self.run.t_end)));
        }
        if self.propagator.dt <= 0.0 {
            return Err(CliError::Config("runs propagate forward: dt must be positive".into()));
        }
        self.propagator.validate()?;
        if self.sampling.configurations == 0 {
            return Err(CliError::Config("sampling.configurations must be at least 1".into()));
        }
        for (name, s) in [
            ("sigma_tunnelling", self.sampling.sigma_tunnelling),
            ("sigma_occupied", self.sampling.sigma_occupied),
            ("sigma_empty", self.sampling.sigma_empty),
        ] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(CliError::Config(format!("sampling.{name} must be positive, got {s}")));
            }
        }
        self.grid.points()?;
        if self.observables.zero_pad == 0 {
            return Err(CliError::Config("observables.zero_pad must be at least 1".into()));
        }
        Ok(())
    }
}
