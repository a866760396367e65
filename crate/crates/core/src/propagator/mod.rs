//! Equations of motion for the labels z_k, actions S_k and amplitudes D_k,
//! and the time loop that drives them.

mod integrators;
pub mod linsolve;

use std::cell::Cell;
use std::path::Path;

use ndarray::parallel::prelude::*;
use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::Configuration;
use crate::error::{Error, Result};
use crate::hamiltonians::NormalOrderedHamiltonian;

pub use integrators::{rk4_step, Dopri5};
pub use linsolve::{solve_amplitude_system, solve_overlap_system, solve_with_phases, LinearSolver, SolveReport};

/// Largest tolerated imaginary part of H̄(z*, z) before Ṡ is declared complex.
pub const ACTION_RESIDUE_LIMIT: f64 = 1e-9;

/// K configurations and the simulation clock.
#[derive(Clone, Debug, PartialEq)]
pub struct WavefunctionState {
    /// Labels, one row per configuration.
    pub z: Array2<C64>,
    pub amplitude: Vec<C64>,
    pub action: Vec<f64>,
    pub t: f64,
}

impl WavefunctionState {
    pub fn new(z: Array2<C64>, amplitude: Vec<C64>, action: Vec<f64>, t: f64) -> Result<Self> {
        let k = z.nrows();
        if k == 0 {
            return Err(Error::Config("a wavefunction needs at least one configuration".into()));
        }
        if amplitude.len() != k || action.len() != k {
            return Err(Error::Config(format!(
                "{k} labels but {} amplitudes and {} actions",
                amplitude.len(),
                action.len()
            )));
        }
        Ok(WavefunctionState { z, amplitude, action, t })
    }

    pub fn from_configurations(configs: &[Configuration], t: f64) -> Result<Self> {
        let m = configs.first().map_or(0, |c| c.z.len());
        if configs.iter().any(|c| c.z.len() != m) {
            return Err(Error::Config("configurations have differing mode counts".into()));
        }
        let z = Array2::from_shape_fn((configs.len(), m), |(k, a)| configs[k].z[a]);
        Self::new(z, configs.iter().map(|c| c.amplitude).collect(), configs.iter().map(|c| c.action).collect(), t)
    }

    pub fn configurations(&self) -> Vec<Configuration> {
        (0..self.len())
            .map(|k| Configuration { z: self.z.row(k).to_vec(), amplitude: self.amplitude[k], action: self.action[k] })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn modes(&self) -> usize {
        self.z.ncols()
    }

    /// c_k = D_k e^{iS_k}.
    pub fn weights(&self) -> Vec<C64> {
        self.amplitude.iter().zip(&self.action).map(|(d, s)| d * C64::from_polar(1.0, *s)).collect()
    }

    pub fn overlap_matrix(&self) -> Array2<C64> {
        overlap_matrix(self.z.view())
    }

    /// ⟨Ψ|Ψ⟩ = Σ c_k* ⟨z_k|z_l⟩ c_l.
    pub fn norm(&self) -> f64 {
        quadratic_form(&self.overlap_matrix(), &self.weights()).re
    }

    fn to_flat(&self) -> Vec<C64> {
        let mut y: Vec<C64> = self.z.iter().copied().collect();
        y.extend(&self.amplitude);
        y.extend(self.action.iter().map(|&s| C64::new(s, 0.0)));
        y
    }

    fn set_flat(&mut self, y: &[C64]) {
        let (k, m) = self.z.dim();
        self.z.iter_mut().zip(&y[..k * m]).for_each(|(z, v)| *z = *v);
        self.amplitude.copy_from_slice(&y[k * m..k * m + k]);
        self.action.iter_mut().zip(&y[k * m + k..]).for_each(|(s, v)| *s = v.re);
    }
}

/// Overlaps ⟨z_k|z_l⟩ of all pairs of rows.
pub fn overlap_matrix(z: ArrayView2<C64>) -> Array2<C64> {
    let half: Vec<f64> = z.outer_iter().map(|r| 0.5 * r.iter().map(|c| c.norm_sqr()).sum::<f64>()).collect();
    let mut o = z.mapv(|c| c.conj()).dot(&z.t());
    o.axis_iter_mut(Axis(0)).into_par_iter().zip(&half).for_each(|(mut row, hk)| {
        row.iter_mut().zip(&half).for_each(|(v, hl)| *v = (*v - hk - hl).exp());
    });
    o
}

/// Σ_kl conj(c_k) M_kl c_l.
pub fn quadratic_form(m: &Array2<C64>, c: &[C64]) -> C64 {
    m.outer_iter().zip(c).map(|(row, ck)| ck.conj() * row.iter().zip(c).map(|(x, cl)| x * cl).sum::<C64>()).sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    FixedRk4,
    #[default]
    AdaptiveRk45,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorSettings {
    /// Base step: the fixed RK4 step, or the initial adaptive step. Its sign
    /// sets the direction of propagation.
    pub dt: f64,
    pub integrator: Integrator,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Relative singular-value threshold of the amplitude solve.
    pub svd_cutoff: f64,
    pub solver: LinearSolver,
    /// Observables are recorded every `record_every` base steps.
    pub record_every: usize,
    /// Largest tolerated relative change of the norm.
    pub norm_guard: f64,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        PropagatorSettings {
            dt: 0.01,
            integrator: Integrator::AdaptiveRk45,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            svd_cutoff: 1e-10,
            solver: LinearSolver::default(),
            record_every: 10,
            norm_guard: 0.5,
        }
    }
}

impl PropagatorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt != 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be non-zero and finite, got {}", self.dt)));
        }
        if !(0.0..1.0).contains(&self.svd_cutoff) {
            return Err(Error::Config(format!("svd_cutoff must lie in [0, 1), got {}", self.svd_cutoff)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("integrator tolerances must be positive".into()));
        }
        if !(self.norm_guard > 0.0) {
            return Err(Error::Config("norm_guard must be positive".into()));
        }
        Ok(())
    }

    pub fn record_interval(&self) -> f64 {
        self.dt * self.record_every as f64
    }
}

/// Time derivatives of every configuration.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub z: Array2<C64>,
    pub action: Vec<f64>,
    pub amplitude: Vec<C64>,
    pub solve: SolveReport,
}

/// ż_k = −i ∂H̄/∂z_k*, Ṡ_k = Σ (i/2)(z_k* ż_k − ż_k* z_k) − H̄(z_k*, z_k), and
/// Ḋ from Σ_l ⟨z_k|z_l⟩ e^{iS_l} Ḋ_l = −i Σ_l ⟨z_k|z_l⟩ e^{iS_l} D_l δ²H̄'_kl
/// with δ²H̄'_kl = H̄(z_k*, z_l) − H̄(z_l*, z_l) − i ż_l · (z_k* − z_l*).
pub fn rhs<H>(h: &H, state: &WavefunctionState, settings: &PropagatorSettings) -> Result<Derivatives>
where
    H: NormalOrderedHamiltonian + ?Sized,
{
    let m = state.modes();
    if m != h.mode_count() {
        return Err(Error::ModeCount { expected: h.mode_count(), found: m });
    }
    let z = state.z.view();
    let zdot = h.gradients(z).mapv(|g| C64::new(0.0, -1.0) * g);
    let energies = h.pair_energies(z);
    let zc = z.mapv(|c| c.conj());

    let mut sdot = Vec::with_capacity(state.len());
    for (k, (row, drow)) in z.outer_iter().zip(zdot.outer_iter()).enumerate() {
        let e = energies[[k, k]];
        if e.im.abs() > ACTION_RESIDUE_LIMIT * (1.0 + e.re.abs()) {
            return Err(Error::ComplexAction { config: k, residue: e.im.abs() });
        }
        let w: C64 = row.iter().zip(drow.iter()).map(|(a, b)| a.conj() * b).sum();
        sdot.push(-w.im - e.re);
    }

    // p_kl = z_k* · ż_l
    let p = zc.dot(&zdot.t());
    let o = overlap_matrix(z);
    let c = state.weights();
    let b: Vec<C64> = (0..state.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..c.len() {
                let delta = energies[[k, l]] - energies[[l, l]] - C64::new(0.0, 1.0) * (p[[k, l]] - p[[l, l]]);
                acc += o[[k, l]] * delta * c[l];
            }
            C64::new(0.0, -1.0) * acc
        })
        .collect();
    let phases: Vec<C64> = state.action.iter().map(|s| C64::from_polar(1.0, *s)).collect();
    let (ddot, solve) = solve_with_phases(o.view(), &phases, &b, settings.svd_cutoff, settings.solver)?;
    Ok(Derivatives { z: zdot, action: sdot, amplitude: ddot, solve })
}

/// What the time loop hands to observers at each record point.
#[derive(Clone, Copy, Debug)]
pub struct RecordContext {
    pub index: usize,
    pub norm: f64,
    pub initial_norm: f64,
    pub solve: Option<SolveReport>,
}

/// Receives the state at every record time.
pub trait Observer {
    fn observe(&mut self, state: &WavefunctionState, ctx: &RecordContext) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(&WavefunctionState, &RecordContext) -> Result<()>,
{
    fn observe(&mut self, state: &WavefunctionState, ctx: &RecordContext) -> Result<()> {
        self(state, ctx)
    }
}

#[derive(Clone, Debug, Default)]
pub struct PropagationSummary {
    pub records: usize,
    pub rhs_evaluations: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub last_solve: Option<SolveReport>,
}

/// Advances `state` to `t_end`, calling `observer` at the initial time and
/// then every `record_every · dt`. Stops with [`Error::NormGuard`] once the
/// norm leaves the guard band, after the offending record was observed.
pub fn propagate<H>(
    h: &H,
    state: &mut WavefunctionState,
    settings: &PropagatorSettings,
    t_end: f64,
    observer: &mut dyn Observer,
) -> Result<PropagationSummary>
where
    H: NormalOrderedHamiltonian + ?Sized,
{
    settings.validate()?;
    let span = t_end - state.t;
    if span * settings.dt <= 0.0 {
        return Err(Error::Config(format!(
            "t_end = {t_end} is not reached from t = {} with dt = {}",
            state.t, settings.dt
        )));
    }
    let interval = settings.record_interval();
    let segments = (span / interval - 1e-9).ceil().max(1.0) as usize;
    let t0 = state.t;
    let initial_norm = state.norm();
    let mut summary = PropagationSummary::default();
    let last_solve = Cell::new(None);
    let evaluations = Cell::new(0usize);

    let mut ctx = RecordContext { index: 0, norm: initial_norm, initial_norm, solve: None };
    observer.observe(state, &ctx)?;
    summary.records = 1;

    let mut work = state.clone();
    let mut f = |t: f64, y: &[C64]| -> Result<Vec<C64>> {
        work.set_flat(y);
        work.t = t;
        let d = rhs(h, &work, settings)?;
        evaluations.set(evaluations.get() + 1);
        last_solve.set(Some(d.solve));
        let mut out: Vec<C64> = d.z.iter().copied().collect();
        out.extend(&d.amplitude);
        out.extend(d.action.iter().map(|&s| C64::new(s, 0.0)));
        Ok(out)
    };

    let mut y = state.to_flat();
    let mut dopri = Dopri5::new(settings.rel_tol, settings.abs_tol, settings.dt);
    for seg in 1..=segments {
        let t_start = t0 + (seg - 1) as f64 * interval;
        let t_stop = if seg == segments { t_end } else { t0 + seg as f64 * interval };
        match settings.integrator {
            Integrator::FixedRk4 => {
                let n = ((t_stop - t_start) / settings.dt).abs().round().max(1.0) as usize;
                let step = (t_stop - t_start) / n as f64;
                for i in 0..n {
                    y = rk4_step(&mut f, t_start + i as f64 * step, &y, step)?;
                }
                summary.accepted_steps += n;
            }
            Integrator::AdaptiveRk45 => dopri.advance(&mut f, t_start, t_stop, &mut y)?,
        }
        state.set_flat(&y);
        state.t = t_stop;
        let norm = state.norm();
        ctx = RecordContext { index: seg, norm, initial_norm, solve: last_solve.get() };
        observer.observe(state, &ctx)?;
        summary.records += 1;
        if ((norm - initial_norm) / initial_norm).abs() > settings.norm_guard || !norm.is_finite() {
            return Err(Error::NormGuard { t: state.t, norm, initial: initial_norm });
        }
    }
    if settings.integrator == Integrator::AdaptiveRk45 {
        summary.accepted_steps = dopri.accepted;
        summary.rejected_steps = dopri.rejected;
    }
    summary.rhs_evaluations = evaluations.get();
    summary.last_solve = last_solve.get();
    Ok(summary)
}

/// Restart record of a propagation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub seed: u64,
    pub settings_hash: String,
    pub configurations: Vec<Configuration>,
}

impl Checkpoint {
    pub fn capture(state: &WavefunctionState, seed: u64, settings_hash: &str) -> Self {
        Checkpoint { t: state.t, seed, settings_hash: settings_hash.to_owned(), configurations: state.configurations() }
    }

    pub fn restore(&self) -> Result<WavefunctionState> {
        WavefunctionState::from_configurations(&self.configurations, self.t)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}
