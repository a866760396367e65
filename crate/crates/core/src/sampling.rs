//! Monte-Carlo initial bases and their projection onto the initial state.
//!
//! Each mode draws from its own ChaCha20 stream: the generator is seeded
//! with the run seed and switched to stream number `mode`, so adding modes
//! never changes the samples of existing ones.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::{label_from_qp, log_fock_overlap_unchecked, overlap_unchecked, LogAmplitude, OccupationVector};
use crate::error::{Error, Result};
use crate::propagator::{overlap_matrix, quadratic_form, solve_amplitude_system, SolveReport, WavefunctionState};

/// Generator for one mode of one run.
pub fn mode_rng(seed: u64, mode: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(mode as u64);
    rng
}

/// K labels with density ∝ exp(−σ|z − z₀|²).
pub fn sample_gaussian_mode(z0: C64, sigma: f64, k: usize, rng: &mut impl Rng) -> Result<Vec<C64>> {
    check_sigma(sigma)?;
    let normal = Normal::new(0.0, (0.5 / sigma).sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    Ok((0..k).map(|_| z0 + C64::new(normal.sample(rng), normal.sample(rng))).collect())
}

/// K labels whose |z|² is gamma distributed with shape n + 1 (scale σ for
/// n > 0, 1/σ for n = 0) and whose phase is uniform on [0, 2π).
pub fn sample_gamma_mode(n: u32, sigma: f64, k: usize, rng: &mut impl Rng) -> Result<Vec<C64>> {
    check_sigma(sigma)?;
    let scale = if n > 0 { sigma } else { 1.0 / sigma };
    let gamma = Gamma::new(n as f64 + 1.0, scale).map_err(|e| Error::Config(e.to_string()))?;
    Ok((0..k)
        .map(|_| {
            let r2: f64 = gamma.sample(rng);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(r2.sqrt(), phase)
        })
        .collect())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("compression parameter must be positive and finite, got {sigma}")))
    }
}

/// The state the basis is projected onto at t = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialTarget {
    /// A bosonic Fock state over all modes.
    Fock { occupation: OccupationVector },
    /// A coherent tunnelling wavepacket at (q, p) times a bath Fock state.
    TunnellingBath { q: f64, p: f64, bath: OccupationVector },
}

impl InitialTarget {
    pub fn mode_count(&self) -> usize {
        match self {
            InitialTarget::Fock { occupation } => occupation.len(),
            InitialTarget::TunnellingBath { bath, .. } => bath.len() + 1,
        }
    }

    /// ⟨z|target⟩ in log form.
    pub fn log_overlap(&self, z: &[C64]) -> LogAmplitude {
        match self {
            InitialTarget::Fock { occupation } => log_fock_overlap_unchecked(z, &occupation.0),
            InitialTarget::TunnellingBath { q, p, bath } => {
                let g = overlap_unchecked(&z[..1], &[label_from_qp(*q, *p)]);
                let (r, th) = g.to_polar();
                log_fock_overlap_unchecked(&z[1..], &bath.0).mul(LogAmplitude { ln_abs: r.ln(), phase: th })
            }
        }
    }

    pub fn overlap(&self, z: &[C64]) -> C64 {
        self.log_overlap(z).to_complex()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    /// Number of configurations K.
    pub configurations: usize,
    /// Gaussian width σ of the tunnelling mode.
    pub sigma_tunnelling: f64,
    /// Compression σ for modes with n > 0.
    pub sigma_occupied: f64,
    /// Compression σ for modes with n = 0.
    pub sigma_empty: f64,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec { configurations: 100, sigma_tunnelling: 1.0, sigma_occupied: 1.0, sigma_empty: 100.0, seed: 1 }
    }
}

/// Draws the K × modes label matrix for `target`.
pub fn sample_basis(spec: &SamplingSpec, target: &InitialTarget) -> Result<Array2<C64>> {
    if spec.configurations == 0 {
        return Err(Error::Config("configuration count K must be at least 1".into()));
    }
    let k = spec.configurations;
    let (columns, offset) = match target {
        InitialTarget::Fock { occupation } => (occupation.0.clone(), 0),
        InitialTarget::TunnellingBath { bath, .. } => (bath.0.clone(), 1),
    };
    let mut z = Array2::zeros((k, columns.len() + offset));
    if let InitialTarget::TunnellingBath { q, p, .. } = target {
        let col = sample_gaussian_mode(label_from_qp(*q, *p), spec.sigma_tunnelling, k, &mut mode_rng(spec.seed, 0))?;
        z.column_mut(0).iter_mut().zip(col).for_each(|(d, s)| *d = s);
    }
    for (i, &n) in columns.iter().enumerate() {
        let sigma = if n > 0 { spec.sigma_occupied } else { spec.sigma_empty };
        let col = sample_gamma_mode(n, sigma, k, &mut mode_rng(spec.seed, i + offset))?;
        z.column_mut(i + offset).iter_mut().zip(col).for_each(|(d, s)| *d = s);
    }
    Ok(z)
}

/// Amplitudes D(0) and how well they reproduce the target.
#[derive(Clone, Debug)]
pub struct Projection {
    pub amplitudes: Vec<C64>,
    /// ⟨Ψ(0)|Ψ(0)⟩.
    pub norm: f64,
    /// |⟨target|Ψ(0)⟩|² / ⟨Ψ(0)|Ψ(0)⟩ for a unit-norm target.
    pub fidelity: f64,
    /// Largest |Σ_l ⟨z_k|z_l⟩ D_l − ⟨z_k|target⟩|.
    pub residual: f64,
    pub solve: SolveReport,
}

/// Solves Σ_l ⟨z_k|z_l⟩ D_l = ⟨z_k|target⟩ with all actions zero.
pub fn project_initial_amplitudes(basis: ArrayView2<C64>, target: &InitialTarget, cutoff: f64) -> Result<Projection> {
    if basis.nrows() == 0 {
        return Err(Error::Config("cannot project onto an empty basis".into()));
    }
    if basis.ncols() != target.mode_count() {
        return Err(Error::ModeCount { expected: target.mode_count(), found: basis.ncols() });
    }
    let b: Vec<C64> = basis.outer_iter().map(|row| target.overlap(&row.to_vec())).collect();
    let o = overlap_matrix(basis);
    let (d, solve) = solve_amplitude_system(o.view(), &b, cutoff)?;
    let norm = quadratic_form(&o, &d).re;
    let proj: C64 = b.iter().zip(&d).map(|(b, d)| b.conj() * d).sum();
    let od = o.dot(&ndarray::Array1::from(d.clone()));
    let residual = od.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let fidelity = if norm > 0.0 { proj.norm_sqr() / norm } else { 0.0 };
    Ok(Projection { amplitudes: d, norm, fidelity, residual, solve })
}

/// Samples a basis and projects it, returning the t = 0 state.
pub fn initial_state(
    spec: &SamplingSpec,
    target: &InitialTarget,
    cutoff: f64,
) -> Result<(WavefunctionState, Projection)> {
    let z = sample_basis(spec, target)?;
    let p = project_initial_amplitudes(z.view(), target, cutoff)?;
    let k = z.nrows();
    let state = WavefunctionState::new(z, p.amplitudes.clone(), vec![0.0; k], 0.0)?;
    Ok((state, p))
}
