//! Quantities measured on a wavefunction snapshot, and their time series.

mod series;
mod spectrum;

use std::ops::Range;

use ndarray::parallel::prelude::*;
use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::hermite_function_polys;
use crate::propagator::{Observer, RecordContext, WavefunctionState};
use crate::sampling::InitialTarget;

pub use series::{Column, ColumnData, TimeSeries, Value};
pub use spectrum::{chi_between, chi_error, dft_magnitudes, ft_spectrum, max_abs_error, Window};

/// Tolerated imaginary residue of a real observable, relative to the sum of
/// absolute values of its terms.
const IMAG_RESIDUE: f64 = 1e-10;

/// W_kl = conj(c_k) ⟨z_k|z_l⟩ c_l.
fn weighted_overlaps(state: &WavefunctionState) -> Array2<C64> {
    let c = state.weights();
    let mut w = state.overlap_matrix();
    w.axis_iter_mut(Axis(0)).into_par_iter().zip(&c).for_each(|(mut row, ck)| {
        row.iter_mut().zip(&c).for_each(|(v, cl)| *v *= ck.conj() * cl);
    });
    w
}

fn real_part(value: C64, scale: f64, what: &str) -> Result<f64> {
    if value.im.abs() > IMAG_RESIDUE * scale.max(1.0) {
        return Err(Error::Diagnostics(format!("{what} has imaginary residue {:e}", value.im)));
    }
    Ok(value.re)
}

/// ⟨Ψ|Ψ⟩ and N = Σ_kl W_kl Σ_α z_k^(α)* z_l^(α) over `particle_modes`.
pub fn norm_and_particle_number(state: &WavefunctionState, particle_modes: Range<usize>) -> Result<(f64, f64)> {
    let w = weighted_overlaps(state);
    let zp = state.z.slice(ndarray::s![.., particle_modes]);
    let dots = zp.mapv(|c| c.conj()).dot(&zp.t());
    let mut norm = C64::new(0.0, 0.0);
    let mut number = C64::new(0.0, 0.0);
    let mut scale_n = 0.0;
    let mut scale_d = 0.0;
    for ((x, d), _) in w.iter().zip(dots.iter()).zip(0..) {
        norm += x;
        let t = x * d;
        number += t;
        scale_n += x.norm();
        scale_d += t.norm();
    }
    Ok((real_part(norm, scale_n, "norm")?, real_part(number, scale_d, "particle number")?))
}

/// ⟨target|Ψ⟩ = Σ_l D_l e^{iS_l} ⟨target|z_l⟩. With the mirror-image
/// wavepacket as target this is the cross-correlation function.
pub fn cross_correlation(state: &WavefunctionState, target: &InitialTarget) -> Result<C64> {
    if state.modes() != target.mode_count() {
        return Err(Error::ModeCount { expected: target.mode_count(), found: state.modes() });
    }
    let c = state.weights();
    Ok(state.z.outer_iter().zip(&c).map(|(row, cl)| target.log_overlap(&row.to_vec()).conj().times(*cl)).sum())
}

/// ρ^(α,β) = Σ_kl W_kl z_k^(α)* z_l^(β), made exactly Hermitian.
pub fn density_matrix(state: &WavefunctionState, modes: Range<usize>) -> Result<Array2<C64>> {
    let w = weighted_overlaps(state);
    let zp = state.z.slice(ndarray::s![.., modes]).to_owned();
    let rho = zp.t().mapv(|c| c.conj()).dot(&w.dot(&zp));
    let adj = rho.t().mapv(|c| c.conj());
    let scale = rho.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let defect = (&rho - &adj).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if defect > 1e-8 * scale {
        return Err(Error::Diagnostics(format!("density matrix Hermiticity defect {defect:e}")));
    }
    Ok((&rho + &adj) * C64::new(0.5, 0.0))
}

/// Uniform position grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for DensityGrid {
    fn default() -> Self {
        DensityGrid { start: -8.0, end: 10.0, step: 0.02 }
    }
}

impl DensityGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.end > self.start) {
            return Err(Error::Config(format!("bad density grid {self:?}")));
        }
        let n = ((self.end - self.start) / self.step).round() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Oscillator eigenfunctions φ_0..=φ_max on the grid, row per point.
fn eigenfunctions(grid: &[f64], max: usize) -> Array2<f64> {
    let mut phi = Array2::zeros((grid.len(), max + 1));
    for (i, &q) in grid.iter().enumerate() {
        let g = (-0.5 * q * q).exp();
        for (a, h) in hermite_function_polys(q, max).into_iter().enumerate() {
            phi[[i, a]] = h * g;
        }
    }
    phi
}

/// ρ(Q) = Σ_αβ ρ^(α,β) φ_α(Q) φ_β(Q).
///
/// Fails when the grid captures less than 0.999 of |φ_Ω|².
pub fn one_body_density(rho: &Array2<C64>, grid: &[f64]) -> Result<Vec<f64>> {
    let n = rho.nrows();
    if n == 0 || grid.len() < 2 {
        return Err(Error::Config("density needs a nonempty matrix and grid".into()));
    }
    let phi = eigenfunctions(grid, n - 1);
    let top: Vec<f64> = phi.column(n - 1).iter().map(|v| v * v).collect();
    let captured = trapezoid(grid, &top);
    if captured < 0.999 {
        return Err(Error::Diagnostics(format!(
            "grid [{}, {}] captures only {captured:.6} of the highest eigenfunction",
            grid[0],
            grid[grid.len() - 1]
        )));
    }
    let rho_re = rho.mapv(|c| c.re);
    let tmp = phi.dot(&rho_re);
    Ok((0..grid.len()).map(|i| tmp.row(i).dot(&phi.row(i))).collect())
}

/// Mean and variance of the unit-normalised density ρ(Q)/∫ρ.
pub fn density_variance(rho_q: &[f64], grid: &[f64]) -> Result<(f64, f64)> {
    let total = trapezoid(grid, rho_q);
    if !(total > 0.0) {
        return Err(Error::Diagnostics(format!("density integrates to {total}")));
    }
    let q1: Vec<f64> = grid.iter().zip(rho_q).map(|(q, r)| q * r).collect();
    let q2: Vec<f64> = grid.iter().zip(rho_q).map(|(q, r)| q * q * r).collect();
    let mean = trapezoid(grid, &q1) / total;
    Ok((mean, trapezoid(grid, &q2) / total - mean * mean))
}

/// Snapshot of the one-body density.
#[derive(Clone, Debug)]
pub struct DensityRecord {
    pub rho: Array2<C64>,
    pub grid: Vec<f64>,
    pub rho_q: Vec<f64>,
    pub integral: f64,
    pub mean: f64,
    pub variance: f64,
}

pub fn density_record(state: &WavefunctionState, modes: Range<usize>, grid: &[f64]) -> Result<DensityRecord> {
    let rho = density_matrix(state, modes)?;
    let rho_q = one_body_density(&rho, grid)?;
    let integral = trapezoid(grid, &rho_q);
    let (mean, variance) = density_variance(&rho_q, grid)?;
    Ok(DensityRecord { rho, grid: grid.to_vec(), rho_q, integral, mean, variance })
}

/// Which observables a [`SeriesRecorder`] writes.
#[derive(Clone, Debug)]
pub struct RecorderSpec {
    pub particle_modes: Range<usize>,
    /// Mirror wavepacket for the cross-correlation function.
    pub mirror: Option<InitialTarget>,
    /// Grid for the one-body density of the particle modes.
    pub density_grid: Option<Vec<f64>>,
    pub solver_diagnostics: bool,
}

/// Observer collecting norm, particle number and the requested observables.
#[derive(Clone, Debug)]
pub struct SeriesRecorder {
    pub spec: RecorderSpec,
    pub series: TimeSeries,
    /// Most negative ρ(Q) seen so far.
    pub min_density: f64,
}

impl SeriesRecorder {
    pub fn new(spec: RecorderSpec) -> Self {
        SeriesRecorder { spec, series: TimeSeries::default(), min_density: f64::INFINITY }
    }
}

impl Observer for SeriesRecorder {
    fn observe(&mut self, state: &WavefunctionState, ctx: &RecordContext) -> Result<()> {
        let (norm, number) = norm_and_particle_number(state, self.spec.particle_modes.clone())?;
        let mut row: Vec<(&str, Value)> = vec![("norm", Value::Real(norm)), ("particle_number", Value::Real(number))];
        if let Some(mirror) = &self.spec.mirror {
            let ccf = cross_correlation(state, mirror)?;
            row.push(("ccf", Value::Complex(ccf)));
            row.push(("ccf_normalized", Value::Complex(ccf / norm.max(f64::MIN_POSITIVE).sqrt())));
        }
        if let Some(grid) = &self.spec.density_grid {
            let d = density_record(state, self.spec.particle_modes.clone(), grid)?;
            self.min_density = d.rho_q.iter().copied().fold(self.min_density, f64::min);
            row.push(("density_mean", Value::Real(d.mean)));
            row.push(("density_variance", Value::Real(d.variance)));
        }
        if self.spec.solver_diagnostics {
            let (rank, cond) = ctx.solve.map_or((f64::NAN, f64::NAN), |s| (s.rank as f64, s.condition));
            row.push(("solve_rank", Value::Real(rank)));
            row.push(("condition", Value::Real(cond)));
        }
        self.series.push(state.t, &row)
    }
}
