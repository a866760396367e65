use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::fock::{expectation, vector_norm_sqr, FockBasis, SparseMatrix};
use super::krylov::{self, KrylovSettings};
use crate::error::{Error, Result};
use crate::hamiltonians::CouplingForm;

/// Parameters of the tunnelling-mode-plus-bath benchmark.
#[derive(Clone, Debug)]
pub struct App1OracleSpec {
    /// Total dimension M; the bath holds M − 1 bosons.
    pub dimension: usize,
    /// Highest even bath level index Ω (physical level 2Ω).
    pub omega: usize,
    /// Oscillator levels used for the tunnelling mode.
    pub levels: usize,
    pub eta: f64,
    pub lambda: f64,
    pub coupling: CouplingForm,
    /// Initial tunnelling wavepacket centre (q₀, p₀).
    pub initial: (f64, f64),
    /// Mirror wavepacket centre (q̄, p̄).
    pub mirror: (f64, f64),
}

impl App1OracleSpec {
    pub fn new(dimension: usize, omega: usize, eta: f64, lambda: f64) -> Self {
        App1OracleSpec {
            dimension,
            omega,
            levels: 40,
            eta,
            lambda,
            coupling: CouplingForm::default(),
            initial: (-2.5, 0.0),
            mirror: (2.5, 0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExactApp1Run {
    pub times: Vec<f64>,
    pub ccf: Vec<C64>,
    pub energy: Vec<f64>,
    pub norm: Vec<f64>,
    /// Weight of the initial wavepacket captured by the truncated basis.
    pub representability: f64,
}

/// Lowering operator on levels 0..dim.
fn lowering(dim: usize) -> Array2<f64> {
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = (n as f64).sqrt();
    }
    a
}

/// (q, q², q⁴, p²) on `levels` oscillator levels, formed in a larger space
/// so every retained element is exact.
pub(crate) fn ladder_operators(levels: usize) -> [Array2<f64>; 4] {
    let big = levels + 4;
    let a = lowering(big);
    let ad = a.t().to_owned();
    let q = (&a + &ad) / std::f64::consts::SQRT_2;
    // p = i(a† − a)/√2, so p² = −(a† − a)²/2.
    let d = &ad - &a;
    let p2 = -d.dot(&d) / 2.0;
    let q2 = q.dot(&q);
    let q4 = q2.dot(&q2);
    let cut = |m: &Array2<f64>| m.slice(ndarray::s![..levels, ..levels]).to_owned();
    [cut(&q), cut(&q2), cut(&q4), cut(&p2)]
}

/// ⟨n|z⟩ for n < levels.
pub(crate) fn coherent_coefficients(z: C64, levels: usize) -> Vec<C64> {
    let mut c = Vec::with_capacity(levels);
    let mut term = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    for n in 0..levels {
        if n > 0 {
            term = term * z / (n as f64).sqrt();
        }
        c.push(term);
    }
    c
}

pub struct TunnellingBathOracle {
    pub spec: App1OracleSpec,
    pub bath: FockBasis,
    pub hamiltonian: SparseMatrix,
}

impl TunnellingBathOracle {
    pub fn new(spec: App1OracleSpec) -> Result<Self> {
        if spec.dimension < 2 || !(spec.eta > 0.0) {
            return Err(Error::Config("oracle needs M ≥ 2 and η > 0".into()));
        }
        let nb = (spec.dimension - 1) as u32;
        let bath = FockBasis::new(nb, spec.omega + 1)?;
        let size = bath.len() * spec.levels;
        if size > super::fock::MAX_BASIS_SIZE {
            return Err(Error::OracleRefused(format!("product basis has {size} states")));
        }
        let [q, q2, q4, p2] = ladder_operators(spec.levels);
        let ht = &p2 / 2.0 - &q2 / 2.0 + &q4 / (16.0 * spec.eta);

        // Bath position-squared on even physical levels 2α, from ladder algebra.
        let phys = 2 * spec.omega + 1;
        let [_, bq2, _, _] = ladder_operators(phys);
        let modes = spec.omega + 1;
        let bath_q2 = Array2::from_shape_fn((modes, modes), |(a, b)| bq2[[2 * a, 2 * b]]);
        let g = 0.5 * spec.lambda * spec.coupling.position_scale();

        let nbath = bath.len();
        let levels = spec.levels;
        let rows: Vec<BTreeMap<usize, f64>> = (0..size)
            .into_par_iter()
            .map(|idx| {
                let t = idx / nbath;
                let j = idx % nbath;
                let mut row = BTreeMap::new();
                for tp in 0..levels {
                    let h = ht[[tp, t]];
                    if h != 0.0 {
                        *row.entry(tp * nbath + j).or_default() += h;
                    }
                }
                let occ = bath.state(j);
                let e_bath: f64 = occ.iter().enumerate().map(|(a, &n)| n as f64 * (2.0 * a as f64 + 0.5)).sum();
                *row.entry(idx).or_default() += e_bath;
                if g != 0.0 {
                    for tp in 0..levels {
                        let qv = q[[tp, t]];
                        if qv == 0.0 {
                            continue;
                        }
                        for a in 0..modes {
                            for b in 0..modes {
                                let c = bath_q2[[a, b]];
                                if c == 0.0 {
                                    continue;
                                }
                                if let Some((jp, amp)) = bath.hop(j, a, b) {
                                    *row.entry(tp * nbath + jp).or_default() += g * qv * c * amp;
                                }
                            }
                        }
                    }
                }
                row
            })
            .collect();
        Ok(TunnellingBathOracle { spec, bath, hamiltonian: SparseMatrix::from_rows(rows) })
    }

    /// Coherent tunnelling wavepacket at (q, p) times the condensed bath state.
    pub fn wavepacket(&self, qp: (f64, f64)) -> (Vec<C64>, f64) {
        let z = crate::basis::label_from_qp(qp.0, qp.1);
        let c = coherent_coefficients(z, self.spec.levels);
        let weight = vector_norm_sqr(&c);
        let nbath = self.bath.len();
        let mut psi = vec![C64::new(0.0, 0.0); self.spec.levels * nbath];
        for (t, ct) in c.iter().enumerate() {
            psi[t * nbath] = *ct;
        }
        (psi, weight)
    }

    pub fn propagate(&self, times: &[f64], settings: KrylovSettings) -> Result<ExactApp1Run> {
        let (mut psi, representability) = self.wavepacket(self.spec.initial);
        if representability < 0.9999 {
            return Err(Error::OracleRefused(format!(
                "{} tunnelling levels capture only {representability:.6} of the initial wavepacket",
                self.spec.levels
            )));
        }
        let (mirror, _) = self.wavepacket(self.spec.mirror);
        let mut run = ExactApp1Run {
            times: times.to_vec(),
            ccf: Vec::with_capacity(times.len()),
            energy: Vec::with_capacity(times.len()),
            norm: Vec::with_capacity(times.len()),
            representability,
        };
        let mut now = 0.0;
        for &t in times {
            krylov::propagate(&self.hamiltonian, &mut psi, t - now, settings)?;
            now = t;
            run.ccf.push(mirror.iter().zip(&psi).map(|(m, p)| m.conj() * p).sum());
            run.energy.push(expectation(&self.hamiltonian, &psi));
            run.norm.push(vector_norm_sqr(&psi));
        }
        Ok(run)
    }
}

/// Exact cross-correlation ⟨Ψ̄(0)|Ψ(t)⟩ for the tunnelling-mode-plus-bath model.
pub fn exact_propagate_app1(spec: &App1OracleSpec, times: &[f64]) -> Result<ExactApp1Run> {
    TunnellingBathOracle::new(spec.clone())?.propagate(times, KrylovSettings::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::grid::split_operator_ccf;

    #[test]
    fn ladder_elements() {
        let [q, q2, q4, p2] = ladder_operators(6);
        assert!((q[[0, 1]] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((q2[[0, 0]] - 0.5).abs() < 1e-15);
        assert!((q2[[0, 2]] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((q4[[0, 0]] - 0.75).abs() < 1e-15);
        assert!((p2[[0, 0]] - 0.5).abs() < 1e-15);
        // Highest retained level keeps its full q⁴ element.
        let [_, _, q4b, _] = ladder_operators(12);
        assert!((q4[[5, 5]] - q4b[[5, 5]]).abs() < 1e-12);
    }

    #[test]
    fn initial_overlap_is_gaussian() {
        let o = TunnellingBathOracle::new(App1OracleSpec::new(3, 2, 1.3544, 0.1)).unwrap();
        let run = o.propagate(&[0.0], KrylovSettings::default()).unwrap();
        assert!((run.ccf[0].norm() - (-6.25f64).exp()).abs() < 1e-10);
        assert!(run.representability > 0.9999);
    }

    #[test]
    fn refuses_too_few_levels() {
        let mut spec = App1OracleSpec::new(2, 1, 1.3544, 0.1);
        spec.levels = 8;
        assert!(matches!(exact_propagate_app1(&spec, &[0.0, 1.0]), Err(Error::OracleRefused(_))));
    }

    #[test]
    fn uncoupled_matches_grid_propagation() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let mut spec = App1OracleSpec::new(3, 2, 1.3544, 0.0);
        spec.levels = 60;
        let run = exact_propagate_app1(&spec, &times).unwrap();
        let grid = split_operator_ccf(1.3544, (-2.5, 0.0), (2.5, 0.0), &times, 0.002).unwrap();
        for (i, &t) in times.iter().enumerate() {
            // Two bath bosons in level 0 contribute the phase e^{−it}.
            let expect = grid[i] * C64::from_polar(1.0, -t);
            assert!((run.ccf[i] - expect).norm() < 2e-4, "t={t}: {} vs {expect}", run.ccf[i]);
        }
    }

    #[test]
    fn coupled_conserves_energy() {
        let times: Vec<f64> = (0..=6).map(|i| 5.0 * i as f64).collect();
        let run = exact_propagate_app1(&App1OracleSpec::new(4, 5, 1.3544, 0.1), &times).unwrap();
        for i in 0..times.len() {
            assert!((run.energy[i] - run.energy[0]).abs() < 1e-9);
            assert!((run.norm[i] - run.norm[0]).abs() < 1e-9);
        }
    }
}
