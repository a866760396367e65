use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::fock::{expectation, vector_norm_sqr, FockBasis, SparseMatrix};
use super::krylov::{self, KrylovSettings};
use crate::error::Result;
use crate::hamiltonians::{build_tables, MatrixElementTables};

/// Trapped-boson model in the full N-particle Fock space over levels 0..=Ω.
pub struct TrappedBosonsOracle {
    pub basis: FockBasis,
    pub hamiltonian: SparseMatrix,
    pub tables: MatrixElementTables,
    pub bosons: u32,
}

/// Exact observables on the requested time grid.
#[derive(Clone, Debug)]
pub struct ExactApp2Run {
    pub times: Vec<f64>,
    pub rho: Vec<Array2<C64>>,
    /// Per-particle ⟨Q⟩ and ⟨Q²⟩ − ⟨Q⟩², from position matrix elements.
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub energy: Vec<f64>,
    pub norm: Vec<f64>,
}

/// H|n⟩ expanded over basis states. H is real symmetric, so this column is
/// also row i.
fn column(basis: &FockBasis, tables: &MatrixElementTables, i: usize, xi: f64, lambda0: f64) -> BTreeMap<usize, f64> {
    let modes = basis.modes();
    let n = basis.state(i);
    let mut out = BTreeMap::new();
    let diag: f64 = (0..modes).map(|a| n[a] as f64 * (tables.epsilon[a] + 0.5 * xi * xi)).sum();
    out.insert(i, diag);
    for a in 0..modes {
        for b in 0..modes {
            let q = tables.q[[a, b]];
            if q != 0.0 {
                if let Some((j, amp)) = basis.hop(i, a, b) {
                    *out.entry(j).or_default() -= xi * q * amp;
                }
            }
        }
    }
    if lambda0 == 0.0 {
        return out;
    }
    // a†_α a†_β a_ζ a_γ applied literally, all index orders.
    let mut occ = n.to_vec();
    for g in 0..modes {
        if occ[g] == 0 {
            continue;
        }
        let ag = (occ[g] as f64).sqrt();
        occ[g] -= 1;
        for z in 0..modes {
            if occ[z] == 0 {
                continue;
            }
            let az = ag * (occ[z] as f64).sqrt();
            occ[z] -= 1;
            for b in 0..modes {
                for a in 0..modes {
                    let d = tables.delta.get(a, b, g, z);
                    if d == 0.0 {
                        continue;
                    }
                    let mut m = occ.clone();
                    m[b] += 1;
                    let mut amp = az * (m[b] as f64).sqrt();
                    m[a] += 1;
                    amp *= (m[a] as f64).sqrt();
                    let j = basis.index_of(&m).expect("particle number is conserved");
                    *out.entry(j).or_default() += 0.5 * lambda0 * d * amp;
                }
            }
            occ[z] += 1;
        }
        occ[g] += 1;
    }
    out
}

impl TrappedBosonsOracle {
    pub fn new(bosons: u32, omega: usize, xi: f64, lambda0: f64) -> Result<Self> {
        let basis = FockBasis::new(bosons, omega + 1)?;
        let tables = build_tables(omega, false)?;
        let rows: Vec<_> = (0..basis.len()).into_par_iter().map(|i| column(&basis, &tables, i, xi, lambda0)).collect();
        let hamiltonian = SparseMatrix::from_rows(rows);
        Ok(TrappedBosonsOracle { basis, hamiltonian, tables, bosons })
    }

    /// |N, 0, …, 0⟩.
    pub fn condensed_state(&self) -> Vec<C64> {
        let mut psi = vec![C64::new(0.0, 0.0); self.basis.len()];
        psi[0] = C64::new(1.0, 0.0);
        psi
    }

    /// ρ_αβ = ⟨ψ|a†_α a_β|ψ⟩.
    pub fn density_matrix(&self, psi: &[C64]) -> Array2<C64> {
        let modes = self.basis.modes();
        let mut rho = Array2::zeros((modes, modes));
        for i in 0..self.basis.len() {
            if psi[i].norm_sqr() == 0.0 {
                continue;
            }
            for a in 0..modes {
                for b in 0..modes {
                    if let Some((j, amp)) = self.basis.hop(i, a, b) {
                        rho[[a, b]] += psi[j].conj() * psi[i] * amp;
                    }
                }
            }
        }
        rho
    }

    /// Per-particle mean and variance of position from ρ and the exact
    /// oscillator matrix elements of Q and Q².
    pub fn position_moments(&self, rho: &Array2<C64>) -> (f64, f64) {
        let modes = self.basis.modes();
        let mut trace = 0.0;
        let mut q1 = 0.0;
        let mut q2 = 0.0;
        for a in 0..modes {
            trace += rho[[a, a]].re;
            for b in 0..modes {
                q1 += (rho[[a, b]] * self.tables.q[[b, a]]).re;
                q2 += (rho[[a, b]] * self.tables.q2[[b, a]]).re;
            }
        }
        let mean = q1 / trace;
        (mean, q2 / trace - mean * mean)
    }

    pub fn propagate(&self, times: &[f64], settings: KrylovSettings) -> Result<ExactApp2Run> {
        let mut psi = self.condensed_state();
        let mut now = 0.0;
        let mut run = ExactApp2Run {
            times: times.to_vec(),
            rho: Vec::with_capacity(times.len()),
            mean: Vec::with_capacity(times.len()),
            variance: Vec::with_capacity(times.len()),
            energy: Vec::with_capacity(times.len()),
            norm: Vec::with_capacity(times.len()),
        };
        for &t in times {
            krylov::propagate(&self.hamiltonian, &mut psi, t - now, settings)?;
            now = t;
            let rho = self.density_matrix(&psi);
            let (mean, variance) = self.position_moments(&rho);
            run.rho.push(rho);
            run.mean.push(mean);
            run.variance.push(variance);
            run.energy.push(expectation(&self.hamiltonian, &psi));
            run.norm.push(vector_norm_sqr(&psi));
        }
        Ok(run)
    }
}

/// Exact propagation of |N, 0, …, 0⟩ under the trapped-boson Hamiltonian.
pub fn exact_propagate_app2(bosons: u32, omega: usize, xi: f64, lambda0: f64, times: &[f64]) -> Result<ExactApp2Run> {
    TrappedBosonsOracle::new(bosons, omega, xi, lambda0)?.propagate(times, KrylovSettings::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::analytic_noninteracting;
    use ndarray_linalg::{Eigh, UPLO};

    #[test]
    fn hamiltonian_is_symmetric() {
        let o = TrappedBosonsOracle::new(3, 4, 2.1, 0.5).unwrap();
        assert!(o.hamiltonian.symmetry_defect() < 1e-13);
    }

    #[test]
    fn noninteracting_matches_analytic() {
        let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.5).collect();
        let run = exact_propagate_app2(2, 40, 2.1, 0.0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let (mean, var) = analytic_noninteracting(2.1, t);
            assert!((run.mean[i] - mean).abs() < 1e-8, "t={t}: {} vs {mean}", run.mean[i]);
            assert!((run.variance[i] - var).abs() < 1e-8, "t={t}: {}", run.variance[i]);
            assert!((run.norm[i] - 1.0).abs() < 1e-9);
            assert!((run.energy[i] - run.energy[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn single_particle_matches_coherent_state() {
        // One particle starting in the trap ground state: a coherent state
        // oscillating about ξ with amplitude ξ.
        let times = [0.3, 1.7, 3.1, 6.0];
        let run = exact_propagate_app2(1, 30, 1.5, 0.0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert!((run.mean[i] - 1.5 * (1.0 - t.cos())).abs() < 1e-8);
            assert!((run.rho[i][[0, 0]].re - (-(1.5f64 * 1.5) * (1.0 - t.cos())).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn interacting_conserves_energy_and_density_properties() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let run = exact_propagate_app2(2, 4, 2.1, 0.5, &times).unwrap();
        for i in 0..times.len() {
            assert!((run.energy[i] - run.energy[0]).abs() < 1e-9);
            assert!((run.norm[i] - 1.0).abs() < 1e-9);
            let rho = &run.rho[i];
            let herm = (rho - &rho.t().mapv(|c| c.conj())).iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(herm < 1e-12);
            let trace: f64 = rho.diag().iter().map(|c| c.re).sum();
            assert!((trace - 2.0).abs() < 1e-9);
            let (vals, _) = rho.eigh(UPLO::Lower).unwrap();
            assert!(vals.iter().all(|&v| v >= -1e-10));
        }
    }

    #[test]
    fn interaction_changes_breathing() {
        let times = [2.0];
        let free = exact_propagate_app2(4, 6, 2.1, 0.0, &times).unwrap();
        let int = exact_propagate_app2(4, 6, 2.1, 0.5, &times).unwrap();
        assert!((free.variance[0] - int.variance[0]).abs() > 1e-3);
    }
}
