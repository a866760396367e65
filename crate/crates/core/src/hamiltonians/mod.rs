//! Normal-ordered Hamiltonians H̄(z_k*, z_l) with analytic gradients.

mod app1;
mod app2;
pub mod tables;

use std::ops::Range;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{check_modes, Result};

pub use app1::{CouplingForm, TunnellingBathModel};
pub use app2::TrappedBosonsModel;
pub use tables::{build_tables, MatrixElementTables};

/// A Hamiltonian whose coherent-state matrix element factorises as
/// ⟨z_k|Ĥ|z_l⟩ = ⟨z_k|z_l⟩ H̄(z_k*, z_l).
///
/// `energy` and `energy_gradient` trust the caller on shapes; `evaluate` and
/// `gradient` validate them.
pub trait NormalOrderedHamiltonian: Send + Sync {
    fn mode_count(&self) -> usize;

    /// H̄(bra*, ket).
    fn energy(&self, bra: &[C64], ket: &[C64]) -> C64;

    /// ∂H̄(z*, z)/∂z^(α)* evaluated at bra = ket = z.
    fn energy_gradient(&self, z: &[C64]) -> Vec<C64>;

    /// Modes whose occupation counts towards the particle number.
    fn particle_modes(&self) -> Range<usize> {
        0..self.mode_count()
    }

    fn evaluate(&self, bra: &[C64], ket: &[C64]) -> Result<C64> {
        check_modes(self.mode_count(), bra.len())?;
        check_modes(self.mode_count(), ket.len())?;
        Ok(self.energy(bra, ket))
    }

    fn gradient(&self, z: &[C64]) -> Result<Vec<C64>> {
        check_modes(self.mode_count(), z.len())?;
        Ok(self.energy_gradient(z))
    }

    /// Table of H̄(z_k*, z_l) over all ordered pairs of rows of `z`.
    fn pair_energies(&self, z: ArrayView2<C64>) -> Array2<C64> {
        let k = z.nrows();
        let rows: Vec<Vec<C64>> = z.outer_iter().map(|r| r.to_vec()).collect();
        let flat: Vec<C64> = (0..k)
            .into_par_iter()
            .flat_map_iter(|i| {
                let bra = &rows[i];
                rows.iter().map(move |ket| self.energy(bra, ket)).collect::<Vec<_>>()
            })
            .collect();
        Array2::from_shape_vec((k, k), flat).expect("pair table shape")
    }

    /// Gradients for every row of `z`.
    fn gradients(&self, z: ArrayView2<C64>) -> Array2<C64> {
        let (k, m) = z.dim();
        let flat: Vec<C64> = (0..k)
            .into_par_iter()
            .flat_map_iter(|i| self.energy_gradient(z.row(i).as_slice().expect("contiguous row")))
            .collect();
        Array2::from_shape_vec((k, m), flat).expect("gradient shape")
    }
}
