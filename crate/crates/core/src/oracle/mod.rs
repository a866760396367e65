//! Independent reference calculations: Gauss–Hermite quadrature for the
//! four-function overlap integrals, exact Fock-space propagation for both
//! models at small scale, a grid propagator for the bare double well, and
//! the analytic non-interacting trap solution.

pub mod checks;
mod exact_app1;
mod exact_app2;
pub mod fock;
mod grid;
pub mod krylov;
mod quadrature;

use num_complex::Complex64 as C64;
use statrs::function::factorial::factorial;

use crate::basis::OccupationVector;

pub use exact_app1::{exact_propagate_app1, App1OracleSpec, ExactApp1Run, TunnellingBathOracle};
pub use exact_app2::{exact_propagate_app2, ExactApp2Run, TrappedBosonsOracle};
pub use fock::FockBasis;
pub use grid::split_operator_ccf;
pub use krylov::KrylovSettings;
pub use quadrature::{gauss_hermite, quadrature_delta};

pub(crate) use quadrature::hermite_function_polys;

/// Per-particle (mean, variance) of the density of non-interacting bosons
/// released from the trap origin into a trap displaced by ξ.
pub fn analytic_noninteracting(xi: f64, t: f64) -> (f64, f64) {
    (xi * (1.0 - t.cos()), 0.5)
}

/// ⟨z|n⟩ evaluated directly as Π e^{−|z|²/2} (z*)^n / √(n!).
pub fn direct_fock_overlap(z: &[C64], n: &OccupationVector) -> C64 {
    z.iter()
        .zip(&n.0)
        .map(|(zc, &k)| (-0.5 * zc.norm_sqr()).exp() * zc.conj().powu(k) / factorial(k as u64).sqrt())
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_points() {
        assert_eq!(analytic_noninteracting(2.1, 0.0), (0.0, 0.5));
        let (m, v) = analytic_noninteracting(2.1, std::f64::consts::PI);
        assert!((m - 4.2).abs() < 1e-15 && v == 0.5);
        let (m, _) = analytic_noninteracting(2.1, std::f64::consts::FRAC_PI_2);
        assert!((m - 2.1).abs() < 1e-15);
    }

    #[test]
    fn direct_overlap_single_quantum() {
        let v = direct_fock_overlap(&[C64::new(1.0, 0.0)], &OccupationVector(vec![1]));
        assert!((v.re - (-0.5f64).exp()).abs() < 1e-15);
    }
}
