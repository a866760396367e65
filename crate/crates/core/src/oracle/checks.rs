//! Shared numerical checks: finite differences, Hermiticity defects and
//! pair-table consistency for any [`NormalOrderedHamiltonian`].

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::hamiltonians::NormalOrderedHamiltonian;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Labels with real and imaginary parts uniform on [−scale, scale].
pub fn random_labels(rng: &mut impl Rng, modes: usize, scale: f64) -> Vec<C64> {
    (0..modes).map(|_| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))).collect()
}

/// ∂H̄(z*, z)/∂z* by central differences in Re z and Im z:
/// ∂/∂z* = (∂/∂x + i ∂/∂y)/2.
pub fn finite_difference_gradient<H: NormalOrderedHamiltonian + ?Sized>(h: &H, z: &[C64], step: f64) -> Vec<C64> {
    let f = |w: &[C64]| h.energy(w, w).re;
    let mut w = z.to_vec();
    (0..z.len())
        .map(|a| {
            let base = w[a];
            w[a] = base + step;
            let xp = f(&w);
            w[a] = base - step;
            let xm = f(&w);
            w[a] = base + C64::new(0.0, step);
            let yp = f(&w);
            w[a] = base - C64::new(0.0, step);
            let ym = f(&w);
            w[a] = base;
            C64::new((xp - xm) / (4.0 * step), (yp - ym) / (4.0 * step))
        })
        .collect()
}

/// ‖analytic − reference‖ / max(‖reference‖, 1).
pub fn gradient_error(analytic: &[C64], reference: &[C64]) -> f64 {
    let diff: f64 = analytic.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    let scale: f64 = reference.iter().map(|b| b.norm_sqr()).sum();
    diff.sqrt() / scale.sqrt().max(1.0)
}

/// |H̄(a*, b) − conj(H̄(b*, a))|.
pub fn hermiticity_defect<H: NormalOrderedHamiltonian + ?Sized>(h: &H, a: &[C64], b: &[C64]) -> f64 {
    (h.energy(a, b) - h.energy(b, a).conj()).norm()
}

/// Panics unless `pair_energies` agrees with pointwise `energy` on a random
/// six-configuration set.
pub fn check_pair_table<H: NormalOrderedHamiltonian + ?Sized>(h: &H, seed: u64) {
    let mut r = rng(seed);
    let m = h.mode_count();
    let rows: Vec<Vec<C64>> = (0..6).map(|_| random_labels(&mut r, m, 1.2)).collect();
    let z = Array2::from_shape_fn((6, m), |(k, a)| rows[k][a]);
    let table = h.pair_energies(z.view());
    for k in 0..6 {
        for l in 0..6 {
            let e = h.energy(&rows[k], &rows[l]);
            let err = (table[[k, l]] - e).norm();
            assert!(err <= 1e-12 * (1.0 + e.norm()), "pair ({k},{l}): {} vs {e}", table[[k, l]]);
        }
    }
}
