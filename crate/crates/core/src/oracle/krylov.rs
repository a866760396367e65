//! Lanczos propagation of i dψ/dt = Hψ for real symmetric sparse H.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use super::fock::SparseMatrix;
use crate::error::{Error, Result};

/// Subspace dimension of each Lanczos step.
const KRYLOV_DIM: usize = 30;

#[derive(Clone, Copy, Debug)]
pub struct KrylovSettings {
    /// Error bound per unit time.
    pub tolerance: f64,
    pub subspace: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        KrylovSettings { tolerance: 1e-10, subspace: KRYLOV_DIM }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// ‖ψ‖ at the start of the step.
    scale: f64,
    /// β of the first vector outside the subspace (0 on breakdown).
    residual: f64,
}

fn lanczos(h: &SparseMatrix, psi: &[C64], m: usize) -> Lanczos {
    let scale = dot(psi, psi).re.sqrt();
    let mut basis = vec![psi.iter().map(|c| c / scale).collect::<Vec<_>>()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut residual = 0.0;
    for j in 0..m {
        let mut w = h.apply(&basis[j]);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Full reorthogonalisation, twice.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = dot(&w, &w).re.sqrt();
        if b < 1e-13 * (1.0 + a.abs()) {
            residual = 0.0;
            break;
        }
        if j + 1 == m {
            residual = b;
            break;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|c| c / b).collect());
    }
    Lanczos { basis, alpha, beta, scale, residual }
}

/// exp(−iτT) e₁ for the Lanczos tridiagonal T.
fn small_propagator(l: &Lanczos, tau: f64) -> Result<Vec<C64>> {
    let n = l.alpha.len();
    let mut t = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        t[[i, i]] = l.alpha[i];
        if i + 1 < n {
            t[[i, i + 1]] = l.beta[i];
            t[[i + 1, i]] = l.beta[i];
        }
    }
    let (vals, vecs) = t.eigh(UPLO::Lower)?;
    Ok((0..n)
        .map(|i| (0..n).map(|k| vecs[[i, k]] * vecs[[0, k]] * C64::from_polar(1.0, -tau * vals[k])).sum())
        .collect())
}

/// Advances ψ by `duration` with adaptive Lanczos steps.
pub fn propagate(h: &SparseMatrix, psi: &mut Vec<C64>, duration: f64, settings: KrylovSettings) -> Result<()> {
    if duration == 0.0 || psi.iter().all(|c| c.norm_sqr() == 0.0) {
        return Ok(());
    }
    let direction = duration.signum();
    let mut left = duration.abs();
    let mut tau = (2.0 / h.row_sum_bound().max(1e-300)).min(left);
    while left > 0.0 {
        let l = lanczos(h, psi, settings.subspace);
        loop {
            let step = tau.min(left);
            let y = small_propagator(&l, direction * step)?;
            let err = l.scale * l.residual * y.last().map_or(0.0, |c| c.norm());
            if err <= settings.tolerance * step || l.residual == 0.0 {
                let mut next = vec![C64::new(0.0, 0.0); psi.len()];
                for (v, c) in l.basis.iter().zip(&y) {
                    let c = c * l.scale;
                    for (n, vi) in next.iter_mut().zip(v) {
                        *n += c * vi;
                    }
                }
                *psi = next;
                left -= step;
                if err < 0.01 * settings.tolerance * step {
                    tau = step * 1.5;
                }
                break;
            }
            tau = 0.5 * step;
            if tau < 1e-12 * duration.abs() {
                return Err(Error::StepUnderflow { t: duration - direction * left, h: tau });
            }
        }
    }
    Ok(())
}
