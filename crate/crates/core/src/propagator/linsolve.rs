//! Regularised solves of the amplitude system Σ_l ⟨z_k|z_l⟩ e^{iS_l} x_l = b_k.

use std::os::raw::c_char;

use lapack_sys::__BindgenComplex as LapackComplex;
use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Diag, JobSvd, SolveTriangular, QR, SVDDC, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a regularised solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub dimension: usize,
    /// Singular values, or Cholesky pivots, kept.
    pub rank: usize,
    /// Largest singular value, or largest diagonal element of the overlap.
    pub largest: f64,
    /// Ratio of the largest to the smallest kept singular value (SVD), or
    /// the squared ratio of extreme Cholesky pivots.
    pub condition: f64,
}

impl SolveReport {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.dimension
    }
}

/// Which factorisation drives the amplitude solve during propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolver {
    /// Dense singular-value decomposition of the full system.
    Svd,
    /// Pivoted Cholesky of the overlap matrix, truncated at the cutoff.
    #[default]
    PivotedCholesky,
}

/// Minimum-norm least-squares solution of A x = b, discarding singular
/// values below `cutoff · σ_max`.
pub fn solve_amplitude_system(a: ArrayView2<C64>, b: &[C64], cutoff: f64) -> Result<(Vec<C64>, SolveReport)> {
    let (n, m) = a.dim();
    if b.len() != n {
        return Err(Error::ModeCount { expected: n, found: b.len() });
    }
    if n == 0 || m == 0 {
        return Err(Error::Config("empty amplitude system".into()));
    }
    let (u, s, vt) = a.to_owned().svddc(JobSvd::Some)?;
    let (u, vt) = (u.expect("U requested"), vt.expect("Vᵀ requested"));
    let largest = s[0];
    let threshold = cutoff * largest;
    let rank = s.iter().take_while(|&&x| x > threshold && x > 0.0).count();
    if rank == 0 {
        return Err(Error::DegenerateBasis { largest, cutoff: threshold });
    }
    let bv = Array1::from(b.to_vec());
    let mut coef = u.t().mapv(|c| c.conj()).dot(&bv);
    for (i, c) in coef.iter_mut().enumerate() {
        *c = if i < rank { *c / s[i] } else { C64::new(0.0, 0.0) };
    }
    let x = vt.t().mapv(|c| c.conj()).dot(&coef);
    let report = SolveReport { dimension: m, rank, largest, condition: largest / s[rank - 1] };
    Ok((x.to_vec(), report))
}

fn lapack_info(routine: &str, info: i32) -> Result<()> {
    if info < 0 {
        Err(Error::Linalg(format!("{routine}: illegal argument {}", -info)))
    } else {
        Ok(())
    }
}

/// Pivoted Cholesky Pᵀ O P = L L† from LAPACK, stopped once every remaining
/// pivot falls below `tol`. Returns L (K × r, rows in pivot order) and the
/// pivot order itself.
fn pivoted_cholesky(o: ArrayView2<C64>, tol: f64) -> Result<(Array2<C64>, Vec<usize>)> {
    let n = o.nrows();
    let mut a: Vec<C64> = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            a.push(o[[i, j]]);
        }
    }
    let uplo = b'L' as c_char;
    let ni = n as i32;
    let mut piv = vec![0i32; n];
    let mut rank = 0i32;
    let mut work = vec![0.0; 2 * n];
    let mut info = 0;
    // SAFETY: `a` is an n×n column-major buffer, `piv` holds n entries and
    // `work` the 2n reals the routine requires. C64 and the bindgen complex
    // type share the (re, im) f64 layout.
    unsafe {
        lapack_sys::zpstrf_(
            &uplo,
            &ni,
            a.as_mut_ptr() as *mut LapackComplex<f64>,
            &ni,
            piv.as_mut_ptr(),
            &mut rank,
            &tol,
            work.as_mut_ptr(),
            &mut info,
        );
    }
    lapack_info("zpstrf", info)?;
    let r = rank as usize;
    let l = Array2::from_shape_fn((n, r), |(i, j)| if i >= j { a[j * n + i] } else { C64::new(0.0, 0.0) });
    Ok((l, piv.iter().map(|&p| p as usize - 1).collect()))
}

fn pivot_ratio_squared(diag: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    (hi / lo).powi(2)
}

/// Minimum-norm solution of O y = b for Hermitian positive semidefinite O,
/// regularised by stopping a pivoted Cholesky factorisation at the first
/// pivot below `cutoff · max O_kk`.
///
/// With full rank this is two triangular solves. Otherwise the retained
/// factor G = QR gives y = Q R⁻† R⁻¹ Q† b. The reported condition is the
/// squared ratio of extreme pivots, an estimate rather than the exact
/// eigenvalue ratio.
pub fn solve_overlap_system(o: ArrayView2<C64>, b: &[C64], cutoff: f64) -> Result<(Vec<C64>, SolveReport)> {
    let n = o.nrows();
    if o.ncols() != n || b.len() != n {
        return Err(Error::ModeCount { expected: n, found: b.len() });
    }
    if n == 0 {
        return Err(Error::Config("empty amplitude system".into()));
    }
    let max_diag = (0..n).map(|i| o[[i, i]].re).fold(0.0, f64::max);
    if !(max_diag > 0.0) {
        return Err(Error::DegenerateBasis { largest: max_diag, cutoff: cutoff * max_diag });
    }
    let threshold = (cutoff * max_diag).max(4.0 * f64::EPSILON * max_diag);
    let (l, piv) = pivoted_cholesky(o, threshold)?;
    let r = l.ncols();
    if r == 0 {
        return Err(Error::DegenerateBasis { largest: max_diag, cutoff: threshold });
    }
    let bp: Array1<C64> = piv.iter().map(|&i| b[i]).collect();
    let (yp, condition) = if r == n {
        let u = l.t().mapv(|c| c.conj());
        let w = l.solve_triangular(UPLO::Lower, Diag::NonUnit, &bp)?;
        let y = u.solve_triangular(UPLO::Upper, Diag::NonUnit, &w)?;
        (y, pivot_ratio_squared(l.diag().iter().map(|d| d.norm())))
    } else {
        let (q, rr) = l.qr()?;
        let rh = rr.t().mapv(|c| c.conj());
        let x = rr.solve_triangular(UPLO::Upper, Diag::NonUnit, &q.t().mapv(|c| c.conj()).dot(&bp))?;
        let w = rh.solve_triangular(UPLO::Lower, Diag::NonUnit, &x)?;
        (q.dot(&w), pivot_ratio_squared(rr.diag().iter().map(|d| d.norm())))
    };
    let mut y = vec![C64::new(0.0, 0.0); n];
    for (k, &i) in piv.iter().enumerate() {
        y[i] = yp[k];
    }
    let report = SolveReport { dimension: n, rank: r, largest: max_diag, condition };
    Ok((y, report))
}

/// Solves Σ_l O_kl e^{iS_l} x_l = b_k with O Hermitian: the column phases
/// are unitary, so the pseudo-inverse is diag(e^{−iS}) · pinv(O).
pub fn solve_with_phases(
    o: ArrayView2<C64>,
    phases: &[C64],
    b: &[C64],
    cutoff: f64,
    solver: LinearSolver,
) -> Result<(Vec<C64>, SolveReport)> {
    let (y, report) = match solver {
        LinearSolver::PivotedCholesky => solve_overlap_system(o, b, cutoff)?,
        LinearSolver::Svd => solve_amplitude_system(o, b, cutoff)?,
    };
    Ok((y.iter().zip(phases).map(|(y, p)| y * p.conj()).collect(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::overlap_unchecked;
    use crate::oracle::checks::{random_labels, rng};
    use ndarray_linalg::Solve;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn overlap_matrix(z: &[Vec<C64>]) -> Array2<C64> {
        Array2::from_shape_fn((z.len(), z.len()), |(k, l)| overlap_unchecked(&z[k], &z[l]))
    }

    #[test]
    fn identity_returns_rhs() {
        let a = Array2::<C64>::eye(4);
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 0.0), c(7.0, -1.0)];
        let (x, rep) = solve_amplitude_system(a.view(), &b, 1e-10).unwrap();
        assert_eq!(rep.rank, 4);
        assert!(x.iter().zip(&b).all(|(x, b)| (x - b).norm() < 1e-14));
        let (y, _) = solve_overlap_system(a.view(), &b, 1e-10).unwrap();
        assert!(y.iter().zip(&b).all(|(y, b)| (y - b).norm() < 1e-14));
    }

    #[test]
    fn duplicated_rows_give_pseudo_inverse() {
        // [[1, 1], [1, 1]] x = (2, 2): minimum-norm solution (1, 1).
        let a = Array2::from_elem((2, 2), c(1.0, 0.0));
        let b = [c(2.0, 0.0), c(2.0, 0.0)];
        let (x, rep) = solve_amplitude_system(a.view(), &b, 1e-10).unwrap();
        assert_eq!(rep.rank, 1);
        assert!(rep.rank_deficient());
        assert!((x[0] - 1.0).norm() < 1e-14 && (x[1] - 1.0).norm() < 1e-14);
        let (y, rep) = solve_overlap_system(a.view(), &b, 1e-10).unwrap();
        assert_eq!(rep.rank, 1);
        assert!((y[0] - 1.0).norm() < 1e-14 && (y[1] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn all_below_cutoff_is_degenerate() {
        let a = Array2::<C64>::zeros((3, 3));
        assert!(matches!(
            solve_amplitude_system(a.view(), &[c(1.0, 0.0); 3], 1e-10),
            Err(Error::DegenerateBasis { .. })
        ));
        assert!(matches!(solve_overlap_system(a.view(), &[c(1.0, 0.0); 3], 1e-10), Err(Error::DegenerateBasis { .. })));
    }

    #[test]
    fn well_conditioned_matches_dense_solve() {
        let mut r = rng(17);
        let a = Array2::from_shape_fn((50, 50), |(i, j)| {
            let d = if i == j { 8.0 } else { 0.0 };
            c(r.random_range(-1.0..1.0) + d, r.random_range(-1.0..1.0))
        });
        let b: Vec<C64> = (0..50).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
        let dense = a.solve(&Array1::from(b.clone())).unwrap();
        let (x, rep) = solve_amplitude_system(a.view(), &b, 1e-10).unwrap();
        assert_eq!(rep.rank, 50);
        assert!(x.iter().zip(dense.iter()).all(|(x, d)| (x - d).norm() < 1e-10));
    }

    #[test]
    fn overlap_paths_agree() {
        let mut r = rng(23);
        let z: Vec<Vec<C64>> = (0..60).map(|_| random_labels(&mut r, 2, 1.5)).collect();
        let o = overlap_matrix(&z);
        let b: Vec<C64> = (0..60).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
        // Consistent right-hand side so both regularisations see the same target.
        let (x0, _) = solve_amplitude_system(o.view(), &b, 1e-12).unwrap();
        let rhs = o.dot(&Array1::from(x0));
        let rhs = rhs.to_vec();
        let (xs, rs) = solve_amplitude_system(o.view(), &rhs, 1e-8).unwrap();
        let (xc, rc) = solve_overlap_system(o.view(), &rhs, 1e-8).unwrap();
        assert!((rs.rank as i64 - rc.rank as i64).abs() <= 1, "{rs:?} {rc:?}");
        let ys = o.dot(&Array1::from(xs));
        let yc = o.dot(&Array1::from(xc));
        let err = ys.iter().zip(yc.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        let resid = yc.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(resid < 1e-6, "{resid}");
    }

    #[test]
    fn phases_are_removed_exactly() {
        let mut r = rng(5);
        let z: Vec<Vec<C64>> = (0..8).map(|_| random_labels(&mut r, 3, 2.0)).collect();
        let o = overlap_matrix(&z);
        let phases: Vec<C64> = (0..8).map(|k| C64::from_polar(1.0, 0.7 * k as f64)).collect();
        let a = Array2::from_shape_fn((8, 8), |(k, l)| o[[k, l]] * phases[l]);
        let b: Vec<C64> = (0..8).map(|k| c(k as f64, 1.0)).collect();
        let (direct, _) = solve_amplitude_system(a.view(), &b, 1e-12).unwrap();
        for solver in [LinearSolver::Svd, LinearSolver::PivotedCholesky] {
            let (x, _) = solve_with_phases(o.view(), &phases, &b, 1e-12, solver).unwrap();
            let err = x.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{solver:?}: {err}");
        }
    }
}
