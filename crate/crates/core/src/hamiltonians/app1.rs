use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::tables::{build_tables, MatrixElementTables};
use super::NormalOrderedHamiltonian;
use crate::error::{Error, Result};

/// Prefactor convention of the system–bath coupling term.
///
/// `Operator` follows from substituting q̂ = (â + â†)/√2 into λq̂Q̂²/2, giving
/// (λ/(2√2)) (z_k* + z_l). `AsPrinted` keeps the bare λ/2 prefactor in front of
/// (z_k* + z_l), which amounts to a coupling larger by √2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingForm {
    #[default]
    Operator,
    AsPrinted,
}

impl CouplingForm {
    /// Factor multiplying λ · (z_k^(1)* + z_l^(1)) · Σ z_k* Q² z_l.
    pub fn prefactor(self) -> f64 {
        match self {
            CouplingForm::Operator => 0.5 * std::f64::consts::FRAC_1_SQRT_2,
            CouplingForm::AsPrinted => 0.5,
        }
    }

    /// Factor multiplying the tunnelling-mode position operator q̂ in the
    /// first-quantised coupling (λ/2)·f·q̂·Q̂².
    pub fn position_scale(self) -> f64 {
        match self {
            CouplingForm::Operator => 1.0,
            CouplingForm::AsPrinted => std::f64::consts::SQRT_2,
        }
    }
}

/// Tunnelling mode in an asymmetric double well, quadratically coupled to a
/// bath of M−1 identical oscillators whose even levels 0, 2, …, 2Ω are
/// second quantised.
///
/// Mode 0 is the tunnelling coordinate; mode 1 + α carries bath level 2α.
#[derive(Clone, Debug)]
pub struct TunnellingBathModel {
    pub eta: f64,
    pub lambda: f64,
    pub omega: usize,
    pub dimension: usize,
    pub coupling: CouplingForm,
    tables: MatrixElementTables,
    epsilon: Array1<f64>,
}

impl TunnellingBathModel {
    pub fn new(eta: f64, lambda: f64, omega: usize, dimension: usize) -> Result<Self> {
        Self::with_coupling(eta, lambda, omega, dimension, CouplingForm::default())
    }

    pub fn with_coupling(
        eta: f64,
        lambda: f64,
        omega: usize,
        dimension: usize,
        coupling: CouplingForm,
    ) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Config(format!("well-depth parameter eta must be positive, got {eta}")));
        }
        if dimension < 2 {
            return Err(Error::Config(format!("dimension M must be at least 2, got {dimension}")));
        }
        if !lambda.is_finite() {
            return Err(Error::Config("coupling lambda must be finite".into()));
        }
        let tables = build_tables(omega, true)?;
        let epsilon = Array1::from(tables.epsilon.clone());
        Ok(TunnellingBathModel { eta, lambda, omega, dimension, coupling, tables, epsilon })
    }

    pub fn tables(&self) -> &MatrixElementTables {
        &self.tables
    }

    /// Number of bath bosons, M − 1.
    pub fn bath_bosons(&self) -> u32 {
        (self.dimension - 1) as u32
    }

    fn coupling_strength(&self) -> f64 {
        self.lambda * self.coupling.prefactor()
    }

    /// Tunnelling-mode part of H̄ as a polynomial in a = z_k*, b = z_l.
    fn tunnelling(&self, a: C64, b: C64) -> C64 {
        let a2 = a * a;
        let b2 = b * b;
        let quartic = a2 * a2
            + b2 * b2
            + 4.0 * a2 * a * b
            + 4.0 * a * b2 * b
            + 6.0 * a2 * b2
            + 12.0 * a * b
            + 6.0 * a2
            + 6.0 * b2
            + 3.0;
        -0.5 * (a2 + b2) + quartic / (64.0 * self.eta)
    }

    /// ∂/∂a of the tunnelling polynomial.
    fn tunnelling_da(&self, a: C64, b: C64) -> C64 {
        let quartic_da = 4.0 * a * a * a + 12.0 * a * a * b + 4.0 * b * b * b + 12.0 * a * b * b + 12.0 * b + 12.0 * a;
        -a + quartic_da / (64.0 * self.eta)
    }
}

impl NormalOrderedHamiltonian for TunnellingBathModel {
    fn mode_count(&self) -> usize {
        self.omega + 2
    }

    fn particle_modes(&self) -> std::ops::Range<usize> {
        1..self.mode_count()
    }

    fn energy(&self, bra: &[C64], ket: &[C64]) -> C64 {
        let a = bra[0].conj();
        let b = ket[0];
        let n = self.omega + 1;
        let q2 = &self.tables.q2;
        let mut harmonic = C64::new(0.0, 0.0);
        let mut coupled = C64::new(0.0, 0.0);
        for i in 0..n {
            let bi = bra[1 + i].conj();
            harmonic += bi * ket[1 + i] * self.epsilon[i];
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += ket[1 + j] * q2[[i, j]];
            }
            coupled += bi * row;
        }
        self.tunnelling(a, b) + harmonic + self.coupling_strength() * coupled * (a + b)
    }

    fn energy_gradient(&self, z: &[C64]) -> Vec<C64> {
        let a = z[0].conj();
        let b = z[0];
        let n = self.omega + 1;
        let q2 = &self.tables.q2;
        let c = self.coupling_strength();
        let mut grad = vec![C64::new(0.0, 0.0); n + 1];
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += z[1 + j] * q2[[i, j]];
            }
            quad += z[1 + i].conj() * row;
            grad[1 + i] = self.epsilon[i] * z[1 + i] + c * row * (a + b);
        }
        grad[0] = self.tunnelling_da(a, b) + c * quad;
        grad
    }

    fn pair_energies(&self, z: ArrayView2<C64>) -> Array2<C64> {
        let k = z.nrows();
        let bath = z.slice(ndarray::s![.., 1..]);
        let bath_conj = bath.mapv(|c| c.conj());
        let q2c = self.tables.q2.mapv(|x| C64::new(x, 0.0));
        let eps = self.epsilon.mapv(|x| C64::new(x, 0.0)).insert_axis(Axis(0));
        // one_body[k,l] = Σ ε z_k* z_l ; quad[k,l] = z_k*ᵀ Q² z_l
        let scaled = &bath * &eps;
        let one_body = bath_conj.dot(&scaled.t());
        let quad = bath_conj.dot(&bath.dot(&q2c).t());
        let c = self.coupling_strength();
        Array2::from_shape_fn((k, k), |(i, j)| {
            let a = z[[i, 0]].conj();
            let b = z[[j, 0]];
            self.tunnelling(a, b) + one_body[[i, j]] + c * quad[[i, j]] * (a + b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::checks::*;
    use approx::assert_relative_eq;

    fn paper_model() -> TunnellingBathModel {
        TunnellingBathModel::new(1.3544, 0.1, 5, 20).unwrap()
    }

    #[test]
    fn vacuum_leaves_only_the_constant() {
        let m = paper_model();
        let z = vec![C64::new(0.0, 0.0); m.mode_count()];
        let e = m.evaluate(&z, &z).unwrap();
        assert_relative_eq!(e.re, 3.0 / (64.0 * 1.3544), epsilon = 1e-15);
        assert_relative_eq!(e.re, 0.034609421145894861, epsilon = 1e-15);
        assert_eq!(e.im, 0.0);
    }

    #[test]
    fn single_bath_ground_mode() {
        let m = TunnellingBathModel::new(1.3544, 0.0, 5, 20).unwrap();
        let mut z = vec![C64::new(0.0, 0.0); m.mode_count()];
        z[1] = C64::new(1.0, 0.0);
        let e = m.energy(&z, &z) - m.energy(&[C64::new(0.0, 0.0); 7], &[C64::new(0.0, 0.0); 7]);
        assert_relative_eq!(e.re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn uncoupled_bath_is_diagonal() {
        let m = TunnellingBathModel::new(1.3544, 0.0, 5, 20).unwrap();
        let mut r = rng(11);
        for _ in 0..20 {
            let a = random_labels(&mut r, 7, 1.5);
            let b = random_labels(&mut r, 7, 1.5);
            let bath = m.energy(&a, &b) - m.tunnelling(a[0].conj(), b[0]);
            let expect: C64 = (0..6).map(|i| a[1 + i].conj() * b[1 + i] * (2.0 * i as f64 + 0.5)).sum();
            assert!((bath - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn hermitian_and_real_diagonal() {
        for form in [CouplingForm::Operator, CouplingForm::AsPrinted] {
            let m = TunnellingBathModel::with_coupling(1.3544, 0.1, 5, 20, form).unwrap();
            let mut r = rng(3);
            for _ in 0..100 {
                let a = random_labels(&mut r, 7, 2.0);
                let b = random_labels(&mut r, 7, 2.0);
                assert!(hermiticity_defect(&m, &a, &b) <= 1e-12);
                assert!(m.energy(&a, &a).im.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = paper_model();
        let mut r = rng(5);
        for _ in 0..50 {
            let z = random_labels(&mut r, 7, 1.5);
            let err = gradient_error(&m.energy_gradient(&z), &finite_difference_gradient(&m, &z, 1e-5));
            assert!(err <= 1e-6, "{err}");
        }
    }

    #[test]
    fn pair_table_matches_pointwise() {
        check_pair_table(&paper_model(), 8);
    }

    #[test]
    fn coupling_forms_differ_by_root_two() {
        let op = TunnellingBathModel::with_coupling(1.3544, 0.1, 2, 4, CouplingForm::Operator).unwrap();
        let pr = TunnellingBathModel::with_coupling(1.3544, 0.1, 2, 4, CouplingForm::AsPrinted).unwrap();
        let z0 = TunnellingBathModel::with_coupling(1.3544, 0.0, 2, 4, CouplingForm::Operator).unwrap();
        let mut r = rng(1);
        let a = random_labels(&mut r, 4, 1.0);
        let b = random_labels(&mut r, 4, 1.0);
        let base = z0.energy(&a, &b);
        let ratio = (pr.energy(&a, &b) - base) / (op.energy(&a, &b) - base);
        assert_relative_eq!(ratio.re, std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TunnellingBathModel::new(0.0, 0.1, 5, 20).is_err());
        assert!(TunnellingBathModel::new(1.0, 0.1, 5, 1).is_err());
        let m = paper_model();
        assert!(m.evaluate(&[C64::new(0.0, 0.0); 3], &[C64::new(0.0, 0.0); 7]).is_err());
        assert!(m.gradient(&[C64::new(0.0, 0.0); 3]).is_err());
    }
}
