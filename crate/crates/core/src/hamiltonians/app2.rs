use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64 as C64;

use super::tables::{build_tables, MatrixElementTables};
use super::NormalOrderedHamiltonian;
use crate::error::{Error, Result};

/// N bosons in a harmonic trap displaced by ξ, with contact interaction of
/// strength λ₀, expanded over oscillator levels 0..=Ω.
#[derive(Clone, Debug)]
pub struct TrappedBosonsModel {
    pub xi: f64,
    pub lambda0: f64,
    pub omega: usize,
    pub bosons: u32,
    tables: MatrixElementTables,
    /// ε + ξ²/2 on the diagonal, −ξQ off it.
    one_body: Array2<f64>,
    /// Canonical pairs (α ≤ β) and their multiplicity (1 or 2).
    pairs: Vec<(usize, usize)>,
    multiplicity: Array1<f64>,
    pair_index: Array2<usize>,
    /// kernel[p, q] = δ(pair p, pair q) · multiplicity[q].
    kernel: Array2<f64>,
}

impl TrappedBosonsModel {
    pub fn new(xi: f64, lambda0: f64, omega: usize, bosons: u32) -> Result<Self> {
        if bosons < 1 {
            return Err(Error::Config("boson count N must be at least 1".into()));
        }
        if !xi.is_finite() || !lambda0.is_finite() {
            return Err(Error::Config("xi and lambda0 must be finite".into()));
        }
        let tables = build_tables(omega, false)?;
        let n = omega + 1;
        let one_body = Array2::from_shape_fn((n, n), |(i, j)| {
            let diag = if i == j { tables.epsilon[i] + 0.5 * xi * xi } else { 0.0 };
            diag - xi * tables.q[[i, j]]
        });
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        let mut pair_index = Array2::zeros((n, n));
        for a in 0..n {
            for b in a..n {
                pair_index[[a, b]] = pairs.len();
                pair_index[[b, a]] = pairs.len();
                pairs.push((a, b));
            }
        }
        let multiplicity: Array1<f64> = pairs.iter().map(|&(a, b)| if a == b { 1.0 } else { 2.0 }).collect();
        let p = pairs.len();
        let mut kernel = Array2::zeros((p, p));
        for (k, v) in tables.delta.canonical_entries() {
            let k = k.map(|i| i as usize);
            // Scatter each canonical entry to every split into two pairs.
            for (x, y, u, w) in [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)] {
                let pa = pair_index[[k[x], k[y]]];
                let pb = pair_index[[k[u], k[w]]];
                kernel[[pa, pb]] = v;
                kernel[[pb, pa]] = v;
            }
        }
        for q in 0..p {
            let m = multiplicity[q];
            kernel.column_mut(q).mapv_inplace(|x| x * m);
        }
        Ok(TrappedBosonsModel { xi, lambda0, omega, bosons, tables, one_body, pairs, multiplicity, pair_index, kernel })
    }

    pub fn tables(&self) -> &MatrixElementTables {
        &self.tables
    }

    /// Single-particle Hamiltonian matrix ⟨α|ĥ|β⟩ in the oscillator basis.
    pub fn one_body_matrix(&self) -> &Array2<f64> {
        &self.one_body
    }

    fn pair_products(&self, z: &[C64]) -> Array1<C64> {
        self.pairs.iter().map(|&(a, b)| z[a] * z[b]).collect()
    }

    /// G_p = Σ_{γζ} δ(p; γ, ζ) z_γ z_ζ.
    fn contracted(&self, u: &Array1<C64>) -> Array1<C64> {
        self.kernel.map(|&x| C64::new(x, 0.0)).dot(u)
    }
}

impl NormalOrderedHamiltonian for TrappedBosonsModel {
    fn mode_count(&self) -> usize {
        self.omega + 1
    }

    fn energy(&self, bra: &[C64], ket: &[C64]) -> C64 {
        let n = self.omega + 1;
        let mut e = C64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                let h = self.one_body[[i, j]];
                if h != 0.0 {
                    row += ket[j] * h;
                }
            }
            e += bra[i].conj() * row;
        }
        if self.lambda0 != 0.0 {
            let ub = self.pair_products(bra);
            let uk = self.pair_products(ket);
            let mut quartic = C64::new(0.0, 0.0);
            for (p, row) in self.kernel.outer_iter().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for (q, &kv) in row.iter().enumerate() {
                    if kv != 0.0 {
                        s += uk[q] * kv;
                    }
                }
                quartic += ub[p].conj() * s * self.multiplicity[p];
            }
            e += 0.5 * self.lambda0 * quartic;
        }
        e
    }

    fn energy_gradient(&self, z: &[C64]) -> Vec<C64> {
        let n = self.omega + 1;
        let mut grad: Vec<C64> = (0..n).map(|i| (0..n).map(|j| z[j] * self.one_body[[i, j]]).sum()).collect();
        if self.lambda0 != 0.0 {
            let g = self.contracted(&self.pair_products(z));
            for (a, ga) in grad.iter_mut().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for b in 0..n {
                    s += g[self.pair_index[[a, b]]] * z[b].conj();
                }
                *ga += self.lambda0 * s;
            }
        }
        grad
    }

    fn pair_energies(&self, z: ArrayView2<C64>) -> Array2<C64> {
        let h = self.one_body.mapv(|x| C64::new(x, 0.0));
        let zc = z.mapv(|c| c.conj());
        let mut table = zc.dot(&z.dot(&h).t());
        if self.lambda0 != 0.0 {
            let u = Array2::from_shape_fn((z.nrows(), self.pairs.len()), |(k, p)| {
                let (a, b) = self.pairs[p];
                z[[k, a]] * z[[k, b]]
            });
            let kernel = self.kernel.mapv(|x| C64::new(x, 0.0));
            let mult = self.multiplicity.mapv(|x| C64::new(x, 0.0)).insert_axis(Axis(0));
            let w = u.dot(&kernel.t()) * &mult;
            let quartic = u.mapv(|c| c.conj()).dot(&w.t());
            table.scaled_add(C64::new(0.5 * self.lambda0, 0.0), &quartic);
        }
        table
    }
}
