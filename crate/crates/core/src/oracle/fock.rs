use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::basis::OccupationVector;
use crate::error::{Error, Result};

/// Largest Hilbert space the exact propagators accept.
pub const MAX_BASIS_SIZE: usize = 200_000;

/// All occupation vectors with a fixed total over a fixed number of modes.
#[derive(Clone, Debug)]
pub struct FockBasis {
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    modes: usize,
    bosons: u32,
}

/// C(n + k, k) in floating point, for size guards.
pub fn fock_dimension(bosons: u32, modes: usize) -> f64 {
    if modes == 0 {
        return 0.0;
    }
    let n = bosons as f64;
    (1..modes).fold(1.0, |acc, i| acc * (n + i as f64) / i as f64)
}

impl FockBasis {
    /// Enumerates states in lexicographically descending order, starting
    /// from |N, 0, …, 0⟩.
    pub fn new(bosons: u32, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Config("a Fock basis needs at least one mode".into()));
        }
        let size = fock_dimension(bosons, modes);
        if size > MAX_BASIS_SIZE as f64 {
            return Err(Error::OracleRefused(format!(
                "Fock basis of {bosons} bosons in {modes} modes has {size:.0} states (limit {MAX_BASIS_SIZE})"
            )));
        }
        let mut states = Vec::with_capacity(size as usize);
        let mut current = vec![0u32; modes];
        fill(&mut states, &mut current, 0, bosons);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockBasis { states, index, modes, bosons })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn bosons(&self) -> u32 {
        self.bosons
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn occupation(&self, i: usize) -> OccupationVector {
        OccupationVector(self.states[i].clone())
    }

    pub fn index_of(&self, n: &[u32]) -> Option<usize> {
        self.index.get(n).copied()
    }

    /// a†_c a_a |state i⟩ as (target index, amplitude).
    pub fn hop(&self, i: usize, create: usize, annihilate: usize) -> Option<(usize, f64)> {
        let mut n = self.states[i].clone();
        if n[annihilate] == 0 {
            return None;
        }
        let mut amp = (n[annihilate] as f64).sqrt();
        n[annihilate] -= 1;
        n[create] += 1;
        amp *= (n[create] as f64).sqrt();
        self.index_of(&n).map(|j| (j, amp))
    }
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, mode: usize, left: u32) {
    if mode + 1 == current.len() {
        current[mode] = left;
        out.push(current.clone());
        return;
    }
    for n in (0..=left).rev() {
        current[mode] = n;
        fill(out, current, mode + 1, left - n);
    }
    current[mode] = 0;
}

/// Real symmetric matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row accumulators; duplicate entries are summed.
    pub fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let dim = rows.len();
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        SparseMatrix { dim, row_start, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .into_par_iter()
            .map(|r| {
                let mut acc = C64::new(0.0, 0.0);
                for idx in self.row_start[r]..self.row_start[r + 1] {
                    acc += x[self.cols[idx]] * self.vals[idx];
                }
                acc
            })
            .collect()
    }

    /// max_r Σ_c |H_rc|, an upper bound on the spectral radius.
    pub fn row_sum_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.vals[self.row_start[r]..self.row_start[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut lookup: HashMap<(usize, usize), f64> = HashMap::with_capacity(self.nnz());
        for r in 0..self.dim {
            for idx in self.row_start[r]..self.row_start[r + 1] {
                lookup.insert((r, self.cols[idx]), self.vals[idx]);
            }
        }
        lookup.iter().map(|(&(r, c), &v)| (v - lookup.get(&(c, r)).copied().unwrap_or(0.0)).abs()).fold(0.0, f64::max)
    }
}

pub fn expectation(h: &SparseMatrix, psi: &[C64]) -> f64 {
    h.apply(psi).iter().zip(psi).map(|(hp, p)| (p.conj() * hp).re).sum()
}

pub fn vector_norm_sqr(psi: &[C64]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_complete() {
        let b = FockBasis::new(5, 7).unwrap();
        assert_eq!(b.len(), 462);
        assert_eq!(b.state(0), &[5, 0, 0, 0, 0, 0, 0]);
        assert!(b.states.iter().all(|s| s.iter().sum::<u32>() == 5));
        assert_eq!(b.index.len(), b.len());
        for i in 0..b.len() {
            assert_eq!(b.index_of(b.state(i)), Some(i));
        }
        assert!((fock_dimension(5, 7) - 462.0).abs() < 1e-9);
        assert!((fock_dimension(3, 1) - 1.0).abs() < 1e-12);
        assert_eq!(FockBasis::new(3, 1).unwrap().len(), 1);
    }

    #[test]
    fn refuses_huge_basis() {
        assert!(matches!(FockBasis::new(100, 15), Err(Error::OracleRefused(_))));
    }

    #[test]
    fn hop_amplitudes() {
        let b = FockBasis::new(3, 2).unwrap();
        let i = b.index_of(&[2, 1]).unwrap();
        let (j, amp) = b.hop(i, 1, 0).unwrap();
        assert_eq!(b.state(j), &[1, 2]);
        assert!((amp - 2.0).abs() < 1e-15);
        assert!(b.hop(b.index_of(&[0, 3]).unwrap(), 1, 0).is_none());
        let (k, n) = b.hop(i, 0, 0).unwrap();
        assert_eq!(k, i);
        assert!((n - 2.0).abs() < 1e-15);
    }
}
