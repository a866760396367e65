//! Harmonic-oscillator matrix elements: eigenvalues ε, position Q, Q², and the
//! contact-interaction tensor δ^(α,β,γ,ζ).
//!
//! δ is evaluated in closed form: the four physicists' Hermite polynomials are
//! multiplied with exact integer coefficients, the Gaussian moments
//! ∫ Q^{2τ} e^{−2Q²} dQ = √(π/2) (2τ−1)!!/4^τ are applied as exact integers,
//! and only the final ratio is converted to floating point.

use std::collections::HashMap;

use ndarray::Array2;
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Highest oscillator level accepted by [`build_tables`].
pub const MAX_LEVEL_INDEX: usize = 60;

/// Sparse, symmetry-reduced storage of δ^(α,β,γ,ζ). Only index-sorted keys with
/// an even index sum are stored.
#[derive(Clone, Debug, Default)]
pub struct DeltaTable {
    size: usize,
    entries: HashMap<[u16; 4], f64>,
}

impl DeltaTable {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of stored (canonical) entries.
    pub fn stored(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let mut key = [a as u16, b as u16, c as u16, d as u16];
        key.sort_unstable();
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    /// Canonical entries in a deterministic (sorted) order.
    pub fn canonical_entries(&self) -> Vec<([u16; 4], f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, v)| (*k, *v)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

/// Matrix elements over a set of oscillator levels. Index `i` refers to the
/// physical level `levels[i]`; for the even-only layout `levels[i] = 2i`.
#[derive(Clone, Debug)]
pub struct MatrixElementTables {
    pub levels: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub q: Array2<f64>,
    pub q2: Array2<f64>,
    pub delta: DeltaTable,
}

impl MatrixElementTables {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Plain-text dump used by the `tables` subcommand.
    pub fn to_dump(&self) -> TablesDump {
        TablesDump {
            levels: self.levels.clone(),
            epsilon: self.epsilon.clone(),
            q: self.q.outer_iter().map(|r| r.to_vec()).collect(),
            q2: self.q2.outer_iter().map(|r| r.to_vec()).collect(),
            delta: self.delta.canonical_entries().into_iter().map(|(k, v)| (k.map(|i| i as usize), v)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TablesDump {
    pub levels: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub q2: Vec<Vec<f64>>,
    pub delta: Vec<([usize; 4], f64)>,
}

/// ⟨a|Q̂|b⟩ between physical oscillator levels.
pub fn position_element(a: usize, b: usize) -> f64 {
    if a == b + 1 {
        (a as f64 / 2.0).sqrt()
    } else if b == a + 1 {
        (b as f64 / 2.0).sqrt()
    } else {
        0.0
    }
}

/// ⟨a|Q̂²|b⟩ between physical oscillator levels.
pub fn position_squared_element(a: usize, b: usize) -> f64 {
    let af = a as f64;
    if a == b {
        af + 0.5
    } else if a + 2 == b {
        0.5 * ((af + 2.0) * (af + 1.0)).sqrt()
    } else if a == b + 2 {
        0.5 * (af * (af - 1.0)).sqrt()
    } else {
        0.0
    }
}

/// Build ε, Q, Q² and δ for levels 0..=omega, or for the even levels
/// 0, 2, ..., 2·omega when `even_only` is set.
pub fn build_tables(omega: usize, even_only: bool) -> Result<MatrixElementTables> {
    let levels: Vec<usize> = if even_only { (0..=omega).map(|a| 2 * a).collect() } else { (0..=omega).collect() };
    if *levels.last().unwrap() > MAX_LEVEL_INDEX {
        return Err(Error::Config(format!(
            "highest oscillator level {} exceeds the supported maximum {MAX_LEVEL_INDEX}",
            levels.last().unwrap()
        )));
    }
    let n = levels.len();
    let epsilon = levels.iter().map(|&a| a as f64 + 0.5).collect();
    let q = Array2::from_shape_fn((n, n), |(i, j)| position_element(levels[i], levels[j]));
    let q2 = Array2::from_shape_fn((n, n), |(i, j)| position_squared_element(levels[i], levels[j]));
    let delta = build_delta(&levels);
    Ok(MatrixElementTables { levels, epsilon, q, q2, delta })
}

/// Integer coefficients of the physicists' Hermite polynomials H_0..=H_n,
/// lowest power first.
pub fn hermite_coefficients(n: usize) -> Vec<Vec<BigInt>> {
    let mut h: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    if n >= 1 {
        h.push(vec![BigInt::zero(), BigInt::from(2)]);
    }
    for k in 1..n {
        let mut next = vec![BigInt::zero(); k + 2];
        for (i, c) in h[k].iter().enumerate() {
            next[i + 1] += c * 2;
        }
        for (i, c) in h[k - 1].iter().enumerate() {
            next[i] -= c * (2 * k as i64);
        }
        h.push(next);
    }
    h
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

/// num/den as f64, exact up to the final rounding.
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 { (num << shift as u64) / den } else { num / (den << (-shift) as u64) };
    q.to_f64().unwrap() * 2f64.powi(-shift as i32)
}

fn build_delta(levels: &[usize]) -> DeltaTable {
    let n = levels.len();
    let lmax = *levels.iter().max().unwrap_or(&0);
    let hermite = hermite_coefficients(lmax);
    let t_max = 2 * lmax;

    // W_τ = (2τ−1)!! · 4^{t_max−τ}; the common denominator 4^{t_max} is applied at the end.
    let mut weights = Vec::with_capacity(t_max + 1);
    let mut dfact = BigInt::one();
    for tau in 0..=t_max {
        if tau > 0 {
            dfact *= 2 * tau as i64 - 1;
        }
        weights.push(&dfact << (2 * (t_max - tau)));
    }

    // Moment vectors of each pair product H_a·H_b: m[j] = Σ_i p_i W_{(i+j)/2}.
    let max_deg = 2 * lmax;
    let mut moments: HashMap<(usize, usize), Vec<BigInt>> = HashMap::new();
    let mut products: HashMap<(usize, usize), Vec<BigInt>> = HashMap::new();
    for i in 0..n {
        for j in i..n {
            let (a, b) = (levels[i], levels[j]);
            let p = poly_mul(&hermite[a], &hermite[b]);
            let mut m = vec![BigInt::zero(); max_deg + 1];
            for (jj, mj) in m.iter_mut().enumerate() {
                for (ii, pi) in p.iter().enumerate() {
                    if (ii + jj) % 2 == 0 && !pi.is_zero() {
                        *mj += pi * &weights[(ii + jj) / 2];
                    }
                }
            }
            moments.insert((i, j), m);
            products.insert((i, j), p);
        }
    }

    let facts: Vec<BigUint> = (0..=lmax).map(factorial).collect();
    let denom_common = BigUint::one() << (4 * t_max as u64);
    let mut entries = HashMap::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                for l in k..n {
                    let (a, b, c, d) = (levels[i], levels[j], levels[k], levels[l]);
                    let s = a + b + c + d;
                    if s % 2 == 1 {
                        continue;
                    }
                    let m = &moments[&(i, j)];
                    let q = &products[&(k, l)];
                    let mut num = BigInt::zero();
                    for (jj, qj) in q.iter().enumerate() {
                        if !qj.is_zero() {
                            num += qj * &m[jj];
                        }
                    }
                    // δ² = N² / (2π · 16^{t_max} · 2^s · a!b!c!d!)
                    let sign = if num.sign() == Sign::Minus { -1.0 } else { 1.0 };
                    let mag = num.abs().to_biguint().unwrap();
                    let den = (&denom_common << s as u64) * &facts[a] * &facts[b] * &facts[c] * &facts[d];
                    let ratio = ratio_to_f64(&(&mag * &mag), &den);
                    let value = sign * (ratio / (2.0 * std::f64::consts::PI)).sqrt();
                    entries.insert([i as u16, j as u16, k as u16, l as u16], value);
                }
            }
        }
    }
    DeltaTable { size: n, entries }
}
