//! Multimode coherent-state labels, overlaps and Fock-state projections.
//!
//! Units are atomic with m = ω = ħ = 1, so the coherent-state width γ is 1
//! and a label is z = (q + ip)/√2.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{check_modes, Result};

/// Coherent-state width γ = mω/ħ.
pub const GAMMA: f64 = 1.0;

/// Label of a single-mode coherent state centred at (q, p).
pub fn label_from_qp(q: f64, p: f64) -> C64 {
    C64::new(q, p) / std::f64::consts::SQRT_2
}

/// Phase-space centre (q, p) of a single-mode label.
pub fn qp_from_label(z: C64) -> (f64, f64) {
    (z.re * std::f64::consts::SQRT_2, z.im * std::f64::consts::SQRT_2)
}

/// Occupation numbers n^(α) of a Fock state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OccupationVector(pub Vec<u32>);

impl OccupationVector {
    /// `|n, 0, 0, ...⟩` over `modes` modes.
    pub fn condensed(n: u32, modes: usize) -> Self {
        let mut occ = vec![0; modes];
        if modes > 0 {
            occ[0] = n;
        }
        OccupationVector(occ)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&n| n as u64).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One term of the expansion: a multimode label, its amplitude D and action S.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub z: Vec<C64>,
    pub amplitude: C64,
    pub action: f64,
}

/// Exponent of the overlap ⟨a|b⟩, i.e. Σ (a* b − |a|²/2 − |b|²/2).
#[inline]
pub fn overlap_exponent(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y - 0.5 * (x.norm_sqr() + y.norm_sqr());
    }
    acc
}

/// ⟨a|b⟩ without shape validation; the caller guarantees equal lengths.
#[inline]
pub fn overlap_unchecked(a: &[C64], b: &[C64]) -> C64 {
    overlap_exponent(a, b).exp()
}

/// Multimode coherent-state overlap ⟨a|b⟩.
pub fn overlap(a: &[C64], b: &[C64]) -> Result<C64> {
    check_modes(a.len(), b.len())?;
    Ok(overlap_unchecked(a, b))
}

/// A complex number held as log-magnitude and phase, so that values such as
/// (z*)^100/√(100!) stay representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogAmplitude {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogAmplitude {
    pub const ONE: LogAmplitude = LogAmplitude { ln_abs: 0.0, phase: 0.0 };

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(self.ln_abs.exp(), self.phase)
    }

    pub fn conj(self) -> Self {
        LogAmplitude { ln_abs: self.ln_abs, phase: -self.phase }
    }

    pub fn mul(self, other: LogAmplitude) -> Self {
        LogAmplitude { ln_abs: self.ln_abs + other.ln_abs, phase: self.phase + other.phase }
    }

    /// Multiply by an ordinary complex number and return the ordinary result.
    pub fn times(self, c: C64) -> C64 {
        if self.is_zero() || c == C64::new(0.0, 0.0) {
            return C64::new(0.0, 0.0);
        }
        let (r, th) = c.to_polar();
        LogAmplitude { ln_abs: self.ln_abs + r.ln(), phase: self.phase + th }.to_complex()
    }
}

/// ⟨z|n⟩ = Π_α e^{−|z_α|²/2} (z_α*)^{n_α} / √(n_α!), in the log domain.
pub fn log_fock_overlap(z: &[C64], n: &OccupationVector) -> Result<LogAmplitude> {
    check_modes(z.len(), n.len())?;
    Ok(log_fock_overlap_unchecked(z, &n.0))
}

pub(crate) fn log_fock_overlap_unchecked(z: &[C64], n: &[u32]) -> LogAmplitude {
    let mut ln_abs = 0.0;
    let mut phase = 0.0;
    for (&zc, &na) in z.iter().zip(n) {
        let r2 = zc.norm_sqr();
        ln_abs -= 0.5 * r2;
        if na > 0 {
            if r2 == 0.0 {
                return LogAmplitude { ln_abs: f64::NEG_INFINITY, phase: 0.0 };
            }
            let nf = na as f64;
            ln_abs += 0.5 * nf * r2.ln() - 0.5 * ln_factorial(na as u64);
            phase -= nf * zc.arg();
        }
    }
    LogAmplitude { ln_abs, phase }
}
