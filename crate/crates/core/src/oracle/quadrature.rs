use crate::error::{Error, Result};

/// Nodes and weights of n-point Gauss–Hermite quadrature for weight e^{−x²},
/// found by Newton iteration on orthonormal Hermite functions.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Orthonormal oscillator eigenfunctions without the Gaussian factor,
/// h_0..=h_max at position q, by upward recurrence.
pub(crate) fn hermite_function_polys(q: f64, max: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(max + 1);
    h.push(std::f64::consts::PI.powf(-0.25));
    if max >= 1 {
        h.push(std::f64::consts::SQRT_2 * q * h[0]);
    }
    for n in 1..max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * q * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

/// ∫ φ_α φ_β φ_γ φ_ζ dQ by Gauss–Hermite quadrature after the substitution
/// x = √2 Q, which turns the product of Gaussians into the weight e^{−x²}.
///
/// Refuses when `points` is below the exactness bound 2 + (α+β+γ+ζ)/2.
pub fn quadrature_delta(a: usize, b: usize, c: usize, d: usize, points: usize) -> Result<f64> {
    let s = a + b + c + d;
    if points < 2 + s / 2 {
        return Err(Error::OracleRefused(format!(
            "{points} quadrature points cannot integrate degree {s} exactly (need {})",
            2 + s / 2
        )));
    }
    let max = a.max(b).max(c).max(d);
    let (x, w) = gauss_hermite(points);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let h = hermite_function_polys(xi / std::f64::consts::SQRT_2, max);
        acc += wi * h[a] * h[b] * h[c] * h[d];
    }
    Ok(acc / std::f64::consts::SQRT_2)
}
