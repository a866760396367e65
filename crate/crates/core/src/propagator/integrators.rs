//! Explicit Runge–Kutta steppers on flat complex state vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

fn axpy(y: &[C64], terms: &[(f64, &[C64])], h: f64) -> Vec<C64> {
    let mut out = y.to_vec();
    for &(a, k) in terms {
        if a == 0.0 {
            continue;
        }
        let s = a * h;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += ki * s;
        }
    }
    out
}

/// Classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &[C64], h: f64) -> Result<Vec<C64>>
where
    F: FnMut(f64, &[C64]) -> Result<Vec<C64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, &[(0.5, &k1)], h))?;
    let k3 = f(t + 0.5 * h, &axpy(y, &[(0.5, &k2)], h))?;
    let k4 = f(t + h, &axpy(y, &[(1.0, &k3)], h))?;
    Ok(axpy(y, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)], h))
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Adaptive Dormand–Prince integrator carrying its step size and the
/// first-same-as-last derivative between calls.
#[derive(Clone, Debug)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h: f64,
    pub min_step: f64,
    pub accepted: usize,
    pub rejected: usize,
    fsal: Option<(f64, Vec<C64>)>,
}

impl Dopri5 {
    pub fn new(rel_tol: f64, abs_tol: f64, initial_step: f64) -> Self {
        Dopri5 {
            rel_tol,
            abs_tol,
            h: initial_step,
            min_step: 1e-12 * initial_step.abs(),
            accepted: 0,
            rejected: 0,
            fsal: None,
        }
    }

    /// Integrates from `t` to `t_end` (either direction), overwriting `y`.
    pub fn advance<F>(&mut self, f: &mut F, t: f64, t_end: f64, y: &mut Vec<C64>) -> Result<()>
    where
        F: FnMut(f64, &[C64]) -> Result<Vec<C64>>,
    {
        let dir = (t_end - t).signum();
        if t_end == t {
            return Ok(());
        }
        self.h = self.h.abs() * dir;
        let mut t = t;
        loop {
            let remaining = t_end - t;
            if remaining * dir <= 1e-14 * t_end.abs().max(1.0) {
                return Ok(());
            }
            let last = self.h.abs() >= remaining.abs();
            let h = if last { remaining } else { self.h };
            let k1 = match &self.fsal {
                Some((tf, k)) if *tf == t => k.clone(),
                _ => f(t, y)?,
            };
            let mut k: Vec<Vec<C64>> = vec![k1];
            for s in 1..7 {
                let terms: Vec<(f64, &[C64])> = (0..s).map(|j| (A[s][j], k[j].as_slice())).collect();
                let ys = axpy(y, &terms, h);
                k.push(f(t + C[s] * h, &ys)?);
            }
            let terms: Vec<(f64, &[C64])> = (0..6).map(|j| (A[6][j], k[j].as_slice())).collect();
            let y_new = axpy(y, &terms, h);
            let mut acc = 0.0;
            for i in 0..y.len() {
                let mut e = C64::new(0.0, 0.0);
                for (s, ks) in k.iter().enumerate() {
                    if E[s] != 0.0 {
                        e += ks[i] * E[s];
                    }
                }
                let scale = self.abs_tol + self.rel_tol * y[i].norm().max(y_new[i].norm());
                acc += (e.norm() * h.abs() / scale).powi(2);
            }
            let err = (acc / y.len().max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::StepUnderflow { t, h });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { t_end } else { t + h };
                *y = y_new;
                self.fsal = Some((t, k.pop().expect("seven stages")));
                self.accepted += 1;
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.rejected += 1;
                self.h = h * factor.min(1.0);
                if self.h.abs() < self.min_step {
                    return Err(Error::StepUnderflow { t, h: self.h });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(_t: f64, y: &[C64]) -> Result<Vec<C64>> {
        Ok(y.iter().map(|c| C64::new(0.0, -1.0) * c).collect())
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |h: f64| {
            let mut y = vec![C64::new(1.0, 0.0)];
            let n = (2.0 / h).round() as usize;
            let mut f = rotation;
            for i in 0..n {
                y = rk4_step(&mut f, i as f64 * h, &y, h).unwrap();
            }
            (y[0] - C64::from_polar(1.0, -2.0)).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }

    #[test]
    fn dopri_meets_tolerance_both_directions() {
        let mut f = rotation;
        let mut d = Dopri5::new(1e-10, 1e-12, 0.1);
        let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        d.advance(&mut f, 0.0, 10.0, &mut y).unwrap();
        assert!((y[0] - C64::from_polar(1.0, -10.0)).norm() < 1e-8);
        d.advance(&mut f, 10.0, 0.0, &mut y).unwrap();
        assert!((y[0] - 1.0).norm() < 1e-8);
        assert!(d.accepted > 10);
    }
}
