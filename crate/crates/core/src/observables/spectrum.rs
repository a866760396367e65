use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::series::{ColumnData, TimeSeries};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    None,
    Hann,
}

fn window_weights(n: usize, window: Window) -> Vec<f64> {
    match window {
        Window::None => vec![1.0; n],
        Window::Hann if n > 1 => {
            (0..n).map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos()).collect()
        }
        Window::Hann => vec![1.0; n],
    }
}

/// Unscaled DFT magnitudes |X_k| of the windowed, zero-padded signal,
/// k = 0..n·pad.
pub fn dft_magnitudes(x: &[f64], window: Window, zero_pad_factor: usize) -> Vec<f64> {
    let n = x.len();
    let len = n * zero_pad_factor.max(1);
    let w = window_weights(n, window);
    let mut buf: Vec<C64> = x.iter().zip(&w).map(|(v, w)| C64::new(v * w, 0.0)).collect();
    buf.resize(len, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

/// Magnitude spectrum of Re(`column`) at angular frequencies
/// ω_k = 2πk/(T·pad), k = 0..=n·pad/2, where T = n·Δt. Magnitudes are
/// scaled by Δt to approximate the continuous transform.
pub fn ft_spectrum(series: &TimeSeries, column: &str, window: Window, zero_pad_factor: usize) -> Result<TimeSeries> {
    if series.len() < 2 {
        return Err(Error::Series("spectrum needs at least two samples".into()));
    }
    if !series.is_uniform() {
        return Err(Error::Series("spectrum needs uniformly spaced samples".into()));
    }
    let re: Vec<f64> = match series.column(column) {
        Some(ColumnData::Complex(v)) => v.iter().map(|c| c.re).collect(),
        Some(ColumnData::Real(v)) => v.clone(),
        None => return Err(Error::Series(format!("missing column {column}"))),
    };
    let pad = zero_pad_factor.max(1);
    let dt = series.t[1] - series.t[0];
    let n = re.len();
    let total = n as f64 * dt * pad as f64;
    let mags = dft_magnitudes(&re, window, pad);
    let half = n * pad / 2;
    let mut out = TimeSeries::new("omega");
    out.t = (0..=half).map(|k| std::f64::consts::TAU * k as f64 / total).collect();
    out.add_column("magnitude", ColumnData::Real(mags[..=half].iter().map(|m| m * dt).collect()))?;
    out.metadata = series.metadata.clone();
    Ok(out)
}

fn interpolate(t: &[f64], y: &[f64], x: f64) -> f64 {
    let i = t.partition_point(|&s| s <= x);
    if i == 0 {
        return y[0];
    }
    if i >= t.len() {
        return y[t.len() - 1];
    }
    let (t0, t1) = (t[i - 1], t[i]);
    let w = (x - t0) / (t1 - t0);
    y[i - 1] * (1.0 - w) + y[i] * w
}

/// | |a| − |b| | at the finer series' samples inside the common range and at
/// both endpoints, with the coarser series interpolated linearly.
fn common_grid(ta: &[f64], a: &[f64], tb: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if ta.len() != a.len() || tb.len() != b.len() || ta.len() < 2 || tb.len() < 2 {
        return Err(Error::Series("comparison needs two samples per series and matching lengths".into()));
    }
    let lo = ta[0].max(tb[0]);
    let hi = ta[ta.len() - 1].min(tb[tb.len() - 1]);
    if !(hi > lo) {
        return Err(Error::Series(format!(
            "time ranges do not overlap ([{}, {}] vs [{}, {}])",
            ta[0],
            ta[ta.len() - 1],
            tb[0],
            tb[tb.len() - 1]
        )));
    }
    let spacing = |t: &[f64]| (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let (tf, yf, tc, yc) = if spacing(ta) <= spacing(tb) { (ta, a, tb, b) } else { (tb, b, ta, a) };
    let mut grid: Vec<f64> = vec![lo];
    grid.extend(tf.iter().copied().filter(|&t| t > lo && t < hi));
    grid.push(hi);
    let yf: Vec<f64> = yf.iter().map(|v| v.abs()).collect();
    let yc: Vec<f64> = yc.iter().map(|v| v.abs()).collect();
    let diff = grid.iter().map(|&t| (interpolate(tf, &yf, t) - interpolate(tc, &yc, t)).abs()).collect();
    Ok((grid, diff))
}

/// χ = ∫ | |a| − |b| | dt over the common range by the trapezoidal rule on
/// the finer grid, with the coarser series interpolated linearly.
pub fn chi_error(ta: &[f64], a: &[f64], tb: &[f64], b: &[f64]) -> Result<f64> {
    let (grid, diff) = common_grid(ta, a, tb, b)?;
    Ok(grid.windows(2).zip(diff.windows(2)).map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1])).sum())
}

/// max | |a| − |b| | over the same grid as [`chi_error`].
pub fn max_abs_error(ta: &[f64], a: &[f64], tb: &[f64], b: &[f64]) -> Result<f64> {
    let (_, diff) = common_grid(ta, a, tb, b)?;
    Ok(diff.into_iter().fold(0.0, f64::max))
}

/// [`chi_error`] between named columns of two series (magnitudes for
/// complex columns).
pub fn chi_between(a: &TimeSeries, col_a: &str, b: &TimeSeries, col_b: &str) -> Result<f64> {
    let ya = a.column(col_a).ok_or_else(|| Error::Series(format!("missing column {col_a}")))?.magnitudes();
    let yb = b.column(col_b).ok_or_else(|| Error::Series(format!("missing column {col_b}")))?.magnitudes();
    chi_error(&a.t, &ya, &b.t, &yb)
}
