//! Evaluation of the maximum entropy PSD of an AR model, and the inverse
//! map from a tabulated PSD back to autocorrelations.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{MesaError, Result};
use crate::types::{ArModel, Sided, SpectralDensity};

/// `n_freqs` equally spaced frequencies over `[0, Ny]` or `[-Ny, Ny]`,
/// endpoints included.
pub fn frequency_grid(n_freqs: usize, dt: f64, sided: Sided) -> Result<Vec<f64>> {
    if n_freqs < 2 {
        return Err(MesaError::invalid("grid", format!("n_freqs = {n_freqs} < 2")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(MesaError::invalid("grid", format!("dt = {dt}")));
    }
    let ny = 0.5 / dt;
    let lo = match sided {
        Sided::OneSided => 0.0,
        Sided::TwoSided => -ny,
    };
    let span = ny - lo;
    let last = (n_freqs - 1) as f64;
    Ok((0..n_freqs)
        .map(|i| {
            if i == n_freqs - 1 {
                ny
            } else {
                lo + span * i as f64 / last
            }
        })
        .collect())
}

/// One-sided grid size used when the caller does not choose one: enough
/// points to resolve the narrowest peak an order-`order` model can have.
pub fn default_grid_len(order: usize) -> usize {
    4 * order.max(256) + 1
}

/// Two-sided PSD values of `model` on its default one-sided grid.
pub fn psd_default(model: &ArModel) -> Result<SpectralDensity> {
    let freqs = frequency_grid(default_grid_len(model.order()), model.dt(), Sided::OneSided)?;
    psd(model, &freqs)
}

/// `S(f) = p_m dt / |sum_s a_s exp(i 2 pi f s dt)|^2` at each frequency.
///
/// The returned density is two-sided; `freqs` may cover only the
/// non-negative half since `S` is even.
pub fn psd(model: &ArModel, freqs: &[f64]) -> Result<SpectralDensity> {
    let ny = model.nyquist();
    let tol = 1e-9 * ny;
    if let Some(f) = freqs.iter().find(|f| !(f.abs() <= ny + tol)) {
        return Err(MesaError::invalid(
            "frequency",
            format!("{f} outside the Nyquist band [-{ny}, {ny}]"),
        ));
    }
    let denom = match fft_layout(freqs, model.dt(), model.order()) {
        Some(layout) => denominator_fft(model.filter(), &layout),
        None => denominator_direct(model.filter(), freqs, model.dt()),
    };
    let scale = model.p_m() * model.dt();
    let values = denom.into_iter().map(|d| scale / d).collect();
    SpectralDensity::new(freqs.to_vec(), values, Sided::TwoSided)
}

/// `|A(f)|^2` by direct summation, `A(f) = sum_s a_s exp(i 2 pi f s dt)`.
pub fn denominator_direct(a: &[f64], freqs: &[f64], dt: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| {
            let w = 2.0 * PI * f * dt;
            let (re, im) = a.iter().enumerate().fold((0.0, 0.0), |(re, im), (s, &as_)| {
                let (sin, cos) = (w * s as f64).sin_cos();
                (re + as_ * cos, im + as_ * sin)
            });
            re * re + im * im
        })
        .collect()
}

/// Grid that coincides with bins of a length-`fft_len` DFT.
struct FftLayout {
    fft_len: usize,
    bins: Vec<usize>,
}

/// Detects a grid made of DFT bins `j / (L dt)` with `L > order`.
fn fft_layout(freqs: &[f64], dt: f64, order: usize) -> Option<FftLayout> {
    if freqs.len() < 2 {
        return None;
    }
    let df = freqs[1] - freqs[0];
    if !(df > 0.0) {
        return None;
    }
    let l_real = 1.0 / (df * dt);
    let fft_len = l_real.round();
    if (l_real - fft_len).abs() > 1e-9 * l_real || fft_len < (order + 1) as f64 {
        return None;
    }
    let fft_len = fft_len as usize;
    let mut bins = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let j = f / df;
        let jr = j.round();
        if (j - jr).abs() > 1e-9 * jr.abs().max(1.0) {
            return None;
        }
        let j = jr.abs() as usize;
        if j > fft_len / 2 {
            return None;
        }
        bins.push(j);
    }
    Some(FftLayout { fft_len, bins })
}

fn denominator_fft(a: &[f64], layout: &FftLayout) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); layout.fft_len];
    for (b, &x) in buf.iter_mut().zip(a) {
        b.re = x;
    }
    FftPlanner::new()
        .plan_fft_forward(layout.fft_len)
        .process(&mut buf);
    layout.bins.iter().map(|&j| buf[j].norm_sqr()).collect()
}

/// Trapezoid quadrature of `int_{-Ny}^{Ny} S(f) exp(i 2 pi f k dt) df` for
/// each lag `k`, on a uniform two-sided grid spanning the whole band.
pub fn autocorr_from_psd(sd: &SpectralDensity, lags: &[usize]) -> Result<Vec<f64>> {
    if sd.sided() != Sided::TwoSided {
        return Err(MesaError::invalid("density", "quadrature needs a two-sided grid"));
    }
    let f = sd.freqs();
    let n = f.len();
    if n < 3 {
        return Err(MesaError::Accuracy(format!("only {n} grid points")));
    }
    let ny = f[n - 1];
    let df = (f[n - 1] - f[0]) / (n - 1) as f64;
    if !(ny > 0.0) || (f[0] + ny).abs() > 1e-9 * ny {
        return Err(MesaError::invalid("density", "grid must span [-Ny, Ny]"));
    }
    if f
        .iter()
        .enumerate()
        .any(|(i, &fi)| (fi - (f[0] + df * i as f64)).abs() > 1e-6 * df)
    {
        return Err(MesaError::invalid("density", "grid is not uniform"));
    }
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if n < 8 * max_lag.max(1) {
        return Err(MesaError::Accuracy(format!(
            "{n} grid points cannot resolve lag {max_lag} (need at least {})",
            8 * max_lag.max(1)
        )));
    }
    let dt = 0.5 / ny;
    let s = sd.values();
    lags.iter()
        .map(|&k| {
            let w = 2.0 * PI * k as f64 * dt;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, (&fi, &si)) in f.iter().zip(s).enumerate() {
                let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let (sin, cos) = (w * fi).sin_cos();
                re += weight * si * cos;
                im += weight * si * sin;
            }
            let (re, im) = (re * df, im * df);
            if im.abs() >= 1e-8 * re.abs() + 1e-12 {
                return Err(MesaError::Accuracy(format!(
                    "lag {k}: imaginary part {im:e} is not negligible against {re:e}"
                )));
            }
            Ok(re)
        })
        .collect()
}

/// Residuals `sum_s a_s rho_{r-s} - p_m delta_{r0}` for `r = 0..=m`, with
/// `rho` the autocorrelation implied by the model's own PSD on a two-sided
/// grid of `grid_len` points.
pub fn yule_walker_residuals(model: &ArModel, grid_len: usize) -> Result<Vec<f64>> {
    let m = model.order();
    let freqs = frequency_grid(grid_len, model.dt(), Sided::TwoSided)?;
    let sd = psd(model, &freqs)?;
    let lags: Vec<usize> = (0..=m).collect();
    let rho = autocorr_from_psd(&sd, &lags)?;
    let a = model.filter();
    Ok((0..=m)
        .map(|r| {
            let sum: f64 = a
                .iter()
                .enumerate()
                .map(|(s, &as_)| as_ * rho[(r as isize - s as isize).unsigned_abs()])
                .sum();
            if r == 0 {
                sum - model.p_m()
            } else {
                sum
            }
        })
        .collect())
}
