//! Welch's averaged periodogram with a Tukey taper, used as the reference
//! estimator that MESA is compared against.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{MesaError, Result};
use crate::types::{Sided, SpectralDensity, TimeSeries};

/// Segment lengths offered as presets by the command line.
pub const SEGMENT_PRESETS: [usize; 5] = [512, 1024, 2048, 8192, 32768];

/// Symmetric Tukey (tapered cosine) window. The cosine ramps occupy a
/// fraction `alpha` of the window; `alpha = 0` is rectangular and
/// `alpha = 1` is the Hann window.
pub fn tukey_window(n: usize, alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MesaError::invalid("tukey alpha", format!("{alpha} outside [0, 1]")));
    }
    if n == 0 {
        return Err(MesaError::invalid("window length", "must be >= 1"));
    }
    if n == 1 || alpha == 0.0 {
        return Ok(vec![1.0; n]);
    }
    let last = (n - 1) as f64;
    if alpha == 1.0 {
        return Ok((0..n)
            .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / last).cos()))
            .collect());
    }
    let width = (alpha * last / 2.0).floor() as usize;
    Ok((0..n)
        .map(|i| {
            let x = i as f64;
            if i <= width {
                0.5 * (1.0 + (PI * (-1.0 + 2.0 * x / (alpha * last))).cos())
            } else if i < n - width - 1 {
                1.0
            } else {
                0.5 * (1.0 + (PI * (-2.0 / alpha + 1.0 + 2.0 * x / (alpha * last))).cos())
            }
        })
        .collect())
}

/// One-sided Welch PSD: the mean over segments of
/// `|DFT(window * segment)|^2 dt / sum(window^2)`, with bins strictly
/// between 0 and Nyquist doubled. Segments advance by
/// `floor(segment_len (1 - overlap))` samples; a trailing partial segment
/// is dropped.
pub fn welch_psd(
    ts: &TimeSeries,
    segment_len: usize,
    overlap_fraction: f64,
    window: &[f64],
) -> Result<SpectralDensity> {
    welch_psd_with(ts, segment_len, overlap_fraction, window, false)
}

/// [`welch_psd`] with optional removal of each segment's mean.
pub fn welch_psd_with(
    ts: &TimeSeries,
    segment_len: usize,
    overlap_fraction: f64,
    window: &[f64],
    detrend: bool,
) -> Result<SpectralDensity> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(MesaError::invalid(
            "overlap",
            format!("{overlap_fraction} outside [0, 1)"),
        ));
    }
    if segment_len == 0 || segment_len > ts.len() {
        return Err(MesaError::invalid(
            "segment length",
            format!("{segment_len} does not fit in {} samples", ts.len()),
        ));
    }
    if window.len() != segment_len {
        return Err(MesaError::invalid(
            "window",
            format!("length {} != segment length {segment_len}", window.len()),
        ));
    }
    let power: f64 = window.iter().map(|w| w * w).sum();
    if !(power > 0.0) {
        return Err(MesaError::invalid("window", "all zeros"));
    }
    let hop = ((segment_len as f64 * (1.0 - overlap_fraction)).floor() as usize).max(1);
    let n_segments = (ts.len() - segment_len) / hop + 1;

    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let n_bins = segment_len / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    for s in 0..n_segments {
        let seg = &ts.samples()[s * hop..s * hop + segment_len];
        let mu = if detrend {
            seg.iter().sum::<f64>() / segment_len as f64
        } else {
            0.0
        };
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(window) {
            *b = Complex64::new((x - mu) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = ts.dt() / (power * n_segments as f64);
    let nyquist_bin = (segment_len % 2 == 0).then_some(segment_len / 2);
    let values = acc
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let interior = j > 0 && Some(j) != nyquist_bin;
            a * scale * if interior { 2.0 } else { 1.0 }
        })
        .collect();
    let df = 1.0 / (segment_len as f64 * ts.dt());
    let freqs = (0..n_bins).map(|j| j as f64 * df).collect();
    SpectralDensity::new(freqs, values, Sided::OneSided)
}
