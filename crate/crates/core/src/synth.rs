//! Synthetic data: series with a prescribed PSD, simulated AR processes and
//! random AR models.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{MesaError, Result};
use crate::estimator::{is_stable, step_down};
use crate::rng::stream;
use crate::types::{ArModel, Sided, SpectralDensity, TimeSeries};

/// A target spectrum to draw data from.
pub trait TargetPsd: Sync {
    /// Two-sided density at frequency `f` (Hz); must be even in `f`.
    fn density(&self, f: f64) -> f64;
}

/// Gaussian bump `scale * exp(-(|f| - mean)^2 / (2 std^2)) / (std sqrt(2 pi))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPsd {
    pub mean: f64,
    pub std: f64,
    pub scale: f64,
}

impl GaussianPsd {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(MesaError::invalid(
                "gaussian psd",
                format!("mean {mean}, std {std}"),
            ));
        }
        Ok(Self {
            mean,
            std,
            scale: 1.0,
        })
    }
}

impl TargetPsd for GaussianPsd {
    fn density(&self, f: f64) -> f64 {
        let z = (f.abs() - self.mean) / self.std;
        self.scale * (-0.5 * z * z).exp() / (self.std * (2.0 * PI).sqrt())
    }
}

/// Constant two-sided density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatPsd(pub f64);

impl TargetPsd for FlatPsd {
    fn density(&self, _f: f64) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Linear in `(ln f, ln S)`; segments touching zero fall back to linear.
    LogLog,
}

/// A PSD curve given as a table on non-negative frequencies.
///
/// A one-sided table is read as a density, so the two-sided value is half
/// the tabulated one at every frequency. Outside the table the end values
/// are held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPsd {
    table: SpectralDensity,
    interpolation: Interpolation,
}

impl TabulatedPsd {
    pub fn new(table: SpectralDensity, interpolation: Interpolation) -> Result<Self> {
        if table.freqs()[0] < 0.0 {
            return Err(MesaError::invalid(
                "tabulated psd",
                "frequencies must start at or above 0",
            ));
        }
        Ok(Self {
            table,
            interpolation,
        })
    }

    pub fn table(&self) -> &SpectralDensity {
        &self.table
    }

    fn tabulated(&self, f: f64) -> f64 {
        let (x, y) = (self.table.freqs(), self.table.values());
        let n = x.len();
        if f <= x[0] {
            return y[0];
        }
        if f >= x[n - 1] {
            return y[n - 1];
        }
        let i = x.partition_point(|xi| *xi <= f) - 1;
        let (x0, x1, y0, y1) = (x[i], x[i + 1], y[i], y[i + 1]);
        let positive = x0 > 0.0 && y0 > 0.0 && y1 > 0.0;
        match self.interpolation {
            Interpolation::LogLog if positive => {
                let t = (f.ln() - x0.ln()) / (x1.ln() - x0.ln());
                (y0.ln() + t * (y1.ln() - y0.ln())).exp()
            }
            _ => y0 + (f - x0) / (x1 - x0) * (y1 - y0),
        }
    }
}

impl TargetPsd for TabulatedPsd {
    fn density(&self, f: f64) -> f64 {
        let v = self.tabulated(f.abs());
        match self.table.sided() {
            Sided::OneSided => 0.5 * v,
            Sided::TwoSided => v,
        }
    }
}

/// Draws `n` samples whose expected periodogram is the two-sided `target`.
///
/// Independent complex Gaussian coefficients with variance proportional to
/// the target are placed on the DFT bins with Hermitian symmetry and
/// inverse transformed.
pub fn generate_from_psd(
    target: &dyn TargetPsd,
    n: usize,
    dt: f64,
    rng_seed: u64,
) -> Result<TimeSeries> {
    generate_from_psd_with_rng(target, n, dt, &mut stream(rng_seed, 0))
}

pub fn generate_from_psd_with_rng<R: Rng + ?Sized>(
    target: &dyn TargetPsd,
    n: usize,
    dt: f64,
    rng: &mut R,
) -> Result<TimeSeries> {
    if n < 2 || n % 2 != 0 {
        return Err(MesaError::invalid(
            "series length",
            format!("{n} must be even and >= 2"),
        ));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(MesaError::invalid("sampling interval", format!("{dt}")));
    }
    let half = n / 2;
    let nf = n as f64;
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=half {
        let f = k as f64 / (nf * dt);
        let s = target.density(f);
        if !(s.is_finite() && s >= 0.0) {
            return Err(MesaError::invalid(
                "target psd",
                format!("value {s} at {f} Hz is negative or not finite"),
            ));
        }
        let g1: f64 = rng.sample(StandardNormal);
        if k == 0 || k == half {
            bins[k] = Complex64::new((nf * s / dt).sqrt() * g1, 0.0);
        } else {
            let g2: f64 = rng.sample(StandardNormal);
            let amp = (0.5 * nf * s / dt).sqrt();
            bins[k] = Complex64::new(amp * g1, amp * g2);
            bins[n - k] = bins[k].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut bins);
    let scale = bins.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let residue = bins.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if residue > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(MesaError::Generation(format!(
            "inverse transform is not real (residue {residue:e})"
        )));
    }
    TimeSeries::new(bins.into_iter().map(|z| z.re / nf).collect(), dt)
}

/// Simulates `x_t = sum_i b_i x_{t-i} + nu_t`, `nu_t ~ N(0, p_m)`, from a
/// zero state; the first `burn_in` samples are discarded.
pub fn generate_ar(model: &ArModel, n: usize, burn_in: usize, rng_seed: u64) -> Result<TimeSeries> {
    generate_ar_with_rng(model, n, burn_in, &mut stream(rng_seed, 0))
}

pub fn generate_ar_with_rng<R: Rng + ?Sized>(
    model: &ArModel,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    if !is_stable(model.filter()) {
        return Err(MesaError::Unstable(format!(
            "order-{} model has a root on or inside the unit circle",
            model.order()
        )));
    }
    let b = model.ar_coefficients();
    let p = b.len();
    let sigma = model.p_m().sqrt();
    let total = burn_in + n;
    let mut x = vec![0.0; total];
    for t in 0..total {
        let mean: f64 = b
            .iter()
            .take(t.min(p))
            .enumerate()
            .map(|(i, bi)| bi * x[t - 1 - i])
            .sum();
        let noise: f64 = if sigma > 0.0 {
            sigma * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        x[t] = mean + noise;
    }
    TimeSeries::new(x.split_off(burn_in), model.dt())
}

/// Default burn-in for an order-`p` simulation.
pub fn default_burn_in(order: usize) -> usize {
    10 * order
}

/// Maximum draws of coefficients for one random model.
pub const REJECTION_BUDGET: usize = 10_000;

/// Random models need every reflection coefficient at least this far inside
/// the unit interval. Magnitudes summing to one leave sign patterns such as
/// all-positive with a root exactly on the unit circle, which rounding can
/// otherwise let through.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Random stationary AR model: order log-uniform on `[p_min, p_max]`,
/// coefficient magnitudes from a flat Dirichlet, fair random signs,
/// redrawn until stable with [`STABILITY_MARGIN`] to spare. `p_m = 1`, `dt = 1`.
pub fn random_ar_model(rng_seed: u64, p_min: usize, p_max: usize) -> Result<ArModel> {
    random_ar_model_with_rng(&mut stream(rng_seed, 0), p_min, p_max)
}

pub fn random_ar_model_with_rng<R: Rng + ?Sized>(
    rng: &mut R,
    p_min: usize,
    p_max: usize,
) -> Result<ArModel> {
    if p_min < 2 || p_max < p_min {
        return Err(MesaError::invalid(
            "order range",
            format!("need 2 <= p_min <= p_max, got [{p_min}, {p_max}]"),
        ));
    }
    let (lo, hi) = ((p_min as f64).ln(), (p_max as f64).ln());
    let p = if p_min == p_max {
        p_min
    } else {
        (rng.random_range(lo..=hi).exp().round() as usize).clamp(p_min, p_max)
    };
    for _ in 0..REJECTION_BUDGET {
        let mut mags: Vec<f64> = (0..p).map(|_| rng.sample(Exp1)).collect();
        let total: f64 = mags.iter().sum();
        for m in &mut mags {
            *m /= total;
        }
        let mut a = Vec::with_capacity(p + 1);
        a.push(1.0);
        for m in mags {
            let b = if rng.random_bool(0.5) { m } else { -m };
            a.push(-b);
        }
        let inside = step_down(&a)
            .is_ok_and(|cs| cs.iter().all(|c| c.abs() <= 1.0 - STABILITY_MARGIN));
        if inside {
            return ArModel::new(a, 1.0, 1.0);
        }
    }
    Err(MesaError::Generation(format!(
        "no stable order-{p} model in {REJECTION_BUDGET} draws"
    )))
}

/// Reflection coefficients drawn uniformly in `[-max_abs, max_abs]` and
/// turned into a filter; always stable when `max_abs < 1`.
pub fn random_stable_filter<R: Rng + ?Sized>(rng: &mut R, order: usize, max_abs: f64) -> Vec<f64> {
    let mut a = vec![1.0];
    for _ in 0..order {
        let c = rng.random_range(-max_abs..=max_abs);
        a = crate::estimator::levinson_step(&a, 1.0, c)
            .expect("reflection coefficient within [-1, 1]")
            .0;
    }
    a
}
