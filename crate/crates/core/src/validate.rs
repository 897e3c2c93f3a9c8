//! Error metrics against a known spectrum and the validation experiments
//! built on them: Gaussian-PSD ensembles, AR order recovery, and the
//! comparison with Welch's method.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{tukey_window, welch_psd};
use crate::error::{MesaError, Result};
use crate::estimator::EstimatorMethod;
use crate::rng::stream;
use crate::selection::{fit_and_select, max_order, EarlyStopConfig};
use crate::spectrum::psd;
use crate::stats::quantile_sorted;
use crate::synth::{
    default_burn_in, generate_ar_with_rng, generate_from_psd_with_rng, random_ar_model_with_rng,
    GaussianPsd, TargetPsd,
};
use crate::types::{Criterion, Sided, SpectralDensity, TimeSeries};

fn same_grid(a: &SpectralDensity, b: &SpectralDensity) -> Result<()> {
    let close = a.len() == b.len()
        && a
            .freqs()
            .iter()
            .zip(b.freqs())
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300));
    if close {
        Ok(())
    } else {
        Err(MesaError::invalid("spectra", "frequency grids differ"))
    }
}

fn check_truth(truth: &SpectralDensity) -> Result<()> {
    match truth.values().iter().position(|v| !(*v > 0.0)) {
        Some(i) => Err(MesaError::invalid(
            "reference spectrum",
            format!("zero at {} Hz", truth.freqs()[i]),
        )),
        None => Ok(()),
    }
}

/// Mean over the grid of `|S_est(f) - S(f)| / S(f)`.
pub fn relative_error_freq_avg(estimate: &SpectralDensity, truth: &SpectralDensity) -> Result<f64> {
    same_grid(estimate, truth)?;
    check_truth(truth)?;
    let sum: f64 = estimate
        .values()
        .iter()
        .zip(truth.values())
        .map(|(e, t)| (e - t).abs() / t)
        .sum();
    Ok(sum / truth.len() as f64)
}

/// Per-frequency mean over estimates of `|S_i(f) - S(f)| / S(f)`.
pub fn relative_error_ensemble(
    estimates: &[SpectralDensity],
    truth: &SpectralDensity,
) -> Result<SpectralDensity> {
    if estimates.is_empty() {
        return Err(MesaError::invalid("ensemble", "no estimates"));
    }
    check_truth(truth)?;
    let mut acc = vec![0.0; truth.len()];
    for est in estimates {
        same_grid(est, truth)?;
        for ((a, e), t) in acc.iter_mut().zip(est.values()).zip(truth.values()) {
            *a += (e - t).abs() / t;
        }
    }
    let k = estimates.len() as f64;
    SpectralDensity::new(
        truth.freqs().to_vec(),
        acc.into_iter().map(|a| a / k).collect(),
        truth.sided(),
    )
}

/// `target` sampled on `freqs` as a two-sided density.
pub fn tabulate(target: &dyn TargetPsd, freqs: &[f64]) -> Result<SpectralDensity> {
    SpectralDensity::new(
        freqs.to_vec(),
        freqs.iter().map(|&f| target.density(f)).collect(),
        Sided::TwoSided,
    )
}

/// DFT bin frequencies `j / (n dt)` for `j = 0..=n/2`.
pub fn rfft_grid(n: usize, dt: f64) -> Vec<f64> {
    (0..=n / 2).map(|j| j as f64 / (n as f64 * dt)).collect()
}

/// Settings of the Gaussian-PSD experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianExperimentConfig {
    pub n_realizations: usize,
    pub n_samples: usize,
    pub criterion: Criterion,
    pub rng_seed: u64,
    /// Sampling interval; the default `0.1` puts the Nyquist frequency at 5
    /// so the bump at 2.5 sits mid-band.
    pub dt: f64,
    pub mean: f64,
    pub std: f64,
    pub method: EstimatorMethod,
    /// `None` selects the default derived from the maximum order.
    pub early_stop: Option<EarlyStopConfig>,
}

impl GaussianExperimentConfig {
    pub fn new(n_realizations: usize, n_samples: usize, criterion: Criterion, rng_seed: u64) -> Self {
        Self {
            n_realizations,
            n_samples,
            criterion,
            rng_seed,
            dt: 0.1,
            mean: 2.5,
            std: 0.5,
            method: EstimatorMethod::Burg,
            early_stop: None,
        }
    }
}

/// One realization of an experiment: selected order and its
/// frequency-averaged relative error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub order: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianExperiment {
    pub records: Vec<RealizationRecord>,
    pub truth: SpectralDensity,
    pub mean_psd: SpectralDensity,
    /// Per-frequency 5%, 50% and 95% quantiles of the estimates.
    pub lower_psd: SpectralDensity,
    pub median_psd: SpectralDensity,
    pub upper_psd: SpectralDensity,
    pub error_curve: SpectralDensity,
}

/// Draws series from a Gaussian PSD, estimates each with MESA under one
/// criterion, and scores every estimate against the analytic curve.
pub fn run_gaussian_experiment(cfg: &GaussianExperimentConfig) -> Result<GaussianExperiment> {
    let target = GaussianPsd::new(cfg.mean, cfg.std)?;
    run_target_experiment(&target, cfg)
}

/// [`run_gaussian_experiment`] with an arbitrary target spectrum (the
/// Gaussian parameters in `cfg` are ignored).
pub fn run_target_experiment(
    target: &dyn TargetPsd,
    cfg: &GaussianExperimentConfig,
) -> Result<GaussianExperiment> {
    if cfg.n_realizations == 0 {
        return Err(MesaError::invalid("experiment", "n_realizations must be >= 1"));
    }
    let freqs = rfft_grid(cfg.n_samples, cfg.dt);
    let truth = tabulate(target, &freqs)?;
    check_truth(&truth)?;
    let m_max = max_order(cfg.n_samples)?;
    let es = cfg
        .early_stop
        .unwrap_or_else(|| EarlyStopConfig::for_max_order(m_max));

    let outcomes: Vec<(RealizationRecord, SpectralDensity)> = (0..cfg.n_realizations)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.rng_seed, i as u64);
            let ts = generate_from_psd_with_rng(target, cfg.n_samples, cfg.dt, &mut rng)?;
            let fit = fit_and_select(&ts, m_max, cfg.method, &[cfg.criterion], es)?;
            let order = fit.selections[0].chosen_order();
            let model = fit.trace.model(order, cfg.dt)?;
            let est = psd(&model, &freqs)?;
            let error = relative_error_freq_avg(&est, &truth)?;
            Ok((RealizationRecord { index: i, order, error }, est))
        })
        .collect::<Result<_>>()?;

    let (records, estimates): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let error_curve = relative_error_ensemble(&estimates, &truth)?;
    let k = estimates.len();
    let mut mean = vec![0.0; freqs.len()];
    let mut bands = [
        Vec::with_capacity(freqs.len()),
        Vec::with_capacity(freqs.len()),
        Vec::with_capacity(freqs.len()),
    ];
    let mut column = vec![0.0; k];
    for (j, m) in mean.iter_mut().enumerate() {
        for (c, est) in column.iter_mut().zip(&estimates) {
            *c = est.values()[j];
        }
        *m = column.iter().sum::<f64>() / k as f64;
        column.sort_by(f64::total_cmp);
        for (band, q) in bands.iter_mut().zip([0.05, 0.5, 0.95]) {
            band.push(quantile_sorted(&column, q));
        }
    }
    let density = |v: Vec<f64>| SpectralDensity::new(freqs.clone(), v, Sided::TwoSided);
    let [lo, med, hi] = bands;
    Ok(GaussianExperiment {
        records,
        mean_psd: density(mean)?,
        lower_psd: density(lo)?,
        median_psd: density(med)?,
        upper_psd: density(hi)?,
        truth,
        error_curve,
    })
}

/// Settings of the AR order-recovery experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub n_models: usize,
    pub p_min: usize,
    pub p_max: usize,
    pub n_samples: usize,
    pub rng_seed: u64,
    /// `None` uses `10 p` samples of burn-in.
    pub burn_in: Option<usize>,
    pub early_stop: Option<EarlyStopConfig>,
}

impl RecoveryConfig {
    pub fn new(n_models: usize, p_min: usize, p_max: usize, n_samples: usize, rng_seed: u64) -> Self {
        Self {
            n_models,
            p_min,
            p_max,
            n_samples,
            rng_seed,
            burn_in: None,
            early_stop: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub index: usize,
    pub p_true: usize,
    pub m_max: usize,
    pub fpe: usize,
    pub cat: usize,
    pub obd: usize,
}

impl RecoveryRecord {
    pub fn estimate(&self, criterion: Criterion) -> usize {
        match criterion {
            Criterion::Fpe => self.fpe,
            Criterion::Cat => self.cat,
            Criterion::Obd => self.obd,
        }
    }
}

/// Simulates random AR models and records the order each criterion selects.
pub fn run_order_recovery(cfg: &RecoveryConfig) -> Result<Vec<RecoveryRecord>> {
    if cfg.n_models == 0 {
        return Ok(Vec::new());
    }
    let m_max = max_order(cfg.n_samples)?;
    let es = cfg
        .early_stop
        .unwrap_or_else(|| EarlyStopConfig::for_max_order(m_max));
    (0..cfg.n_models)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.rng_seed, i as u64);
            let model = random_ar_model_with_rng(&mut rng, cfg.p_min, cfg.p_max)?;
            let burn_in = cfg.burn_in.unwrap_or_else(|| default_burn_in(model.order()));
            let ts = generate_ar_with_rng(&model, cfg.n_samples, burn_in, &mut rng)?;
            let fit = fit_and_select(&ts, m_max, EstimatorMethod::Burg, &Criterion::ALL, es)?;
            let pick = |k: usize| fit.selections[k].chosen_order();
            Ok(RecoveryRecord {
                index: i,
                p_true: model.order(),
                m_max,
                fpe: pick(0),
                cat: pick(1),
                obd: pick(2),
            })
        })
        .collect()
}

/// Settings shared by MESA and Welch in a comparison run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareConfig {
    pub duration: f64,
    pub sample_rate: f64,
    pub segment_len: usize,
    pub overlap: f64,
    pub tukey_alpha: f64,
    pub criterion: Criterion,
}

impl CompareConfig {
    pub fn new(duration: f64, sample_rate: f64) -> Self {
        Self {
            duration,
            sample_rate,
            segment_len: 1024,
            overlap: 0.5,
            tukey_alpha: 0.4,
            criterion: Criterion::Fpe,
        }
    }

    pub fn n_samples(&self) -> usize {
        let n = (self.duration * self.sample_rate).round() as usize;
        n - n % 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub seed: u64,
    pub n_samples: usize,
    pub mesa_order: usize,
    pub mesa_error: f64,
    pub welch_error: f64,
}

/// Both estimates, on the Welch frequency grid, for one synthetic series.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub record: ComparisonRecord,
    /// Two-sided.
    pub truth: SpectralDensity,
    /// Two-sided.
    pub mesa: SpectralDensity,
    /// One-sided, as produced by [`welch_psd`].
    pub welch: SpectralDensity,
}

/// Estimates the PSD of `ts` with MESA and with Welch and scores both
/// against `target` on the Welch grid.
pub fn compare_on_series(
    target: &dyn TargetPsd,
    ts: &TimeSeries,
    cfg: &CompareConfig,
    seed: u64,
) -> Result<Comparison> {
    let window = tukey_window(cfg.segment_len, cfg.tukey_alpha)?;
    let welch = welch_psd(ts, cfg.segment_len, cfg.overlap, &window)?;
    let nyquist = ts.nyquist();
    let welch_two = welch.to_two_sided(nyquist);
    let truth = tabulate(target, welch.freqs())?;

    let m_max = max_order(ts.len())?;
    let es = EarlyStopConfig::for_max_order(m_max);
    let fit = fit_and_select(ts, m_max, EstimatorMethod::Burg, &[cfg.criterion], es)?;
    let order = fit.selections[0].chosen_order();
    let model = fit.trace.model(order, ts.dt())?;
    let mesa = psd(&model, welch.freqs())?;

    let record = ComparisonRecord {
        seed,
        n_samples: ts.len(),
        mesa_order: order,
        mesa_error: relative_error_freq_avg(&mesa, &truth)?,
        welch_error: relative_error_freq_avg(&welch_two, &truth)?,
    };
    Ok(Comparison {
        record,
        truth,
        mesa,
        welch,
    })
}

/// Draws a series of `cfg.duration` seconds from `target` and compares.
pub fn compare_mesa_welch(
    target: &dyn TargetPsd,
    cfg: &CompareConfig,
    seed: u64,
) -> Result<Comparison> {
    let dt = 1.0 / cfg.sample_rate;
    let ts = generate_from_psd_with_rng(target, cfg.n_samples(), dt, &mut stream(seed, 0))?;
    compare_on_series(target, &ts, cfg, seed)
}

/// A smooth three-peak spectrum on a sloped floor, standing in for a
/// detector noise curve in tests and demos. Values are one-sided.
pub fn three_peak_table(sample_rate: f64, n_points: usize) -> Result<SpectralDensity> {
    let ny = 0.5 * sample_rate;
    let peaks = [(60.0, 3.0, 40.0), (440.0, 6.0, 15.0), (1200.0, 12.0, 6.0)];
    let freqs: Vec<f64> = (0..n_points)
        .map(|i| ny * i as f64 / (n_points - 1) as f64)
        .collect();
    let values = freqs
        .iter()
        .map(|&f| {
            let floor = 1e-3 * (1.0 + (50.0 / (f + 10.0)).powi(2));
            let bumps: f64 = peaks
                .iter()
                .map(|&(f0, w, h)| h * 1e-3 / (1.0 + ((f - f0) / w).powi(2)))
                .sum();
            floor + bumps
        })
        .collect();
    SpectralDensity::new(freqs, values, Sided::OneSided)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd(v: &[f64]) -> SpectralDensity {
        let f: Vec<f64> = (0..v.len()).map(|i| i as f64).collect();
        SpectralDensity::new(f, v.to_vec(), Sided::TwoSided).unwrap()
    }

    #[test]
    fn freq_avg_examples() {
        let truth = sd(&[1.0, 2.0]);
        assert_eq!(relative_error_freq_avg(&truth, &truth).unwrap(), 0.0);
        assert_eq!(relative_error_freq_avg(&sd(&[2.0, 4.0]), &truth).unwrap(), 1.0);
        assert_eq!(relative_error_freq_avg(&sd(&[2.0, 1.0]), &truth).unwrap(), 0.75);
        assert!(relative_error_freq_avg(&sd(&[1.0]), &truth).is_err());
        assert!(relative_error_freq_avg(&truth, &sd(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn ensemble_examples() {
        let truth = sd(&[1.0, 2.0, 4.0]);
        let zero = relative_error_ensemble(&[truth.clone(), truth.clone()], &truth).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));

        let one = sd(&[1.5, 2.0, 1.0]);
        let curve = relative_error_ensemble(std::slice::from_ref(&one), &truth).unwrap();
        assert_eq!(curve.values(), &[0.5, 0.0, 0.75]);

        let eps = 0.1;
        let up = sd(&[1.0 + eps, 2.0 * (1.0 + eps), 4.0 * (1.0 + eps)]);
        let down = sd(&[1.0 - eps, 2.0 * (1.0 - eps), 4.0 * (1.0 - eps)]);
        let curve = relative_error_ensemble(&[up, down], &truth).unwrap();
        assert!(curve.values().iter().all(|v| (v - eps).abs() < 1e-12));

        assert!(relative_error_ensemble(&[], &truth).is_err());
    }

    #[test]
    fn single_realization_experiment() {
        let cfg = GaussianExperimentConfig::new(1, 512, Criterion::Fpe, 4);
        let out = run_gaussian_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].index, 0);
        let single = relative_error_freq_avg(&out.mean_psd, &out.truth).unwrap();
        assert!((single - out.records[0].error).abs() < 1e-12);
    }

    #[test]
    fn empty_recovery() {
        let cfg = RecoveryConfig::new(0, 2, 10, 1000, 1);
        assert!(run_order_recovery(&cfg).unwrap().is_empty());
    }

    #[test]
    fn three_peak_table_is_positive() {
        let t = three_peak_table(4096.0, 2049).unwrap();
        assert_eq!(t.freqs()[2048], 2048.0);
        assert!(t.values().iter().all(|v| *v > 0.0));
    }
}
