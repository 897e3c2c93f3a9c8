//! Sampling future values from the conditional Gaussian of a fitted AR
//! model, and summarizing the resulting ensemble by per-step quantiles.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MesaError, Result};
use crate::rng::stream;
use crate::stats::quantile_sorted;
use crate::types::{ArModel, ForecastEnsemble, TimeSeries};

/// Draws `n_realizations` continuations of `seed`, each `horizon` steps long.
///
/// Every step samples `x_t = sum_i b_i x_{t-i} + e_t` with
/// `e_t ~ N(0, noise_scale^2 p_m)`. Realization `i` uses its own random
/// stream derived from `(rng_seed, i)`.
pub fn forecast(
    model: &ArModel,
    seed: &TimeSeries,
    horizon: usize,
    n_realizations: usize,
    rng_seed: u64,
    noise_scale: f64,
) -> Result<ForecastEnsemble> {
    let order = model.order();
    if seed.len() < order {
        return Err(MesaError::invalid(
            "forecast seed",
            format!("{} samples, model order {order}", seed.len()),
        ));
    }
    if horizon == 0 || n_realizations == 0 {
        return Err(MesaError::invalid(
            "forecast",
            "horizon and n_realizations must be >= 1",
        ));
    }
    if !(noise_scale.is_finite() && noise_scale >= 0.0) {
        return Err(MesaError::invalid("noise scale", format!("{noise_scale}")));
    }
    let b = model.ar_coefficients();
    let sigma = noise_scale * model.p_m().sqrt();
    let history = &seed.samples()[seed.len() - order..];

    let realizations = (0..n_realizations)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(rng_seed, i as u64);
            let mut x = Vec::with_capacity(order + horizon);
            x.extend_from_slice(history);
            for t in order..order + horizon {
                let mean: f64 = b.iter().enumerate().map(|(i, bi)| bi * x[t - 1 - i]).sum();
                let noise = if sigma > 0.0 {
                    sigma * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                x.push(mean + noise);
            }
            x.split_off(order)
        })
        .collect();
    ForecastEnsemble::new(realizations, seed.len(), model.clone())
}

/// Per-step empirical quantiles of a forecast ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastSummary {
    pub median: Vec<f64>,
    pub quantiles: Vec<f64>,
    /// `bands[j][t]` is quantile `quantiles[j]` at step `t`.
    pub bands: Vec<Vec<f64>>,
}

pub fn forecast_summary(ens: &ForecastEnsemble, quantiles: &[f64]) -> Result<ForecastSummary> {
    if ens.n_realizations() < 2 {
        return Err(MesaError::invalid(
            "forecast ensemble",
            format!("{} realizations, need at least 2", ens.n_realizations()),
        ));
    }
    if let Some(q) = quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(MesaError::invalid("quantile", format!("{q} outside (0, 1)")));
    }
    let h = ens.horizon();
    let mut median = Vec::with_capacity(h);
    let mut bands = vec![Vec::with_capacity(h); quantiles.len()];
    let mut column = vec![0.0; ens.n_realizations()];
    for t in 0..h {
        for (c, r) in column.iter_mut().zip(ens.realizations()) {
            *c = r[t];
        }
        column.sort_by(f64::total_cmp);
        median.push(quantile_sorted(&column, 0.5));
        for (band, &q) in bands.iter_mut().zip(quantiles) {
            band.push(quantile_sorted(&column, q));
        }
    }
    Ok(ForecastSummary {
        median,
        quantiles: quantiles.to_vec(),
        bands,
    })
}
