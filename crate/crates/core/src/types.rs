//! Domain types shared by every stage of the pipeline.
//!
//! All constructors validate their invariants, and deserialization goes
//! through the same constructors, so a value of any of these types is
//! always well formed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MesaError, Result};
use crate::estimator::levinson_step;

/// A uniformly sampled, real-valued signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeSeriesRepr")]
pub struct TimeSeries {
    samples: Vec<f64>,
    dt: f64,
}

#[derive(Deserialize)]
struct TimeSeriesRepr {
    samples: Vec<f64>,
    dt: f64,
}

impl TryFrom<TimeSeriesRepr> for TimeSeries {
    type Error = MesaError;

    fn try_from(r: TimeSeriesRepr) -> Result<Self> {
        TimeSeries::new(r.samples, r.dt)
    }
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(MesaError::invalid(
                "time series",
                format!("needs at least 2 samples, got {}", samples.len()),
            ));
        }
        check_dt(dt)?;
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(MesaError::invalid(
                "time series",
                format!("sample {i} is not finite"),
            ));
        }
        Ok(Self { samples, dt })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; a valid series holds at least two samples.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.dt
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Copy of the series with its sample mean removed.
    pub fn demeaned(&self) -> TimeSeries {
        let mu = self.mean();
        TimeSeries {
            samples: self.samples.iter().map(|x| x - mu).collect(),
            dt: self.dt,
        }
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(MesaError::invalid(
            "sampling interval",
            format!("dt must be finite and > 0, got {dt}"),
        ))
    }
}

/// An autoregressive model stored as its prediction error filter
/// `(1, a_1, ..., a_m)` plus the prediction-error power.
///
/// The AR recursion coefficients are `b_i = -a_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArModelRepr")]
pub struct ArModel {
    a: Vec<f64>,
    p_m: f64,
    dt: f64,
}

#[derive(Deserialize)]
struct ArModelRepr {
    a: Vec<f64>,
    p_m: f64,
    dt: f64,
}

impl TryFrom<ArModelRepr> for ArModel {
    type Error = MesaError;

    fn try_from(r: ArModelRepr) -> Result<Self> {
        ArModel::new(r.a, r.p_m, r.dt)
    }
}

impl ArModel {
    pub fn new(a: Vec<f64>, p_m: f64, dt: f64) -> Result<Self> {
        match a.first() {
            Some(&a0) if a0 == 1.0 => {}
            Some(&a0) => {
                return Err(MesaError::invalid(
                    "AR model",
                    format!("a[0] must be exactly 1, got {a0}"),
                ))
            }
            None => return Err(MesaError::invalid("AR model", "empty filter")),
        }
        if let Some(i) = a.iter().position(|x| !x.is_finite()) {
            return Err(MesaError::invalid(
                "AR model",
                format!("coefficient a[{i}] is not finite"),
            ));
        }
        if !(p_m.is_finite() && p_m >= 0.0) {
            return Err(MesaError::invalid(
                "AR model",
                format!("p_m must be finite and >= 0, got {p_m}"),
            ));
        }
        check_dt(dt)?;
        Ok(Self { a, p_m, dt })
    }

    /// Builds a model from AR recursion coefficients `b_1..b_m`.
    pub fn from_ar_coefficients(b: &[f64], p_m: f64, dt: f64) -> Result<Self> {
        let mut a = Vec::with_capacity(b.len() + 1);
        a.push(1.0);
        a.extend(b.iter().map(|x| -x));
        Self::new(a, p_m, dt)
    }

    /// The prediction error filter, `a[0] == 1`.
    pub fn filter(&self) -> &[f64] {
        &self.a
    }

    pub fn ar_coefficients(&self) -> Vec<f64> {
        self.a[1..].iter().map(|x| -x).collect()
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    pub fn p_m(&self) -> f64 {
        self.p_m
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.dt
    }
}

/// Per-order output of the Levinson/Burg recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecursionTraceRepr")]
pub struct RecursionTrace {
    n_samples: usize,
    p: Vec<f64>,
    c: Vec<f64>,
    /// `sum_{k=1}^{m} a_k^2` of the order-m filter, for every order.
    coeff_energy: Vec<f64>,
    /// Either one filter per order, or only the highest-order filter.
    coeffs: Vec<Vec<f64>>,
    all_orders_retained: bool,
}

#[derive(Deserialize)]
struct RecursionTraceRepr {
    n_samples: usize,
    p: Vec<f64>,
    c: Vec<f64>,
    coeff_energy: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    all_orders_retained: bool,
}

impl TryFrom<RecursionTraceRepr> for RecursionTrace {
    type Error = MesaError;

    fn try_from(r: RecursionTraceRepr) -> Result<Self> {
        RecursionTrace::new(
            r.n_samples,
            r.p,
            r.c,
            r.coeff_energy,
            r.coeffs,
            r.all_orders_retained,
        )
    }
}

impl RecursionTrace {
    pub fn new(
        n_samples: usize,
        p: Vec<f64>,
        c: Vec<f64>,
        coeff_energy: Vec<f64>,
        coeffs: Vec<Vec<f64>>,
        all_orders_retained: bool,
    ) -> Result<Self> {
        let bad = |reason: String| Err(MesaError::invalid("recursion trace", reason));
        if p.is_empty() {
            return bad("no orders".into());
        }
        let m = p.len() - 1;
        if c.len() != m || coeff_energy.len() != m + 1 {
            return bad(format!(
                "length mismatch: {} powers, {} reflections, {} energies",
                p.len(),
                c.len(),
                coeff_energy.len()
            ));
        }
        if let Some(k) = c.iter().position(|c| !(c.abs() <= 1.0)) {
            return bad(format!("|c[{k}]| = {} exceeds 1", c[k].abs()));
        }
        if let Some(k) = p.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad(format!("p[{k}] = {} is not a finite power", p[k]));
        }
        if let Some(k) = p.windows(2).position(|w| w[1] > w[0]) {
            return bad(format!("p increases between orders {k} and {}", k + 1));
        }
        let expected_vectors = if all_orders_retained { m + 1 } else { 1 };
        if coeffs.len() != expected_vectors {
            return bad(format!(
                "expected {expected_vectors} coefficient vectors, got {}",
                coeffs.len()
            ));
        }
        let first_order = if all_orders_retained { 0 } else { m };
        for (i, v) in coeffs.iter().enumerate() {
            if v.len() != first_order + i + 1 || v[0] != 1.0 {
                return bad(format!("malformed coefficient vector for order {}", first_order + i));
            }
        }
        Ok(Self {
            n_samples,
            p,
            c,
            coeff_energy,
            coeffs,
            all_orders_retained,
        })
    }

    /// Number of samples of the series the recursion was run on.
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Highest order computed.
    pub fn max_order(&self) -> usize {
        self.c.len()
    }

    pub fn powers(&self) -> &[f64] {
        &self.p
    }

    pub fn reflections(&self) -> &[f64] {
        &self.c
    }

    pub fn coeff_energy(&self) -> &[f64] {
        &self.coeff_energy
    }

    pub fn all_orders_retained(&self) -> bool {
        self.all_orders_retained
    }

    /// Prediction error filter at `order`. Replays the recursion from the
    /// reflection coefficients when per-order vectors were not retained.
    pub fn coefficients(&self, order: usize) -> Result<Vec<f64>> {
        if order > self.max_order() {
            return Err(MesaError::invalid(
                "order",
                format!("{order} exceeds trace maximum {}", self.max_order()),
            ));
        }
        if self.all_orders_retained {
            return Ok(self.coeffs[order].clone());
        }
        if order == self.max_order() {
            return Ok(self.coeffs[0].clone());
        }
        let mut a = vec![1.0];
        let mut p = self.p[0];
        for &c in &self.c[..order] {
            (a, p) = levinson_step(&a, p, c)?;
        }
        Ok(a)
    }

    pub fn model(&self, order: usize, dt: f64) -> Result<ArModel> {
        let a = self.coefficients(order)?;
        ArModel::new(a, self.p[order], dt)
    }
}

/// Whether a PSD is folded onto non-negative frequencies or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    TwoSided,
    OneSided,
}

/// A power spectral density tabulated on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectralDensityRepr")]
pub struct SpectralDensity {
    freqs: Vec<f64>,
    values: Vec<f64>,
    sided: Sided,
}

#[derive(Deserialize)]
struct SpectralDensityRepr {
    freqs: Vec<f64>,
    values: Vec<f64>,
    sided: Sided,
}

impl TryFrom<SpectralDensityRepr> for SpectralDensity {
    type Error = MesaError;

    fn try_from(r: SpectralDensityRepr) -> Result<Self> {
        SpectralDensity::new(r.freqs, r.values, r.sided)
    }
}

impl SpectralDensity {
    pub fn new(freqs: Vec<f64>, values: Vec<f64>, sided: Sided) -> Result<Self> {
        let bad = |reason: String| Err(MesaError::invalid("spectral density", reason));
        if freqs.is_empty() || freqs.len() != values.len() {
            return bad(format!(
                "{} frequencies vs {} values",
                freqs.len(),
                values.len()
            ));
        }
        if freqs.iter().any(|f| !f.is_finite()) {
            return bad("non-finite frequency".into());
        }
        if let Some(i) = freqs.windows(2).position(|w| w[1] <= w[0]) {
            return bad(format!("frequencies not strictly increasing at index {i}"));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("value {} at index {i} is negative or not finite", values[i]));
        }
        if sided == Sided::OneSided && freqs[0] < 0.0 {
            return bad("one-sided density with negative frequency".into());
        }
        Ok(Self {
            freqs,
            values,
            sided,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sided(&self) -> Sided {
        self.sided
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Folds onto `[0, nyquist]`: negative frequencies are dropped and values
    /// strictly inside `(0, nyquist)` are doubled.
    pub fn to_one_sided(&self, nyquist: f64) -> SpectralDensity {
        if self.sided == Sided::OneSided {
            return self.clone();
        }
        let (freqs, values) = self
            .freqs
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= 0.0)
            .map(|(&f, &v)| (f, if is_interior(f, nyquist) { 2.0 * v } else { v }))
            .unzip();
        SpectralDensity {
            freqs,
            values,
            sided: Sided::OneSided,
        }
    }

    /// Inverse of [`to_one_sided`](Self::to_one_sided) on the non-negative
    /// half; the result only covers `[0, nyquist]`.
    pub fn to_two_sided(&self, nyquist: f64) -> SpectralDensity {
        if self.sided == Sided::TwoSided {
            return self.clone();
        }
        let values = self
            .freqs
            .iter()
            .zip(&self.values)
            .map(|(&f, &v)| if is_interior(f, nyquist) { 0.5 * v } else { v })
            .collect();
        SpectralDensity {
            freqs: self.freqs.clone(),
            values,
            sided: Sided::TwoSided,
        }
    }
}

pub(crate) fn is_interior(f: f64, nyquist: f64) -> bool {
    let tol = 1e-12 * nyquist;
    f > tol && f < nyquist - tol
}

/// Order-selection loss function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Akaike's final prediction error.
    Fpe,
    /// Parzen's criterion autoregressive transfer function.
    Cat,
    /// Rao's optimum Bayes decision rule.
    Obd,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Fpe, Criterion::Cat, Criterion::Obd];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Fpe => "fpe",
            Criterion::Cat => "cat",
            Criterion::Obd => "obd",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = MesaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fpe" => Ok(Criterion::Fpe),
            "cat" => Ok(Criterion::Cat),
            "obd" => Ok(Criterion::Obd),
            other => Err(MesaError::invalid(
                "criterion",
                format!("unknown criterion {other:?}, expected fpe, cat or obd"),
            )),
        }
    }
}

/// Loss per order and the order that minimizes it.
///
/// `losses[m]` is `None` where the criterion is undefined (CAT at order 0)
/// or where the scan never reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OrderSelectionRepr")]
pub struct OrderSelection {
    criterion: Criterion,
    losses: Vec<Option<f64>>,
    chosen_order: usize,
    early_stopped: bool,
}

#[derive(Deserialize)]
struct OrderSelectionRepr {
    criterion: Criterion,
    losses: Vec<Option<f64>>,
    chosen_order: usize,
    early_stopped: bool,
}

impl TryFrom<OrderSelectionRepr> for OrderSelection {
    type Error = MesaError;

    fn try_from(r: OrderSelectionRepr) -> Result<Self> {
        OrderSelection::new(r.criterion, r.losses, r.chosen_order, r.early_stopped)
    }
}

impl OrderSelection {
    pub fn new(
        criterion: Criterion,
        losses: Vec<Option<f64>>,
        chosen_order: usize,
        early_stopped: bool,
    ) -> Result<Self> {
        match first_argmin(&losses) {
            Some(best) if best == chosen_order => Ok(Self {
                criterion,
                losses,
                chosen_order,
                early_stopped,
            }),
            Some(best) => Err(MesaError::invalid(
                "order selection",
                format!("chosen order {chosen_order} is not the first minimum ({best})"),
            )),
            None => Err(MesaError::invalid("order selection", "no defined loss")),
        }
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn losses(&self) -> &[Option<f64>] {
        &self.losses
    }

    pub fn chosen_order(&self) -> usize {
        self.chosen_order
    }

    pub fn early_stopped(&self) -> bool {
        self.early_stopped
    }

    /// Highest order whose loss was evaluated.
    pub fn scanned_to(&self) -> usize {
        self.losses.iter().rposition(Option::is_some).unwrap_or(0)
    }
}

/// Index of the first minimum among the defined entries.
pub(crate) fn first_argmin(losses: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (m, l) in losses.iter().enumerate() {
        if let Some(l) = *l {
            if l.is_nan() {
                continue;
            }
            match best {
                Some((_, b)) if l >= b => {}
                _ => best = Some((m, l)),
            }
        }
    }
    best.map(|(m, _)| m)
}

/// Sampled future continuations of a series under a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ForecastEnsembleRepr")]
pub struct ForecastEnsemble {
    realizations: Vec<Vec<f64>>,
    seed_length: usize,
    model: ArModel,
}

#[derive(Deserialize)]
struct ForecastEnsembleRepr {
    realizations: Vec<Vec<f64>>,
    seed_length: usize,
    model: ArModel,
}

impl TryFrom<ForecastEnsembleRepr> for ForecastEnsemble {
    type Error = MesaError;

    fn try_from(r: ForecastEnsembleRepr) -> Result<Self> {
        ForecastEnsemble::new(r.realizations, r.seed_length, r.model)
    }
}

impl ForecastEnsemble {
    pub fn new(realizations: Vec<Vec<f64>>, seed_length: usize, model: ArModel) -> Result<Self> {
        let horizon = realizations.first().map_or(0, Vec::len);
        if realizations.iter().any(|r| r.len() != horizon) {
            return Err(MesaError::invalid(
                "forecast ensemble",
                "realizations have different lengths",
            ));
        }
        Ok(Self {
            realizations,
            seed_length,
            model,
        })
    }

    pub fn realizations(&self) -> &[Vec<f64>] {
        &self.realizations
    }

    pub fn horizon(&self) -> usize {
        self.realizations.first().map_or(0, Vec::len)
    }

    pub fn n_realizations(&self) -> usize {
        self.realizations.len()
    }

    pub fn seed_length(&self) -> usize {
        self.seed_length
    }

    pub fn model(&self) -> &ArModel {
        &self.model
    }
}
