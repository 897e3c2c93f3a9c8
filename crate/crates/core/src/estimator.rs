//! AR model fitting by the Levinson recursion.
//!
//! Two drivers supply the reflection coefficient at every order:
//! Burg's lattice estimate computed directly from the data, and the
//! Yule-Walker estimate computed from the biased sample autocorrelation.
//! Both share [`levinson_step`] to grow the prediction error filter.

use serde::{Deserialize, Serialize};

use crate::error::{MesaError, Result};
use crate::types::{RecursionTrace, TimeSeries};

/// Source of reflection coefficients for the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    #[default]
    Burg,
    YuleWalker,
}

impl std::str::FromStr for EstimatorMethod {
    type Err = MesaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "burg" => Ok(EstimatorMethod::Burg),
            "yule_walker" | "yule-walker" => Ok(EstimatorMethod::YuleWalker),
            other => Err(MesaError::invalid(
                "estimator method",
                format!("unknown method {other:?}, expected burg or yule_walker"),
            )),
        }
    }
}

/// Biased sample autocorrelation `r_k = (1/N) sum_t x_t x_{t+k}` for
/// `k = 0..=max_lag`.
pub fn sample_autocorrelation(ts: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    autocorrelation(ts.samples(), max_lag)
}

pub(crate) fn autocorrelation(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if max_lag >= n {
        return Err(MesaError::invalid(
            "max_lag",
            format!("{max_lag} must be below the series length {n}"),
        ));
    }
    Ok((0..=max_lag)
        .map(|k| x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect())
}

/// Grows a prediction error filter by one order.
///
/// `a = (prev_a, 0) + c (0, reverse(prev_a))` and `p = prev_p (1 - c^2)`.
pub fn levinson_step(prev_a: &[f64], prev_p: f64, c: f64) -> Result<(Vec<f64>, f64)> {
    if prev_a.first() != Some(&1.0) {
        return Err(MesaError::invalid("filter", "a[0] must be 1"));
    }
    if !(prev_p >= 0.0) {
        return Err(MesaError::invalid("power", format!("{prev_p} is negative")));
    }
    if !(c.abs() <= 1.0) {
        return Err(MesaError::invalid("reflection coefficient", format!("|{c}| > 1")));
    }
    let mut a = prev_a.to_vec();
    a.push(0.0);
    grow_in_place(&mut a, c);
    Ok((a, prev_p * (1.0 - c * c)))
}

/// `a` already holds the previous filter with a trailing zero appended.
fn grow_in_place(a: &mut [f64], c: f64) {
    let n = a.len() - 1;
    for i in 1..=n / 2 {
        let (lo, hi) = (a[i], a[n - i]);
        a[i] = lo + c * hi;
        a[n - i] = hi + c * lo;
    }
    a[n] = c;
}

/// Reflection coefficient from the autocorrelation: with `a` of order `k`,
/// `delta = sum_{n=0}^{k} a_n r_{k+1-n}` and `c = -delta / p`.
pub fn reflection_yule_walker(a: &[f64], r: &[f64], p: f64) -> Result<f64> {
    let k = a.len() - 1;
    if r.len() < k + 2 {
        return Err(MesaError::invalid(
            "autocorrelation",
            format!("order {k} step needs lags up to {}, got {}", k + 1, r.len() - 1),
        ));
    }
    if !(p > 0.0) {
        return Err(MesaError::Degenerate(format!(
            "zero prediction-error power at order {k}"
        )));
    }
    let delta: f64 = a.iter().enumerate().map(|(n, an)| an * r[k + 1 - n]).sum();
    Ok(-delta / p)
}

/// Burg reflection coefficient `-2 sum f_t b_t / sum (f_t^2 + b_t^2)` for
/// already aligned forward and backward error sequences.
pub fn reflection_burg(fwd: &[f64], bwd: &[f64]) -> Result<f64> {
    if fwd.len() != bwd.len() {
        return Err(MesaError::invalid(
            "error sequences",
            format!("lengths differ ({} vs {})", fwd.len(), bwd.len()),
        ));
    }
    let (num, den) = fwd
        .iter()
        .zip(bwd)
        .fold((0.0, 0.0), |(num, den), (f, b)| (num + f * b, den + f * f + b * b));
    if !(den > 0.0) {
        return Err(MesaError::Degenerate(
            "forward and backward errors vanish".into(),
        ));
    }
    Ok((-2.0 * num / den).clamp(-1.0, 1.0))
}

enum Driver {
    Burg { fwd: Vec<f64>, bwd: Vec<f64> },
    YuleWalker { r: Vec<f64> },
}

/// Order-by-order Levinson recursion over one series.
///
/// Each call to [`advance`](Recursion::advance) raises the order by one, so
/// callers can stop as soon as they have seen enough orders.
pub struct Recursion {
    driver: Driver,
    a: Vec<f64>,
    p: f64,
    max_order: usize,
    n_samples: usize,
}

impl Recursion {
    pub fn new(ts: &TimeSeries, max_order: usize, method: EstimatorMethod) -> Result<Self> {
        let n = ts.len();
        if max_order < 1 || max_order > n - 1 {
            return Err(MesaError::invalid(
                "max_order",
                format!("{max_order} outside 1..={}", n - 1),
            ));
        }
        let x = ts.samples();
        let (driver, p0) = match method {
            EstimatorMethod::Burg => {
                let p0 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
                (
                    Driver::Burg {
                        fwd: x.to_vec(),
                        bwd: x.to_vec(),
                    },
                    p0,
                )
            }
            EstimatorMethod::YuleWalker => {
                let r = autocorrelation(x, max_order)?;
                let p0 = r[0];
                (Driver::YuleWalker { r }, p0)
            }
        };
        if !(p0 > 0.0) {
            return Err(MesaError::Degenerate("input has zero power".into()));
        }
        Ok(Self {
            driver,
            a: vec![1.0],
            p: p0,
            max_order,
            n_samples: n,
        })
    }

    /// Yule-Walker recursion driven by a given autocorrelation sequence
    /// `r_0..r_K`; `max_order` may not exceed `K`.
    pub fn from_autocorrelation(r: &[f64], max_order: usize) -> Result<Self> {
        if max_order < 1 || max_order >= r.len() {
            return Err(MesaError::invalid(
                "max_order",
                format!("{max_order} outside 1..={}", r.len().saturating_sub(1)),
            ));
        }
        if let Some(v) = r.iter().find(|v| !v.is_finite()) {
            return Err(MesaError::invalid("autocorrelation", format!("non-finite value {v}")));
        }
        if !(r[0] > 0.0) {
            return Err(MesaError::Degenerate("autocorrelation has r_0 <= 0".into()));
        }
        Ok(Self {
            driver: Driver::YuleWalker { r: r.to_vec() },
            a: vec![1.0],
            p: r[0],
            max_order,
            n_samples: r.len(),
        })
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Prediction-error power at the current order.
    pub fn power(&self) -> f64 {
        self.p
    }

    /// Prediction error filter at the current order.
    pub fn filter(&self) -> &[f64] {
        &self.a
    }

    /// Moves to the next order and returns the reflection coefficient used,
    /// or `None` once `max_order` has been reached.
    pub fn advance(&mut self) -> Result<Option<f64>> {
        if self.order() >= self.max_order {
            return Ok(None);
        }
        let c = match &mut self.driver {
            Driver::Burg { fwd, bwd } => {
                let len = fwd.len();
                let c = reflection_burg(&fwd[1..], &bwd[..len - 1])?;
                for t in 0..len - 1 {
                    let f = fwd[t + 1];
                    let b = bwd[t];
                    fwd[t] = f + c * b;
                    bwd[t] = b + c * f;
                }
                fwd.truncate(len - 1);
                bwd.truncate(len - 1);
                c
            }
            Driver::YuleWalker { r } => {
                reflection_yule_walker(&self.a, r, self.p)?.clamp(-1.0, 1.0)
            }
        };
        self.a.push(0.0);
        grow_in_place(&mut self.a, c);
        self.p *= 1.0 - c * c;
        Ok(Some(c))
    }
}

/// Runs the recursion up to `max_order`, keeping every order's filter.
pub fn fit(ts: &TimeSeries, max_order: usize, method: EstimatorMethod) -> Result<RecursionTrace> {
    fit_with_retention(ts, max_order, method, true)
}

/// Levinson recursion on an autocorrelation sequence, all orders retained.
/// The trace records `r.len()` as its sample count.
pub fn fit_autocorrelation(r: &[f64], max_order: usize) -> Result<RecursionTrace> {
    let mut rec = Recursion::from_autocorrelation(r, max_order)?;
    let mut log = TraceBuilder::new(&rec, true);
    while let Some(c) = rec.advance()? {
        log.record(&rec, c);
    }
    log.finish(&rec)
}

/// Like [`fit`]; with `retain_all == false` only the final filter is kept
/// and lower orders are rebuilt on demand from the reflection coefficients.
pub fn fit_with_retention(
    ts: &TimeSeries,
    max_order: usize,
    method: EstimatorMethod,
    retain_all: bool,
) -> Result<RecursionTrace> {
    let mut rec = Recursion::new(ts, max_order, method)?;
    let mut log = TraceBuilder::new(&rec, retain_all);
    while let Some(c) = rec.advance()? {
        log.record(&rec, c);
    }
    log.finish(&rec)
}

/// Accumulates a [`RecursionTrace`] while a [`Recursion`] is stepped.
pub(crate) struct TraceBuilder {
    n_samples: usize,
    p: Vec<f64>,
    c: Vec<f64>,
    energy: Vec<f64>,
    coeffs: Option<Vec<Vec<f64>>>,
}

impl TraceBuilder {
    pub(crate) fn new(rec: &Recursion, retain_all: bool) -> Self {
        Self {
            n_samples: rec.n_samples(),
            p: vec![rec.power()],
            c: Vec::new(),
            energy: vec![0.0],
            coeffs: retain_all.then(|| vec![rec.filter().to_vec()]),
        }
    }

    pub(crate) fn record(&mut self, rec: &Recursion, c: f64) {
        self.p.push(rec.power());
        self.c.push(c);
        self.energy
            .push(rec.filter()[1..].iter().map(|a| a * a).sum());
        if let Some(v) = &mut self.coeffs {
            v.push(rec.filter().to_vec());
        }
    }

    pub(crate) fn finish(self, rec: &Recursion) -> Result<RecursionTrace> {
        let (coeffs, all) = match self.coeffs {
            Some(v) => (v, true),
            None => (vec![rec.filter().to_vec()], false),
        };
        RecursionTrace::new(self.n_samples, self.p, self.c, self.energy, coeffs, all)
    }
}

/// Recovers the reflection coefficients of a prediction error filter by
/// running the recursion backwards. Fails when some `|c_k| >= 1`, i.e. when
/// the filter has a root on or inside the unit circle.
pub fn step_down(a: &[f64]) -> Result<Vec<f64>> {
    if a.first() != Some(&1.0) {
        return Err(MesaError::invalid("filter", "a[0] must be 1"));
    }
    let mut cur = a.to_vec();
    let mut cs = vec![0.0; a.len() - 1];
    for k in (1..cur.len()).rev() {
        let c = cur[k];
        if !(c.abs() < 1.0) {
            return Err(MesaError::Unstable(format!(
                "reflection coefficient {c} at order {k}"
            )));
        }
        cs[k - 1] = c;
        let scale = 1.0 / (1.0 - c * c);
        for i in 1..=k / 2 {
            let (lo, hi) = (cur[i], cur[k - i]);
            cur[i] = (lo - c * hi) * scale;
            if i != k - i {
                cur[k - i] = (hi - c * lo) * scale;
            }
        }
        cur.truncate(k);
    }
    Ok(cs)
}

/// True when every root of the filter polynomial lies outside the unit
/// circle, i.e. the corresponding AR process is stationary.
pub fn is_stable(a: &[f64]) -> bool {
    step_down(a).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(x: &[f64]) -> TimeSeries {
        TimeSeries::new(x.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn autocorrelation_examples() {
        let r = sample_autocorrelation(&ts(&[1.0, -1.0, 1.0, -1.0]), 1).unwrap();
        assert_eq!(r, vec![1.0, -0.75]);
        let r = sample_autocorrelation(&ts(&[0.0; 4]), 2).unwrap();
        assert_eq!(r, vec![0.0; 3]);
        let c = 1.7;
        let r = sample_autocorrelation(&ts(&[c; 6]), 5).unwrap();
        for (k, rk) in r.iter().enumerate() {
            assert!((rk - c * c * (6 - k) as f64 / 6.0).abs() < 1e-12);
        }
        assert!(sample_autocorrelation(&ts(&[1.0, 2.0]), 2).is_err());
    }

    #[test]
    fn levinson_step_examples() {
        let (a, p) = levinson_step(&[1.0], 1.0, -0.5).unwrap();
        assert_eq!(a, vec![1.0, -0.5]);
        assert_eq!(p, 0.75);
        let (a, p) = levinson_step(&[1.0], 1.0, 0.0).unwrap();
        assert_eq!(a, vec![1.0, 0.0]);
        assert_eq!(p, 1.0);
        for c in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            let (_, p) = levinson_step(&[1.0, -0.5], 0.75, c).unwrap();
            assert!(p <= 0.75);
        }
        assert!(levinson_step(&[1.0], 1.0, 1.5).is_err());
        assert!(levinson_step(&[0.5], 1.0, 0.1).is_err());
    }

    #[test]
    fn levinson_step_middle_element() {
        // order 1 -> 2: a_1 pairs with itself
        let (a, _) = levinson_step(&[1.0, 0.4], 1.0, 0.5).unwrap();
        assert_eq!(a, vec![1.0, 0.4 + 0.5 * 0.4, 0.5]);
        // order 2 -> 3
        let (a, _) = levinson_step(&[1.0, 0.4, 0.2], 1.0, -0.5).unwrap();
        assert_eq!(a, vec![1.0, 0.4 - 0.5 * 0.2, 0.2 - 0.5 * 0.4, -0.5]);
    }

    #[test]
    fn yule_walker_reflection_examples() {
        assert_eq!(reflection_yule_walker(&[1.0], &[1.0, 0.5], 1.0).unwrap(), -0.5);
        assert_eq!(reflection_yule_walker(&[1.0], &[3.0, 0.0], 3.0).unwrap(), 0.0);
        let r: Vec<f64> = (0..3).map(|k| 2.0 * 0.5f64.powi(k)).collect();
        let c = reflection_yule_walker(&[1.0, -0.5], &r, 1.5).unwrap();
        assert!(c.abs() < 1e-15);
        assert!(matches!(
            reflection_yule_walker(&[1.0], &[0.0, 0.0], 0.0),
            Err(MesaError::Degenerate(_))
        ));
    }

    #[test]
    fn burg_reflection_examples() {
        assert_eq!(reflection_burg(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), -1.0);
        assert_eq!(reflection_burg(&[1.0, 1.0], &[1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(reflection_burg(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            reflection_burg(&[0.0], &[0.0]),
            Err(MesaError::Degenerate(_))
        ));
    }

    #[test]
    fn fit_rejects_bad_orders_and_zero_input() {
        let x = ts(&[1.0, 2.0, 3.0]);
        assert!(fit(&x, 0, EstimatorMethod::Burg).is_err());
        assert!(fit(&x, 3, EstimatorMethod::Burg).is_err());
        assert!(fit(&x, 2, EstimatorMethod::Burg).is_ok());
        for method in [EstimatorMethod::Burg, EstimatorMethod::YuleWalker] {
            assert!(matches!(
                fit(&ts(&[0.0; 8]), 2, method),
                Err(MesaError::Degenerate(_))
            ));
        }
    }

    #[test]
    fn burg_order_one_matches_hand_lattice() {
        let x = [1.0, 0.5, -0.2, 0.3, 0.9];
        let tr = fit(&ts(&x), 1, EstimatorMethod::Burg).unwrap();
        let num: f64 = (1..5).map(|t| x[t] * x[t - 1]).sum();
        let den: f64 = (1..5).map(|t| x[t] * x[t] + x[t - 1] * x[t - 1]).sum();
        let p0 = x.iter().map(|v| v * v).sum::<f64>() / 5.0;
        assert!((tr.reflections()[0] + 2.0 * num / den).abs() < 1e-15);
        assert_eq!(tr.powers()[0], p0);
        assert_eq!(tr.coefficients(1).unwrap(), vec![1.0, tr.reflections()[0]]);
    }

    #[test]
    fn lean_trace_replays_filters() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let full = fit(&ts(&x), 10, EstimatorMethod::Burg).unwrap();
        let lean = fit_with_retention(&ts(&x), 10, EstimatorMethod::Burg, false).unwrap();
        assert_eq!(full.reflections(), lean.reflections());
        assert_eq!(full.powers(), lean.powers());
        for m in 0..=10 {
            let (f, l) = (full.coefficients(m).unwrap(), lean.coefficients(m).unwrap());
            for (a, b) in f.iter().zip(&l) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_down_inverts_levinson() {
        let cs = [0.5, -0.3, 0.9, 0.1, -0.7];
        let mut a = vec![1.0];
        for &c in &cs {
            a = levinson_step(&a, 1.0, c).unwrap().0;
        }
        let back = step_down(&a).unwrap();
        for (x, y) in cs.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(is_stable(&a));
        // 1 - z has a root on the unit circle
        assert!(!is_stable(&[1.0, -1.0]));
        // 1 - 2.5z + z^2 has roots 0.5 and 2
        assert!(!is_stable(&[1.0, -2.5, 1.0]));
    }
}
