//! Choosing the AR order: the three loss functions, the heuristic upper
//! bound on the order, and an incremental scan with early stopping.

use serde::{Deserialize, Serialize};

use crate::error::{MesaError, Result};
use crate::estimator::{EstimatorMethod, Recursion, TraceBuilder};
use crate::types::{first_argmin, Criterion, OrderSelection, RecursionTrace, TimeSeries};

/// Upper bound `floor(2n / ln(2n))` on the scanned order, clamped to `n - 1`.
pub fn max_order(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(MesaError::invalid("series length", format!("{n} < 2")));
    }
    let two_n = 2.0 * n as f64;
    let raw = (two_n / two_n.ln()).floor() as usize;
    Ok(raw.min(n - 1))
}

/// `P_m (N + m + 1) / (N - m - 1)`.
pub fn loss_fpe(p_m: f64, n: usize, m: usize) -> Result<f64> {
    if m + 2 > n {
        return Err(MesaError::UndefinedLoss(format!(
            "FPE needs m <= n - 2 (m = {m}, n = {n})"
        )));
    }
    let (n, m) = (n as f64, m as f64);
    Ok(p_m * (n + m + 1.0) / (n - m - 1.0))
}

/// `(1/N) sum_{k=1}^{m} (N-k)/(N P_k) - (N-m)/(N P_m)`, with `p` indexed by
/// order (`p[0]` is ignored).
pub fn loss_cat(p: &[f64], n: usize, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(MesaError::UndefinedLoss("CAT is undefined at order 0".into()));
    }
    if p.len() <= m {
        return Err(MesaError::invalid("powers", format!("need p_0..p_{m}")));
    }
    if let Some(k) = (1..=m).find(|&k| !(p[k] > 0.0)) {
        return Err(MesaError::UndefinedLoss(format!("CAT with p_{k} = 0")));
    }
    let nf = n as f64;
    let sum: f64 = (1..=m).map(|k| (nf - k as f64) / (nf * p[k])).sum();
    Ok(sum / nf - (nf - m as f64) / (nf * p[m]))
}

/// `(N-m-2) ln P_m + m ln N + sum_{k=0}^{m-1} ln P_k + sum_{k=1}^{m} a_k^2`,
/// with `p` indexed by order and `a` holding `a_1..a_m` of the order-m filter.
pub fn loss_obd(p: &[f64], a: &[f64], n: usize, m: usize) -> Result<f64> {
    if p.len() <= m || a.len() != m {
        return Err(MesaError::invalid(
            "OBD inputs",
            format!("need p_0..p_{m} and a_1..a_{m}"),
        ));
    }
    let energy: f64 = a.iter().map(|x| x * x).sum();
    obd_from_parts(p, energy, n, m)
}

fn obd_from_parts(p: &[f64], energy: f64, n: usize, m: usize) -> Result<f64> {
    if let Some(k) = (0..=m).find(|&k| !(p[k] > 0.0)) {
        return Err(MesaError::UndefinedLoss(format!("OBD with p_{k} = 0")));
    }
    let log_sum: f64 = p[..m].iter().map(|x| x.ln()).sum();
    let (nf, mf) = (n as f64, m as f64);
    Ok((nf - mf - 2.0) * p[m].ln() + mf * nf.ln() + log_sum + energy)
}

/// When to abandon the order scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarlyStopConfig {
    pub enabled: bool,
    /// Evaluated orders without a new minimum before stopping.
    pub patience: usize,
    /// Only orders that are multiples of this are stop checkpoints.
    pub check_stride: usize,
}

impl EarlyStopConfig {
    pub fn new(enabled: bool, patience: usize, check_stride: usize) -> Result<Self> {
        if patience == 0 || check_stride == 0 {
            return Err(MesaError::invalid(
                "early stop",
                "patience and check_stride must be >= 1",
            ));
        }
        Ok(Self {
            enabled,
            patience,
            check_stride,
        })
    }

    /// Enabled with `patience = max(100, ceil(m_max / 10))`.
    pub fn for_max_order(m_max: usize) -> Self {
        Self {
            enabled: true,
            patience: 100.max(m_max.div_ceil(10)),
            check_stride: 1,
        }
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            patience: 1,
            check_stride: 1,
        }
    }
}

/// Incremental evaluation of one criterion as the recursion order grows.
///
/// Orders must be pushed in sequence starting at 0.
#[derive(Debug, Clone)]
pub struct OrderScanner {
    criterion: Criterion,
    n: usize,
    early_stop: EarlyStopConfig,
    losses: Vec<Option<f64>>,
    best: Option<(usize, f64)>,
    /// Evaluated orders since `best` was last improved.
    since_best: usize,
    /// Running `sum_{k=1}^{m} (N-k)/(N P_k)` for CAT.
    cat_sum: f64,
    /// Running `sum_{k<m} ln P_k` for OBD.
    log_sum: f64,
    last_p: f64,
    /// Set once a zero power makes CAT/OBD undefined for all later orders.
    poisoned: bool,
    stopped: bool,
}

impl OrderScanner {
    pub fn new(criterion: Criterion, n: usize, early_stop: EarlyStopConfig) -> Self {
        Self {
            criterion,
            n,
            early_stop,
            losses: Vec::new(),
            best: None,
            since_best: 0,
            cat_sum: 0.0,
            log_sum: 0.0,
            last_p: f64::NAN,
            poisoned: false,
            stopped: false,
        }
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    /// Next order to be pushed.
    pub fn next_order(&self) -> usize {
        self.losses.len()
    }

    /// Evaluates the loss at the next order given its prediction-error power
    /// and filter energy `sum a_k^2`. Returns `true` while scanning should
    /// continue.
    pub fn push(&mut self, p_m: f64, coeff_energy: f64) -> bool {
        if self.stopped {
            return false;
        }
        let m = self.losses.len();
        let nf = self.n as f64;
        let loss = match self.criterion {
            Criterion::Fpe => loss_fpe(p_m, self.n, m).ok(),
            Criterion::Cat => {
                if m > 0 {
                    if p_m > 0.0 {
                        self.cat_sum += (nf - m as f64) / (nf * p_m);
                    } else {
                        self.poisoned = true;
                    }
                }
                (m > 0 && !self.poisoned)
                    .then(|| self.cat_sum / nf - (nf - m as f64) / (nf * p_m))
            }
            Criterion::Obd => {
                if m > 0 {
                    self.log_sum += self.last_p.ln();
                }
                if !(p_m > 0.0) {
                    self.poisoned = true;
                }
                (!self.poisoned).then(|| {
                    let mf = m as f64;
                    (nf - mf - 2.0) * p_m.ln() + mf * nf.ln() + self.log_sum + coeff_energy
                })
            }
        };
        self.last_p = p_m;
        self.losses.push(loss);

        if let Some(l) = loss.filter(|l| !l.is_nan()) {
            if self.best.is_none_or(|(_, b)| l < b) {
                self.best = Some((m, l));
                self.since_best = 0;
            } else {
                self.since_best += 1;
            }
        }
        if self.early_stop.enabled && self.best.is_some() {
            if self.since_best >= self.early_stop.patience && m % self.early_stop.check_stride == 0
            {
                self.stopped = true;
                return false;
            }
        }
        true
    }

    pub fn finish(self) -> Result<OrderSelection> {
        let chosen = first_argmin(&self.losses).ok_or_else(|| {
            MesaError::UndefinedLoss(format!(
                "{} is undefined at every scanned order",
                self.criterion
            ))
        })?;
        OrderSelection::new(self.criterion, self.losses, chosen, self.stopped)
    }
}

/// Picks the order minimizing `criterion` over the orders held in `trace`.
pub fn select_order(
    trace: &RecursionTrace,
    criterion: Criterion,
    early_stop: EarlyStopConfig,
) -> Result<OrderSelection> {
    let mut scan = OrderScanner::new(criterion, trace.n_samples(), early_stop);
    for (p, e) in trace.powers().iter().zip(trace.coeff_energy()) {
        if !scan.push(*p, *e) {
            break;
        }
    }
    scan.finish()
}

/// Result of fitting and selecting in one pass.
#[derive(Debug, Clone)]
pub struct SelectedFit {
    /// Covers orders up to where the last scanner stopped; only the final
    /// filter is retained.
    pub trace: RecursionTrace,
    pub selections: Vec<OrderSelection>,
}

/// Runs the recursion while scanning the given criteria, and stops as soon
/// as every scanner has stopped or `max_order` is reached.
pub fn fit_and_select(
    ts: &TimeSeries,
    max_order: usize,
    method: EstimatorMethod,
    criteria: &[Criterion],
    early_stop: EarlyStopConfig,
) -> Result<SelectedFit> {
    let mut rec = Recursion::new(ts, max_order, method)?;
    let mut log = TraceBuilder::new(&rec, false);
    let mut scanners: Vec<OrderScanner> = criteria
        .iter()
        .map(|&c| OrderScanner::new(c, ts.len(), early_stop))
        .collect();
    let mut energy = 0.0;
    loop {
        let mut any_running = false;
        for s in &mut scanners {
            any_running |= s.push(rec.power(), energy);
        }
        if !any_running {
            break;
        }
        match rec.advance()? {
            Some(c) => {
                log.record(&rec, c);
                energy = rec.filter()[1..].iter().map(|a| a * a).sum();
            }
            None => break,
        }
    }
    let trace = log.finish(&rec)?;
    let selections = scanners
        .into_iter()
        .map(OrderScanner::finish)
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectedFit { trace, selections })
}
