mod common;

use common::*;
use mesa::estimator::fit_with_retention;
use mesa::selection::{fit_and_select, select_order, OrderScanner};
use mesa::{fit, max_order, Criterion, EarlyStopConfig, EstimatorMethod};

#[test]
fn streaming_selection_matches_batch_selection() {
    let (_, ts) = ar_series(&[0.5, -0.2, 0.1, 0.3], 1.0, 2000, 9);
    let m_max = max_order(ts.len()).unwrap();
    let trace = fit(&ts, m_max, EstimatorMethod::Burg).unwrap();
    for es in [EarlyStopConfig::disabled(), EarlyStopConfig::new(true, 25, 3).unwrap()] {
        let streamed =
            fit_and_select(&ts, m_max, EstimatorMethod::Burg, &Criterion::ALL, es).unwrap();
        for (c, sel) in Criterion::ALL.iter().zip(&streamed.selections) {
            let batch = select_order(&trace, *c, es).unwrap();
            assert_eq!(batch.chosen_order(), sel.chosen_order(), "{c}");
            assert_eq!(batch.early_stopped(), sel.early_stopped());
            let n = batch.losses().len().min(sel.losses().len());
            for (x, y) in batch.losses()[..n].iter().zip(&sel.losses()[..n]) {
                match (x, y) {
                    (Some(x), Some(y)) => assert!(rel_close(*x, *y, 1e-10)),
                    (x, y) => assert_eq!(x, y),
                }
            }
            assert!(sel.chosen_order() <= m_max);
        }
    }
}

#[test]
fn long_patience_equals_full_scan() {
    let (_, ts) = ar_series(&[0.7, -0.1], 1.0, 600, 1);
    let m = 150;
    let trace = fit(&ts, m, EstimatorMethod::Burg).unwrap();
    for c in Criterion::ALL {
        let full = select_order(&trace, c, EarlyStopConfig::disabled()).unwrap();
        let patient = select_order(&trace, c, EarlyStopConfig::new(true, m, 1).unwrap()).unwrap();
        assert_eq!(full, patient);
    }
}

#[test]
fn lean_trace_gives_same_selection() {
    let (_, ts) = ar_series(&[0.2, 0.2, 0.2], 1.0, 1500, 6);
    let full = fit_with_retention(&ts, 80, EstimatorMethod::Burg, true).unwrap();
    let lean = fit_with_retention(&ts, 80, EstimatorMethod::Burg, false).unwrap();
    for c in Criterion::ALL {
        let es = EarlyStopConfig::disabled();
        assert_eq!(
            select_order(&full, c, es).unwrap(),
            select_order(&lean, c, es).unwrap()
        );
    }
}

#[test]
fn fpe_and_cat_argmin_ignore_power_scale() {
    let (_, ts) = ar_series(&[0.4, 0.3], 1.0, 1000, 17);
    let trace = fit(&ts, 60, EstimatorMethod::Burg).unwrap();
    for c in [Criterion::Fpe, Criterion::Cat] {
        let pick = |scale: f64| {
            let mut s = OrderScanner::new(c, trace.n_samples(), EarlyStopConfig::disabled());
            for (p, e) in trace.powers().iter().zip(trace.coeff_energy()) {
                s.push(scale * p, *e);
            }
            s.finish().unwrap().chosen_order()
        };
        assert_eq!(pick(1.0), pick(1e-3));
        assert_eq!(pick(1.0), pick(250.0));
    }
}

#[test]
fn true_low_order_is_found() {
    let (_, ts) = ar_series(&[0.75, -0.5], 1.0, 20_000, 30);
    let sel = fit_and_select(
        &ts,
        max_order(ts.len()).unwrap(),
        EstimatorMethod::Burg,
        &[Criterion::Obd],
        EarlyStopConfig::for_max_order(max_order(ts.len()).unwrap()),
    )
    .unwrap();
    assert_eq!(sel.selections[0].chosen_order(), 2);
}

#[test]
fn cat_is_not_defined_at_order_zero() {
    let (_, ts) = ar_series(&[0.5], 1.0, 500, 2);
    let trace = fit(&ts, 10, EstimatorMethod::Burg).unwrap();
    let sel = select_order(&trace, Criterion::Cat, EarlyStopConfig::disabled()).unwrap();
    assert_eq!(sel.losses()[0], None);
    assert!(sel.chosen_order() >= 1);
}
