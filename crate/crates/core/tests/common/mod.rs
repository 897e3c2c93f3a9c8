#![allow(dead_code)]

use mesa::rng::stream;
use mesa::synth::generate_ar;
use mesa::{ArModel, TimeSeries};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Order-m prediction error filter and power from a dense solve of the
/// Toeplitz normal equations `sum_s a_s r_|k-s| = p delta_k0`.
pub fn toeplitz_oracle(r: &[f64], m: usize) -> (Vec<f64>, f64) {
    let mat = DMatrix::from_fn(m, m, |i, j| r[i.abs_diff(j)]);
    let rhs = DVector::from_fn(m, |i, _| -r[i + 1]);
    let sol = mat.lu().solve(&rhs).expect("non-singular Toeplitz matrix");
    let mut a = vec![1.0];
    a.extend(sol.iter());
    let p = a.iter().enumerate().map(|(s, as_)| as_ * r[s]).sum();
    (a, p)
}

/// Autocorrelation of a random moving average plus white noise, which is
/// positive definite by construction.
pub fn random_pd_autocorrelation(seed: u64, lags: usize) -> Vec<f64> {
    let mut rng = stream(seed, 0);
    let taps = rng.random_range(1..=lags + 5);
    let h: Vec<f64> = (0..taps).map(|_| rng.sample(StandardNormal)).collect();
    let mut r: Vec<f64> = (0..=lags)
        .map(|k| h.iter().zip(h.iter().skip(k)).map(|(x, y)| x * y).sum())
        .collect();
    r[0] += 0.05 * r[0] + 0.1;
    r
}

/// Eigenvalues of the companion matrix of `x_t = sum b_i x_{t-i}`.
pub fn companion_spectral_radius(b: &[f64]) -> f64 {
    let p = b.len();
    let c = DMatrix::from_fn(p, p, |i, j| {
        if i == 0 {
            b[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    c.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn ar_series(b: &[f64], p_m: f64, n: usize, seed: u64) -> (ArModel, TimeSeries) {
    let model = ArModel::from_ar_coefficients(b, p_m, 1.0).unwrap();
    let ts = generate_ar(&model, n, 1000, seed).unwrap();
    (model, ts)
}

pub fn white_noise(n: usize, dt: f64, seed: u64) -> TimeSeries {
    let mut rng = stream(seed, 0);
    TimeSeries::new((0..n).map(|_| rng.sample(StandardNormal)).collect(), dt).unwrap()
}

pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs())
}
