mod common;

use common::*;
use mesa::rng::stream;
use mesa::stats::variance;
use mesa::synth::{
    generate_ar, generate_from_psd_with_rng, random_ar_model, FlatPsd, GaussianPsd, TargetPsd,
};
use mesa::ArModel;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Two-sided periodogram `dt/n |DFT x|^2` at bins `0..=n/2`.
fn periodogram(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|z| z.norm_sqr() * dt / n as f64).collect()
}

fn mean_periodogram(target: &dyn TargetPsd, n: usize, dt: f64, k: usize, seed: u64) -> Vec<f64> {
    let mut acc = vec![0.0; n / 2 + 1];
    for i in 0..k {
        let ts = generate_from_psd_with_rng(target, n, dt, &mut stream(seed, i as u64)).unwrap();
        for (a, p) in acc.iter_mut().zip(periodogram(ts.samples(), dt)) {
            *a += p / k as f64;
        }
    }
    acc
}

#[test]
fn gaussian_target_is_reproduced() {
    let (n, dt) = (3000, 0.1);
    let target = GaussianPsd::new(2.5, 0.5).unwrap();
    let avg = mean_periodogram(&target, n, dt, 500, 19);
    let bins: Vec<usize> = (0..avg.len())
        .filter(|j| (1.5..=3.5).contains(&(*j as f64 / (n as f64 * dt))))
        .collect();
    // each bin of a 500-draw average still scatters by 1/sqrt(500) ~ 4.5%,
    // so compare blocks of ten neighbouring bins
    for block in bins.chunks_exact(10) {
        let got: f64 = block.iter().map(|&j| avg[j]).sum();
        let want: f64 = block
            .iter()
            .map(|&j| target.density(j as f64 / (n as f64 * dt)))
            .sum();
        assert!(rel_close(got, want, 0.05), "bins {block:?}: {got} vs {want}");
    }
}

#[test]
fn flat_target_converges_as_inverse_sqrt() {
    let (n, dt) = (256, 1.0);
    let level = 0.5;
    for k in [10, 100, 1000] {
        let avg = mean_periodogram(&FlatPsd(level), n, dt, k, 3);
        let interior = &avg[1..n / 2];
        let dev = interior.iter().map(|v| (v / level - 1.0).abs()).sum::<f64>()
            / interior.len() as f64;
        // mean absolute deviation of an average of k unit exponentials
        let scaled = dev * (k as f64).sqrt();
        assert!((0.6..1.0).contains(&scaled), "k={k}: {scaled}");
    }
}

#[test]
fn flat_target_gives_white_noise_of_matching_variance() {
    let (n, dt, sigma2) = (4096, 0.01, 3.0);
    let target = FlatPsd(sigma2 * dt);
    let v: f64 = (0..1000)
        .map(|i| {
            let ts = generate_from_psd_with_rng(&target, n, dt, &mut stream(4, i)).unwrap();
            variance(ts.samples())
        })
        .sum::<f64>()
        / 1000.0;
    assert!(rel_close(v, sigma2, 0.02), "{v}");
}

#[test]
fn random_models_are_stable_by_companion_eigenvalues() {
    for seed in 0..30 {
        let model = random_ar_model(seed, 2, 40).unwrap();
        assert!((2..=40).contains(&model.order()));
        let rho = companion_spectral_radius(&model.ar_coefficients());
        assert!(rho < 1.0, "seed {seed}: spectral radius {rho}");
    }
}

#[test]
fn random_models_are_reproducible() {
    assert_eq!(random_ar_model(9, 2, 300).unwrap(), random_ar_model(9, 2, 300).unwrap());
    assert_ne!(random_ar_model(9, 2, 300).unwrap(), random_ar_model(10, 2, 300).unwrap());
}

#[test]
fn burned_in_series_is_stationary() {
    let model = ArModel::from_ar_coefficients(&[0.9], 1.0, 1.0).unwrap();
    // burn-in 50 / (1 - 0.9)
    let ts = generate_ar(&model, 400_000, 500, 14).unwrap();
    let (a, b) = ts.samples().split_at(200_000);
    assert!(rel_close(variance(a), variance(b), 0.05));
    assert!(rel_close(variance(a), 1.0 / (1.0 - 0.81), 0.05));
}
