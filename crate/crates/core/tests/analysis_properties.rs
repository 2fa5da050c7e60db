use proptest::prelude::*;

use wslchain::analysis::{
    extract_peak, first_wavefront_index, fit_gaussian, gaussian_fit_wavefront, linear_fit, p5max_scan, pearson,
    wsl_length_from_boundary, ExtractionMode,
};
use wslchain::config::{ExperimentConfig, ExperimentKind};
use wslchain::model::PAPER_DEVICE;

fn gaussian(a: f64, t0: f64, sigma: f64, t: f64) -> f64 {
    a * (-(t - t0).powi(2) / (2.0 * sigma * sigma)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_fit_residuals_are_orthogonal(
        pts in prop::collection::vec((-50.0..50.0f64, -10.0..10.0f64), 3..40),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assume!(x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() > 1e-3);
        let fit = linear_fit(&x, &y).unwrap();
        let (m, b) = (fit.value("slope").unwrap(), fit.value("intercept").unwrap());
        let r: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| yi - (m * xi + b)).collect();
        let scale = y.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        prop_assert!(r.iter().sum::<f64>().abs() < 1e-9 * scale);
        let sx = x.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        prop_assert!(r.iter().zip(&x).map(|(ri, xi)| ri * xi).sum::<f64>().abs() < 1e-9 * scale * sx);
    }

    #[test]
    fn gaussian_fit_is_translation_covariant(
        a in 0.05..1.0f64,
        t0 in 60.0..200.0f64,
        sigma in 15.0..50.0f64,
        shift in -40.0..40.0f64,
    ) {
        let t: Vec<f64> = (0..=150).map(|k| 2.0 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|&s| gaussian(a, t0, sigma, s)).collect();
        let moved: Vec<f64> = t.iter().map(|s| s + shift).collect();
        let f1 = fit_gaussian(&t, &y, [0.8 * a, t0 + 5.0, 1.2 * sigma]).unwrap();
        let f2 = fit_gaussian(&moved, &y, [0.8 * a, t0 + 5.0 + shift, 1.2 * sigma]).unwrap();
        prop_assert!(f1.converged && f2.converged);
        prop_assert!((f1.value("A").unwrap() - f2.value("A").unwrap()).abs() < 1e-8);
        prop_assert!((f1.value("t0").unwrap() + shift - f2.value("t0").unwrap()).abs() < 1e-8);
        prop_assert!((f1.value("sigma").unwrap().abs() - f2.value("sigma").unwrap().abs()).abs() < 1e-8);
    }

    #[test]
    fn first_wavefront_is_a_local_maximum(
        a in 0.1..1.0f64,
        t0 in 40.0..120.0f64,
        sigma in 8.0..25.0f64,
        tail in 0.0..0.5f64,
    ) {
        let t: Vec<f64> = (0..=150).map(|k| 2.0 * k as f64).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&s| gaussian(a, t0, sigma, s) + gaussian(tail * a, t0 + 6.0 * sigma, sigma, s))
            .collect();
        let i = first_wavefront_index(&y).unwrap();
        prop_assert!(i > 0 && i + 1 < y.len());
        prop_assert!(y[i] >= y[i - 1] && y[i] >= y[i + 1]);
        prop_assert!((t[i] - t0).abs() <= 2.0);
    }

    #[test]
    fn pearson_is_bounded_and_affine_invariant(
        pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..30),
        scale in 0.1..10.0f64,
        offset in -10.0..10.0f64,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            let y2: Vec<f64> = y.iter().map(|v| scale * v + offset).collect();
            prop_assert!((pearson(&x, &y2).unwrap() - r).abs() < 1e-9);
        }
    }
}

#[test]
fn boundary_length_formula() {
    let xi = wsl_length_from_boundary(0.01, 4.0, 1.0).unwrap();
    assert!((xi - 4.0 / 0.01f64.ln().abs()).abs() < 1e-12);
    assert!((wsl_length_from_boundary(0.01, 4.0, 2.0).unwrap() - 2.0 * xi).abs() < 1e-12);
    assert!(wsl_length_from_boundary(1.0, 4.0, 1.0).is_err());
    assert!(wsl_length_from_boundary(0.0, 4.0, 1.0).is_err());
}

#[test]
fn gaussian_recovers_exact_peak_with_fit_window() {
    let t: Vec<f64> = (0..=150).map(|k| 2.0 * k as f64).collect();
    let y: Vec<f64> = t.iter().map(|&s| gaussian(0.6, 90.0, 20.0, s) + gaussian(0.2, 220.0, 20.0, s)).collect();
    let fit = gaussian_fit_wavefront(&t, &y).unwrap();
    assert!((fit.value("A").unwrap() - 0.6).abs() < 1e-3);
    assert!((fit.value("t0").unwrap() - 90.0).abs() < 0.5);
    let raw = extract_peak(&t, &y, None, ExtractionMode::RawWavefront).unwrap();
    assert_eq!(raw.stderr, 0.0);
    assert_eq!(raw.peak_time_ns, 90.0);
}

fn scan_config() -> ExperimentConfig {
    ExperimentConfig::defaults(ExperimentKind::WslScan, PAPER_DEVICE).unwrap()
}

#[test]
fn scan_oracles() {
    let cfg = scan_config();
    let rows = p5max_scan(&[0.0, 5.0, 15.0, 5.0], &cfg, ExtractionMode::RawWavefront).unwrap();
    assert!(rows[0].p_max > 0.5, "free chain peak {}", rows[0].p_max);
    assert!(rows[2].p_max < rows[1].p_max);
    assert_eq!(rows[1], rows[3]);
    for r in &rows {
        assert_eq!(r.ln_p_max, r.p_max.ln());
    }
}

#[test]
fn gaussian_scan_tracks_the_true_peak_without_gradient() {
    let mut dense = scan_config();
    dense.dt_sample_ns = 0.1;
    let table = wslchain::runner::density_trajectory(&dense, 0.0).unwrap();
    let true_max = table.column("P5").unwrap().iter().copied().fold(0.0, f64::max);
    let fit = p5max_scan(&[0.0], &scan_config(), ExtractionMode::GaussianFit).unwrap().remove(0);
    assert!((fit.p_max - true_max).abs() < 0.05, "fit {} vs max {true_max}", fit.p_max);
    assert!(fit.stderr > 0.0);
}

#[test]
fn scan_is_log_linear_on_the_standard_grid() {
    let cfg = scan_config();
    let grid = [7.5, 10.0, 12.5, 15.0];
    let rows = p5max_scan(&grid, &cfg, ExtractionMode::RawWavefront).unwrap();
    let ln: Vec<f64> = rows.iter().map(|r| r.ln_p_max).collect();
    assert!(pearson(&grid, &ln).unwrap() <= -0.9);
}

#[test]
fn scan_rejects_negative_gradient() {
    assert!(p5max_scan(&[-1.0], &scan_config(), ExtractionMode::RawWavefront).is_err());
}
