use proptest::prelude::*;

use wslchain::analysis::{linear_fit, oscillation_period};
use wslchain::freefermion::{
    fit_localization_length, propagate_single_particle, single_particle_matrix, two_excitation_slater,
    wsl_length_analytic, SingleParticleHamiltonian, WslProfile,
};
use wslchain::model::{DeviceParams, PotentialSpec};
use wslchain::units::{bloch_period_ns, mhz_to_angular};

const G: f64 = 14.42;

fn max_p5(f: f64) -> f64 {
    let p = DeviceParams::paper_device();
    let h = single_particle_matrix(&p, &PotentialSpec::linear(f), 5).unwrap();
    let times: Vec<f64> = (0..=3000).map(|k| 0.1 * k as f64).collect();
    let table = propagate_single_particle(&h, 1, &times).unwrap();
    table.column("P5").unwrap().iter().copied().fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boundary_peak_falls_with_gradient(a in 0.6..3.0f64, b in 0.6..3.0f64) {
        prop_assume!((a - b).abs() > 0.02);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(max_p5(hi * G).ln() < max_p5(lo * G).ln());
    }

    #[test]
    fn probability_is_conserved(f in -20.0..20.0f64, site in 1usize..=5, t in 0.0..500.0f64) {
        let p = DeviceParams::paper_device();
        let h = single_particle_matrix(&p, &PotentialSpec::linear(f), 5).unwrap();
        let table = propagate_single_particle(&h, site, &[t]).unwrap();
        let total: f64 = (1..=5).map(|j| table.column(&format!("P{j}")).unwrap()[0]).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slater_pair_conserves_two_particles(f in 0.0..20.0f64, a in 1usize..=5, b in 1usize..=5, t in 0.0..300.0f64) {
        prop_assume!(a != b);
        let p = DeviceParams::paper_device();
        let h = single_particle_matrix(&p, &PotentialSpec::linear(f), 5).unwrap();
        let pair = two_excitation_slater(&h, (a, b), &[t]).unwrap();
        let total: f64 = pair.densities[0].iter().sum();
        prop_assert!((total - 2.0).abs() < 1e-10);
        prop_assert!(pair.densities[0].iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn profile_fit_recovers_exact_length(xi in 0.5..6.0f64) {
        let profile = WslProfile::new(41, 21, xi).unwrap().densities();
        let fitted = fit_localization_length(&profile, 21, 12).unwrap();
        prop_assert!((fitted - xi).abs() < 1e-9 * xi);
    }

    #[test]
    fn wsl_profile_is_normalized(l in 3usize..60, xi in 0.2..10.0f64, c in 0usize..60) {
        let center = 1 + c % l;
        let prof = WslProfile::new(l, center, xi).unwrap();
        let norm: f64 = prof.amplitudes.iter().map(|a| a * a).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn localization_bound_on_time_maximum() {
    let l = 41;
    let c = 21;
    for ratio in [0.6, 1.0, 1.5, 2.0] {
        let f = ratio * G;
        let xi = wsl_length_analytic(G, f).unwrap();
        let h = SingleParticleHamiltonian::uniform(l, G, &PotentialSpec::linear(f)).unwrap();
        let tb = bloch_period_ns(f);
        let times: Vec<f64> = (0..=4000).map(|k| 2.0 * tb * k as f64 / 4000.0).collect();
        let table = propagate_single_particle(&h, c, &times).unwrap();
        let peak = |j: usize| table.column(&format!("P{j}")).unwrap().iter().copied().fold(0.0, f64::max);
        let d_max = ((3.0 * xi).floor() as usize).min(l / 2 - 1);
        let ds: Vec<f64> = (1..=d_max).map(|d| d as f64).collect();
        let profile: Vec<f64> = (1..=d_max).map(|d| 0.5 * (peak(c - d) + peak(c + d))).collect();
        assert!(profile.windows(2).all(|w| w[1] < w[0]), "F/g={ratio}: not monotone");
        let amplitude: Vec<f64> = profile.iter().map(|p| 0.5 * p.ln()).collect();
        let slope = linear_fit(&ds, &amplitude).unwrap().value("slope").unwrap();
        let rel = slope / (-1.0 / xi);
        assert!((rel - 1.0).abs() <= 0.25, "F/g={ratio}: slope ratio {rel:.3}");
    }
}

#[test]
fn bloch_period_on_long_chain() {
    for f in [10.0, 15.0, 20.0] {
        let h = SingleParticleHamiltonian::uniform(21, G, &PotentialSpec::linear(f)).unwrap();
        let tb = bloch_period_ns(f);
        let times: Vec<f64> = (0..=4000).map(|k| 4.0 * tb * k as f64 / 4000.0).collect();
        let table = propagate_single_particle(&h, 11, &times).unwrap();
        let period = oscillation_period(&times, table.column("P11").unwrap()).unwrap();
        assert!((period - tb).abs() / tb < 0.02, "F={f}: {period} vs {tb}");
    }
}

#[test]
fn wsl_length_values() {
    assert!((wsl_length_analytic(14.4, 15.0).unwrap() - 1.92).abs() < 1e-12);
    assert_eq!(wsl_length_analytic(7.5, 15.0).unwrap(), 1.0);
    assert!(wsl_length_analytic(14.4, 0.0).is_err());
}

#[test]
fn three_site_open_chain_spectrum() {
    let h = SingleParticleHamiltonian::uniform(3, G, &PotentialSpec::flat()).unwrap();
    let mut ev = h.eigenvalues();
    ev.sort_by(f64::total_cmp);
    let g = mhz_to_angular(G);
    let want = [-(2f64.sqrt()) * g, 0.0, 2f64.sqrt() * g];
    for (a, b) in ev.iter().zip(want) {
        assert!((a - b).abs() < 1e-14);
    }
}
