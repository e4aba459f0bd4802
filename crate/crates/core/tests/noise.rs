use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use twophoton_core::noise::{
    field_at, integrate_bz, sample_keyed, Component, NoiseRealization, SignChannel,
};
use twophoton_core::quad::integrate;
use twophoton_core::{CorrelationMode, FluctuatorConfig};

fn cfg(mode: CorrelationMode, tau: f64) -> FluctuatorConfig {
    FluctuatorConfig::new(0.2, 0.1, 0.4, tau, mode).unwrap()
}

#[test]
fn intervals_are_exponential_with_mean_tau() {
    let tau = 2.5;
    let c = cfg(CorrelationMode::InPhase, tau);
    let mut gaps = Vec::new();
    for i in 0..400 {
        let real = sample_keyed(&c, 200.0, 3, i).unwrap();
        let times = real.channel(Component::X).switch_times();
        gaps.extend(times.windows(2).map(|w| w[1] - w[0]));
    }
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    assert!((mean - tau).abs() < 4.0 * tau / n.sqrt(), "mean {mean}");
    // Exponential: variance equals the squared mean.
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var / (mean * mean) - 1.0).abs() < 0.05, "cv² {}", var / (mean * mean));
}

#[test]
fn switch_counts_are_poisson() {
    let tau = 1.0;
    let t_max = 4.0;
    let c = cfg(CorrelationMode::InPhase, tau);
    let n = 20_000;
    let mut counts = [0u64; 13];
    for i in 0..n {
        let k = sample_keyed(&c, t_max, 17, i).unwrap().channel(Component::X).switch_times().len();
        counts[k.min(12)] += 1;
    }
    let law = Poisson::new(t_max / tau).unwrap();
    let mut chi2 = 0.0;
    for (k, &obs) in counts.iter().enumerate() {
        let p = if k < 12 {
            law.pmf(k as u64)
        } else {
            1.0 - (0..12).map(|j| law.pmf(j)).sum::<f64>()
        };
        let expected = p * n as f64;
        chi2 += (obs as f64 - expected).powi(2) / expected;
    }
    let p_value = 1.0 - ChiSquared::new(12.0).unwrap().cdf(chi2);
    assert!(p_value > 1e-3, "chi2 {chi2}, p {p_value}");
}

#[test]
fn autocorrelation_decays_as_exp_minus_two_t_over_tau() {
    let tau = 1.0;
    let c = cfg(CorrelationMode::InPhase, tau);
    let n = 20_000;
    let lags = [0.0, 0.25, 0.5, 1.0, 1.5];
    let mut acc = [0.0; 5];
    for i in 0..n {
        let ch = sample_keyed(&c, 2.0, 5, i).unwrap();
        let ch = ch.channel(Component::X);
        for (a, &t) in acc.iter_mut().zip(&lags) {
            *a += ch.sign_at(0.0) * ch.sign_at(t);
        }
    }
    for (a, &t) in acc.iter().zip(&lags) {
        let mean = a / n as f64;
        let expected = (-2.0 * t / tau).exp();
        // Per-sample variance is at most 1.
        assert!((mean - expected).abs() < 4.0 / (n as f64).sqrt(), "T={t}: {mean} vs {expected}");
    }
}

#[test]
fn in_phase_shares_one_sign_and_independent_channels_decorrelate() {
    let real = sample_keyed(&cfg(CorrelationMode::InPhase, 1.0), 10.0, 1, 0).unwrap();
    for t in [0.0, 1.3, 4.4, 9.9] {
        assert_eq!(real.sign(Component::X, t), real.sign(Component::Z, t));
        assert_eq!(real.sign(Component::Y, t), real.sign(Component::Z, t));
    }

    let c = cfg(CorrelationMode::Independent, 1.0);
    let n = 20_000;
    let mut xz = 0.0;
    let mut xy = 0.0;
    for i in 0..n {
        let r = sample_keyed(&c, 1.0, 9, i).unwrap();
        xz += r.sign(Component::X, 0.5) * r.sign(Component::Z, 0.5);
        xy += r.sign(Component::X, 0.5) * r.sign(Component::Y, 0.5);
    }
    let bound = 4.0 / (n as f64).sqrt();
    assert!((xz / n as f64).abs() < bound && (xy / n as f64).abs() < bound);
}

#[test]
fn initial_sign_is_symmetric() {
    let c = cfg(CorrelationMode::InPhase, 1.0);
    let n = 20_000;
    let s: f64 = (0..n).map(|i| sample_keyed(&c, 0.1, 21, i).unwrap().sign(Component::X, 0.0)).sum();
    assert!((s / n as f64).abs() < 4.0 / (n as f64).sqrt());
}

#[test]
fn phase_integral_matches_quadrature() {
    let c = cfg(CorrelationMode::Independent, 0.7);
    let real = sample_keyed(&c, 12.0, 2, 4).unwrap();
    let exact = integrate_bz(&real, &c, 1.0, 11.0).unwrap();
    let mut edges = vec![1.0];
    edges.extend(real.events_between(&[Component::Z], 1.0, 11.0));
    edges.push(11.0);
    let quad: f64 = edges
        .windows(2)
        .map(|w| {
            integrate(|t| field_at(&real, &c, t).unwrap()[2], w[0], w[1], 1e-13, 0.0, 50)
                .unwrap()
                .value
        })
        .sum();
    assert!((exact - quad).abs() < 1e-11, "{exact} vs {quad}");
}

#[test]
fn queries_outside_the_realization_are_range_errors() {
    let c = cfg(CorrelationMode::InPhase, 1.0);
    let real = sample_keyed(&c, 5.0, 0, 0).unwrap();
    assert!(field_at(&real, &c, 5.5).is_err());
    assert!(integrate_bz(&real, &c, 0.0, 6.0).is_err());
    assert!(integrate_bz(&real, &c, 3.0, 2.0).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(FluctuatorConfig::new(-0.1, 0.0, 0.0, 1.0, CorrelationMode::InPhase).is_err());
    assert!(FluctuatorConfig::new(0.1, 0.0, 0.0, 0.0, CorrelationMode::InPhase).is_err());
    assert!(FluctuatorConfig::new(0.1, 0.0, f64::NAN, 1.0, CorrelationMode::InPhase).is_err());
    assert!(SignChannel::new(0.5, vec![]).is_err());
    assert!(SignChannel::new(1.0, vec![2.0, 1.0]).is_err());
}

proptest! {
    #[test]
    fn realizations_are_well_formed(seed in 0u64..1000, index in 0u64..1000, tau in 0.05f64..5.0, t_max in 0.0f64..30.0) {
        let c = cfg(CorrelationMode::Independent, tau);
        let real = sample_keyed(&c, t_max, seed, index).unwrap();
        prop_assert_eq!(real.channels().len(), 3);
        for ch in real.channels() {
            let ts = ch.switch_times();
            prop_assert!(ts.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(ts.iter().all(|&t| t > 0.0 && t < t_max));
            prop_assert!(ch.sign_at(0.5 * t_max).abs() == 1.0);
            let whole = ch.integral(0.0, t_max);
            let split = ch.integral(0.0, 0.3 * t_max) + ch.integral(0.3 * t_max, t_max);
            prop_assert!((whole - split).abs() <= 1e-9 * t_max.max(1.0));
            prop_assert!(whole.abs() <= t_max + 1e-12);
        }
        // Same key, same realization.
        let again = sample_keyed(&c, t_max, seed, index).unwrap();
        prop_assert_eq!(real.channels(), again.channels());
    }

    #[test]
    fn flipping_negates_every_sign(seed in 0u64..500, t in 0.0f64..10.0) {
        let real = sample_keyed(&cfg(CorrelationMode::Independent, 0.5), 10.0, seed, 0).unwrap();
        let flipped: NoiseRealization = real.with_flipped_signs();
        for c in [Component::X, Component::Y, Component::Z] {
            prop_assert_eq!(flipped.sign(c, t), -real.sign(c, t));
        }
    }
}
