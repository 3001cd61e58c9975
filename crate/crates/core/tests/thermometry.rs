use emech::device_file::bundled_device;
use emech::dynamics::{BathSpec, TwoModeSystem};
use emech::pipelines::{detuning_for_cooperativity, synth_psd, thermometry_grid};
use emech::thermometry::*;
use emech::tls::{telegraph_switches, TelegraphFluctuator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;

fn chain() -> AmplifierChain<f64> {
    AmplifierChain::new(65.6, 10.0, 1e3).unwrap()
}

fn device_a(v: f64, detuning: Option<f64>) -> TwoModeSystem<f64> {
    let dev = bundled_device("A").unwrap();
    let mut sys = TwoModeSystem::from_device(&dev, v);
    sys.mech.gamma_total_linewidth = sys.mech.gamma_i_intrinsic_decay;
    let d = detuning.unwrap_or_else(|| detuning_for_cooperativity(&sys, 1.0));
    sys.with_detuning(d)
}

fn extract(sys: &TwoModeSystem<f64>, truth: BathSpec<f64>, averages: f64, seed: u64) -> (OccupancyEstimate, OccupancyEstimate) {
    let ch = chain();
    let grid = thermometry_grid(sys);
    let trace = synth_psd(sys, &truth, &ch, &grid, averages, seed).unwrap();
    let line = LineParams::predicted(sys);
    (
        extract_occupancy(&trace, sys, &ch, &line, truth.n_wg).unwrap(),
        extract_occupancy_naive(&trace, sys, &ch, &line).unwrap(),
    )
}

#[test]
fn occupancy_round_trip_at_high_bias() {
    let sys = device_a(25.0, None);
    let (est, _) = extract(&sys, BathSpec::new(0.0, 0.1, 0.86).unwrap(), 1e6, 11);
    assert!((est.n_b_m - 0.86).abs() < 0.05 * 0.86, "{est:?}");
    assert!((est.n_b_r - 0.1).abs() < 5.0 * est.n_b_r_sigma, "{est:?}");
}

#[test]
fn empty_bath_recovers_zero() {
    let sys = device_a(25.0, None);
    let (est, _) = extract(&sys, BathSpec::new(0.0, 0.0, 0.0).unwrap(), 1e6, 5);
    assert!(est.n_b_m.abs() < 3.0 * est.n_b_m_sigma, "{est:?}");
    assert!(est.n_b_m_sigma > 0.0);
}

#[test]
fn waveguide_bath_is_removed() {
    let sys = device_a(25.0, None);
    let (est, _) = extract(&sys, BathSpec::new(0.05, 0.1, 0.3).unwrap(), 1e6, 2);
    assert!((est.n_b_m - 0.3).abs() < 4.0 * est.n_b_m_sigma, "{est:?}");
}

#[test]
fn naive_estimator_is_biased_low_under_squashing() {
    let sys = device_a(1.2, Some(TAU * 0.66e6));
    let (est, naive) = extract(&sys, BathSpec::new(0.0, 0.1, 0.86).unwrap(), 1e6, 3);
    assert!((est.n_b_m - 0.86).abs() < 4.0 * est.n_b_m_sigma, "{est:?}");
    assert!(naive.n_b_m < 0.86 - 5.0 * est.n_b_m_sigma, "naive {}", naive.n_b_m);
    // Without a microwave bath there is nothing to squash and both agree.
    let (est0, naive0) = extract(&sys, BathSpec::new(0.0, 0.0, 0.86).unwrap(), 1e6, 3);
    assert!((naive0.n_b_m - est0.n_b_m).abs() < 0.05, "{} vs {}", naive0.n_b_m, est0.n_b_m);
}

#[test]
fn extraction_is_unbiased_over_realizations() {
    let sys = device_a(25.0, None);
    let truth = BathSpec::new(0.0, 0.1, 0.86).unwrap();
    let runs: Vec<OccupancyEstimate> = (0..100).map(|s| extract(&sys, truth, 1e6, 1000 + s).0).collect();
    let mean = runs.iter().map(|r| r.n_b_m).sum::<f64>() / 100.0;
    let sigma = runs[0].n_b_m_sigma;
    assert!((mean - 0.86).abs() < sigma / 10.0, "mean {mean}, sigma {sigma}");
    // The reported uncertainty matches the scatter.
    let sd = (runs.iter().map(|r| (r.n_b_m - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
    assert!((sd / sigma - 1.0).abs() < 0.25, "scatter {sd} vs reported {sigma}");
}

#[test]
fn gain_calibration_recovers_line_gain() {
    let ch = AmplifierChain::new(65.6, 0.0, 1e6).unwrap();
    let nu = 5.087e9;
    let temps: Vec<f64> = (0..17).map(|i| 0.73 + 0.02 * i as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let powers: Vec<f64> = temps
        .iter()
        .map(|&t| {
            let p = johnson_power(t, nu, &ch, 2.5).unwrap();
            let z: f64 = StandardNormal.sample(&mut rng);
            p * (1.0 + 2e-3 * z)
        })
        .collect();
    let cal = calibrate_gain(&temps, &powers, nu, 1e6, None).unwrap();
    assert!((cal.gain_db - 65.6).abs() < 0.4, "{cal:?}");
    assert!(cal.gain_db_sigma < 0.4);
    assert!((cal.t_hemt - 2.5).abs() < 5.0 * cal.t_hemt_sigma);
}

/// Oscillator b' = −(iδ(t) + Γ_d/2)b + F driven on resonance, with δ = ±a flipping as a
/// symmetric telegraph process. Returns (|⟨b⟩|², ⟨|b|²⟩, ⟨b⟩).
fn jittered_oscillator(gamma_d: f64, a: f64, rate: f64, dt: f64, duration: f64, seed: u64) -> (f64, f64, f64) {
    let tf = TelegraphFluctuator { rate_up: rate, rate_down: rate, dispersive_shift: 2.0 * a };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hist = telegraph_switches(&tf, duration, &mut rng).unwrap();
    let f = 1.0;
    let n = (duration / dt) as usize;
    let burn = (20.0 / gamma_d / dt) as usize;
    let mut b = num_complex::Complex::new(0.0, 0.0);
    let (mut sum_b, mut sum_n, mut count) = (num_complex::Complex::new(0.0, 0.0), 0.0, 0.0);
    let mut k = 0;
    let mut state = hist.initial_state;
    for i in 0..n {
        let t = i as f64 * dt;
        while k < hist.switch_times.len() && hist.switch_times[k] <= t {
            state ^= 1;
            k += 1;
        }
        let delta = if state == 1 { a } else { -a };
        let z = num_complex::Complex::new(gamma_d / 2.0, delta);
        let e = (-z * dt).exp();
        b = b * e + (num_complex::Complex::new(1.0, 0.0) - e) * f / z;
        if i >= burn {
            sum_b += b;
            sum_n += b.norm_sqr();
            count += 1.0;
        }
    }
    let mean = sum_b / count;
    (mean.norm_sqr(), sum_n / count, mean.re)
}

#[test]
fn telegraph_jitter_decay_split() {
    let (gamma_d, a, rate) = (1.0, 2.0, 20.0);
    let (n_coh, n_tot, mean_re) = jittered_oscillator(gamma_d, a, rate, 0.005, 2e4, 17);
    let n_inc = n_tot - n_coh;
    // Linewidth of the coherent response: ⟨b⟩ = F/(γ/2) on resonance.
    let gamma = 2.0 / mean_re;
    // Motional narrowing: γ ≈ Γ_d + a²/λ.
    assert!((gamma / (gamma_d + a * a / rate) - 1.0).abs() < 0.05, "gamma {gamma}");
    let areas = DrivenResponseAreas::new(n_coh, n_inc, 0.0).unwrap();
    let rates = decay_from_driven_response(&areas, gamma, 0.0).unwrap();
    assert!((rates.gamma_d - gamma_d).abs() < 0.03, "{rates:?}");
    assert!((n_inc / n_coh - (gamma / rates.gamma_d - 1.0)).abs() < 1e-12);
}
