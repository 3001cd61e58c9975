use emech::consts::DEBYE;
use emech::electrostatics::*;
use emech::tls::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

const EV: f64 = 1.602176634e-19;

/// Asymptotic Kolmogorov distribution tail P(K > λ).
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// One-sample KS p-value of `samples` against Exp(rate).
fn ks_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let cdf = 1.0 - (-rate * v).exp();
        d = d.max((i as f64 + 1.0) / n - cdf).max(cdf - i as f64 / n);
    }
    let sn = n.sqrt();
    kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)
}

#[test]
fn kolmogorov_tail_reference_points() {
    // Critical values of the limiting distribution.
    assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-4);
    assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-4);
}

#[test]
fn symmetric_fluctuator_spends_half_its_time_excited() {
    let rate = 50.0;
    let tf = TelegraphFluctuator { rate_up: rate, rate_down: rate, dispersive_shift: 2e3 };
    let dt = 0.1 / rate;
    let tr = telegraph_trace(&tf, 5.087e9, 1e6 * dt, dt, 9).unwrap();
    assert_eq!(tr.times.len(), 1_000_000);
    assert!((tr.occupancy() - 0.5).abs() < 0.01, "{}", tr.occupancy());
    assert!(tr.frequencies.iter().all(|&f| f == 5.087e9 || f == 5.087e9 + 2e3));
}

#[test]
fn dwell_times_are_exponential() {
    let tf = TelegraphFluctuator { rate_up: 3.0, rate_down: 11.0, dispersive_shift: 1e3 };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let hist = telegraph_switches(&tf, 2000.0, &mut rng).unwrap();
    let [in0, in1] = hist.dwell_times();
    assert!(in0.len() > 1000 && in1.len() > 1000);
    let p0 = ks_exponential(&in0, tf.rate_up);
    let p1 = ks_exponential(&in1, tf.rate_down);
    assert!(p0 > 0.01 && p1 > 0.01, "p-values {p0} {p1}");
    // A wrong rate is rejected.
    assert!(ks_exponential(&in0, 1.2 * tf.rate_up) < 1e-3);
}

#[test]
fn standard_tunneling_model_numbers() {
    let p = TlsParams::new(1e-24, 1e-24, DEBYE, 1.5 * EV);
    let stark = stark_shift(&p, 5e6);
    assert!((stark / 25e9 - 1.0).abs() < 0.02, "{stark}");
    let g = dipole_coupling(&p, 50.0);
    assert!((g / 250e3 - 1.0).abs() < 0.05, "{g}");
    let mode = StrainMode { omega_m: TAU * 5.087e9, youngs_modulus: YOUNGS_MODULUS_SI, strain_mode_volume: 6e-21 };
    let rep = strain_coupling_report(&p, &mode).unwrap();
    assert!((rep.s_zpf / 4e-8 - 1.0).abs() < 0.05);
    for lam in [rep.lambda_with_ratio, rep.lambda_without_ratio] {
        assert!((7e6..=15e6).contains(&lam), "{lam}");
    }
    assert!(!rep.assumptions.is_empty());
}

#[test]
fn pull_in_at_two_thirds_gap() {
    let gap = 70e-9;
    let k = stiffness_for_pull_in(30.0, gap, TRANSDUCER_AREA);
    let act = ParallelPlateActuator::new(k, TRANSDUCER_AREA, gap).unwrap();
    let v_pi = pull_in_voltage(&act);
    assert!((v_pi / 30.0 - 1.0).abs() < 1e-9);
    let x = equilibrium_gap(&act, v_pi).unwrap().gap().unwrap();
    assert!((x / (2.0 / 3.0 * gap) - 1.0).abs() < 1e-6);
    // Approaching from below converges to the same point.
    let below = equilibrium_gap(&act, v_pi * (1.0 - 1e-12)).unwrap().gap().unwrap();
    assert!((below / (2.0 / 3.0 * gap) - 1.0).abs() < 1e-5);
    for i in 1..=100 {
        let v = v_pi * (1.0 + i as f64 / 100.0);
        assert_eq!(equilibrium_gap(&act, v).unwrap(), GapSolution::PulledIn, "V = {v}");
    }
}

#[test]
fn leakage_from_csv() {
    let text = "voltage_V,current_A\n0,0\n10,2e-11\n20,4e-11\n30,6e-11\n";
    let fit = leakage_fit(&parse_iv_csv(text).unwrap()).unwrap();
    assert!((fit.resistance / 500e9 - 1.0).abs() < 1e-12);
}
