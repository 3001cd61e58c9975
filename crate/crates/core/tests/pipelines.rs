use emech::device_file::bundled_device;
use emech::dynamics::{BathSpec, TwoModeSystem};
use emech::fitting::{nls_fit, ComplexEit, FitData, FitOptions, Model};
use emech::pipelines::*;
use emech::thermometry::AmplifierChain;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;
use std::time::Instant;

fn golden_eit_trace() -> SpectrumTrace {
    let dev = bundled_device("A").unwrap();
    let sys = TwoModeSystem::from_device(&dev, 10.0).with_detuning(0.0);
    let grid = eit_grid(&sys, 401, 101);
    synth_eit(&sys, &grid, 0.01, 20).unwrap()
}

#[test]
fn eit_trace_matches_golden_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/eit_device_a_10V_seed20.csv");
    let csv = golden_eit_trace().to_csv();
    if std::env::var_os("EMECH_UPDATE_GOLDEN").is_some() {
        std::fs::write(path, &csv).unwrap();
    }
    let stored = std::fs::read_to_string(path).expect("golden file present");
    assert!(stored == csv, "synthetic EIT trace differs from the stored golden output");
}

#[test]
fn eit_fit_round_trip_device_a() {
    let dev = bundled_device("A").unwrap();
    let sys = TwoModeSystem::from_device(&dev, 1.2).with_detuning(0.0);
    assert!((sys.g - 34.32e3).abs() < 1.0);
    let grid = eit_grid(&sys, 1201, 401);
    let tr = synth_eit(&sys, &grid, 0.0, 0).unwrap();
    let reference = sys.mech.omega_m / TAU;
    let truth = eit_params_from_system(&sys, reference);
    let (kappa, gamma) = (sys.kappa() / TAU, sys.mech.gamma_total_linewidth / TAU);
    let init = [
        truth[0] - 0.2 * kappa,
        truth[1] + 0.2 * gamma,
        truth[2] * 0.8,
        truth[3] * 1.2,
        truth[4] * 0.8,
        truth[5] * 1.2,
    ];
    let fit = fit_eit(&tr, reference, &init, false).unwrap();
    assert!(fit.converged);
    assert!((fit.params[0] - truth[0]).abs() / kappa < 1e-6);
    assert!((fit.params[1] - truth[1]).abs() / gamma < 1e-6);
    for k in 2..6 {
        assert!((fit.params[k] / truth[k] - 1.0).abs() < 1e-6, "param {k}");
    }
}

#[test]
fn eit_center_follows_axis_shift() {
    let dev = bundled_device("A").unwrap();
    let sys = TwoModeSystem::from_device(&dev, 5.0).with_detuning(TAU * 0.2e6);
    let grid = eit_grid(&sys, 801, 201);
    let tr = synth_eit(&sys, &grid, 1e-3, 4).unwrap();
    let reference = sys.mech.omega_m / TAU;
    let init = eit_params_from_system(&sys, reference);
    let a = fit_eit(&tr, reference, &init, false).unwrap();
    let shift = 12.5e3;
    let shifted = SpectrumTrace { frequencies: tr.frequencies.iter().map(|f| f + shift).collect(), ..tr.clone() };
    let mut init_b = init.clone();
    init_b[0] += shift;
    init_b[1] += shift;
    let b = fit_eit(&shifted, reference, &init_b, false).unwrap();
    for k in 0..2 {
        assert!((b.params[k] - a.params[k] - shift).abs() < 1e-6 * sys.kappa() / TAU);
    }
    for k in 2..6 {
        assert!((b.params[k] / a.params[k] - 1.0).abs() < 1e-7);
    }
}

#[test]
fn fit_uncertainty_scales_with_point_count() {
    let model = ComplexEit { fano: false };
    let truth = [0.0, 0.0, 520e3, 800e3, 20e3, 100e3];
    let sigma_for = |n: usize, seed: u64| {
        let x: Vec<f64> = (0..n).map(|i| -2e6 + 4e6 * i as f64 / (n - 1) as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = x
            .iter()
            .map(|&x| {
                let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                model.eval(&truth, x) + num_complex::Complex::new(a, b) * 0.01
            })
            .collect();
        let fit = nls_fit(&model, &FitData::complex(x, y), &truth, &FitOptions::default()).unwrap();
        fit.uncertainties[5]
    };
    let mut ratios = Vec::new();
    for seed in 0..50 {
        ratios.push(sigma_for(400, seed) / sigma_for(1600, seed + 1000));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean / 2.0 - 1.0).abs() < 0.2, "mean ratio {mean}");
}

#[test]
fn coupling_line_from_noisy_eit() {
    let opts = EitSweepOptions::default();
    let b = pipeline_g_vs_v(&bundled_device("B").unwrap(), &[2.0, 5.0, 10.0, 15.0, 20.0, 25.0], &opts).unwrap();
    assert!((b.g0 / 45.4e3 - 1.0).abs() < 0.01, "{b:?}");
    assert!((b.v_offset + 0.22).abs() < 0.01 * 25.0, "{}", b.v_offset);
    assert!(b.points.iter().all(|p| p.converged));
    let a = pipeline_g_vs_v(&bundled_device("A").unwrap(), &[2.0, 5.0, 10.0, 15.0, 20.0, 25.0], &opts).unwrap();
    assert!((a.g0 / 22.0e3 - 1.0).abs() < 0.01, "{a:?}");
    assert!((a.v_offset + 0.36).abs() < 0.25, "{}", a.v_offset);
}

#[test]
fn cooperativity_at_full_bias() {
    let mut dev = bundled_device("B").unwrap();
    dev.coupling.g0 = 42.7e3;
    let c = pipeline_cooperativity_vs_v(&dev, &[25.0], Some(&[4.8e3])).unwrap();
    assert!((c[0].g / 1.08e6 - 1.0).abs() < 0.01);
    assert!((c[0].cooperativity / 1270.0 - 1.0).abs() < 0.02, "{}", c[0].cooperativity);
}

#[test]
fn ringdown_lifetime_at_largest_detuning() {
    let chain = AmplifierChain::new(65.6, 10.0, 1e6).unwrap();
    let gamma = 1.0 / 220e-6;
    let cfg = RingdownConfig::for_decay(gamma, 50.0);
    let mut within = 0;
    for seed in 0..50 {
        let tr = synth_ringdown(gamma, 100.0, &cfg, &chain, true, seed).unwrap();
        let fit = fit_ringdown(&tr).unwrap();
        let tau = 1.0 / fit.params[1];
        let sigma = fit.uncertainties[1] / fit.params[1].powi(2);
        assert!(sigma < 6e-6 && sigma > 1e-6, "{sigma}");
        if (tau - 220e-6).abs() < 6e-6 {
            within += 1;
        }
    }
    assert!(within >= 45, "{within}/50 within 6 us");
}

#[test]
fn ringdown_rate_independent_of_phonon_number() {
    let chain = AmplifierChain::new(65.6, 10.0, 1e6).unwrap();
    let gamma = 1.0 / 220e-6;
    let cfg = RingdownConfig::for_decay(gamma, 2000.0);
    for (k, n0) in [1.0, 10.0, 100.0, 1000.0].into_iter().enumerate() {
        let tr = synth_ringdown(gamma, n0, &cfg, &chain, true, 40 + k as u64).unwrap();
        let fit = fit_ringdown(&tr).unwrap();
        assert!((fit.params[1] - gamma).abs() < 4.0 * fit.uncertainties[1], "n0 {n0}: {} ± {}", fit.params[1], fit.uncertainties[1]);
    }
}

#[test]
fn lifetime_from_noisy_tau_table() {
    let dev = bundled_device("A").unwrap();
    let g = TAU * dev.g_at(1.2);
    let kappa = dev.microwave.kappa_total();
    let det: Vec<f64> = (0..33).map(|i| 0.1e6 * i as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tau = Vec::new();
    for d in &det {
        let t = 1.0 / (1.0 / 265e-6 + emech::dynamics::em_readout_rate(g, kappa, TAU * d));
        let z: f64 = StandardNormal.sample(&mut rng);
        tau.push(t * (1.0 + 0.1 * z));
    }
    let sig: Vec<f64> = tau.iter().map(|t| 0.1 * t).collect();
    let fit = fit_detuning_decay(&det, &tau, &sig, kappa).unwrap();
    let tau_i = 1.0 / fit.params[0];
    assert!((tau_i - 265e-6).abs() < 25e-6, "{tau_i}");
}

#[test]
fn lifetime_pipeline_estimators_agree() {
    let dev = bundled_device("A").unwrap();
    let mut agree = 0;
    for seed in 0..50 {
        let opts = LifetimeOptions { seed, ..Default::default() };
        let r = pipeline_lifetime_vs_detuning(&dev, 1.2, &default_detunings(), &opts).unwrap();
        assert!((r.tau_i - 265e-6).abs() < 25e-6, "seed {seed}: {}", r.tau_i);
        let combined = (r.tau_i_sigma.powi(2) + r.tau_i_subtraction_sigma.powi(2)).sqrt();
        if (r.tau_i - r.tau_i_subtraction).abs() < combined {
            agree += 1;
        }
    }
    assert!(agree >= 45, "{agree}/50 agree within combined 1 sigma");
}

#[test]
fn thermometry_pipeline_reproduces_bias_dependence() {
    let dev = bundled_device("A").unwrap();
    let volts = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
    let mut truths = vec![BathSpec::new(0.0, 0.1, 0.01).unwrap(); 5];
    truths.push(BathSpec::new(0.0, 0.1, 0.86).unwrap());
    let rows = pipeline_thermometry_vs_v(&dev, &volts, &truths, &ThermometryOptions::default()).unwrap();
    let last = rows.last().unwrap();
    assert!((last.n_b_m - 0.86).abs() < 0.08, "{last:?}");
    assert!(last.n_b_m_sigma < 0.08 / 2.0);
    for r in &rows[..5] {
        assert!(r.n_b_m.abs() < 0.01 + 3.0 * r.n_b_m_sigma + 1e-3, "{r:?}");
        assert!(r.n_b_m - 3.0 * r.n_b_m_sigma < 0.0, "{r:?} not consistent with zero");
    }
}

#[test]
fn all_pipelines_finish_quickly() {
    let start = Instant::now();
    let a = bundled_device("A").unwrap();
    let b = bundled_device("B").unwrap();
    pipeline_g_vs_v(&b, &[5.0, 15.0, 25.0], &EitSweepOptions::default()).unwrap();
    pipeline_cooperativity_vs_v(&b, &[5.0, 15.0, 25.0], None).unwrap();
    pipeline_lifetime_vs_detuning(&a, 1.2, &default_detunings(), &LifetimeOptions::default()).unwrap();
    pipeline_thermometry_vs_v(&a, &[25.0], &[BathSpec::new(0.0, 0.1, 0.86).unwrap()], &ThermometryOptions::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 60.0);
}
