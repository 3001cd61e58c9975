//! Synthetic experiments and end-to-end analyses.
//!
//! Every generator takes an explicit seed and draws from a ChaCha8 stream, so outputs are
//! reproducible bit for bit.

pub mod coupling;
pub mod lifetime;
pub mod plot;
pub mod results;
pub mod thermo;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::dynamics::{eit_reflection, em_readout_rate, spring_shifted_frequency, BathSpec, TwoModeSystem};
use crate::error::{Error, Result};
use crate::fitting::{init_exp_decay, nls_fit, ComplexEit, ExpDecay, FitData, FitOptions, FitResult};
use crate::thermometry::{output_psd, AmplifierChain, PsdTrace};

pub use coupling::*;
pub use lifetime::*;
pub use thermo::*;

/// A reflection sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    /// Probe frequencies, Hz.
    pub frequencies: Vec<f64>,
    pub reflection: Vec<Complex<f64>>,
    /// Noise standard deviation per quadrature.
    pub sigma: f64,
    pub seed: u64,
}

impl SpectrumTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frequency_Hz,re,im\n");
        for (f, r) in self.frequencies.iter().zip(&self.reflection) {
            s.push_str(&format!("{f},{},{}\n", r.re, r.im));
        }
        s
    }

    pub fn min_magnitude(&self) -> f64 {
        self.reflection.iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min)
    }
}

/// `n` evenly spaced frequencies (Hz) spanning `center ± half_span`.
pub fn linear_grid(center: f64, half_span: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![center];
    }
    (0..n).map(|i| center - half_span + 2.0 * half_span * i as f64 / (n - 1) as f64).collect()
}

/// Sweep covering the cavity and the hybridized modes, refined around the mechanics.
pub fn eit_grid(sys: &TwoModeSystem<f64>, coarse: usize, fine: usize) -> Vec<f64> {
    let f_r = sys.mw.omega_r / TAU;
    let f_m = sys.mech.omega_m / TAU;
    let kappa = sys.kappa() / TAU;
    let gamma = sys.mech.gamma_total_linewidth / TAU;
    let center = 0.5 * (f_r + f_m);
    let half = 0.5 * (f_r - f_m).abs() + 3.0 * kappa + 2.0 * sys.g.abs();
    let mut f = linear_grid(center, half, coarse);
    f.extend(linear_grid(f_m, 20.0 * gamma, fine));
    f.sort_by(|a, b| a.total_cmp(b));
    f.dedup();
    f
}

/// Reflection with i.i.d. Gaussian noise of standard deviation `noise_sigma` on each quadrature.
pub fn synth_eit(sys: &TwoModeSystem<f64>, grid_hz: &[f64], noise_sigma: f64, seed: u64) -> Result<SpectrumTrace> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::Domain("noise sigma must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reflection = grid_hz
        .iter()
        .map(|&f| {
            let r = eit_reflection(sys, TAU * f);
            let nr: f64 = StandardNormal.sample(&mut rng);
            let ni: f64 = StandardNormal.sample(&mut rng);
            r + Complex::new(nr, ni) * noise_sigma
        })
        .collect();
    Ok(SpectrumTrace { frequencies: grid_hz.to_vec(), reflection, sigma: noise_sigma, seed })
}

/// Start values for [`ComplexEit`] from a system, in Hz offsets from `reference_hz`.
pub fn eit_params_from_system(sys: &TwoModeSystem<f64>, reference_hz: f64) -> Vec<f64> {
    let mut p = vec![
        sys.mw.omega_r / TAU - reference_hz,
        sys.mech.omega_m / TAU - reference_hz,
        sys.mw.kappa_i / TAU,
        sys.mw.kappa_e / TAU,
        sys.mech.gamma_total_linewidth / TAU,
        sys.g.abs(),
    ];
    if sys.fano_phase != 0.0 {
        p.push(sys.fano_phase);
    }
    p
}

/// Fits the complex EIT model to a sweep. Frequencies are referenced to `reference_hz`.
pub fn fit_eit(trace: &SpectrumTrace, reference_hz: f64, init: &[f64], fano: bool) -> Result<FitResult<f64>> {
    let x: Vec<f64> = trace.frequencies.iter().map(|f| f - reference_hz).collect();
    let mut data = FitData::complex(x, trace.reflection.clone());
    if trace.sigma > 0.0 {
        data = data.with_sigma(vec![trace.sigma; trace.frequencies.len()]);
    }
    nls_fit(&ComplexEit { fano }, &data, init, &FitOptions::default())
}

/// Detection settings of a ringdown measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingdownConfig {
    /// Detection window, s.
    pub window: f64,
    /// Number of consecutive windows.
    pub count: usize,
    /// Repetitions averaged.
    pub averages: f64,
}

impl RingdownConfig {
    /// Default 0.4 µs windows covering five decay times.
    pub fn for_decay(gamma: f64, averages: f64) -> Self {
        let window = 0.4e-6;
        Self { window, count: (5.0 / (gamma * window)).round().max(3.0) as usize, averages }
    }
}

/// Ringdown data referred to phonon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownTrace {
    /// Window centers, s.
    pub times: Vec<f64>,
    /// Detected signal per window, phonons (including the detection floor).
    pub signal: Vec<f64>,
    /// Standard deviation per window.
    pub sigma: Vec<f64>,
    pub window: f64,
    pub seed: u64,
}

impl RingdownTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s,signal_phonons,sigma_phonons\n");
        for i in 0..self.times.len() {
            s.push_str(&format!("{},{},{}\n", self.times[i], self.signal[i], self.sigma[i]));
        }
        s
    }
}

/// Largest window·Γ accepted: windows must be short compared to the decay.
pub const MAX_WINDOW_DECAY_PRODUCT: f64 = 0.1;

/// Energy ringdown n₀e^(−Γt) on the detection floor n_add + ½.
///
/// Each window carries Gaussian noise of standard deviation
/// (floor + signal)/√(averages·window·ν_IF). `noise = false` returns the exact curve.
pub fn synth_ringdown(
    gamma_total: f64,
    n0: f64,
    cfg: &RingdownConfig,
    chain: &AmplifierChain<f64>,
    noise: bool,
    seed: u64,
) -> Result<RingdownTrace> {
    if !(n0 > 0.0) {
        return Err(Error::Domain(format!("initial phonon number must be positive, got {n0}")));
    }
    if !(gamma_total > 0.0 && cfg.window > 0.0 && cfg.averages > 0.0) {
        return Err(Error::Domain("decay rate, window and averaging must be positive".into()));
    }
    if cfg.window * gamma_total > MAX_WINDOW_DECAY_PRODUCT {
        return Err(Error::Domain(format!(
            "detection window {} s is not short compared to the decay time {} s",
            cfg.window,
            1.0 / gamma_total
        )));
    }
    let floor = chain.n_add + 0.5;
    let dof = (cfg.averages * cfg.window * chain.nu_if).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = RingdownTrace {
        times: Vec::with_capacity(cfg.count),
        signal: Vec::with_capacity(cfg.count),
        sigma: Vec::with_capacity(cfg.count),
        window: cfg.window,
        seed,
    };
    for i in 0..cfg.count {
        let t = (i as f64 + 0.5) * cfg.window;
        let mean = floor + n0 * (-gamma_total * t).exp();
        let sigma = mean / dof;
        let z: f64 = if noise { StandardNormal.sample(&mut rng) } else { 0.0 };
        trace.times.push(t);
        trace.signal.push(mean + sigma * z);
        trace.sigma.push(sigma);
    }
    Ok(trace)
}

/// Exponential fit of a ringdown; parameters (amplitude, rate, offset).
pub fn fit_ringdown(trace: &RingdownTrace) -> Result<FitResult<f64>> {
    let init = init_exp_decay(&trace.times, &trace.signal)?;
    let data = FitData::real(trace.times.clone(), trace.signal.clone()).with_sigma(trace.sigma.clone());
    nls_fit(&ExpDecay, &data, &init, &FitOptions::default())
}

/// Thermometry sweep: 1001 bins over ±50γ around the line and 401 bins over ±3κ around
/// the cavity outside that window. Hz.
pub fn thermometry_grid(sys: &TwoModeSystem<f64>) -> Vec<f64> {
    let delta = sys.cavity_detuning();
    let gamma = sys.mech.gamma_i_intrinsic_decay + em_readout_rate(sys.g_angular(), sys.kappa(), delta);
    let center = spring_shifted_frequency(sys, delta) / TAU;
    let half = 50.0 * gamma / TAU;
    let mut f = linear_grid(center, half, 1001);
    f.extend(
        linear_grid(sys.mw.omega_r / TAU, 3.0 * sys.kappa() / TAU, 401)
            .into_iter()
            .filter(|x| (x - center).abs() > half),
    );
    f.sort_by(|a, b| a.total_cmp(b));
    f
}

/// Output PSD with multiplicative noise S·(1 + ξ/√N_avg), ξ standard normal.
pub fn synth_psd(
    sys: &TwoModeSystem<f64>,
    baths: &BathSpec<f64>,
    chain: &AmplifierChain<f64>,
    grid_hz: &[f64],
    averages: f64,
    seed: u64,
) -> Result<PsdTrace> {
    if !(averages > 0.0) {
        return Err(Error::Domain("averaging count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = averages.sqrt();
    let psd = grid_hz
        .iter()
        .map(|&f| {
            let s = output_psd(sys, baths, chain, TAU * f);
            let z: f64 = StandardNormal.sample(&mut rng);
            (s * (1.0 + z / root)).max(0.0)
        })
        .collect();
    let rbw = if grid_hz.len() > 1 { (grid_hz[1] - grid_hz[0]).abs() } else { 0.0 };
    Ok(PsdTrace { frequencies: grid_hz.to_vec(), psd, rbw, averages, background_subtracted: false })
}

/// Q = ω_m·τ.
pub fn quality_factor(omega_m: f64, tau: f64) -> f64 {
    omega_m * tau
}

/// Coherence time 1/(2π·linewidth) for a linewidth in Hz.
pub fn coherence_time(linewidth_hz: f64) -> f64 {
    1.0 / (TAU * linewidth_hz)
}
