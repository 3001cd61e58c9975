//! Energy lifetime versus cavity detuning.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{fit_ringdown, synth_ringdown, RingdownConfig};
use crate::device::DeviceRecord;
use crate::dynamics::em_readout_rate;
use crate::error::{Error, Result};
use crate::fitting::{nls_fit, FitData, FitOptions, Model, ParamSpec};
use crate::linalg::weighted_lstsq;
use crate::thermometry::AmplifierChain;

/// Γ(Δ) = Γᵢ + g²κ/(Δ² + (κ/2)²) with κ fixed. x = Δ and g in rad/s, Γ in s⁻¹.
#[derive(Debug, Clone, Copy)]
pub struct DetuningDecay {
    pub kappa: f64,
}

impl DetuningDecay {
    fn lorentz(&self, d: f64) -> f64 {
        self.kappa / (d * d + 0.25 * self.kappa * self.kappa)
    }
}

impl Model<f64> for DetuningDecay {
    fn name(&self) -> &str {
        "detuning_decay"
    }

    fn params(&self) -> Vec<ParamSpec<f64>> {
        vec![ParamSpec::positive("gamma_i", 1.0), ParamSpec::positive("g", 1.0)]
    }

    fn eval(&self, p: &[f64], d: f64) -> Complex<f64> {
        Complex::new(p[0] + p[1] * p[1] * self.lorentz(d), 0.0)
    }

    fn jacobian(&self, p: &[f64], d: f64, out: &mut [Complex<f64>]) -> bool {
        out[0] = Complex::new(1.0, 0.0);
        out[1] = Complex::new(2.0 * p[1] * self.lorentz(d), 0.0);
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeOptions {
    /// Initial phonon number of each ringdown.
    pub n0: f64,
    /// Repetitions averaged per ringdown.
    pub averages: f64,
    pub chain: AmplifierChain<f64>,
    pub seed: u64,
}

impl Default for LifetimeOptions {
    fn default() -> Self {
        Self { n0: 100.0, averages: 50.0, chain: AmplifierChain { gain_db: 65.6, n_add: 10.0, nu_if: 1e6 }, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimePoint {
    /// Δ/2π, Hz.
    pub detuning: f64,
    /// Fitted total lifetime, s.
    pub tau: f64,
    pub tau_sigma: f64,
    /// Readout rate at this detuning from the known coupling, s⁻¹.
    pub gamma_em: f64,
    /// Intrinsic lifetime after subtracting the readout rate, s.
    pub tau_i: f64,
    pub tau_i_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeVsDetuning {
    pub points: Vec<LifetimePoint>,
    /// Global fit of Γ(Δ), s.
    pub tau_i: f64,
    pub tau_i_sigma: f64,
    /// Fitted coupling, Hz.
    pub g_fit: f64,
    pub g_fit_sigma: f64,
    /// Weighted mean of the per-point subtraction estimates, s.
    pub tau_i_subtraction: f64,
    pub tau_i_subtraction_sigma: f64,
}

/// Default detunings: 0 to 3.2 MHz in 0.4 MHz steps, Hz.
pub fn default_detunings() -> Vec<f64> {
    (0..9).map(|i| 0.4e6 * i as f64).collect()
}

/// Fits Γ(Δ) to measured total lifetimes (Δ in Hz, τ in s). Returns (Γᵢ, g) fits.
pub fn fit_detuning_decay(
    detunings_hz: &[f64],
    tau: &[f64],
    tau_sigma: &[f64],
    kappa: f64,
) -> Result<crate::fitting::FitResult<f64>> {
    let n = detunings_hz.len();
    if n < 3 || tau.len() != n || tau_sigma.len() != n {
        return Err(Error::InsufficientData("lifetime fit needs at least three detunings".into()));
    }
    let model = DetuningDecay { kappa };
    let x: Vec<f64> = detunings_hz.iter().map(|d| TAU * d).collect();
    let y: Vec<f64> = tau.iter().map(|t| 1.0 / t).collect();
    let s: Vec<f64> = tau.iter().zip(tau_sigma).map(|(t, e)| e / (t * t)).collect();
    // The model is linear in (Γᵢ, g²); that solve seeds the nonlinear fit.
    let ones = vec![1.0; n];
    let lz: Vec<f64> = x.iter().map(|&d| model.lorentz(d)).collect();
    let w: Vec<f64> = s.iter().map(|s| 1.0 / s).collect();
    let (c, _) = weighted_lstsq(&[&ones, &lz], &y, &w)
        .ok_or_else(|| Error::SingularJacobian("detunings do not separate Γᵢ from the readout rate".into()))?;
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let init = [c[0].clamp(1e-3 * ymin, ymin), c[1].max(1e-6 * ymin * kappa).sqrt()];
    nls_fit(&model, &FitData::real(x, y).with_sigma(s), &init, &FitOptions::default())
}

/// Ringdowns at each detuning of device `dev` at bias `v`, then global and per-point
/// estimates of the intrinsic lifetime.
pub fn pipeline_lifetime_vs_detuning(
    dev: &DeviceRecord<f64>,
    v: f64,
    detunings_hz: &[f64],
    opts: &LifetimeOptions,
) -> Result<LifetimeVsDetuning> {
    let g = TAU * dev.g_at(v);
    let kappa = dev.microwave.kappa_total();
    let gamma_i = dev.mechanical.gamma_i_intrinsic_decay;
    let mut points = Vec::with_capacity(detunings_hz.len());
    for (k, &d) in detunings_hz.iter().enumerate() {
        let gem = em_readout_rate(g, kappa, TAU * d);
        let gamma = gamma_i + gem;
        let cfg = RingdownConfig::for_decay(gamma, opts.averages);
        let trace = synth_ringdown(gamma, opts.n0, &cfg, &opts.chain, true, opts.seed.wrapping_mul(1009).wrapping_add(k as u64))?;
        let fit = fit_ringdown(&trace)?;
        let rate = fit.params[1];
        let rate_sigma = fit.uncertainties[1];
        let gi = rate - gem;
        points.push(LifetimePoint {
            detuning: d,
            tau: 1.0 / rate,
            tau_sigma: rate_sigma / (rate * rate),
            gamma_em: gem,
            tau_i: 1.0 / gi,
            tau_i_sigma: rate_sigma / (gi * gi),
        });
    }
    let det: Vec<f64> = points.iter().map(|p| p.detuning).collect();
    let tau: Vec<f64> = points.iter().map(|p| p.tau).collect();
    let sig: Vec<f64> = points.iter().map(|p| p.tau_sigma).collect();
    let fit = fit_detuning_decay(&det, &tau, &sig, kappa)?;
    let (gi_fit, gi_sigma) = (fit.params[0], fit.uncertainties[0]);

    // Subtraction estimate: inverse-variance mean of Γ − Γ_em.
    let (mut sw, mut swx) = (0.0, 0.0);
    for p in &points {
        let rate_sigma = p.tau_sigma / (p.tau * p.tau);
        let w = 1.0 / (rate_sigma * rate_sigma);
        sw += w;
        swx += w * (1.0 / p.tau - p.gamma_em);
    }
    let gi_sub = swx / sw;
    let gi_sub_sigma = sw.recip().sqrt();
    Ok(LifetimeVsDetuning {
        points,
        tau_i: 1.0 / gi_fit,
        tau_i_sigma: gi_sigma / (gi_fit * gi_fit),
        g_fit: fit.params[1] / TAU,
        g_fit_sigma: fit.uncertainties[1] / TAU,
        tau_i_subtraction: 1.0 / gi_sub,
        tau_i_subtraction_sigma: gi_sub_sigma / (gi_sub * gi_sub),
    })
}
