//! Sideband thermometry: calibrated output-noise spectra, occupancy extraction with
//! noise-squashing correction, amplifier-line gain calibration and decay/jitter separation.
//!
//! Spectra are single-sided in detection frequency, in W/Hz. Angular frequencies are rad/s.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::consts::{hbar, k_b, planck, HBAR, K_B, PLANCK};
use crate::dynamics::{chi_m, chi_r, em_readout_rate, spring_shifted_frequency, BathSpec, TwoModeSystem};
use crate::error::{Error, Result};
use crate::linalg::{median, weighted_lstsq};
use crate::scalar::Real;

/// Amplification chain following the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierChain<T> {
    pub gain_db: T,
    /// Added noise, quanta.
    pub n_add: T,
    /// Detection IF bandwidth, Hz.
    pub nu_if: T,
}

impl<T: Real> AmplifierChain<T> {
    pub fn new(gain_db: T, n_add: T, nu_if: T) -> Result<Self> {
        if !(n_add >= T::zero()) || !(nu_if > T::zero()) || !gain_db.is_finite() {
            return Err(Error::Domain(format!(
                "amplifier chain needs n_add ≥ 0 and ν_IF > 0 (got n_add = {n_add}, ν_IF = {nu_if})"
            )));
        }
        Ok(Self { gain_db, n_add, nu_if })
    }

    /// G_A = 10^(𝒢/10).
    pub fn gain_linear(&self) -> T {
        T::lit(10.0).powf(self.gain_db / T::lit(10.0))
    }
}

/// A measured or synthetic noise spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdTrace {
    /// Cyclic frequencies, Hz.
    pub frequencies: Vec<f64>,
    /// Power spectral density, W/Hz.
    pub psd: Vec<f64>,
    /// Resolution bandwidth, Hz.
    pub rbw: f64,
    /// Number of averaged spectra per bin.
    pub averages: f64,
    /// Set when a background has been removed and negative values are legitimate.
    pub background_subtracted: bool,
}

impl PsdTrace {
    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.psd.len() {
            return Err(Error::Domain("frequency and psd columns differ in length".into()));
        }
        if !(self.averages > 0.0) {
            return Err(Error::Domain("averaging count must be positive".into()));
        }
        if !self.background_subtracted && self.psd.iter().any(|v| *v < 0.0) {
            return Err(Error::Domain("negative PSD values in a raw trace".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("frequency_Hz,psd_W_per_Hz\n");
        for (f, p) in self.frequencies.iter().zip(&self.psd) {
            s.push_str(&format!("{f:.6},{p:e}\n"));
        }
        s
    }

    /// Reads `frequency_Hz,psd_W_per_Hz` rows.
    pub fn from_csv(text: &str, rbw: f64, averages: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut frequencies = Vec::new();
        let mut psd = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let field = |k: usize, name: &str| -> Result<f64> {
                row.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Parse {
                    line: i + 2,
                    field: name.to_string(),
                    message: "expected a number".into(),
                })
            };
            frequencies.push(field(0, "frequency_Hz")?);
            psd.push(field(1, "psd_W_per_Hz")?);
        }
        let t = Self { frequencies, psd, rbw, averages, background_subtracted: false };
        t.validate()?;
        Ok(t)
    }
}

/// Areas of the three features in a driven-response spectrum, W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivenResponseAreas<T> {
    /// Coherent (delta-like) emission.
    pub s_delta: T,
    /// Broadband incoherent emission.
    pub s_bb: T,
    /// Narrow-band incoherent emission.
    pub s_nb: T,
}

impl<T: Real> DrivenResponseAreas<T> {
    pub fn new(s_delta: T, s_bb: T, s_nb: T) -> Result<Self> {
        if !(s_delta >= T::zero() && s_bb >= T::zero() && s_nb >= T::zero()) {
            return Err(Error::Domain("driven-response areas must be nonnegative".into()));
        }
        Ok(Self { s_delta, s_bb, s_nb })
    }
}

/// Split of a decay into intrinsic decay and dephasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates<T> {
    /// Energy decay rate Γ_d = Γᵢ + Γ_em.
    pub gamma_d: T,
    pub gamma_i: T,
}

/// Transfer weights of the three noise inputs to the output port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdWeights<T> {
    /// |r|², weight of the waveguide bath.
    pub waveguide: T,
    /// Weight of the internal microwave bath.
    pub microwave: T,
    /// Weight of the mechanical bath.
    pub mechanical: T,
}

/// Transfer weights at angular frequency `omega`. They sum to one.
pub fn psd_weights<T: Real>(sys: &TwoModeSystem<T>, omega: T) -> PsdWeights<T> {
    let cr = chi_r(&sys.mw, omega);
    let cm = chi_m(&sys.mech, omega);
    let g = sys.g_angular();
    let d = Complex::new(T::one(), T::zero()) + cm * cr * (g * g);
    let d2 = d.norm_sqr();
    let cr2 = cr.norm_sqr();
    let refl = Complex::new(T::one(), T::zero()) - cr * sys.mw.kappa_e / d;
    PsdWeights {
        waveguide: refl.norm_sqr(),
        microwave: sys.mw.kappa_e * sys.mw.kappa_i * cr2 / d2,
        mechanical: sys.mw.kappa_e * sys.mech.gamma_i_intrinsic_decay * g * g * cr2 * cm.norm_sqr() / d2,
    }
}

/// Output noise in quanta: n_add + ½ + n_wg·|r|² + n_b,r·B_r + n_b,m·B_m.
pub fn output_psd_quanta<T: Real>(sys: &TwoModeSystem<T>, baths: &BathSpec<T>, n_add: T, omega: T) -> T {
    let w = psd_weights(sys, omega);
    n_add + T::lit(0.5) + baths.n_wg * w.waveguide + baths.n_b_r * w.microwave + baths.n_b_m * w.mechanical
}

/// Calibrated output PSD (W/Hz) after the amplifier chain.
pub fn output_psd<T: Real>(sys: &TwoModeSystem<T>, baths: &BathSpec<T>, chain: &AmplifierChain<T>, omega: T) -> T {
    hbar::<T>() * omega * chain.gain_linear() * output_psd_quanta(sys, baths, chain.n_add, omega)
}

/// Mechanical emission Lorentzian in quanta: 4ñ(κₑ/κ)(Γ_em/γ)·(γ/2)²/(δ² + (γ/2)²).
pub fn mech_emission<T: Real>(delta: T, n_tilde_m: T, kappa_e: T, kappa: T, gamma_em: T, gamma_total: T) -> T {
    let h = gamma_total * T::lit(0.5);
    T::lit(4.0) * n_tilde_m * (kappa_e / kappa) * (gamma_em / gamma_total) * h * h / (delta * delta + h * h)
}

/// ∫ mech_emission dδ/2π = ñ(κₑ/κ)Γ_em.
pub fn mech_emission_area<T: Real>(n_tilde_m: T, kappa_e: T, kappa: T, gamma_em: T) -> T {
    n_tilde_m * kappa_e / kappa * gamma_em
}

/// n_b,m = ñ(Γ_em + Γᵢ)/Γᵢ.
pub fn bath_from_apparent<T: Real>(n_tilde_m: T, gamma_em: T, gamma_i: T) -> Result<T> {
    if !(gamma_i > T::zero()) {
        return Err(Error::Domain(format!("bath occupancy undefined for Γᵢ = {gamma_i}")));
    }
    Ok(n_tilde_m * (gamma_em + gamma_i) / gamma_i)
}

/// ñ = n_b,m·Γᵢ/(Γᵢ + Γ_em).
pub fn apparent_from_bath<T: Real>(n_b_m: T, gamma_em: T, gamma_i: T) -> T {
    n_b_m * gamma_i / (gamma_i + gamma_em)
}

/// Bose occupation at angular frequency `omega` and temperature `t`.
pub fn bose_occupation<T: Real>(omega: T, t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    (hbar::<T>() * omega / (k_b::<T>() * t)).exp_m1().recip()
}

/// η = x/(eˣ − 1) with x = hν/k_BT; η → 1 in the classical limit and 0 at T = 0.
pub fn thermal_factor_eta<T: Real>(nu: T, t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    let x = planck::<T>() * nu / (k_b::<T>() * t);
    if x == T::zero() {
        return T::one();
    }
    x / x.exp_m1()
}

/// Output power Δν_IF·k_B·G_A·(η(T)·T + T_HEMT) from a matched load at `t`.
pub fn johnson_power<T: Real>(t: T, nu: T, chain: &AmplifierChain<T>, t_hemt: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("temperature must be nonnegative, got {t}")));
    }
    Ok(chain.nu_if * k_b::<T>() * chain.gain_linear() * (thermal_factor_eta(nu, t) * t + t_hemt))
}

/// Joint estimate of line gain and amplifier noise temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCalibration {
    pub gain_db: f64,
    pub gain_db_sigma: f64,
    pub t_hemt: f64,
    pub t_hemt_sigma: f64,
    /// Row-major covariance of (gain_db, t_hemt).
    pub covariance: [f64; 4],
    pub n_points: usize,
}

/// Fits P(T) = Δν_IF·k_B·G_A·(η(T)·T + T_HEMT) for G_A and T_HEMT.
///
/// The model is linear in (G_A, G_A·T_HEMT), solved by weighted least squares; uncertainties
/// are propagated to dB and scaled by the reduced χ² when `sigma` is absent.
pub fn calibrate_gain(temps: &[f64], powers: &[f64], nu: f64, nu_if: f64, sigma: Option<&[f64]>) -> Result<GainCalibration> {
    let n = temps.len();
    if n < 3 || powers.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::InsufficientData("gain calibration needs ≥ 3 matched (T, P) points".into()));
    }
    let scale = nu_if * K_B;
    let x: Vec<f64> = temps.iter().map(|&t| thermal_factor_eta(nu, t) * t).collect();
    let ones = vec![1.0; n];
    let y: Vec<f64> = powers.iter().map(|p| p / scale).collect();
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|s| scale / s).collect(),
        None => vec![1.0; n],
    };
    let (c, mut cov) = weighted_lstsq(&[&x, &ones], &y, &w)
        .ok_or_else(|| Error::SingularJacobian("calibration temperatures are degenerate".into()))?;
    if sigma.is_none() {
        let chi2: f64 = (0..n).map(|i| (y[i] - c[0] * x[i] - c[1]).powi(2)).sum();
        let s2 = chi2 / (n - 2) as f64;
        cov.iter_mut().for_each(|v| *v *= s2);
    }
    let (ga, b) = (c[0], c[1]);
    if !(ga > 0.0) {
        return Err(Error::Inconsistent(format!("fitted linear gain {ga} is not positive")));
    }
    let gain_db = 10.0 * ga.log10();
    let t_hemt = b / ga;
    // Jacobian of (dB, T_H) with respect to (G_A, b).
    let j = [10.0 / (ga * std::f64::consts::LN_10), 0.0, -b / (ga * ga), 1.0 / ga];
    let mut out = [0.0; 4];
    for r in 0..2 {
        for s in 0..2 {
            let mut v = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    v += j[r * 2 + k] * cov[k * 2 + l] * j[s * 2 + l];
                }
            }
            out[r * 2 + s] = v;
        }
    }
    Ok(GainCalibration {
        gain_db,
        gain_db_sigma: out[0].sqrt(),
        t_hemt,
        t_hemt_sigma: out[3].sqrt(),
        covariance: out,
        n_points: n,
    })
}

/// Γ_d from γ/Γ_d = 1 + (S_bb/S_δ)(1 − S_nb/S_δ), and Γᵢ = Γ_d − Γ_em.
pub fn decay_from_driven_response<T: Real>(
    areas: &DrivenResponseAreas<T>,
    gamma_total: T,
    gamma_em: T,
) -> Result<DecayRates<T>> {
    if !(areas.s_delta > T::zero()) {
        return Err(Error::Domain("coherent emission area must be positive".into()));
    }
    if areas.s_nb > areas.s_delta {
        return Err(Error::Inconsistent(format!(
            "narrow-band area {} exceeds coherent area {}",
            areas.s_nb, areas.s_delta
        )));
    }
    let ratio = T::one() + areas.s_bb / areas.s_delta * (T::one() - areas.s_nb / areas.s_delta);
    let gamma_d = gamma_total / ratio;
    let gamma_i = gamma_d - gamma_em;
    if gamma_i < T::zero() {
        return Err(Error::Inconsistent(format!(
            "areas imply Γ_d = {gamma_d} below Γ_em = {gamma_em}; intrinsic decay would be negative"
        )));
    }
    Ok(DecayRates { gamma_d, gamma_i })
}

/// Mechanical line from the driven-response step, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    /// Observed (spring-shifted) center.
    pub center: f64,
    /// Total linewidth γ.
    pub gamma: f64,
}

impl LineParams {
    /// The line predicted by the system model.
    pub fn predicted(sys: &TwoModeSystem<f64>) -> Self {
        let delta = sys.cavity_detuning();
        let gamma_em = em_readout_rate(sys.g_angular(), sys.kappa(), delta);
        Self { center: spring_shifted_frequency(sys, delta), gamma: sys.mech.gamma_i_intrinsic_decay + gamma_em }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyEstimate {
    pub n_tilde_m: f64,
    pub n_tilde_m_sigma: f64,
    pub n_b_m: f64,
    pub n_b_m_sigma: f64,
    /// Internal microwave bath; NaN for estimators that do not fit it.
    pub n_b_r: f64,
    pub n_b_r_sigma: f64,
    /// Fitted floor, quanta.
    pub background: f64,
    pub gamma_em: f64,
    pub iterations: usize,
}

/// Off-resonant mask half-width, in linewidths.
const OFF_RESONANT: f64 = 5.0;

fn calibrated_quanta(trace: &PsdTrace, chain: &AmplifierChain<f64>) -> Vec<(f64, f64)> {
    let ga = chain.gain_linear();
    trace
        .frequencies
        .iter()
        .zip(&trace.psd)
        .map(|(&f, &s)| {
            let w = std::f64::consts::TAU * f;
            (w, s / (HBAR * w * ga))
        })
        .collect()
}

/// Occupancy extraction from the full output-noise model.
///
/// The calibrated trace (in quanta) is fitted as c + n·B_m(ω) + n_b,r·B_r(ω) where the basis
/// uses the measured line: the mechanical decay is set to γ − Γ_em and the mechanics is moved
/// so that the spring-shifted center matches `line.center`. The floor c is the median of the
/// residual over bins more than 5γ from the line, iterated to self-consistency with
/// weights √N_avg/model. Including B_r accounts for the squashing dip that the microwave bath
/// produces under the mechanical line.
pub fn extract_occupancy(
    trace: &PsdTrace,
    sys: &TwoModeSystem<f64>,
    chain: &AmplifierChain<f64>,
    line: &LineParams,
    n_wg: f64,
) -> Result<OccupancyEstimate> {
    trace.validate()?;
    let delta = sys.cavity_detuning();
    let gamma_em = em_readout_rate(sys.g_angular(), sys.kappa(), delta);
    let gb = line.gamma - gamma_em;
    if !(gb > 0.0) {
        return Err(Error::Inconsistent(format!(
            "line width {} rad/s is below the readout rate {gamma_em} rad/s",
            line.gamma
        )));
    }
    let mut basis = *sys;
    basis.mech.gamma_i_intrinsic_decay = gb;
    basis.mech.omega_m += line.center - spring_shifted_frequency(sys, delta);

    let pts = calibrated_quanta(trace, chain);
    let n = pts.len();
    let mut y = Vec::with_capacity(n);
    let mut bm = Vec::with_capacity(n);
    let mut br = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for &(w, q) in &pts {
        let wt = psd_weights(&basis, w);
        y.push(q - n_wg * wt.waveguide);
        bm.push(wt.mechanical);
        br.push(wt.microwave);
        off.push((w - line.center).abs() > OFF_RESONANT * line.gamma);
    }
    if off.iter().filter(|&&o| o).count() < 3 || n - off.iter().filter(|&&o| o).count() < 3 {
        return Err(Error::InsufficientData("trace must cover the line and its off-resonant wings".into()));
    }
    let sqrt_avg = trace.averages.sqrt();
    let off_median = |r: &[f64]| median(&r.iter().zip(&off).filter(|(_, &o)| o).map(|(v, _)| *v).collect::<Vec<_>>());

    let mut c = off_median(&y);
    let mut model: Vec<f64> = y.clone();
    let mut coef = vec![0.0, 0.0];
    let mut iterations = 0;
    let mut w = vec![0.0; n];
    for it in 0..100 {
        iterations = it + 1;
        for i in 0..n {
            w[i] = sqrt_avg / model[i].abs().max(1e-12);
        }
        let yc: Vec<f64> = y.iter().map(|v| v - c).collect();
        let (cf, _) = weighted_lstsq(&[&bm, &br], &yc, &w)
            .ok_or_else(|| Error::SingularJacobian("mechanical and microwave bases are degenerate".into()))?;
        coef = cf;
        let resid: Vec<f64> = (0..n).map(|i| y[i] - coef[0] * bm[i] - coef[1] * br[i]).collect();
        let c_new = off_median(&resid);
        for i in 0..n {
            model[i] = c_new + coef[0] * bm[i] + coef[1] * br[i];
        }
        let done = (c_new - c).abs() < 1e-13;
        c = c_new;
        if done {
            break;
        }
    }
    let ones = vec![1.0; n];
    let (_, cov) = weighted_lstsq(&[&ones, &bm, &br], &y, &w)
        .ok_or_else(|| Error::SingularJacobian("floor and bath bases are degenerate".into()))?;
    let to_tilde = gb / line.gamma;
    let gamma_i = sys.mech.gamma_i_intrinsic_decay;
    let n_tilde_m = coef[0] * to_tilde;
    let n_tilde_m_sigma = cov[4].sqrt() * to_tilde;
    Ok(OccupancyEstimate {
        n_tilde_m,
        n_tilde_m_sigma,
        n_b_m: bath_from_apparent(n_tilde_m, gamma_em, gamma_i)?,
        n_b_m_sigma: bath_from_apparent(n_tilde_m_sigma, gamma_em, gamma_i)?,
        n_b_r: coef[1],
        n_b_r_sigma: cov[8].sqrt(),
        background: c,
        gamma_em,
        iterations,
    })
}

/// Reference estimator that ignores squashing: a bare Lorentzian on a flat floor, fitted
/// over the bins within 50γ of the line.
pub fn extract_occupancy_naive(
    trace: &PsdTrace,
    sys: &TwoModeSystem<f64>,
    chain: &AmplifierChain<f64>,
    line: &LineParams,
) -> Result<OccupancyEstimate> {
    trace.validate()?;
    let delta = sys.cavity_detuning();
    let gamma_em = em_readout_rate(sys.g_angular(), sys.kappa(), delta);
    let kappa = sys.kappa();
    let mut y = Vec::new();
    let mut sm = Vec::new();
    let mut off = Vec::new();
    for (w, q) in calibrated_quanta(trace, chain) {
        let d = w - line.center;
        if d.abs() > 50.0 * line.gamma {
            continue;
        }
        y.push(q);
        sm.push(mech_emission(d, 1.0, sys.mw.kappa_e, kappa, gamma_em, line.gamma));
        off.push(d.abs() > OFF_RESONANT * line.gamma);
    }
    let n_off = off.iter().filter(|&&o| o).count();
    if n_off < 3 || y.len() - n_off < 3 {
        return Err(Error::InsufficientData("trace must cover the line and its off-resonant wings".into()));
    }
    let off_median = |r: &[f64]| median(&r.iter().zip(&off).filter(|(_, &o)| o).map(|(v, _)| *v).collect::<Vec<_>>());
    let ss: f64 = sm.iter().map(|v| v * v).sum();
    let mut c = off_median(&y);
    let mut coef = 0.0;
    let mut iterations = 0;
    for it in 0..100 {
        iterations = it + 1;
        coef = sm.iter().zip(&y).map(|(s, v)| s * (v - c)).sum::<f64>() / ss;
        let resid: Vec<f64> = y.iter().zip(&sm).map(|(v, s)| v - coef * s).collect();
        let c_new = off_median(&resid);
        let done = (c_new - c).abs() < 1e-14;
        c = c_new;
        if done {
            break;
        }
    }
    let resid: Vec<f64> = y.iter().zip(&sm).map(|(v, s)| v - c - coef * s).collect();
    let s2 = resid.iter().map(|r| r * r).sum::<f64>() / (y.len() - 2) as f64;
    let sigma = (s2 / ss).sqrt();
    let gamma_i = sys.mech.gamma_i_intrinsic_decay;
    Ok(OccupancyEstimate {
        n_tilde_m: coef,
        n_tilde_m_sigma: sigma,
        n_b_m: bath_from_apparent(coef, gamma_em, gamma_i)?,
        n_b_m_sigma: bath_from_apparent(sigma, gamma_em, gamma_i)?,
        n_b_r: f64::NAN,
        n_b_r_sigma: f64::NAN,
        background: c,
        gamma_em,
        iterations,
    })
}

/// hν/k_B, the temperature scale of a mode at cyclic frequency `nu`.
pub fn quantum_temperature(nu: f64) -> f64 {
    PLANCK * nu / K_B
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{MechanicalMode, MicrowaveMode};
    use std::f64::consts::TAU;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn system(g_hz: f64, detuning_hz: f64) -> TwoModeSystem<f64> {
        let mw = MicrowaveMode::new(TAU * 5.087e9, TAU * 520e3, TAU * 800e3).unwrap();
        let mech = MechanicalMode::new(TAU * 5.087e9, TAU * 600.0, TAU * 600.0).unwrap();
        TwoModeSystem::new(mw, mech, g_hz).with_detuning(TAU * detuning_hz)
    }

    fn chain() -> AmplifierChain<f64> {
        AmplifierChain::new(65.6, 10.0, 1e3).unwrap()
    }

    #[test]
    fn flat_floor_without_coupling() {
        let sys = system(0.0, 0.0);
        let baths = BathSpec::new(0.0, 0.0, 0.0).unwrap();
        let ch = chain();
        for df in [-3e6, 0.0, 1e5] {
            let w = TAU * (5.087e9 + df);
            let s = output_psd(&sys, &baths, &ch, w);
            assert!(rel(s, HBAR * w * ch.gain_linear() * 10.5) < 1e-14);
        }
    }

    #[test]
    fn microwave_bath_lorentzian() {
        let sys = system(0.0, 0.0);
        let baths = BathSpec::new(0.0, 0.3, 0.0).unwrap();
        let kappa = TAU * 1.32e6;
        let (ki, ke) = (TAU * 520e3, TAU * 800e3);
        for df in [0.0, 4e5, -1.1e6] {
            let w = TAU * (5.087e9 + df);
            let d = TAU * df;
            let expect = 10.0 + 0.5 + 0.3 * ke * ki / (d * d + kappa * kappa / 4.0);
            assert!(rel(output_psd_quanta(&sys, &baths, 10.0, w), expect) < 1e-12);
        }
    }

    #[test]
    fn weights_are_unitary() {
        let sys = system(150e3, 3e5);
        for df in [-2e6, -1e4, 0.0, 2e3, 7e5] {
            let w = psd_weights(&sys, TAU * (5.087e9 + df));
            assert!((w.waveguide + w.microwave + w.mechanical - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mechanical_term_area_matches_closed_form() {
        // Weak coupling so the mechanical term is a Lorentzian of width γᵢ + Γ_em.
        let sys = system(20e3, 2e6);
        let delta = sys.cavity_detuning();
        let gem = em_readout_rate(sys.g_angular(), sys.kappa(), delta);
        let gamma = sys.mech.gamma_i_intrinsic_decay + gem;
        let center = spring_shifted_frequency(&sys, delta);
        let (n, half) = (400_001, 2000.0 * gamma);
        let h = 2.0 * half / (n - 1) as f64;
        let mut area = 0.0;
        for k in 0..n {
            let w = center - half + h * k as f64;
            let wt = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            area += wt * psd_weights(&sys, w).mechanical;
        }
        area *= h / TAU;
        let n_tilde = apparent_from_bath(1.0, gem, sys.mech.gamma_i_intrinsic_decay);
        let closed = mech_emission_area(n_tilde, sys.mw.kappa_e, sys.kappa(), gem);
        assert!(rel(area, closed) < 1e-3, "{area} vs {closed}");
    }

    #[test]
    fn emission_lorentzian_values() {
        let peak = mech_emission(0.0, 0.2, 8.0, 13.0, 3.0, 5.0);
        assert!(rel(peak, 4.0 * 0.2 * 8.0 / 13.0 * 0.6) < 1e-15);
        assert_eq!(mech_emission(1.0, 0.0, 8.0, 13.0, 3.0, 5.0), 0.0);
        let n = 2_000_001;
        let half = 4e4;
        let h = 2.0 * half / (n - 1) as f64;
        let sum: f64 = (0..n).map(|k| mech_emission(-half + h * k as f64, 0.2, 8.0, 13.0, 3.0, 5.0)).sum::<f64>() * h;
        // Tails beyond ±half contribute 2/π·(γ/2)/half of the total.
        let tail = 1.0 - 2.0 / std::f64::consts::PI * 2.5 / half;
        assert!(rel(sum / TAU, mech_emission_area(0.2, 8.0, 13.0, 3.0) * tail) < 1e-6);
    }

    #[test]
    fn apparent_and_bath_occupancy() {
        assert!(rel(bath_from_apparent(0.1, 2.0, 2.0).unwrap(), 0.2) < 1e-15);
        assert_eq!(bath_from_apparent(0.3, 0.0, 1.0).unwrap(), 0.3);
        assert!(bath_from_apparent(0.3, 1.0, 0.0).is_err());
    }

    #[test]
    fn eta_values() {
        assert!((thermal_factor_eta(5e9, 1.0_f64) - 0.885).abs() < 1e-3);
        assert!((thermal_factor_eta(1e3, 300.0_f64) - 1.0).abs() < 1e-9);
        assert_eq!(thermal_factor_eta(5e9, 0.0), 0.0);
        assert!(rel(thermal_factor_eta(5e9, 1.0), 0.884_813) < 1e-5);
    }

    #[test]
    fn gain_calibration_exact() {
        let ch = AmplifierChain::new(65.6, 0.0, 1e6).unwrap();
        let temps: Vec<f64> = (0..9).map(|i| 0.73 + 0.04 * i as f64).collect();
        let p: Vec<f64> = temps.iter().map(|&t| johnson_power(t, 5.1e9, &ch, 2.5).unwrap()).collect();
        let cal = calibrate_gain(&temps, &p, 5.1e9, 1e6, None).unwrap();
        assert!((cal.gain_db - 65.6).abs() < 1e-9);
        assert!((cal.t_hemt - 2.5).abs() < 1e-9);
    }

    #[test]
    fn decay_split() {
        let a = DrivenResponseAreas::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(decay_from_driven_response(&a, 10.0, 4.0).unwrap().gamma_d, 10.0);
        let a = DrivenResponseAreas::new(1.0, 5.0, 1.0).unwrap();
        assert_eq!(decay_from_driven_response(&a, 10.0, 4.0).unwrap().gamma_d, 10.0);
        let a = DrivenResponseAreas::new(1.0, 1.0, 0.5).unwrap();
        let r = decay_from_driven_response(&a, 9.0, 2.0).unwrap();
        assert!(rel(r.gamma_d, 6.0) < 1e-15 && rel(r.gamma_i, 4.0) < 1e-15);
        let a = DrivenResponseAreas::new(1.0, 10.0, 0.0).unwrap();
        assert!(matches!(decay_from_driven_response(&a, 9.0, 2.0), Err(Error::Inconsistent(_))));
        assert!(DrivenResponseAreas::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = PsdTrace {
            frequencies: vec![5.0e9, 5.0e9 + 10.0],
            psd: vec![1.5e-18, 2.25e-18],
            rbw: 10.0,
            averages: 100.0,
            background_subtracted: false,
        };
        let back = PsdTrace::from_csv(&t.to_csv(), 10.0, 100.0).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn quantum_temperature_5ghz() {
        assert!(rel(quantum_temperature(5e9), 0.23996) < 1e-4);
    }
}
