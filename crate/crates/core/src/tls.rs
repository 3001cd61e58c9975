//! Two-level-system defects in the standard tunneling model: energies, electric and strain
//! couplings, saturable loss and telegraph frequency noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consts::{hbar, k_b, planck};
use crate::error::{Error, Result};
use crate::fitting::TlsLaw;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsParams<T> {
    /// Tunneling energy Δ, J.
    pub delta_tunneling: T,
    /// Asymmetry energy ε, J.
    pub epsilon_asym: T,
    /// Electric dipole moment, C·m.
    pub dipole_p: T,
    /// Deformation potential, J.
    pub deformation_gamma: T,
    /// ε/E used in the shift and strain-coupling formulas.
    pub ratio_eps_over_e: T,
}

impl<T: Real> TlsParams<T> {
    pub fn new(delta_tunneling: T, epsilon_asym: T, dipole_p: T, deformation_gamma: T) -> Self {
        Self { delta_tunneling, epsilon_asym, dipole_p, deformation_gamma, ratio_eps_over_e: T::lit(0.5) }
    }

    /// Ratio ε/E implied by the energies themselves.
    pub fn intrinsic_ratio(&self) -> T {
        let e = tls_energy(self);
        if e == T::zero() {
            T::zero()
        } else {
            self.epsilon_asym / e
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio_eps_over_e >= T::zero() && self.ratio_eps_over_e <= T::one()) {
            return Err(Error::Domain(format!("ε/E must lie in [0, 1], got {}", self.ratio_eps_over_e)));
        }
        Ok(())
    }
}

/// E = √(Δ² + ε²).
pub fn tls_energy<T: Real>(p: &TlsParams<T>) -> T {
    p.delta_tunneling.hypot(p.epsilon_asym)
}

/// Stark shift δE/h = 2(ε/E)·p·F in Hz for a field `e_field` in V/m.
pub fn stark_shift<T: Real>(p: &TlsParams<T>, e_field: T) -> T {
    T::lit(2.0) * p.ratio_eps_over_e * p.dipole_p * e_field / planck::<T>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainMode<T> {
    /// rad/s.
    pub omega_m: T,
    /// Young's modulus, Pa.
    pub youngs_modulus: T,
    /// Strain mode volume, m³.
    pub strain_mode_volume: T,
}

/// Silicon ⟨110⟩ Young's modulus, Pa.
pub const YOUNGS_MODULUS_SI: f64 = 170e9;

/// S_zpf = √(ħω_m/(2𝓔V_m)).
pub fn strain_zpf<T: Real>(mode: &StrainMode<T>) -> Result<T> {
    if !(mode.omega_m > T::zero() && mode.youngs_modulus > T::zero() && mode.strain_mode_volume > T::zero()) {
        return Err(Error::Domain("strain mode fields must be positive".into()));
    }
    Ok((hbar::<T>() * mode.omega_m / (T::lit(2.0) * mode.youngs_modulus * mode.strain_mode_volume)).sqrt())
}

/// Strain coupling λ in Hz: hλ = γ_def·(ε/E)·S_zpf.
pub fn strain_coupling<T: Real>(p: &TlsParams<T>, s_zpf: T) -> T {
    p.deformation_gamma * p.ratio_eps_over_e * s_zpf / planck::<T>()
}

/// Dipole coupling in Hz: h·g = p·E_zpf.
pub fn dipole_coupling<T: Real>(p: &TlsParams<T>, e_zpf: T) -> T {
    p.dipole_p * e_zpf / planck::<T>()
}

/// Strain coupling evaluated with and without the ε/E factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainCouplingReport {
    pub s_zpf: f64,
    /// λ with the configured ε/E, Hz.
    pub lambda_with_ratio: f64,
    /// λ with ε/E = 1, Hz.
    pub lambda_without_ratio: f64,
    pub assumptions: Vec<String>,
}

pub fn strain_coupling_report(p: &TlsParams<f64>, mode: &StrainMode<f64>) -> Result<StrainCouplingReport> {
    p.validate()?;
    let s = strain_zpf(mode)?;
    let full = TlsParams { ratio_eps_over_e: 1.0, ..*p };
    Ok(StrainCouplingReport {
        s_zpf: s,
        lambda_with_ratio: strain_coupling(p, s),
        lambda_without_ratio: strain_coupling(&full, s),
        assumptions: vec![
            format!("Young's modulus {:.3e} Pa", mode.youngs_modulus),
            format!("strain mode volume {:.3e} m^3", mode.strain_mode_volume),
            format!("deformation potential {:.4e} J", p.deformation_gamma),
            format!("eps/E = {} in the first value, 1 in the second", p.ratio_eps_over_e),
        ],
    })
}

/// TLS-limited mechanical linewidth model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsLinewidthModel<T> {
    /// Participation ratio F.
    pub f_participation: T,
    /// TLS loss rate, Hz.
    pub gamma_tls: T,
    /// Critical phonon number.
    pub n_c: T,
    pub beta: T,
    /// Residual linewidth, Hz.
    pub gamma_0: T,
    /// Temperature, K.
    pub temperature: T,
    /// Mode frequency, rad/s.
    pub omega: T,
}

impl<T: Real> TlsLinewidthModel<T> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.f_participation, self.gamma_tls, self.n_c, self.gamma_0, self.temperature, self.omega];
        if nonneg.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::Domain("TLS linewidth parameters must be nonnegative".into()));
        }
        if !(self.beta > T::zero() && self.beta <= T::lit(2.0)) {
            return Err(Error::Domain(format!("β must lie in (0, 2], got {}", self.beta)));
        }
        Ok(())
    }

    /// tanh(ħω/2k_BT), 1 at T = 0.
    pub fn thermal_factor(&self) -> T {
        if self.temperature <= T::zero() {
            return T::one();
        }
        (hbar::<T>() * self.omega / (T::lit(2.0) * k_b::<T>() * self.temperature)).tanh()
    }

    /// Prefactor A of the fitting model for the chosen law.
    pub fn amplitude(&self, law: TlsLaw) -> T {
        let fg = self.f_participation * self.gamma_tls;
        match law {
            TlsLaw::Saturating => fg * self.thermal_factor(),
            TlsLaw::Growing => fg / self.thermal_factor(),
        }
    }
}

/// Linewidth (Hz) at phonon number `n`.
///
/// `Saturating`: F·γ_TLS·tanh(ħω/2k_BT)/√(1 + (n/n_c)^β) + γ₀.
/// `Growing`: F·γ_TLS/tanh(ħω/2k_BT)·√(1 + (n/n_c)^β) + γ₀.
pub fn saturable_linewidth<T: Real>(model: &TlsLinewidthModel<T>, n: T, law: TlsLaw) -> Result<T> {
    if !(n >= T::zero()) {
        return Err(Error::Domain(format!("phonon number must be nonnegative, got {n}")));
    }
    model.validate()?;
    let s = T::one() + if n == T::zero() { T::zero() } else { (n / model.n_c).powf(model.beta) };
    let root = match law {
        TlsLaw::Saturating => s.sqrt().recip(),
        TlsLaw::Growing => s.sqrt(),
    };
    Ok(model.amplitude(law) * root + model.gamma_0)
}

/// Two-state fluctuator shifting the mode frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelegraphFluctuator {
    /// Rate 0 → 1, Hz.
    pub rate_up: f64,
    /// Rate 1 → 0, Hz.
    pub rate_down: f64,
    /// Frequency offset in state 1, Hz.
    pub dispersive_shift: f64,
}

impl TelegraphFluctuator {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_up >= 0.0 && self.rate_down >= 0.0 && self.rate_up.is_finite() && self.rate_down.is_finite()) {
            return Err(Error::Domain("switching rates must be finite and nonnegative".into()));
        }
        if self.rate_up + self.rate_down == 0.0 {
            return Err(Error::Domain("at least one switching rate must be positive".into()));
        }
        Ok(())
    }

    /// Stationary probability of state 1.
    pub fn stationary_occupancy(&self) -> f64 {
        self.rate_up / (self.rate_up + self.rate_down)
    }
}

/// Exact switching history over `[0, duration)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchHistory {
    pub initial_state: u8,
    /// Times at which the state flips.
    pub switch_times: Vec<f64>,
    pub duration: f64,
}

impl SwitchHistory {
    /// State at time `t`.
    pub fn state_at(&self, t: f64) -> u8 {
        let flips = self.switch_times.partition_point(|&s| s <= t);
        self.initial_state ^ (flips % 2) as u8
    }

    /// Completed dwell times in each state (excluding the censored first and last).
    pub fn dwell_times(&self) -> [Vec<f64>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        // The first complete dwell follows the first flip.
        let mut state = self.initial_state;
        for w in self.switch_times.windows(2) {
            state ^= 1;
            out[state as usize].push(w[1] - w[0]);
        }
        out
    }
}

/// Continuous-time two-state Markov chain drawn with exponential waiting times.
pub fn telegraph_switches<R: Rng>(tf: &TelegraphFluctuator, duration: f64, rng: &mut R) -> Result<SwitchHistory> {
    tf.validate()?;
    let p1 = tf.stationary_occupancy();
    let mut state: u8 = if rng.random::<f64>() < p1 { 1 } else { 0 };
    let initial_state = state;
    let mut t = 0.0;
    let mut switch_times = Vec::new();
    loop {
        let rate = if state == 0 { tf.rate_up } else { tf.rate_down };
        if rate == 0.0 {
            break;
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate;
        if t >= duration {
            break;
        }
        switch_times.push(t);
        state ^= 1;
    }
    Ok(SwitchHistory { initial_state, switch_times, duration })
}

/// Sampled center-frequency series.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphTrace {
    pub times: Vec<f64>,
    pub states: Vec<u8>,
    /// Hz.
    pub frequencies: Vec<f64>,
}

impl TelegraphTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s,frequency_Hz\n");
        for (t, f) in self.times.iter().zip(&self.frequencies) {
            s.push_str(&format!("{t:e},{f:.6}\n"));
        }
        s
    }

    pub fn occupancy(&self) -> f64 {
        self.states.iter().map(|&s| s as f64).sum::<f64>() / self.states.len().max(1) as f64
    }
}

/// Samples f0 + state·shift every `dt` for `duration` seconds. Deterministic for a seed.
pub fn telegraph_trace(tf: &TelegraphFluctuator, f0: f64, duration: f64, dt: f64, seed: u64) -> Result<TelegraphTrace> {
    if !(dt > 0.0 && duration > 0.0) {
        return Err(Error::Domain("duration and dt must be positive".into()));
    }
    let max_rate = tf.rate_up.max(tf.rate_down);
    if dt * max_rate > 0.1 {
        log::warn!("sampling step {dt} s is not short compared to the switching time {} s", 1.0 / max_rate);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hist = telegraph_switches(tf, duration, &mut rng)?;
    let n = (duration / dt).floor() as usize;
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut frequencies = Vec::with_capacity(n);
    let mut k = 0;
    let mut state = hist.initial_state;
    for i in 0..n {
        let t = i as f64 * dt;
        while k < hist.switch_times.len() && hist.switch_times[k] <= t {
            state ^= 1;
            k += 1;
        }
        times.push(t);
        states.push(state);
        frequencies.push(f0 + state as f64 * tf.dispersive_shift);
    }
    Ok(TelegraphTrace { times, states, frequencies })
}
