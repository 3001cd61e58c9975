//! Device parametrization: modes, coupling law, nanowire inductor and device records.

use serde::{Deserialize, Serialize};

use crate::consts::hbar;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fractional tuning beyond which [`tuned_frequency`] warns.
pub const TUNING_ENVELOPE: f64 = 0.06;

/// Mechanical mode. All rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode<T> {
    pub omega_m: T,
    /// Intrinsic energy decay rate Γᵢ.
    pub gamma_i_intrinsic_decay: T,
    /// Total linewidth γ, including dephasing from frequency jitter.
    pub gamma_total_linewidth: T,
    /// Effective mass (kg).
    pub m_eff: Option<T>,
    /// Zero-point displacement (m).
    pub x_zpf: Option<T>,
}

impl<T: Real> MechanicalMode<T> {
    pub fn new(omega_m: T, gamma_i: T, gamma_total: T) -> Result<Self> {
        let mode = Self {
            omega_m,
            gamma_i_intrinsic_decay: gamma_i,
            gamma_total_linewidth: gamma_total,
            m_eff: None,
            x_zpf: None,
        };
        mode.validate()?;
        Ok(mode)
    }

    /// Sets the effective mass and the matching zero-point displacement.
    pub fn with_mass(mut self, m_eff: T) -> Result<Self> {
        if !(m_eff > T::zero()) {
            return Err(Error::Domain("m_eff must be positive".into()));
        }
        self.m_eff = Some(m_eff);
        self.x_zpf = Some(zero_point_displacement(m_eff, self.omega_m));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_m > T::zero()) {
            return Err(Error::Domain("omega_m must be positive".into()));
        }
        if !(self.gamma_i_intrinsic_decay >= T::zero()) {
            return Err(Error::Domain("gamma_i_intrinsic_decay must be >= 0".into()));
        }
        if !(self.gamma_total_linewidth >= self.gamma_i_intrinsic_decay) {
            return Err(Error::Domain(
                "gamma_total_linewidth must be >= gamma_i_intrinsic_decay".into(),
            ));
        }
        Ok(())
    }
}

/// x_zpf = sqrt(ħ / (2 m ω)).
pub fn zero_point_displacement<T: Real>(m_eff: T, omega_m: T) -> T {
    (hbar::<T>() / (T::lit(2.0) * m_eff * omega_m)).sqrt()
}

/// V_zpf = sqrt(ħ ω / (2 C)).
pub fn zero_point_voltage<T: Real>(omega_r: T, c_total: T) -> T {
    (hbar::<T>() * omega_r / (T::lit(2.0) * c_total)).sqrt()
}

/// Microwave mode. All rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrowaveMode<T> {
    pub omega_r: T,
    pub kappa_i: T,
    pub kappa_e: T,
    /// Total capacitance (F).
    pub c_total: Option<T>,
    /// Zero-point voltage (V).
    pub v_zpf: Option<T>,
}

impl<T: Real> MicrowaveMode<T> {
    pub fn new(omega_r: T, kappa_i: T, kappa_e: T) -> Result<Self> {
        let mode = Self {
            omega_r,
            kappa_i,
            kappa_e,
            c_total: None,
            v_zpf: None,
        };
        mode.validate()?;
        Ok(mode)
    }

    /// Sets the total capacitance and the matching zero-point voltage.
    pub fn with_capacitance(mut self, c_total: T) -> Result<Self> {
        if !(c_total > T::zero()) {
            return Err(Error::Domain("C_total must be positive".into()));
        }
        self.c_total = Some(c_total);
        self.v_zpf = Some(zero_point_voltage(self.omega_r, c_total));
        Ok(self)
    }

    /// κ = κᵢ + κₑ.
    #[inline]
    pub fn kappa_total(&self) -> T {
        self.kappa_i + self.kappa_e
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > T::zero()) {
            return Err(Error::Domain("omega_r must be positive".into()));
        }
        if !(self.kappa_i >= T::zero() && self.kappa_e >= T::zero()) {
            return Err(Error::Domain("kappa_i and kappa_e must be >= 0".into()));
        }
        Ok(())
    }
}

/// Linear coupling law g(V) = g0·(V − V_offset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingLaw<T> {
    /// Slope in cyclic Hz per volt.
    pub g0: T,
    /// Voltage of zero coupling (V).
    pub v_offset: T,
}

/// Coupling rate (cyclic Hz) at bias `v_dc`. The sign is kept.
#[inline]
pub fn coupling_at_voltage<T: Real>(law: &CouplingLaw<T>, v_dc: T) -> T {
    law.g0 * (v_dc - law.v_offset)
}

/// Superconducting nanowire used as the resonator inductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NanowireInductor<T> {
    /// Sheet kinetic inductance (H/sq).
    pub l_sheet: T,
    pub length: T,
    pub width: T,
    /// Current scale of the quadratic nonlinearity (A).
    pub i_star: T,
    /// Magnetic tuning constant (cyclic Hz/T²).
    pub k_tune: T,
}

impl<T: Real> NanowireInductor<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        if !(self.l_sheet > z && self.length > z && self.width > z && self.i_star > z && self.k_tune > z) {
            return Err(Error::Domain("nanowire parameters must be positive".into()));
        }
        if self.width > self.length {
            return Err(Error::Domain("nanowire width exceeds length".into()));
        }
        Ok(())
    }
}

/// L_k = L_sheet·(8/π²)·(length/width).
pub fn kinetic_inductance<T: Real>(ind: &NanowireInductor<T>) -> Result<T> {
    if !(ind.width > T::zero() && ind.length > T::zero() && ind.l_sheet > T::zero()) {
        return Err(Error::Domain("nanowire geometry must be positive".into()));
    }
    let pi = T::PI();
    Ok(ind.l_sheet * T::lit(8.0) / (pi * pi) * (ind.length / ind.width))
}

/// L(I) = L0·(1 + (I/I*)²).
#[inline]
pub fn inductance_vs_current<T: Real>(l_k0: T, current: T, i_star: T) -> T {
    let r = current / i_star;
    l_k0 * (T::one() + r * r)
}

/// Fractional downward tuning k·B²/f_max.
pub fn fractional_tuning<T: Real>(omega_max: T, k_tune: T, b: T) -> T {
    let f_max = omega_max / T::two_pi();
    k_tune * b * b / f_max
}

/// Resonance under in-plane field: 2π·(f_max − k·B²). Warns beyond the 6 % envelope.
pub fn tuned_frequency<T: Real>(omega_max: T, k_tune: T, b: T) -> T {
    let frac = fractional_tuning(omega_max, k_tune, b);
    if frac.abs() > T::lit(TUNING_ENVELOPE) {
        log::warn!(
            "fractional tuning {:.3} exceeds the validated {:.0}% envelope",
            frac.as_f64(),
            TUNING_ENVELOPE * 100.0
        );
    }
    let f_max = omega_max / T::two_pi();
    T::two_pi() * (f_max - k_tune * b * b)
}

/// Field magnitude that tunes `omega_max` down to `omega_target`, if reachable.
pub fn field_for_frequency<T: Real>(omega_max: T, k_tune: T, omega_target: T) -> Option<T> {
    let df = (omega_max - omega_target) / T::two_pi();
    if df < T::zero() || !(k_tune > T::zero()) {
        return None;
    }
    Some((df / k_tune).sqrt())
}

/// One device: modes, coupling law, fridge temperature and lifetimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord<T> {
    pub id: String,
    pub mechanical: MechanicalMode<T>,
    pub microwave: MicrowaveMode<T>,
    pub coupling: CouplingLaw<T>,
    /// Mixing-chamber temperature (K).
    pub t_mxc: T,
    /// Longest measured energy-decay lifetime (s).
    pub tau_d_max: T,
    /// Longest measured coherence time (s).
    pub tau_c_max: T,
    /// Magnetic tuning constant (cyclic Hz/T²); a fitted value, absent if unknown.
    pub k_tune: Option<T>,
}

impl<T: Real> DeviceRecord<T> {
    /// Coupling rate at bias `v_dc`, cyclic Hz.
    pub fn g_at(&self, v_dc: T) -> T {
        coupling_at_voltage(&self.coupling, v_dc)
    }
}
