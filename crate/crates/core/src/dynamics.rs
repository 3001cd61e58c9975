//! Two-mode input-output physics in the rotating-wave approximation.
//!
//! Angular units throughout except `g`, which is stored in cyclic Hz as quoted in
//! experiments. Observables depend on g² only, so the sign of g never matters.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::consts::hbar;
use crate::device::{coupling_at_voltage, DeviceRecord, MechanicalMode, MicrowaveMode};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Microwave mode, mechanical mode and their coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeSystem<T> {
    pub mw: MicrowaveMode<T>,
    pub mech: MechanicalMode<T>,
    /// Coupling rate, cyclic Hz.
    pub g: T,
    /// Phase on κₑ modelling Fano asymmetry (rad).
    pub fano_phase: T,
}

/// Mechanical linewidth entering the EIT denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EitLinewidth {
    /// Total linewidth γ, what a lineshape fit measures.
    #[default]
    Total,
    /// Intrinsic energy decay Γᵢ.
    Intrinsic,
}

/// Bath occupancies in quanta.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BathSpec<T> {
    pub n_wg: T,
    pub n_b_r: T,
    pub n_b_m: T,
}

impl<T: Real> BathSpec<T> {
    pub fn new(n_wg: T, n_b_r: T, n_b_m: T) -> Result<Self> {
        if !(n_wg >= T::zero() && n_b_r >= T::zero() && n_b_m >= T::zero()) {
            return Err(Error::Domain("bath occupancies must be >= 0".into()));
        }
        Ok(Self { n_wg, n_b_r, n_b_m })
    }
}

/// Weak-coupling back-action result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backaction<T> {
    pub n_r: T,
    pub n_m: T,
    pub c_eff: T,
}

impl<T: Real> TwoModeSystem<T> {
    pub fn new(mw: MicrowaveMode<T>, mech: MechanicalMode<T>, g: T) -> Self {
        Self { mw, mech, g, fano_phase: T::zero() }
    }

    /// Device at bias `v_dc` with the microwave mode at its untuned frequency.
    pub fn from_device(dev: &DeviceRecord<T>, v_dc: T) -> Self {
        Self::new(dev.microwave, dev.mechanical, coupling_at_voltage(&dev.coupling, v_dc))
    }

    /// Copy with the microwave mode placed at ω_m + `delta` (angular).
    pub fn with_detuning(mut self, delta: T) -> Self {
        self.mw.omega_r = self.mech.omega_m + delta;
        self
    }

    pub fn with_fano_phase(mut self, phi: T) -> Self {
        self.fano_phase = phi;
        self
    }

    /// Angular coupling 2π·g.
    #[inline]
    pub fn g_angular(&self) -> T {
        T::two_pi() * self.g
    }

    #[inline]
    pub fn kappa(&self) -> T {
        self.mw.kappa_total()
    }

    /// ω_r − ω_m (angular).
    #[inline]
    pub fn cavity_detuning(&self) -> T {
        self.mw.omega_r - self.mech.omega_m
    }

    /// True when 2g > κ + γ.
    pub fn is_strong_coupling(&self) -> bool {
        T::lit(2.0) * self.g_angular() > self.kappa() + self.mech.gamma_total_linewidth
    }
}

/// χ_r = 1/(κ/2 − i(ω − ω_r)).
#[inline]
pub fn chi_r<T: Real>(mw: &MicrowaveMode<T>, omega: T) -> Complex<T> {
    Complex::new(mw.kappa_total() / T::lit(2.0), mw.omega_r - omega).inv()
}

/// χ_m = 1/(Γᵢ/2 − i(ω − ω_m)).
#[inline]
pub fn chi_m<T: Real>(mech: &MechanicalMode<T>, omega: T) -> Complex<T> {
    Complex::new(mech.gamma_i_intrinsic_decay / T::lit(2.0), mech.omega_m - omega).inv()
}

/// Reflection r = 1 − κₑ·e^{iφ}/(iΔ + κ/2 + g²/(iδ + γ/2)) using the total linewidth γ.
#[inline]
pub fn eit_reflection<T: Real>(sys: &TwoModeSystem<T>, omega_probe: T) -> Complex<T> {
    eit_reflection_with(sys, omega_probe, EitLinewidth::Total)
}

pub fn eit_reflection_with<T: Real>(sys: &TwoModeSystem<T>, omega_probe: T, lw: EitLinewidth) -> Complex<T> {
    let half = T::lit(0.5);
    let gamma = match lw {
        EitLinewidth::Total => sys.mech.gamma_total_linewidth,
        EitLinewidth::Intrinsic => sys.mech.gamma_i_intrinsic_decay,
    };
    let g = sys.g_angular();
    let delta_r = sys.mw.omega_r - omega_probe;
    let delta_m = sys.mech.omega_m - omega_probe;
    let mech = Complex::new(gamma * half, delta_m);
    let denom = Complex::new(sys.kappa() * half, delta_r) + mech.inv() * (g * g);
    let num = Complex::from_polar(sys.mw.kappa_e, sys.fano_phase);
    Complex::new(T::one(), T::zero()) - num / denom
}

/// Complex eigenfrequencies (cyclic Hz) of [[f_r − iκ/2, g], [g, f_m − iγ/2]].
///
/// Real parts are mode frequencies and −2·Im the FWHM linewidths. The
/// higher-frequency branch comes first.
pub fn hybridized_modes<T: Real>(sys: &TwoModeSystem<T>) -> [Complex<T>; 2] {
    let tp = T::two_pi();
    let half = T::lit(0.5);
    let a = Complex::new(sys.mw.omega_r / tp, -sys.kappa() / tp * half);
    let b = Complex::new(sys.mech.omega_m / tp, -sys.mech.gamma_total_linewidth / tp * half);
    let mean = (a + b) * half;
    let d = (a - b) * half;
    let root = (d * d + Complex::new(sys.g * sys.g, T::zero())).sqrt();
    let (p, m) = (mean + root, mean - root);
    if p.re >= m.re {
        [p, m]
    } else {
        [m, p]
    }
}

/// Γ_em = g²κ/(Δ² + (κ/2)²). All arguments in one unit system.
#[inline]
pub fn em_readout_rate<T: Real>(g: T, kappa: T, delta: T) -> T {
    let hk = kappa * T::lit(0.5);
    g * g * kappa / (delta * delta + hk * hk)
}

/// C = 4g²/(κᵢΓᵢ). All arguments in one unit system.
#[inline]
pub fn cooperativity<T: Real>(g: T, kappa_i: T, gamma_i: T) -> T {
    T::lit(4.0) * g * g / (kappa_i * gamma_i)
}

/// Weak-coupling occupancies at cavity detuning `delta` (angular, ω_r − ω_m).
pub fn backaction_occupancies<T: Real>(sys: &TwoModeSystem<T>, baths: &BathSpec<T>, delta: T) -> Backaction<T> {
    let kappa = sys.kappa();
    if T::lit(2.0) * sys.g_angular().abs() > kappa {
        log::warn!("back-action formulas assume weak coupling but 2g > κ");
    }
    let c_eff = em_readout_rate(sys.g_angular(), kappa, delta) / sys.mech.gamma_i_intrinsic_decay;
    let n_r = (sys.mw.kappa_i * baths.n_b_r + sys.mw.kappa_e * baths.n_wg) / kappa;
    let n_m = (baths.n_b_m + c_eff * n_r) / (T::one() + c_eff);
    Backaction { n_r, n_m, c_eff }
}

/// Spring-shifted mechanical frequency, rad/s, for cavity detuning `delta` = ω_r − ω_m.
///
/// ω̃_m = ω_m − g²Δ/(Δ² + (κ/2)²): a cavity above the mechanics pushes it down.
pub fn spring_shifted_frequency<T: Real>(sys: &TwoModeSystem<T>, delta: T) -> T {
    let g = sys.g_angular();
    let hk = sys.kappa() * T::lit(0.5);
    sys.mech.omega_m - g * g * delta / (delta * delta + hk * hk)
}

/// Steady-state coherent phonon number under a drive of power `p_in` at `omega_d`.
///
/// `delta_r` = ω_r − ω_d and `delta_m` = ω_m − ω_d. Uses the total linewidth, i.e. the
/// jitter-averaged coherent amplitude.
pub fn coherent_phonon_number<T: Real>(sys: &TwoModeSystem<T>, delta_r: T, delta_m: T, p_in: T, omega_d: T) -> T {
    let half = T::lit(0.5);
    let g = sys.g_angular();
    let a_in_sq = p_in / (hbar::<T>() * omega_d);
    let denom = Complex::new(sys.mech.gamma_total_linewidth * half, delta_m)
        * Complex::new(sys.kappa() * half, delta_r)
        + Complex::new(g * g, T::zero());
    g * g * sys.mw.kappa_e * a_in_sq / denom.norm_sqr()
}

/// Drive power giving `n_target` coherent phonons at the given detunings.
pub fn probe_power_for_phonons<T: Real>(sys: &TwoModeSystem<T>, delta_r: T, delta_m: T, n_target: T, omega_d: T) -> T {
    n_target / coherent_phonon_number(sys, delta_r, delta_m, T::one(), omega_d)
}
