//! Coupling rate versus bias from EIT fits, and the cooperativity it implies.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{eit_grid, eit_params_from_system, fit_eit, synth_eit};
use crate::device::DeviceRecord;
use crate::dynamics::{cooperativity, TwoModeSystem};
use crate::error::{Error, Result};
use crate::linalg::weighted_lstsq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitSweepOptions {
    /// Reflection noise per quadrature.
    pub noise_sigma: f64,
    /// Coarse points across the cavity.
    pub coarse_points: usize,
    /// Refined points around the mechanical mode.
    pub fine_points: usize,
    /// Relative perturbation of the fit start values.
    pub init_perturbation: f64,
    pub seed: u64,
}

impl Default for EitSweepOptions {
    fn default() -> Self {
        Self { noise_sigma: 2e-3, coarse_points: 1201, fine_points: 401, init_perturbation: 0.1, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub voltage: f64,
    /// Truth used for the synthetic trace, Hz.
    pub g_true: f64,
    /// Fitted coupling, Hz.
    pub g_fit: f64,
    pub g_sigma: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingVsVoltage {
    pub points: Vec<CouplingPoint>,
    /// Hz/V.
    pub g0: f64,
    pub g0_sigma: f64,
    /// V.
    pub v_offset: f64,
    pub v_offset_sigma: f64,
}

/// Synthesizes a resonant EIT sweep at each bias, fits g, and fits g = g₀(V − V_off).
pub fn pipeline_g_vs_v(dev: &DeviceRecord<f64>, voltages: &[f64], opts: &EitSweepOptions) -> Result<CouplingVsVoltage> {
    if voltages.len() < 2 {
        return Err(Error::InsufficientData("a line fit needs at least two voltages".into()));
    }
    let mut points = Vec::with_capacity(voltages.len());
    for (i, &v) in voltages.iter().enumerate() {
        let sys = TwoModeSystem::from_device(dev, v).with_detuning(0.0);
        let grid = eit_grid(&sys, opts.coarse_points, opts.fine_points);
        let trace = synth_eit(&sys, &grid, opts.noise_sigma, opts.seed.wrapping_add(i as u64))?;
        let reference = sys.mech.omega_m / TAU;
        let truth = eit_params_from_system(&sys, reference);
        let lw = [sys.kappa() / TAU, sys.mech.gamma_total_linewidth / TAU];
        let e = opts.init_perturbation;
        let init = [
            truth[0] + e * lw[0],
            truth[1] - e * lw[1],
            truth[2] * (1.0 + e),
            truth[3] * (1.0 - e),
            truth[4] * (1.0 + e),
            truth[5] * (1.0 - e),
        ];
        let fit = fit_eit(&trace, reference, &init, false)?;
        points.push(CouplingPoint {
            voltage: v,
            g_true: sys.g,
            g_fit: fit.params[5],
            g_sigma: fit.uncertainties[5],
            converged: fit.converged,
        });
    }
    let v: Vec<f64> = points.iter().map(|p| p.voltage).collect();
    let g: Vec<f64> = points.iter().map(|p| p.g_fit).collect();
    let w: Vec<f64> = points.iter().map(|p| 1.0 / p.g_sigma.max(1e-12 * p.g_fit.abs()).max(f64::MIN_POSITIVE)).collect();
    let ones = vec![1.0; v.len()];
    let (c, mut cov) = weighted_lstsq(&[&ones, &v], &g, &w)
        .ok_or_else(|| Error::SingularJacobian("voltages are degenerate".into()))?;
    if v.len() > 2 {
        let chi2: f64 = (0..v.len()).map(|i| ((g[i] - c[0] - c[1] * v[i]) * w[i]).powi(2)).sum();
        let s2 = (chi2 / (v.len() - 2) as f64).max(1.0);
        cov.iter_mut().for_each(|x| *x *= s2);
    }
    let (a, b) = (c[0], c[1]);
    let v_offset = -a / b;
    // Gradient of −a/b with respect to (a, b).
    let (da, db) = (-1.0 / b, a / (b * b));
    let var_off = da * da * cov[0] + 2.0 * da * db * cov[1] + db * db * cov[3];
    Ok(CouplingVsVoltage { points, g0: b, g0_sigma: cov[3].sqrt(), v_offset, v_offset_sigma: var_off.sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooperativityPoint {
    pub voltage: f64,
    /// Hz.
    pub g: f64,
    /// Intrinsic decay rate, Hz.
    pub gamma_i: f64,
    pub cooperativity: f64,
}

/// C(V) = 4g²/(κᵢΓᵢ) with g from the device coupling law.
///
/// `gamma_i_hz` gives Γᵢ/2π per voltage; when `None` the device's intrinsic decay is used.
pub fn pipeline_cooperativity_vs_v(
    dev: &DeviceRecord<f64>,
    voltages: &[f64],
    gamma_i_hz: Option<&[f64]>,
) -> Result<Vec<CooperativityPoint>> {
    if gamma_i_hz.is_some_and(|g| g.len() != voltages.len()) {
        return Err(Error::Domain("one intrinsic decay rate per voltage is required".into()));
    }
    let kappa_i = dev.microwave.kappa_i / TAU;
    voltages
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let g = dev.g_at(v);
            let gamma_i = gamma_i_hz.map_or(dev.mechanical.gamma_i_intrinsic_decay / TAU, |s| s[i]);
            if !(gamma_i > 0.0) {
                return Err(Error::Domain(format!("Γᵢ must be positive at {v} V")));
            }
            Ok(CooperativityPoint { voltage: v, g, gamma_i, cooperativity: cooperativity(g, kappa_i, gamma_i) })
        })
        .collect()
}
