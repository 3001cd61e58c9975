//! Bath occupancies versus bias from synthetic noise spectra.

use serde::{Deserialize, Serialize};

use super::{synth_psd, thermometry_grid};
use crate::device::DeviceRecord;
use crate::dynamics::{BathSpec, TwoModeSystem};
use crate::error::Result;
use crate::thermometry::{extract_occupancy, extract_occupancy_naive, AmplifierChain, LineParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermometryOptions {
    pub chain: AmplifierChain<f64>,
    /// Spectra averaged per bin.
    pub averages: f64,
    /// Target readout cooperativity Γ_em/Γᵢ used to choose the cavity detuning.
    pub target_cooperativity: f64,
    pub seed: u64,
}

impl Default for ThermometryOptions {
    fn default() -> Self {
        Self {
            chain: AmplifierChain { gain_db: 65.6, n_add: 10.0, nu_if: 1e3 },
            averages: 1e5,
            target_cooperativity: 1.0,
            seed: 1,
        }
    }
}

/// Cavity detuning (rad/s) at which Γ_em = C·Γᵢ, or zero when even resonance falls short.
pub fn detuning_for_cooperativity(sys: &TwoModeSystem<f64>, c: f64) -> f64 {
    let g = sys.g_angular();
    let kappa = sys.kappa();
    let d2 = g * g * kappa / (c * sys.mech.gamma_i_intrinsic_decay) - 0.25 * kappa * kappa;
    d2.max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermometryPoint {
    pub voltage: f64,
    /// Δ/2π, Hz.
    pub detuning: f64,
    pub truth: BathSpec<f64>,
    pub n_b_m: f64,
    pub n_b_m_sigma: f64,
    pub n_b_r: f64,
    pub n_b_r_sigma: f64,
    /// Estimate that ignores squashing.
    pub n_b_m_naive: f64,
}

/// For each bias: detune for the target readout cooperativity, synthesize a spectrum with the
/// given truth baths, and extract the occupancies.
pub fn pipeline_thermometry_vs_v(
    dev: &DeviceRecord<f64>,
    voltages: &[f64],
    truths: &[BathSpec<f64>],
    opts: &ThermometryOptions,
) -> Result<Vec<ThermometryPoint>> {
    if truths.len() != voltages.len() {
        return Err(crate::Error::Domain("one truth bath per voltage is required".into()));
    }
    let mut out = Vec::with_capacity(voltages.len());
    for (k, (&v, truth)) in voltages.iter().zip(truths).enumerate() {
        let base = TwoModeSystem::from_device(dev, v);
        let mut sys = base;
        // The spectrum is emitted with the intrinsic decay only.
        sys.mech.gamma_total_linewidth = sys.mech.gamma_i_intrinsic_decay;
        let delta = detuning_for_cooperativity(&sys, opts.target_cooperativity);
        let sys = sys.with_detuning(delta);
        let grid = thermometry_grid(&sys);
        let trace = synth_psd(&sys, truth, &opts.chain, &grid, opts.averages, opts.seed.wrapping_add(k as u64))?;
        let line = LineParams::predicted(&sys);
        let est = extract_occupancy(&trace, &sys, &opts.chain, &line, truth.n_wg)?;
        let naive = extract_occupancy_naive(&trace, &sys, &opts.chain, &line)?;
        out.push(ThermometryPoint {
            voltage: v,
            detuning: delta / std::f64::consts::TAU,
            truth: *truth,
            n_b_m: est.n_b_m,
            n_b_m_sigma: est.n_b_m_sigma,
            n_b_r: est.n_b_r,
            n_b_r_sigma: est.n_b_r_sigma,
            n_b_m_naive: naive.n_b_m,
        });
    }
    Ok(out)
}
