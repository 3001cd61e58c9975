//! Parallel-plate electrostatic actuation, leakage current and empirical coupling scaling.
//!
//! The pull-in model is the textbook baseline; measured devices tune linearly up to pull-in
//! rather than showing gradual gap closure.

use serde::{Deserialize, Serialize};

use crate::consts::EPSILON_0;
use crate::error::{Error, Result};

/// Lateral area of the transducer electrodes, m².
pub const TRANSDUCER_AREA: f64 = 1.1e-12;

/// Exponent of the coupling-versus-gap power law.
pub const GAP_EXPONENT: f64 = 1.66;

/// Cell count beyond which disorder limits the √N growth of the coupling.
pub const MAX_COHERENT_CELLS: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelPlateActuator {
    /// N/m.
    pub k_spring: f64,
    /// m².
    pub area: f64,
    /// Rest gap, m.
    pub gap0: f64,
}

impl ParallelPlateActuator {
    pub fn new(k_spring: f64, area: f64, gap0: f64) -> Result<Self> {
        if !(k_spring > 0.0 && area > 0.0 && gap0 > 0.0) {
            return Err(Error::Domain("stiffness, area and gap must be positive".into()));
        }
        Ok(Self { k_spring, area, gap0 })
    }

    /// Net restoring force k(g₀ − x) − ε₀AV²/(2x²) at gap `x`.
    fn net_force(&self, v: f64, x: f64) -> f64 {
        self.k_spring * (self.gap0 - x) - EPSILON_0 * self.area * v * v / (2.0 * x * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GapSolution {
    /// Stable equilibrium gap, m.
    Stable(f64),
    /// No stable equilibrium: the plates snap together.
    PulledIn,
}

impl GapSolution {
    pub fn gap(&self) -> Option<f64> {
        match self {
            GapSolution::Stable(x) => Some(*x),
            GapSolution::PulledIn => None,
        }
    }
}

/// V_PI = √(8k·g₀³/(27ε₀A)).
pub fn pull_in_voltage(act: &ParallelPlateActuator) -> f64 {
    (8.0 * act.k_spring * act.gap0.powi(3) / (27.0 * EPSILON_0 * act.area)).sqrt()
}

/// Stiffness that puts pull-in at `v_pi`: k = 27ε₀A·V²/(8g₀³).
pub fn stiffness_for_pull_in(v_pi: f64, gap0: f64, area: f64) -> f64 {
    27.0 * EPSILON_0 * area * v_pi * v_pi / (8.0 * gap0.powi(3))
}

/// Stable gap under bias `v`, found by bisection on (2g₀/3, g₀].
pub fn equilibrium_gap(act: &ParallelPlateActuator, v: f64) -> Result<GapSolution> {
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("bias must be nonnegative, got {v}")));
    }
    if v == 0.0 {
        return Ok(GapSolution::Stable(act.gap0));
    }
    if v > pull_in_voltage(act) {
        return Ok(GapSolution::PulledIn);
    }
    let mut lo = 2.0 * act.gap0 / 3.0;
    let mut hi = act.gap0;
    if act.net_force(v, lo) <= 0.0 {
        // At the bifurcation the stable and unstable roots merge at 2g₀/3.
        return Ok(GapSolution::Stable(lo));
    }
    while hi - lo > 1e-12 * act.gap0 {
        let mid = 0.5 * (lo + hi);
        if act.net_force(v, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GapSolution::Stable(0.5 * (lo + hi)))
}

/// d²U/dx² = k − ε₀AV²/x³ of U = ½k(g₀ − x)² − ε₀AV²/(2x).
pub fn potential_curvature(act: &ParallelPlateActuator, v: f64, x: f64) -> f64 {
    act.k_spring - EPSILON_0 * act.area * v * v / x.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageFit {
    /// Ω.
    pub resistance: f64,
    /// A.
    pub current_offset: f64,
}

/// Least-squares line I = V/R + I₀ through (voltage, current) points.
pub fn leakage_fit(points: &[(f64, f64)]) -> Result<LeakageFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData("a line fit needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mv = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mi = points.iter().map(|p| p.1).sum::<f64>() / n;
    let svv: f64 = points.iter().map(|p| (p.0 - mv).powi(2)).sum();
    let svi: f64 = points.iter().map(|p| (p.0 - mv) * (p.1 - mi)).sum();
    if svv <= f64::EPSILON * mv * mv * n || svv == 0.0 {
        return Err(Error::Domain("all points share one voltage; the slope is undefined".into()));
    }
    let slope = svi / svv;
    if slope == 0.0 {
        return Err(Error::Inconsistent("zero slope: resistance is infinite".into()));
    }
    Ok(LeakageFit { resistance: 1.0 / slope, current_offset: mi - slope * mv })
}

/// Reads `voltage_V,current_A` rows.
pub fn parse_iv_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let get = |k: usize, name: &str| -> Result<f64> {
            row.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Parse {
                line: i + 2,
                field: name.into(),
                message: "expected a number".into(),
            })
        };
        out.push((get(0, "voltage_V")?, get(1, "current_A")?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalingLaw {
    /// g₀ ∝ √N over coupled cells.
    Cells { n: f64, n_ref: f64 },
    /// g₀ ∝ gap^(−1.66).
    Gap { gap: f64, gap_ref: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub g0: f64,
    pub warning: Option<String>,
}

pub fn coupling_scaling(g0_ref: f64, law: ScalingLaw) -> Result<ScalingEstimate> {
    match law {
        ScalingLaw::Cells { n, n_ref } => {
            if !(n >= 1.0 && n_ref >= 1.0) {
                return Err(Error::Domain("cell counts must be at least 1".into()));
            }
            let warning = (n > MAX_COHERENT_CELLS || n_ref > MAX_COHERENT_CELLS).then(|| {
                let w = format!("N = {n} exceeds {MAX_COHERENT_CELLS} cells; disorder slows the sqrt(N) growth");
                log::warn!("{w}");
                w
            });
            Ok(ScalingEstimate { g0: g0_ref * (n / n_ref).sqrt(), warning })
        }
        ScalingLaw::Gap { gap, gap_ref } => {
            if !(gap > 0.0 && gap_ref > 0.0) {
                return Err(Error::Domain("gaps must be positive".into()));
            }
            Ok(ScalingEstimate { g0: g0_ref * (gap / gap_ref).powf(-GAP_EXPONENT), warning: None })
        }
    }
}
