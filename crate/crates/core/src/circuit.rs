//! Lumped-element equivalent circuit of the coupled resonator/mechanics system.
//!
//! The mechanical mode appears as a series (L_k_mech, C_k) branch that connects to the
//! resonator node through the motion-coupled capacitance C_m. C_k scales as V⁻². L_k_mech
//! is re-derived at each bias so that ω_m stays fixed, which makes it scale as V² up to
//! corrections of order C_m/C_k.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::consts::hbar;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentCircuit<T> {
    /// Motion-coupled capacitance (F).
    pub c_m: T,
    /// Resonator capacitance (F).
    pub c_r: T,
    /// Resonator inductance (H).
    pub l_r: T,
    /// Equivalent mechanical capacitance at `v_ref` (F).
    pub c_k: T,
    /// Equivalent mechanical inductance at `v_ref` (H).
    pub l_k_mech: T,
    /// Bias at which `c_k` and `l_k_mech` are quoted (V).
    pub v_ref: T,
    /// Waveguide impedance (Ω).
    pub z0: T,
}

/// Resonator quantities that follow from the circuit alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorDerived<T> {
    /// Bare resonator frequency (Hz).
    pub f_r: T,
    /// Characteristic impedance (Ω).
    pub z: T,
    /// Participation ratio C_m/(C_m + C_r).
    pub eta: T,
}

/// How the resonator side is specified in [`from_physical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResonatorSpec<T> {
    /// Resonator capacitance C_r (F).
    Capacitance(T),
    /// Zero-point voltage (V); C_r follows as ħω_r/(2V²) − C_m.
    ZeroPointVoltage(T),
}

impl<T: Real> EquivalentCircuit<T> {
    /// Same circuit re-quoted at bias `v`, keeping ω_m fixed.
    pub fn at_voltage(&self, v: T) -> Result<Self> {
        if v == T::zero() {
            return Err(Error::Domain(
                "C_k diverges at zero bias (coupling switched off)".into(),
            ));
        }
        let s = self.v_ref / v;
        let c_k = self.c_k * s * s;
        Ok(Self {
            c_k,
            l_k_mech: mech_equiv_inductance(c_k, self.c_m, self.omega_m()),
            v_ref: v,
            ..*self
        })
    }

    /// ω_m = [L_k_mech·(C_k + C_m)]^(−1/2), rad/s.
    pub fn omega_m(&self) -> T {
        T::one() / (self.l_k_mech * (self.c_k + self.c_m)).sqrt()
    }

    /// C_m/(C_m + C_r).
    pub fn participation(&self) -> T {
        self.c_m / (self.c_m + self.c_r)
    }

    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let all = [self.c_m, self.c_r, self.l_r, self.c_k, self.l_k_mech, self.z0];
        if all.iter().any(|&x| !(x > z)) {
            return Err(Error::Domain("circuit elements must be positive".into()));
        }
        if self.v_ref == z {
            return Err(Error::Domain("v_ref must be nonzero".into()));
        }
        Ok(())
    }
}

/// C_k = 2·C_m²·ω_m·ħ/(∂ₓC·x_zpf·V)² − C_m.
pub fn mech_equiv_capacitance<T: Real>(c_m: T, omega_m: T, dc_dx: T, x_zpf: T, v_dc: T) -> Result<T> {
    if v_dc == T::zero() {
        return Err(Error::Domain(
            "C_k is infinite at zero bias (coupling switched off)".into(),
        ));
    }
    let z = T::zero();
    if !(c_m > z && omega_m > z && dc_dx > z && x_zpf > z) {
        return Err(Error::Domain("C_m, ω_m, ∂C/∂x and x_zpf must be positive".into()));
    }
    let a = dc_dx * x_zpf * v_dc;
    Ok(T::lit(2.0) * c_m * c_m * omega_m * hbar::<T>() / (a * a) - c_m)
}

/// L_k_mech = 1/(ω_m²·(C_k + C_m)).
pub fn mech_equiv_inductance<T: Real>(c_k: T, c_m: T, omega_m: T) -> T {
    T::one() / (omega_m * omega_m * (c_k + c_m))
}

/// Coupling rate from the capacitance derivative: ħg = ∂ₓC·x_zpf·V·V_zpf. Cyclic Hz.
pub fn coupling_from_derivative<T: Real>(dc_dx: T, x_zpf: T, v_dc: T, v_zpf: T) -> T {
    dc_dx * x_zpf * v_dc * v_zpf / hbar::<T>() / T::two_pi()
}

/// g = C_m/√((C_k + C_m)(C_r + C_m))·√(ω_r·ω_m), returned in cyclic Hz.
pub fn coupling_from_circuit<T: Real>(circuit: &EquivalentCircuit<T>, omega_r: T, omega_m: T) -> T {
    let c = circuit;
    c.c_m / ((c.c_k + c.c_m) * (c.c_r + c.c_m)).sqrt() * (omega_r * omega_m).sqrt() / T::two_pi()
}

pub fn resonator_derived<T: Real>(circuit: &EquivalentCircuit<T>) -> ResonatorDerived<T> {
    let c = circuit;
    ResonatorDerived {
        f_r: T::one() / (T::two_pi() * (c.l_r * c.c_r).sqrt()),
        z: (c.l_r / c.c_r).sqrt(),
        eta: c.participation(),
    }
}

/// Decay of the series mechanical branch straight into the Z0 line, cyclic Hz.
///
/// κ_direct = ω_m²·C_m²·Z0/(C_k + C_m), with C_k taken at the circuit's `v_ref`.
pub fn direct_waveguide_decay<T: Real>(circuit: &EquivalentCircuit<T>, omega_m: T) -> T {
    let c = circuit;
    omega_m * omega_m * c.c_m * c.c_m * c.z0 / (c.c_k + c.c_m) / T::two_pi()
}

/// Builds the circuit at V_ref = 1 V from a coupling slope `g0` (cyclic Hz/V).
pub fn from_physical<T: Real>(
    g0: T,
    resonator: ResonatorSpec<T>,
    omega_r: T,
    omega_m: T,
    c_m: T,
) -> Result<EquivalentCircuit<T>> {
    let z = T::zero();
    if !(g0 > z) {
        return Err(Error::Domain("g0 must be positive".into()));
    }
    if !(omega_r > z && omega_m > z && c_m > z) {
        return Err(Error::Domain("frequencies and C_m must be positive".into()));
    }
    let c_r = match resonator {
        ResonatorSpec::Capacitance(c) => c,
        ResonatorSpec::ZeroPointVoltage(v) => hbar::<T>() * omega_r / (T::lit(2.0) * v * v) - c_m,
    };
    if !(c_r > z) {
        return Err(Error::Inconsistent(
            "zero-point voltage implies a total capacitance below C_m".into(),
        ));
    }
    let g = T::two_pi() * g0;
    let c_k = c_m * c_m * omega_r * omega_m / (g * g * (c_r + c_m)) - c_m;
    if !(c_k > z) {
        return Err(Error::Inconsistent(format!(
            "g0 = {} Hz/V is too large for C_m = {} F; no positive C_k exists",
            g0, c_m
        )));
    }
    let circuit = EquivalentCircuit {
        c_m,
        c_r,
        l_r: T::one() / (omega_r * omega_r * c_r),
        c_k,
        l_k_mech: mech_equiv_inductance(c_k, c_m, omega_m),
        v_ref: T::one(),
        z0: T::lit(50.0),
    };
    Ok(circuit)
}

const CIRCUIT_KEYS: &[(&str, Dimension)] = &[
    ("C_m", Dimension::Capacitance),
    ("C_r", Dimension::Capacitance),
    ("L_r", Dimension::Inductance),
    ("C_k", Dimension::Capacitance),
    ("L_k_mech", Dimension::Inductance),
    ("V_ref", Dimension::Voltage),
    ("Z0", Dimension::Resistance),
];

/// Writes a circuit as a `[circuit]` record in the device-table syntax.
pub fn write_circuit(id: &str, c: &EquivalentCircuit<f64>) -> String {
    let mut s = String::from("[circuit]\n");
    let _ = writeln!(s, "id = {id}");
    let vals = [c.c_m, c.c_r, c.l_r, c.c_k, c.l_k_mech, c.v_ref, c.z0];
    for ((key, dim), v) in CIRCUIT_KEYS.iter().zip(vals) {
        let _ = writeln!(s, "{key} = {v} {}", dim.si_symbol());
    }
    s
}

/// Parses `[circuit]` records. `Z0` defaults to 50 Ω.
pub fn parse_circuits(text: &str) -> Result<Vec<(String, EquivalentCircuit<f64>)>> {
    let mut out = Vec::new();
    let mut cur: Option<(usize, String, [Option<f64>; 7])> = None;
    let finish = |(line, id, v): (usize, String, [Option<f64>; 7])| -> Result<(String, EquivalentCircuit<f64>)> {
        let get = |i: usize| {
            v[i].ok_or_else(|| Error::Parse {
                line,
                field: CIRCUIT_KEYS[i].0.into(),
                message: "required field missing from circuit record".into(),
            })
        };
        let c = EquivalentCircuit {
            c_m: get(0)?,
            c_r: get(1)?,
            l_r: get(2)?,
            c_k: get(3)?,
            l_k_mech: get(4)?,
            v_ref: get(5)?,
            z0: v[6].unwrap_or(50.0),
        };
        c.validate().map_err(|e| Error::Parse { line, field: "circuit".into(), message: e.to_string() })?;
        Ok((id, c))
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[circuit]" {
            if let Some(c) = cur.take() {
                out.push(finish(c)?);
            }
            cur = Some((line_no, String::new(), [None; 7]));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            field: line.into(),
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let Some(rec) = cur.as_mut() else {
            return Err(Error::Parse { line: line_no, field: key.into(), message: "field outside a [circuit] record".into() });
        };
        if key == "id" {
            rec.1 = value.to_string();
            continue;
        }
        let i = CIRCUIT_KEYS.iter().position(|(k, _)| *k == key).ok_or_else(|| Error::Parse {
            line: line_no,
            field: key.into(),
            message: "unknown field in [circuit]".into(),
        })?;
        let v = parse_quantity(value, CIRCUIT_KEYS[i].1).map_err(|e| Error::Parse {
            line: line_no,
            field: key.into(),
            message: e.to_string(),
        })?;
        rec.2[i] = Some(v);
    }
    if let Some(c) = cur.take() {
        out.push(finish(c)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::HBAR;
    use std::f64::consts::TAU;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference circuit at 1 V, C_k in nF and L_k in fH.
    fn table_circuit() -> EquivalentCircuit<f64> {
        EquivalentCircuit { c_m: 0.2e-15, c_r: 12.1e-15, l_r: 75.8e-9, c_k: 43.5e-9, l_k_mech: 21.1e-15, v_ref: 1.0, z0: 50.0 }
    }

    #[test]
    fn resonator_values() {
        let d = resonator_derived(&table_circuit());
        assert!(rel(d.f_r, 5.256e9) < 1e-3);
        assert!(rel(d.z, 2503.0) < 1e-3);
        assert!(rel(d.eta, 0.01626) < 1e-3);
        assert!(rel(d.eta, 0.015) < 0.10);
        assert_eq!(d.eta + 12.1e-15 / (0.2e-15 + 12.1e-15), 1.0);
    }

    #[test]
    fn table_coupling_and_frequency() {
        let c = table_circuit();
        let w = TAU * 5.26e9;
        assert!(rel(coupling_from_circuit(&c, w, w), 45.4e3) < 0.03);
        assert!(rel(c.omega_m() / TAU, 5.26e9) < 0.03);
        let c25 = c.at_voltage(25.0).unwrap();
        assert!(rel(coupling_from_circuit(&c25, w, w), 25.0 * coupling_from_circuit(&c, w, w)) < 2e-4);
        assert!(rel(c25.omega_m(), c.omega_m()) < 1e-12);
    }

    #[test]
    fn direct_decay_at_25v() {
        let c25 = table_circuit().at_voltage(25.0).unwrap();
        let w = TAU * 5.26e9;
        let k = direct_waveguide_decay(&c25, w);
        assert!(rel(k, 5.0) < 0.2, "{k}");
        let half = EquivalentCircuit { z0: 25.0, ..c25 };
        assert!(rel(direct_waveguide_decay(&half, w), k / 2.0) < 1e-12);
        let far = table_circuit().at_voltage(1e-6).unwrap();
        assert!(direct_waveguide_decay(&far, w) < 1e-9);
    }

    #[test]
    fn capacitance_from_derivative() {
        // ∂C·x_zpf implied by g0 = 45.4 kHz/V through ħg = ∂C·x_zpf·V·V_zpf.
        let w = TAU * 5.26e9;
        let c_t = 12.3e-15;
        let v_zpf = (HBAR * w / (2.0 * c_t)).sqrt();
        assert!(rel(v_zpf, 11.9e-6) < 0.01);
        let x_zpf = 1e-15;
        let dc_dx = HBAR * TAU * 45.4e3 / v_zpf / x_zpf;
        assert!(rel(coupling_from_derivative(dc_dx, x_zpf, 1.0, v_zpf), 45.4e3) < 1e-12);
        let ck = mech_equiv_capacitance(0.2e-15, w, dc_dx, x_zpf, 1.0).unwrap();
        assert!(rel(ck, 43.5e-9) < 0.03, "{ck}");
        let ck25 = mech_equiv_capacitance(0.2e-15, w, dc_dx, x_zpf, 25.0).unwrap();
        assert!(rel(ck25, 69.6e-12) < 0.03);
        let ck2 = mech_equiv_capacitance(0.2e-15, w, dc_dx, x_zpf, 2.0).unwrap();
        assert!(rel(ck2 + 0.2e-15, (ck + 0.2e-15) / 4.0) < 1e-12);
        assert!(mech_equiv_capacitance(0.2e-15, w, dc_dx, x_zpf, 0.0).is_err());
    }

    #[test]
    fn inductance_examples() {
        let w = TAU * 5.26e9;
        let lk = mech_equiv_inductance(43.5e-9, 0.2e-15, w);
        assert!(rel(lk, 21.1e-15) < 0.03);
        let c = EquivalentCircuit { l_k_mech: lk, ..table_circuit() };
        assert!(rel(c.omega_m(), w) < 1e-12);
        let c25 = c.at_voltage(25.0).unwrap();
        assert!(rel(c25.l_k_mech, 625.0 * lk) < 1e-5);
        assert!(rel(c25.omega_m(), w) < 1e-12);
    }

    #[test]
    fn from_physical_inversion() {
        let w = TAU * 5.26e9;
        let c = from_physical(45.4e3, ResonatorSpec::Capacitance(12.1e-15), w, w, 0.2e-15).unwrap();
        assert!(rel(c.c_k, 43.5e-9) < 0.03);
        assert!(rel(c.l_k_mech, 21.1e-15) < 0.03);
        assert!(rel(coupling_from_circuit(&c, w, w), 45.4e3) < 1e-9);
        let c2 = from_physical(90.8e3, ResonatorSpec::Capacitance(12.1e-15), w, w, 0.2e-15).unwrap();
        assert!(rel(c2.c_k, c.c_k / 4.0) < 1e-6);
        let v_zpf = (HBAR * w / (2.0 * 12.3e-15)).sqrt();
        let c3 = from_physical(45.4e3, ResonatorSpec::ZeroPointVoltage(v_zpf), w, w, 0.2e-15).unwrap();
        assert!(rel(c3.c_r, 12.1e-15) < 1e-9);
        assert!(from_physical(1e12, ResonatorSpec::Capacitance(12.1e-15), w, w, 0.2e-15).is_err());
        assert!(from_physical(-1.0, ResonatorSpec::Capacitance(12.1e-15), w, w, 0.2e-15).is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = table_circuit();
        let text = write_circuit("B", &c);
        let parsed = parse_circuits(&text).unwrap();
        assert_eq!(parsed, vec![("B".to_string(), c)]);
        assert!(parse_circuits("[circuit]\nC_m = 1 fF\n").is_err());
    }

    #[test]
    fn f32_resonator() {
        let c = EquivalentCircuit::<f32> { c_m: 0.2e-15, c_r: 12.1e-15, l_r: 75.8e-9, c_k: 43.5e-9, l_k_mech: 21.1e-15, v_ref: 1.0, z0: 50.0 };
        let d = resonator_derived(&c);
        assert!(((d.f_r - 5.256e9) / 5.256e9).abs() < 1e-3);
    }
}
