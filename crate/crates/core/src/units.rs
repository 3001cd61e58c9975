//! Parsing of numbers with unit suffixes, e.g. `"520 kHz"`, `"70nm"`, `"45.4 kHz/V"`.
//!
//! Values are normalized to SI. Frequencies in `Hz` are cyclic; `rad/s` marks angular input.
//! A bare number is read in the SI base unit of the expected dimension (Hz for frequencies).

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Dimensionless,
    /// Cyclic frequency, Hz.
    Frequency,
    /// Angular frequency, rad/s. Accepts `Hz` input (multiplied by 2π).
    AngularFrequency,
    Voltage,
    Length,
    Area,
    Volume,
    Capacitance,
    Inductance,
    Time,
    Temperature,
    MagneticField,
    Resistance,
    Current,
    Power,
    Energy,
    Mass,
    Stiffness,
    /// Coupling slope, Hz/V.
    CouplingSlope,
    /// Magnetic tuning constant, Hz/T².
    TuningConstant,
    /// Sheet inductance, H/sq.
    SheetInductance,
    ElectricField,
    Pressure,
    DipoleMoment,
    /// Gain in dB.
    Gain,
}

impl Dimension {
    /// SI unit symbol used when printing.
    pub fn si_symbol(self) -> &'static str {
        match self {
            Dimension::Dimensionless => "",
            Dimension::Frequency => "Hz",
            Dimension::AngularFrequency => "rad/s",
            Dimension::Voltage => "V",
            Dimension::Length => "m",
            Dimension::Area => "m^2",
            Dimension::Volume => "m^3",
            Dimension::Capacitance => "F",
            Dimension::Inductance => "H",
            Dimension::Time => "s",
            Dimension::Temperature => "K",
            Dimension::MagneticField => "T",
            Dimension::Resistance => "Ohm",
            Dimension::Current => "A",
            Dimension::Power => "W",
            Dimension::Energy => "J",
            Dimension::Mass => "kg",
            Dimension::Stiffness => "N/m",
            Dimension::CouplingSlope => "Hz/V",
            Dimension::TuningConstant => "Hz/T^2",
            Dimension::SheetInductance => "H/sq",
            Dimension::ElectricField => "V/m",
            Dimension::Pressure => "Pa",
            Dimension::DipoleMoment => "C*m",
            Dimension::Gain => "dB",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} [{}]", self, self.si_symbol())
    }
}

struct BaseUnit {
    symbol: &'static str,
    dim: Dimension,
    factor: f64,
    /// Power the SI prefix is raised to (2 for `um^2`).
    prefix_power: i32,
    prefixable: bool,
}

const fn unit(symbol: &'static str, dim: Dimension, factor: f64) -> BaseUnit {
    BaseUnit {
        symbol,
        dim,
        factor,
        prefix_power: 1,
        prefixable: true,
    }
}

const fn fixed(symbol: &'static str, dim: Dimension, factor: f64) -> BaseUnit {
    BaseUnit {
        symbol,
        dim,
        factor,
        prefix_power: 1,
        prefixable: false,
    }
}

const fn powered(symbol: &'static str, dim: Dimension, power: i32) -> BaseUnit {
    BaseUnit {
        symbol,
        dim,
        factor: 1.0,
        prefix_power: power,
        prefixable: true,
    }
}

// Sorted longest-first at lookup time.
const UNITS: &[BaseUnit] = &[
    unit("Hz", Dimension::Frequency, 1.0),
    unit("rad/s", Dimension::AngularFrequency, 1.0),
    unit("V", Dimension::Voltage, 1.0),
    unit("m", Dimension::Length, 1.0),
    powered("m^2", Dimension::Area, 2),
    powered("m2", Dimension::Area, 2),
    powered("m^3", Dimension::Volume, 3),
    powered("m3", Dimension::Volume, 3),
    unit("F", Dimension::Capacitance, 1.0),
    unit("H", Dimension::Inductance, 1.0),
    unit("s", Dimension::Time, 1.0),
    unit("K", Dimension::Temperature, 1.0),
    unit("T", Dimension::MagneticField, 1.0),
    unit("Ohm", Dimension::Resistance, 1.0),
    unit("A", Dimension::Current, 1.0),
    unit("W", Dimension::Power, 1.0),
    unit("J", Dimension::Energy, 1.0),
    unit("eV", Dimension::Energy, 1.602_176_634e-19),
    unit("g", Dimension::Mass, 1e-3),
    unit("N/m", Dimension::Stiffness, 1.0),
    unit("Hz/V", Dimension::CouplingSlope, 1.0),
    unit("Hz/T^2", Dimension::TuningConstant, 1.0),
    unit("Hz/T2", Dimension::TuningConstant, 1.0),
    unit("H/sq", Dimension::SheetInductance, 1.0),
    unit("V/m", Dimension::ElectricField, 1.0),
    unit("Pa", Dimension::Pressure, 1.0),
    unit("C*m", Dimension::DipoleMoment, 1.0),
    unit("Cm", Dimension::DipoleMoment, 1.0),
    fixed("D", Dimension::DipoleMoment, crate::consts::DEBYE),
    fixed("Debye", Dimension::DipoleMoment, crate::consts::DEBYE),
    fixed("dB", Dimension::Gain, 1.0),
    // dBm is handled separately (logarithmic).
];

fn prefix_factor(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "a" => 1e-18,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" => 1e-6,
        "m" => 1e-3,
        "c" => 1e-2,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        "T" => 1e12,
        _ => return None,
    })
}

fn normalize_unit(u: &str) -> String {
    u.trim()
        .replace(['µ', 'μ'], "u")
        .replace('Ω', "Ohm")
        .replace("ohm", "Ohm")
        .replace('²', "^2")
        .replace('³', "^3")
        .replace('·', "*")
        .replace('□', "sq")
        .replace(' ', "")
}

/// Splits `"5.087 GHz"` into the numeric prefix and the unit suffix.
fn split_number(s: &str) -> Result<(f64, String)> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Unit("empty value".into()));
    }
    // Longest prefix that parses as a float.
    let mut best: Option<(f64, usize)> = None;
    let ends = s.char_indices().map(|(i, _)| i).skip(1).chain(std::iter::once(s.len()));
    for i in ends {
        let head = &s[..i];
        if let Ok(v) = head.trim().parse::<f64>() {
            best = Some((v, i));
        }
    }
    match best {
        Some((v, end)) => Ok((v, s[end..].to_string())),
        None => Err(Error::Unit(format!("no numeric value in `{s}`"))),
    }
}

/// Parses a quantity of the given dimension, returning its SI value.
pub fn parse_quantity(s: &str, expected: Dimension) -> Result<f64> {
    let (mut value, raw_unit) = split_number(s)?;
    let unit_str = normalize_unit(&raw_unit);
    if unit_str.is_empty() {
        return Ok(match expected {
            Dimension::AngularFrequency => value * std::f64::consts::TAU,
            _ => value,
        });
    }
    if let Some(p) = unit_str.strip_suffix("dBm") {
        if !p.is_empty() {
            return Err(Error::Unit(format!("unknown unit `{raw_unit}`")));
        }
        check_dim(Dimension::Power, expected, s)?;
        return Ok(1e-3 * 10f64.powf(value / 10.0));
    }
    let mut candidates: Vec<&BaseUnit> = UNITS.iter().collect();
    candidates.sort_by_key(|u| std::cmp::Reverse(u.symbol.len()));
    for base in candidates {
        if let Some(prefix) = unit_str.strip_suffix(base.symbol) {
            if !base.prefixable && !prefix.is_empty() {
                continue;
            }
            let Some(pf) = prefix_factor(prefix) else {
                continue;
            };
            let mut dim = base.dim;
            value *= base.factor * pf.powi(base.prefix_power);
            if dim == Dimension::Frequency && expected == Dimension::AngularFrequency {
                value *= std::f64::consts::TAU;
                dim = Dimension::AngularFrequency;
            }
            check_dim(dim, expected, s)?;
            return Ok(value);
        }
    }
    Err(Error::Unit(format!("unknown unit `{raw_unit}` in `{s}`")))
}

fn check_dim(found: Dimension, expected: Dimension, s: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::Unit(format!(
            "`{s}` has dimension {found}, expected {expected}"
        )))
    }
}

/// Angular frequency from cyclic (`Hz`) or angular (`rad/s`) input.
pub fn parse_angular_frequency(s: &str) -> Result<f64> {
    parse_quantity(s, Dimension::AngularFrequency)
}
