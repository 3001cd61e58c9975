//! Line-based device table format.
//!
//! ```text
//! [device]
//! id = A
//! T_mxc = 20 mK
//! tau_d_max = 265 us
//! tau_c_max = 8 us
//!
//! [device.mechanical]
//! omega_m = 5.087 GHz        # cyclic input, stored as rad/s
//!
//! [device.microwave]
//! omega_r = 5.096 GHz
//! kappa_i = 520 kHz
//! kappa_e = 800 kHz
//!
//! [device.coupling]
//! g0 = 22.0 kHz/V
//! V_offset = -0.36 V
//! ```
//!
//! Missing `gamma_i_intrinsic_decay` defaults to 1/tau_d_max and missing
//! `gamma_total_linewidth` to 1/tau_c_max. `x_zpf` and `V_zpf` follow from
//! `m_eff` and `C_total` when only the latter are given.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::device::{
    zero_point_displacement, zero_point_voltage, CouplingLaw, DeviceRecord, MechanicalMode,
    MicrowaveMode,
};
use crate::error::{Error, Result};
use crate::units::{parse_quantity, Dimension};

/// Bundled table of the two reference devices.
pub const BUNDLED_DEVICES: &str = include_str!("../data/devices.conf");

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Device,
    Mechanical,
    Microwave,
    Coupling,
}

impl Section {
    fn header(self) -> &'static str {
        match self {
            Section::Device => "device",
            Section::Mechanical => "device.mechanical",
            Section::Microwave => "device.microwave",
            Section::Coupling => "device.coupling",
        }
    }

    fn keys(self) -> &'static [(&'static str, Dimension)] {
        use Dimension::*;
        match self {
            Section::Device => &[
                ("id", Dimensionless),
                ("T_mxc", Temperature),
                ("tau_d_max", Time),
                ("tau_c_max", Time),
                ("k_tune", TuningConstant),
            ],
            Section::Mechanical => &[
                ("omega_m", AngularFrequency),
                ("gamma_i_intrinsic_decay", AngularFrequency),
                ("gamma_total_linewidth", AngularFrequency),
                ("m_eff", Mass),
                ("x_zpf", Length),
            ],
            Section::Microwave => &[
                ("omega_r", AngularFrequency),
                ("kappa_i", AngularFrequency),
                ("kappa_e", AngularFrequency),
                ("C_total", Capacitance),
                ("V_zpf", Voltage),
            ],
            Section::Coupling => &[("g0", CouplingSlope), ("V_offset", Voltage)],
        }
    }
}

#[derive(Default)]
struct Pending {
    line: usize,
    id: Option<String>,
    values: BTreeMap<&'static str, (f64, usize)>,
}

impl Pending {
    fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).map(|v| v.0)
    }

    fn require(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::Parse {
            line: self.line,
            field: key.to_string(),
            message: "required field missing from device record".into(),
        })
    }

    fn finish(self) -> Result<DeviceRecord<f64>> {
        let id = self.id.clone().ok_or_else(|| Error::Parse {
            line: self.line,
            field: "id".into(),
            message: "required field missing from device record".into(),
        })?;
        let tau_d = self.require("tau_d_max")?;
        let tau_c = self.require("tau_c_max")?;
        let field_err = |key: &str, e: Error| Error::Parse {
            line: self.values.get(key).map(|v| v.1).unwrap_or(self.line),
            field: key.to_string(),
            message: e.to_string(),
        };

        let gamma_i = self.get("gamma_i_intrinsic_decay").unwrap_or(1.0 / tau_d);
        let gamma_t = self.get("gamma_total_linewidth").unwrap_or(1.0 / tau_c);
        let omega_m = self.require("omega_m")?;
        let mut mech = MechanicalMode::new(omega_m, gamma_i, gamma_t)
            .map_err(|e| field_err("gamma_total_linewidth", e))?;
        mech.m_eff = self.get("m_eff");
        mech.x_zpf = match (self.get("x_zpf"), mech.m_eff) {
            (Some(x), _) => Some(x),
            (None, Some(m)) => Some(zero_point_displacement(m, omega_m)),
            (None, None) => None,
        };

        let omega_r = self.require("omega_r")?;
        let mut mw = MicrowaveMode::new(omega_r, self.require("kappa_i")?, self.require("kappa_e")?)
            .map_err(|e| field_err("kappa_i", e))?;
        mw.c_total = self.get("C_total");
        mw.v_zpf = match (self.get("V_zpf"), mw.c_total) {
            (Some(v), _) => Some(v),
            (None, Some(c)) => Some(zero_point_voltage(omega_r, c)),
            (None, None) => None,
        };

        Ok(DeviceRecord {
            id,
            mechanical: mech,
            microwave: mw,
            coupling: CouplingLaw {
                g0: self.require("g0")?,
                v_offset: self.get("V_offset").unwrap_or(0.0),
            },
            t_mxc: self.require("T_mxc")?,
            tau_d_max: tau_d,
            tau_c_max: tau_c,
            k_tune: self.get("k_tune"),
        })
    }
}

/// Parses a device table. An empty input yields an empty list.
pub fn parse_devices(text: &str) -> Result<Vec<DeviceRecord<f64>>> {
    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    let mut section: Option<Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('[') {
            let name = h.strip_suffix(']').ok_or_else(|| Error::Parse {
                line: line_no,
                field: line.to_string(),
                message: "unterminated section header".into(),
            })?;
            let sec = [Section::Device, Section::Mechanical, Section::Microwave, Section::Coupling]
                .into_iter()
                .find(|s| s.header() == name.trim())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    field: name.to_string(),
                    message: "unknown section".into(),
                })?;
            if sec == Section::Device {
                if let Some(p) = current.take() {
                    out.push(p.finish()?);
                }
                current = Some(Pending { line: line_no, ..Default::default() });
            } else if current.is_none() {
                return Err(Error::Parse {
                    line: line_no,
                    field: name.to_string(),
                    message: "sub-section before any [device] header".into(),
                });
            }
            section = Some(sec);
            continue;
        }

        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            field: line.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let (Some(sec), Some(rec)) = (section, current.as_mut()) else {
            return Err(Error::Parse {
                line: line_no,
                field: key.to_string(),
                message: "field outside a [device] record".into(),
            });
        };
        let Some(&(name, dim)) = sec.keys().iter().find(|(k, _)| *k == key) else {
            return Err(Error::Parse {
                line: line_no,
                field: key.to_string(),
                message: format!("unknown field in [{}]", sec.header()),
            });
        };
        if name == "id" {
            if value.is_empty() {
                return Err(Error::Parse { line: line_no, field: key.into(), message: "empty id".into() });
            }
            rec.id = Some(value.to_string());
            continue;
        }
        let v = parse_quantity(value, dim).map_err(|e| Error::Parse {
            line: line_no,
            field: key.to_string(),
            message: e.to_string(),
        })?;
        if rec.values.insert(name, (v, line_no)).is_some() {
            return Err(Error::Parse {
                line: line_no,
                field: key.to_string(),
                message: "duplicate field".into(),
            });
        }
    }
    if let Some(p) = current.take() {
        out.push(p.finish()?);
    }
    Ok(out)
}

/// Reads and parses a device table from disk.
pub fn load_devices(path: impl AsRef<Path>) -> Result<Vec<DeviceRecord<f64>>> {
    let text = std::fs::read_to_string(path)?;
    parse_devices(&text)
}

/// The two bundled reference devices.
pub fn bundled_devices() -> Vec<DeviceRecord<f64>> {
    parse_devices(BUNDLED_DEVICES).expect("bundled device table parses")
}

/// Looks up a bundled device by id (case-insensitive).
pub fn bundled_device(id: &str) -> Result<DeviceRecord<f64>> {
    bundled_devices()
        .into_iter()
        .find(|d| d.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::Domain(format!("no bundled device with id `{id}`")))
}

/// Formats an angular frequency in Hz when that round-trips exactly, in rad/s otherwise.
pub fn format_angular(w: f64) -> String {
    let hz = w / TAU;
    if hz * TAU == w {
        format!("{hz} Hz")
    } else {
        format!("{w} rad/s")
    }
}

/// Serializes records into the table format, losslessly.
pub fn write_devices(records: &[DeviceRecord<f64>]) -> String {
    let mut s = String::new();
    for (i, d) in records.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "[device]");
        let _ = writeln!(s, "id = {}", d.id);
        let _ = writeln!(s, "T_mxc = {} K", d.t_mxc);
        let _ = writeln!(s, "tau_d_max = {} s", d.tau_d_max);
        let _ = writeln!(s, "tau_c_max = {} s", d.tau_c_max);
        if let Some(k) = d.k_tune {
            let _ = writeln!(s, "k_tune = {k} Hz/T^2");
        }
        let m = &d.mechanical;
        let _ = writeln!(s, "\n[device.mechanical]");
        let _ = writeln!(s, "omega_m = {}", format_angular(m.omega_m));
        let _ = writeln!(s, "gamma_i_intrinsic_decay = {}", format_angular(m.gamma_i_intrinsic_decay));
        let _ = writeln!(s, "gamma_total_linewidth = {}", format_angular(m.gamma_total_linewidth));
        if let Some(v) = m.m_eff {
            let _ = writeln!(s, "m_eff = {v} kg");
        }
        if let Some(v) = m.x_zpf {
            let _ = writeln!(s, "x_zpf = {v} m");
        }
        let w = &d.microwave;
        let _ = writeln!(s, "\n[device.microwave]");
        let _ = writeln!(s, "omega_r = {}", format_angular(w.omega_r));
        let _ = writeln!(s, "kappa_i = {}", format_angular(w.kappa_i));
        let _ = writeln!(s, "kappa_e = {}", format_angular(w.kappa_e));
        if let Some(v) = w.c_total {
            let _ = writeln!(s, "C_total = {v} F");
        }
        if let Some(v) = w.v_zpf {
            let _ = writeln!(s, "V_zpf = {v} V");
        }
        let _ = writeln!(s, "\n[device.coupling]");
        let _ = writeln!(s, "g0 = {} Hz/V", d.coupling.g0);
        let _ = writeln!(s, "V_offset = {} V", d.coupling.v_offset);
    }
    s
}
