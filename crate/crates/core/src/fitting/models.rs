//! Model library. Frequencies are cyclic Hz; EIT centers are offsets from a caller-chosen
//! reference so that parameters stay well scaled.

use num_complex::Complex;

use super::{Model, ParamSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[inline]
fn re<T: Real>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

/// A·(w/2)²/((x − x0)² + (w/2)²) + B.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lorentzian;

impl<T: Real> Model<T> for Lorentzian {
    fn name(&self) -> &str {
        "lorentzian"
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        vec![
            ParamSpec::free("amplitude", T::one()),
            ParamSpec::free("center", T::one()),
            ParamSpec::positive("fwhm", T::one()),
            ParamSpec::free("offset", T::one()),
        ]
    }

    fn eval(&self, p: &[T], x: T) -> Complex<T> {
        let h = p[2] * T::lit(0.5);
        let u = x - p[1];
        re(p[0] * h * h / (u * u + h * h) + p[3])
    }

    fn jacobian(&self, p: &[T], x: T, out: &mut [Complex<T>]) -> bool {
        let h = p[2] * T::lit(0.5);
        let u = x - p[1];
        let d = u * u + h * h;
        out[0] = re(h * h / d);
        out[1] = re(p[0] * h * h * T::lit(2.0) * u / (d * d));
        out[2] = re(p[0] * h * u * u / (d * d));
        out[3] = re(T::one());
        true
    }
}

/// Reflection 1 − κₑe^{iφ}/(i(f_r − x) + κ/2 + g²/(i(f_m − x) + γ/2)), all in Hz.
///
/// Parameters: `df_r`, `df_m` (offsets from the reference), `kappa_i`, `kappa_e`, `gamma`,
/// `g`, and `fano_phase` when `fano` is set.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexEit {
    pub fano: bool,
}

impl<T: Real> Model<T> for ComplexEit {
    fn name(&self) -> &str {
        if self.fano {
            "complex_eit_fano"
        } else {
            "complex_eit"
        }
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        let mut v = vec![
            ParamSpec::free("df_r", T::lit(1e3)),
            ParamSpec::free("df_m", T::lit(1e3)),
            ParamSpec::positive("kappa_i", T::lit(1e3)),
            ParamSpec::positive("kappa_e", T::lit(1e3)),
            ParamSpec::positive("gamma", T::lit(1e3)),
            ParamSpec::positive("g", T::lit(1e3)),
        ];
        if self.fano {
            v.push(ParamSpec::bounded("fano_phase", -T::PI(), T::PI(), T::one()));
        }
        v
    }

    fn is_complex(&self) -> bool {
        true
    }

    fn eval(&self, p: &[T], x: T) -> Complex<T> {
        let half = T::lit(0.5);
        let m = Complex::new(p[4] * half, p[1] - x);
        let den = Complex::new((p[2] + p[3]) * half, p[0] - x) + m.inv() * (p[5] * p[5]);
        let phi = if self.fano { p[6] } else { T::zero() };
        re(T::one()) - Complex::from_polar(p[3], phi) / den
    }

    fn jacobian(&self, p: &[T], x: T, out: &mut [Complex<T>]) -> bool {
        let half = T::lit(0.5);
        let i = Complex::new(T::zero(), T::one());
        let m = Complex::new(p[4] * half, p[1] - x);
        let minv = m.inv();
        let g2 = p[5] * p[5];
        let den = Complex::new((p[2] + p[3]) * half, p[0] - x) + minv * g2;
        let phi = if self.fano { p[6] } else { T::zero() };
        let e = Complex::from_polar(T::one(), phi);
        let dinv = den.inv();
        // ∂r/∂den = κₑe^{iφ}/den².
        let q = e * dinv * dinv * p[3];
        let dden_dm = -(minv * minv) * g2;
        out[0] = q * i;
        out[1] = q * dden_dm * i;
        out[2] = q * half;
        out[3] = q * half - e * dinv;
        out[4] = q * dden_dm * half;
        out[5] = q * minv * (T::lit(2.0) * p[5]);
        if self.fano {
            out[6] = -(i * e * dinv * p[3]);
        }
        true
    }
}

/// A·e^(−Γt) + B.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpDecay;

impl<T: Real> Model<T> for ExpDecay {
    fn name(&self) -> &str {
        "exp_decay"
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        vec![
            ParamSpec::free("amplitude", T::one()),
            ParamSpec::positive("rate", T::one()),
            ParamSpec::free("offset", T::one()),
        ]
    }

    fn eval(&self, p: &[T], t: T) -> Complex<T> {
        re(p[0] * (-p[1] * t).exp() + p[2])
    }

    fn jacobian(&self, p: &[T], t: T, out: &mut [Complex<T>]) -> bool {
        let e = (-p[1] * t).exp();
        out[0] = re(e);
        out[1] = re(-p[0] * t * e);
        out[2] = re(T::one());
        true
    }
}

/// f_max − k·B².
#[derive(Debug, Clone, Copy, Default)]
pub struct TuningParabola;

impl<T: Real> Model<T> for TuningParabola {
    fn name(&self) -> &str {
        "tuning_parabola"
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        vec![ParamSpec::free("f_max", T::one()), ParamSpec::free("k_tune", T::one())]
    }

    fn eval(&self, p: &[T], b: T) -> Complex<T> {
        re(p[0] - p[1] * b * b)
    }

    fn jacobian(&self, _p: &[T], b: T, out: &mut [Complex<T>]) -> bool {
        out[0] = re(T::one());
        out[1] = re(-b * b);
        true
    }
}

/// Which placement of the power-law root the TLS saturation model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TlsLaw {
    /// A/√(1 + (n/n_c)^β) + γ₀, decreasing with phonon number.
    #[default]
    Saturating,
    /// A·√(1 + (n/n_c)^β) + γ₀.
    Growing,
}

/// TLS linewidth versus phonon number. `amplitude` absorbs F·γ_TLS and the thermal factor.
#[derive(Debug, Clone, Copy, Default)]
pub struct TlsSaturation {
    pub law: TlsLaw,
}

impl TlsSaturation {
    fn power<T: Real>(p: &[T], n: T) -> (T, T, T) {
        // (s, ∂s/∂n_c, ∂s/∂β) with s = 1 + (n/n_c)^β.
        if n <= T::zero() {
            return (T::one(), T::zero(), T::zero());
        }
        let ratio = n / p[1];
        let q = ratio.powf(p[2]);
        (T::one() + q, -p[2] * q / p[1], q * ratio.ln())
    }
}

impl<T: Real> Model<T> for TlsSaturation {
    fn name(&self) -> &str {
        match self.law {
            TlsLaw::Saturating => "tls_saturation",
            TlsLaw::Growing => "tls_saturation_growing",
        }
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        vec![
            ParamSpec::positive("amplitude", T::one()),
            ParamSpec::positive("n_c", T::one()),
            ParamSpec::bounded("beta", T::lit(1e-3), T::lit(2.0), T::one()),
            ParamSpec::positive("gamma_0", T::one()),
        ]
    }

    fn eval(&self, p: &[T], n: T) -> Complex<T> {
        let (s, _, _) = Self::power(p, n);
        let f = match self.law {
            TlsLaw::Saturating => s.sqrt().recip(),
            TlsLaw::Growing => s.sqrt(),
        };
        re(p[0] * f + p[3])
    }

    fn jacobian(&self, p: &[T], n: T, out: &mut [Complex<T>]) -> bool {
        let (s, ds_nc, ds_b) = Self::power(p, n);
        let half = T::lit(0.5);
        let (f, df_ds) = match self.law {
            TlsLaw::Saturating => (s.sqrt().recip(), -half * s.powf(T::lit(-1.5))),
            TlsLaw::Growing => (s.sqrt(), half / s.sqrt()),
        };
        out[0] = re(f);
        out[1] = re(p[0] * df_ds * ds_nc);
        out[2] = re(p[0] * df_ds * ds_b);
        out[3] = re(T::one());
        true
    }
}

/// Hybridized branches versus field B: Re = upper, Im = lower,
/// ½(f_r + f_m) ± ½√((f_r − f_m)² + 4g²) with f_r = f_max − k·B².
#[derive(Debug, Clone, Copy, Default)]
pub struct AvoidedCrossing;

impl<T: Real> Model<T> for AvoidedCrossing {
    fn name(&self) -> &str {
        "avoided_crossing"
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        vec![
            ParamSpec::free("f_max", T::one()),
            ParamSpec::free("k_tune", T::one()),
            ParamSpec::free("f_m", T::one()),
            ParamSpec::positive("g", T::one()),
        ]
    }

    fn is_complex(&self) -> bool {
        true
    }

    fn eval(&self, p: &[T], b: T) -> Complex<T> {
        let half = T::lit(0.5);
        let fr = p[0] - p[1] * b * b;
        let d = fr - p[2];
        let r = (d * d + T::lit(4.0) * p[3] * p[3]).sqrt();
        let mean = (fr + p[2]) * half;
        Complex::new(mean + r * half, mean - r * half)
    }

    fn jacobian(&self, p: &[T], b: T, out: &mut [Complex<T>]) -> bool {
        let half = T::lit(0.5);
        let fr = p[0] - p[1] * b * b;
        let d = fr - p[2];
        let r = (d * d + T::lit(4.0) * p[3] * p[3]).sqrt();
        let c = d / r;
        let up_fr = (T::one() + c) * half;
        let lo_fr = (T::one() - c) * half;
        let b2 = b * b;
        out[0] = Complex::new(up_fr, lo_fr);
        out[1] = Complex::new(-b2 * up_fr, -b2 * lo_fr);
        out[2] = Complex::new(lo_fr, up_fr);
        let dg = T::lit(2.0) * p[3] / r;
        out[3] = Complex::new(dg, -dg);
        true
    }
}

/// I = V/R + I0.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearIv;

impl<T: Real> Model<T> for LinearIv {
    fn name(&self) -> &str {
        "linear_iv"
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        vec![ParamSpec::free("resistance", T::one()), ParamSpec::free("current_offset", T::lit(1e-12))]
    }

    fn eval(&self, p: &[T], v: T) -> Complex<T> {
        re(v / p[0] + p[1])
    }

    fn jacobian(&self, p: &[T], v: T, out: &mut [Complex<T>]) -> bool {
        out[0] = re(-v / (p[0] * p[0]));
        out[1] = re(T::one());
        true
    }
}

/// Names accepted by [`model_by_name`].
pub const MODEL_NAMES: &[&str] = &[
    "lorentzian",
    "complex_eit",
    "complex_eit_fano",
    "exp_decay",
    "tuning_parabola",
    "tls_saturation",
    "tls_saturation_growing",
    "avoided_crossing",
    "linear_iv",
];

/// Every library model.
pub fn model_library<T: Real>() -> Vec<Box<dyn Model<T>>> {
    MODEL_NAMES.iter().map(|n| model_by_name(n).expect("library name")).collect()
}

pub fn model_by_name<T: Real>(name: &str) -> Result<Box<dyn Model<T>>> {
    Ok(match name {
        "lorentzian" => Box::new(Lorentzian),
        "complex_eit" => Box::new(ComplexEit { fano: false }),
        "complex_eit_fano" => Box::new(ComplexEit { fano: true }),
        "exp_decay" => Box::new(ExpDecay),
        "tuning_parabola" => Box::new(TuningParabola),
        "tls_saturation" => Box::new(TlsSaturation { law: TlsLaw::Saturating }),
        "tls_saturation_growing" => Box::new(TlsSaturation { law: TlsLaw::Growing }),
        "avoided_crossing" => Box::new(AvoidedCrossing),
        "linear_iv" => Box::new(LinearIv),
        _ => {
            return Err(Error::UnknownModel { name: name.to_string(), available: MODEL_NAMES.join(", ") })
        }
    })
}

/// Peak-pick start values (amplitude, center, fwhm, offset) for [`Lorentzian`].
pub fn init_lorentzian(x: &[f64], y: &[f64]) -> Result<[f64; 4]> {
    if x.len() < 4 || x.len() != y.len() {
        return Err(Error::InsufficientData("lorentzian init needs at least 4 points".into()));
    }
    let offset = crate::linalg::median(y);
    let (ipk, _) = y
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (v - offset).abs()))
        .fold((0, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
    let amp = y[ipk] - offset;
    let half = amp.abs() / 2.0;
    let left = (0..ipk).rev().find(|&i| (y[i] - offset).abs() < half).map(|i| x[i]);
    let right = (ipk + 1..x.len()).find(|&i| (y[i] - offset).abs() < half).map(|i| x[i]);
    let span = (x[x.len() - 1] - x[0]).abs();
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => (r - l).abs(),
        (Some(l), None) => 2.0 * (x[ipk] - l).abs(),
        (None, Some(r)) => 2.0 * (r - x[ipk]).abs(),
        (None, None) => span / 10.0,
    };
    Ok([amp, x[ipk], fwhm.max(span * 1e-6), offset])
}

/// Log-linear start values (amplitude, rate, offset) for [`ExpDecay`].
pub fn init_exp_decay(t: &[f64], y: &[f64]) -> Result<[f64; 3]> {
    let n = t.len();
    if n < 3 || n != y.len() {
        return Err(Error::InsufficientData("exp_decay init needs at least 3 points".into()));
    }
    let tail = (n / 10).max(1);
    let offset = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let head = (n / 20).max(1);
    let y0 = y[..head].iter().sum::<f64>() / head as f64 - offset;
    // Weighted regression of ln(y − B) on points well above the floor.
    let (mut sw, mut st, mut sz, mut stt, mut stz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let v = (yi - offset) * y0.signum();
        if v > 0.1 * y0.abs() {
            let w = v * v;
            let z = v.ln();
            sw += w;
            st += w * ti;
            sz += w * z;
            stt += w * ti * ti;
            stz += w * ti * z;
        }
    }
    let span = (t[n - 1] - t[0]).abs();
    let det = sw * stt - st * st;
    let (rate, amp) = if sw > 0.0 && det > 0.0 {
        let slope = (sw * stz - st * sz) / det;
        let icpt = (sz - slope * st) / sw;
        (-slope, y0.signum() * icpt.exp())
    } else {
        (3.0 / span, y0)
    };
    let rate = if rate.is_finite() && rate > 0.0 { rate } else { 3.0 / span };
    Ok([amp, rate, offset])
}
