//! Physical constants (CODATA 2018 exact SI values where defined).

use crate::scalar::Real;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const K_B: f64 = 1.380_649e-23;
pub const EPSILON_0: f64 = 8.854_187_8128e-12;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// One Debye in C·m.
pub const DEBYE: f64 = 3.335_64e-30;

#[inline]
pub fn hbar<T: Real>() -> T {
    T::lit(HBAR)
}

#[inline]
pub fn planck<T: Real>() -> T {
    T::lit(PLANCK)
}

#[inline]
pub fn k_b<T: Real>() -> T {
    T::lit(K_B)
}

#[inline]
pub fn epsilon_0<T: Real>() -> T {
    T::lit(EPSILON_0)
}
