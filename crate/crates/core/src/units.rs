//! Conversions between the linear frequencies quoted on the command line
//! and the angular frequencies used internally.

use std::f64::consts::TAU;

pub const Z0_OHM: f64 = 50.0;

/// Angular frequency (rad/s) for a linear frequency in GHz.
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// Angular frequency (rad/s) for a linear frequency in MHz.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

pub fn to_hz(omega: f64) -> f64 {
    omega / TAU
}

pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU / 1e6
}

pub fn power_db(abs2: f64) -> f64 {
    10.0 * abs2.log10()
}
