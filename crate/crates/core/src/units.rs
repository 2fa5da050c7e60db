//! Unit conversions between the user-facing convention (ordinary frequency in
//! MHz, times in ns or us) and the internal one (angular frequency in rad/ns).

use std::f64::consts::TAU;

/// rad/ns per MHz of ordinary frequency: 2π × 10⁻³.
pub const ANGULAR_PER_MHZ: f64 = TAU * 1e-3;

/// Converts an ordinary frequency ν in MHz to ω = 2πν in rad/ns.
pub fn mhz_to_angular(nu_mhz: f64) -> f64 {
    nu_mhz * ANGULAR_PER_MHZ
}

/// Converts an angular frequency in rad/ns back to ordinary MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / ANGULAR_PER_MHZ
}

pub fn us_to_ns(t_us: f64) -> f64 {
    t_us * 1e3
}

/// Bloch period 1/F in ns for a gradient F/2π given in MHz.
pub fn bloch_period_ns(gradient_mhz: f64) -> f64 {
    1e3 / gradient_mhz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let w = mhz_to_angular(14.6);
        assert!((w - TAU * 0.0146).abs() < 1e-15);
        assert!((angular_to_mhz(w) - 14.6).abs() < 1e-12);
    }

    #[test]
    fn bloch_period_at_15_mhz() {
        assert!((bloch_period_ns(15.0) - 66.666_666_666).abs() < 1e-6);
    }
}
