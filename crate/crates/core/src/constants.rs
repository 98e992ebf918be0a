//! Physical constants (CODATA 2018, SI units).
//!
//! Since the 2019 SI redefinition h, k, e and c are exact.

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant h/2π, J s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Tag written into output metadata so results can be traced to a constants set.
pub const CONSTANTS_REVISION: &str = "CODATA-2018";

/// Photon energy hν in joules.
#[inline]
pub fn photon_energy(nu: f64) -> f64 {
    PLANCK * nu
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_matches_codata_value() {
        assert!((HBAR - 1.054_571_817e-34).abs() / HBAR < 1e-9);
    }
}
