//! Mode counting and thermal photon-noise statistics.
//!
//! All public interfaces take frequencies in Hz. Integrals written over
//! angular frequency carry a `dω/2π`, which is converted once to `dν` here;
//! nothing downstream works in ω.

use std::f64::consts::{LN_2, PI};

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::quadrature;

/// Relative tolerance used for every band integral in this module.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

/// Beam geometry used to count transverse modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Etendue {
    /// Single-mode TEM transmission line.
    TemLine,
    /// Source of area `area` (m²) radiating into a half space.
    HalfSpace { area: f64, wavelength: f64 },
    /// Beam of half opening angle `half_angle` (rad) from area `area` (m²).
    Cone {
        area: f64,
        wavelength: f64,
        half_angle: f64,
    },
    /// A mode count obtained elsewhere (e.g. from a diffraction calculation).
    ModeCount(f64),
}

impl Etendue {
    pub fn half_space(area: f64, wavelength: f64) -> Result<Self> {
        require_positive("area", area)?;
        require_positive("wavelength", wavelength)?;
        Ok(Etendue::HalfSpace { area, wavelength })
    }

    pub fn cone(area: f64, wavelength: f64, half_angle: f64) -> Result<Self> {
        require_positive("area", area)?;
        require_positive("wavelength", wavelength)?;
        if !(half_angle > 0.0 && half_angle <= PI / 2.0) {
            return Err(Error::invalid(
                "half_angle",
                format!("must lie in (0, π/2], got {half_angle}"),
            ));
        }
        Ok(Etendue::Cone {
            area,
            wavelength,
            half_angle,
        })
    }

    pub fn mode_count(modes: f64) -> Result<Self> {
        require_non_negative("mode count", modes)?;
        Ok(Etendue::ModeCount(modes))
    }

    /// Effective solid angle π sin²θ_m, weighting each mode by its projected area.
    pub fn effective_solid_angle(&self) -> Option<f64> {
        match *self {
            Etendue::HalfSpace { .. } => Some(PI),
            Etendue::Cone { half_angle, .. } => Some(PI * half_angle.sin().powi(2)),
            _ => None,
        }
    }
}

/// Effective number of transverse modes N = A Ω_eff / λ² (one polarisation).
///
/// The result is a real scaling factor and need not be an integer.
pub fn mode_count(etendue: &Etendue) -> f64 {
    match *etendue {
        Etendue::TemLine => 1.0,
        Etendue::ModeCount(n) => n,
        Etendue::HalfSpace { area, wavelength } | Etendue::Cone { area, wavelength, .. } => {
            let omega_eff = etendue.effective_solid_angle().unwrap_or(0.0);
            area * omega_eff / (wavelength * wavelength)
        }
    }
}

/// A frequency band with the number of points used to seed quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBand {
    lo: f64,
    hi: f64,
    points: usize,
}

impl SpectralBand {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        require_positive("band lower edge", lo)?;
        require_positive("band upper edge", hi)?;
        if hi <= lo {
            return Err(Error::invalid(
                "band",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if points < 2 {
            return Err(Error::invalid("quadrature points", "need at least 2"));
        }
        Ok(SpectralBand { lo, hi, points })
    }

    /// Band with a default of 16 seed points.
    pub fn from_edges(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, 16)
    }

    /// Band of width `bandwidth` centred on `centre`.
    pub fn centred(centre: f64, bandwidth: f64) -> Result<Self> {
        Self::from_edges(centre - 0.5 * bandwidth, centre + 0.5 * bandwidth)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Pre-detection bandwidth B_pre = ν_hi − ν_lo.
    pub fn bandwidth(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// ∫ f(ν) dν over the band.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        quadrature::integrate(f, self.lo, self.hi, QUADRATURE_REL_TOL, self.points)
    }
}

/// Post-detection integration time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    tau: f64,
}

impl IntegrationSpec {
    pub fn new(tau: f64) -> Result<Self> {
        require_positive("integration time", tau)?;
        Ok(IntegrationSpec { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Anything that fills N transverse modes with a known mean occupancy per mode.
pub trait PhotonSource {
    /// Number of transverse modes N.
    fn modes(&self) -> f64;
    /// Mean photon number per mode at frequency `nu`.
    fn occupancy(&self, nu: f64) -> f64;

    /// Average spectral power P(ν) = N hν n(ν), W/Hz.
    fn spectral_power(&self, nu: f64) -> f64 {
        self.modes() * PLANCK * nu * self.occupancy(nu)
    }
}

/// Blackbody source at physical temperature `T_p` seen through an etendue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSource {
    temperature: f64,
    etendue: Etendue,
    polarisations: u8,
}

impl ThermalSource {
    pub fn new(temperature: f64, etendue: Etendue) -> Result<Self> {
        require_non_negative("temperature", temperature)?;
        Ok(ThermalSource {
            temperature,
            etendue,
            polarisations: 1,
        })
    }

    /// Single-mode source, e.g. a matched load on a transmission line.
    pub fn single_mode(temperature: f64) -> Result<Self> {
        Self::new(temperature, Etendue::TemLine)
    }

    /// Counts both polarisations (doubles N).
    pub fn with_both_polarisations(mut self) -> Self {
        self.polarisations = 2;
        self
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn etendue(&self) -> &Etendue {
        &self.etendue
    }
}

impl PhotonSource for ThermalSource {
    fn modes(&self) -> f64 {
        f64::from(self.polarisations) * mode_count(&self.etendue)
    }

    fn occupancy(&self, nu: f64) -> f64 {
        occupancy(nu, self.temperature)
    }
}

/// Source whose occupancy is the same at every frequency. Useful as a
/// test signal and for comparing against Monte Carlo estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSource {
    modes: f64,
    occupancy: f64,
}

impl FlatSource {
    pub fn new(modes: f64, occupancy: f64) -> Result<Self> {
        require_non_negative("mode count", modes)?;
        require_non_negative("occupancy", occupancy)?;
        Ok(FlatSource { modes, occupancy })
    }
}

impl PhotonSource for FlatSource {
    fn modes(&self) -> f64 {
        self.modes
    }

    fn occupancy(&self, _nu: f64) -> f64 {
        self.occupancy
    }
}

/// Bose–Einstein occupancy n = 1/(exp(hν/kT) − 1). Exactly zero at T = 0.
pub fn occupancy(nu: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = PLANCK * nu / (BOLTZMANN * temperature);
    1.0 / x.exp_m1()
}

/// Average detected power P = ∫ N hν n(ν) dν over the band, W.
pub fn thermal_power<S: PhotonSource>(source: &S, band: &SpectralBand) -> Result<f64> {
    if source.modes() == 0.0 {
        return Ok(0.0);
    }
    band.integrate(|nu| source.spectral_power(nu))
}

/// Power variance split into its wave (classical) and particle (shot) parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFluctuation {
    /// (1/τ) ∫ P(ν)²/N dν, W².
    pub classical: f64,
    /// (1/τ) ∫ hν P(ν) dν, W².
    pub quantum: f64,
}

impl PowerFluctuation {
    pub fn total(&self) -> f64 {
        self.classical + self.quantum
    }

    /// RMS power fluctuation ΔP, W.
    pub fn rms(&self) -> f64 {
        self.total().sqrt()
    }
}

/// (ΔP)² = (1/τ) ∫ [P(ν)²/N + hν P(ν)] dν.
pub fn power_fluctuation<S: PhotonSource>(
    source: &S,
    band: &SpectralBand,
    integ: &IntegrationSpec,
) -> Result<PowerFluctuation> {
    let modes = source.modes();
    if modes == 0.0 {
        return Ok(PowerFluctuation {
            classical: 0.0,
            quantum: 0.0,
        });
    }
    // P²/N written as N (hν n)² so that N → 0 stays finite.
    let classical = band.integrate(|nu| {
        let e = PLANCK * nu * source.occupancy(nu);
        modes * e * e
    })?;
    let quantum = band.integrate(|nu| PLANCK * nu * source.spectral_power(nu))?;
    Ok(PowerFluctuation {
        classical: classical / integ.tau(),
        quantum: quantum / integ.tau(),
    })
}

/// Radiometer equation ΔT = T / √(B_pre τ).
pub fn radiometer_resolution(temperature: f64, bandwidth: f64, tau: f64) -> Result<f64> {
    require_positive("temperature", temperature)?;
    require_positive("bandwidth", bandwidth)?;
    require_positive("integration time", tau)?;
    Ok(temperature / (bandwidth * tau).sqrt())
}

/// Frequency at which n(ν) = 1, where wave and shot noise contribute equally.
pub fn crossover_frequency(temperature: f64) -> Result<f64> {
    require_positive("temperature", temperature)?;
    Ok(BOLTZMANN * temperature * LN_2 / PLANCK)
}
