//! Detector versus amplifier sensitivity expressed as noise temperatures.
//!
//! A power detector with intrinsic NEP and a pre-detection bandwidth B has
//! the same radiometric sensitivity as an amplifier of noise temperature
//! NEP/(k√(2B)). The curve families here put detectors, quantum-limited
//! amplifiers and thermal sources on that common axis.
//!
//! Two of the families are modelling choices rather than textbook results:
//! the amplifier system temperature is taken as (hν/k)(n̄ + 1), source
//! photons plus one photon of combined source and amplifier zero-point
//! noise, and a dark count rate Γ is converted with NEP = hν√(2Γ).

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::radiometry::occupancy;

/// NEP/(k√(2B_pre)), K.
pub fn nep_to_temperature(nep: f64, b_pre: f64) -> Result<f64> {
    require_non_negative("NEP", nep)?;
    require_positive("pre-detection bandwidth", b_pre)?;
    Ok(nep / (BOLTZMANN * (2.0 * b_pre).sqrt()))
}

/// πν₀/4R, the noise bandwidth of a single-pole filter with resolution R.
pub fn lorentzian_pre_bandwidth(nu0: f64, resolution: f64) -> Result<f64> {
    require_positive("centre frequency", nu0)?;
    require_positive("resolution", resolution)?;
    Ok(std::f64::consts::PI * nu0 / (4.0 * resolution))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bandwidth {
    Resolution(f64),
    PreDetection(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    nep: f64,
    nu0: f64,
    bandwidth: Bandwidth,
}

impl DetectorSpec {
    /// Detector behind a Lorentzian filter of resolution R = ν₀/Δν.
    pub fn with_resolution(nep: f64, nu0: f64, resolution: f64) -> Result<Self> {
        require_non_negative("NEP", nep)?;
        require_positive("centre frequency", nu0)?;
        require_positive("resolution", resolution)?;
        if resolution < 1.0 {
            return Err(Error::invalid("resolution", format!("must be >= 1, got {resolution}")));
        }
        Ok(DetectorSpec {
            nep,
            nu0,
            bandwidth: Bandwidth::Resolution(resolution),
        })
    }

    /// Detector with an explicit pre-detection bandwidth.
    pub fn with_bandwidth(nep: f64, nu0: f64, b_pre: f64) -> Result<Self> {
        require_non_negative("NEP", nep)?;
        require_positive("centre frequency", nu0)?;
        require_positive("pre-detection bandwidth", b_pre)?;
        Ok(DetectorSpec {
            nep,
            nu0,
            bandwidth: Bandwidth::PreDetection(b_pre),
        })
    }

    pub fn nep(&self) -> f64 {
        self.nep
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn resolution(&self) -> Option<f64> {
        match self.bandwidth {
            Bandwidth::Resolution(r) => Some(r),
            Bandwidth::PreDetection(_) => None,
        }
    }

    pub fn pre_detection_bandwidth(&self) -> f64 {
        match self.bandwidth {
            Bandwidth::Resolution(r) => std::f64::consts::PI * self.nu0 / (4.0 * r),
            Bandwidth::PreDetection(b) => b,
        }
    }
}

/// Equivalent noise temperature of a detector, K.
///
/// With a resolution this is √(2R/(k²πν₀))·NEP.
pub fn nep_to_temperature_resolved(d: &DetectorSpec) -> f64 {
    match d.bandwidth {
        Bandwidth::Resolution(r) => {
            (2.0 * r / (BOLTZMANN * BOLTZMANN * std::f64::consts::PI * d.nu0)).sqrt() * d.nep
        }
        Bandwidth::PreDetection(b) => d.nep / (BOLTZMANN * (2.0 * b).sqrt()),
    }
}

/// A family of sensitivity curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Quantum-limited amplifier viewing a source at temperature T, K.
    QuantumAmpSystem { source_t: f64 },
    /// Noise power of a single-mode thermal source, as a temperature.
    SingleModeRadiance { source_t: f64 },
    /// Detector with intrinsic NEP behind a filter of resolution R.
    DetectorNep { nep: f64, resolution: f64 },
    /// Photon counter with dark count rate Γ, Hz.
    DarkRate { rate: f64, resolution: f64 },
    /// Amplifier whose zero-point contribution is squeezed by `squeeze_db`.
    SqueezedSql { squeeze_db: f64, source_t: f64 },
}

impl CurveKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CurveKind::QuantumAmpSystem { source_t } | CurveKind::SingleModeRadiance { source_t } => {
                require_non_negative("source temperature", source_t)?;
            }
            CurveKind::DetectorNep { nep, resolution } => {
                require_non_negative("NEP", nep)?;
                require_positive("resolution", resolution)?;
            }
            CurveKind::DarkRate { rate, resolution } => {
                require_non_negative("dark rate", rate)?;
                require_positive("resolution", resolution)?;
            }
            CurveKind::SqueezedSql {
                squeeze_db,
                source_t,
            } => {
                require_non_negative("squeezing", squeeze_db)?;
                require_non_negative("source temperature", source_t)?;
            }
        }
        Ok(())
    }

    /// Column label used in CSV headers.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveKind::QuantumAmpSystem { source_t } => write!(f, "amp_system_T={source_t}K"),
            CurveKind::SingleModeRadiance { source_t } => write!(f, "source_T={source_t}K"),
            CurveKind::DetectorNep { nep, resolution } => write!(f, "nep={nep:e}_R={resolution}"),
            CurveKind::DarkRate { rate, resolution } => write!(f, "dark={rate}Hz_R={resolution}"),
            CurveKind::SqueezedSql {
                squeeze_db,
                source_t,
            } => write!(f, "squeezed_{squeeze_db}dB_T={source_t}K"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub nu: f64,
    pub t_equiv: f64,
}

pub fn curve_point(kind: &CurveKind, nu: f64) -> Result<CurvePoint> {
    kind.validate()?;
    require_positive("frequency", nu)?;
    let hnu_k = PLANCK * nu / BOLTZMANN;
    let t_equiv = match *kind {
        CurveKind::QuantumAmpSystem { source_t } => hnu_k * (occupancy(nu, source_t) + 1.0),
        CurveKind::SingleModeRadiance { source_t } => hnu_k * occupancy(nu, source_t),
        CurveKind::DetectorNep { nep, resolution } => {
            nep_to_temperature_resolved(&DetectorSpec::with_resolution(nep, nu, resolution.max(1.0))?)
        }
        CurveKind::DarkRate { rate, resolution } => {
            let nep = PLANCK * nu * (2.0 * rate).sqrt();
            nep_to_temperature_resolved(&DetectorSpec::with_resolution(nep, nu, resolution.max(1.0))?)
        }
        CurveKind::SqueezedSql {
            squeeze_db,
            source_t,
        } => {
            let s = 10f64.powf(squeeze_db / 10.0);
            hnu_k * (occupancy(nu, source_t) + 0.5 + 0.5 / s)
        }
    };
    Ok(CurvePoint { nu, t_equiv })
}

/// Log-spaced grid from `lo` to `hi` with `per_decade` intervals per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    require_positive("grid start", lo)?;
    require_positive("grid end", hi)?;
    if hi <= lo || per_decade == 0 {
        return Err(Error::invalid("grid", "need hi > lo and at least one point per decade"));
    }
    let steps = ((hi / lo).log10() * per_decade as f64).round().max(1.0) as usize;
    let span = (hi / lo).log10();
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| lo * 10f64.powf(span * i as f64 / steps as f64))
        .collect();
    grid[0] = lo;
    grid[steps] = hi;
    Ok(grid)
}

/// The curves of the standard comparison chart: amplifier systems, thermal
/// sources, NEP-limited detectors, dark-count-limited counters and a
/// squeezed amplifier.
pub fn default_figure7_curves() -> Vec<CurveKind> {
    let mut v = Vec::new();
    for t in [0.01, 0.05, 4.0, 200.0] {
        v.push(CurveKind::QuantumAmpSystem { source_t: t });
    }
    for t in [0.01, 0.05, 4.0] {
        v.push(CurveKind::SingleModeRadiance { source_t: t });
    }
    for nep in [1e-18, 1e-19, 1e-20, 1e-21, 1e-22] {
        v.push(CurveKind::DetectorNep {
            nep,
            resolution: 100.0,
        });
    }
    for rate in [10.0, 100.0, 1000.0] {
        v.push(CurveKind::DarkRate {
            rate,
            resolution: 100.0,
        });
    }
    v.push(CurveKind::SqueezedSql {
        squeeze_db: 10.0,
        source_t: 0.001,
    });
    v
}

/// 0.1 GHz to 10 THz, 20 points per decade.
pub fn default_figure7_grid() -> Vec<f64> {
    log_grid(1e8, 1e13, 20).expect("static grid is valid")
}

/// Curves evaluated on a shared frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub grid: Vec<f64>,
    pub curves: Vec<CurveKind>,
    /// `rows[i][j]` is curve j at `grid[i]`.
    pub rows: Vec<Vec<f64>>,
}

impl CurveTable {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn column_by_kind(&self, kind: &CurveKind) -> Option<Vec<f64>> {
        self.curves.iter().position(|k| k == kind).map(|j| self.column(j))
    }

    /// CSV with header `nu_Hz,<label>...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["nu_Hz".to_string()];
        header.extend(self.curves.iter().map(CurveKind::label));
        w.write_record(&header)?;
        for (nu, row) in self.grid.iter().zip(&self.rows) {
            let mut rec = vec![format!("{nu:e}")];
            rec.extend(row.iter().map(|t| format!("{t:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn figure7_dataset(curves: &[CurveKind], grid: &[f64]) -> Result<CurveTable> {
    if curves.is_empty() || grid.is_empty() {
        return Err(Error::invalid("dataset", "needs at least one curve and one frequency"));
    }
    for k in curves {
        k.validate()?;
    }
    if grid.iter().any(|&nu| !(nu.is_finite() && nu > 0.0)) {
        return Err(Error::invalid("grid", "frequencies must be finite and > 0"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    let rows = grid
        .par_iter()
        .map(|&nu| {
            curves
                .iter()
                .map(|k| curve_point(k, nu).map(|p| p.t_equiv))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveTable {
        grid: grid.to_vec(),
        curves: curves.to_vec(),
        rows,
    })
}

/// Frequencies in `[lo, hi]` where two curves cross, located by scanning a
/// log grid and bisecting each sign change in log frequency.
pub fn find_crossings(a: &CurveKind, b: &CurveKind, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let diff = |nu: f64| -> Result<f64> { Ok(curve_point(a, nu)?.t_equiv - curve_point(b, nu)?.t_equiv) };
    let grid = log_grid(lo, hi, 50)?;
    let mut out = Vec::new();
    let mut prev = (grid[0], diff(grid[0])?);
    for &nu in &grid[1..] {
        let d = diff(nu)?;
        if d == 0.0 {
            out.push(nu);
        } else if prev.1 != 0.0 && d.signum() != prev.1.signum() {
            let (mut x0, mut x1) = (prev.0.ln(), nu.ln());
            let mut f0 = prev.1;
            for _ in 0..100 {
                let xm = 0.5 * (x0 + x1);
                let fm = diff(xm.exp())?;
                if fm.signum() == f0.signum() {
                    x0 = xm;
                    f0 = fm;
                } else {
                    x1 = xm;
                }
            }
            out.push((0.5 * (x0 + x1)).exp());
        }
        prev = (nu, d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn nep_examples() {
        assert!(rel(nep_to_temperature(1e-18, 1e9).unwrap(), 1.6196) < 1e-4);
        assert_eq!(nep_to_temperature(0.0, 1e9).unwrap(), 0.0);
        let a = nep_to_temperature(1e-18, 1e9).unwrap();
        let b = nep_to_temperature(1e-18, 4e9).unwrap();
        assert!(rel(b, a / 2.0) < 1e-15);
        assert!(nep_to_temperature(1e-18, 0.0).is_err());
    }

    #[test]
    fn resolved_examples() {
        let d = DetectorSpec::with_resolution(1e-20, 1e12, 100.0).unwrap();
        assert!(rel(nep_to_temperature_resolved(&d), 5.779e-3) < 1e-3);
        let two_step = nep_to_temperature(1e-20, lorentzian_pre_bandwidth(1e12, 100.0).unwrap()).unwrap();
        assert!(rel(nep_to_temperature_resolved(&d), two_step) < 1e-12);
        let d4 = DetectorSpec::with_resolution(1e-20, 1e12, 400.0).unwrap();
        assert!(rel(nep_to_temperature_resolved(&d4), 2.0 * nep_to_temperature_resolved(&d)) < 1e-12);
        let db = DetectorSpec::with_bandwidth(1e-18, 1e12, 1e9).unwrap();
        assert_eq!(nep_to_temperature_resolved(&db), nep_to_temperature(1e-18, 1e9).unwrap());
        assert!(DetectorSpec::with_resolution(1e-20, 1e12, 0.5).is_err());
    }

    #[test]
    fn curve_limits() {
        let rj = curve_point(&CurveKind::SingleModeRadiance { source_t: 200.0 }, 1e8).unwrap();
        assert!(rel(rj.t_equiv, 200.0) < 1e-3);
        let hi = curve_point(&CurveKind::QuantumAmpSystem { source_t: 0.01 }, 1e12).unwrap();
        assert!(rel(hi.t_equiv, PLANCK * 1e12 / BOLTZMANN) < 1e-12);
        let dark = curve_point(&CurveKind::DarkRate { rate: 0.0, resolution: 100.0 }, 1e11).unwrap();
        assert_eq!(dark.t_equiv, 0.0);
    }

    #[test]
    fn unsqueezed_equals_plain_amplifier() {
        for nu in [1e9, 1e11, 3e12] {
            let a = curve_point(&CurveKind::SqueezedSql { squeeze_db: 0.0, source_t: 0.3 }, nu).unwrap();
            let b = curve_point(&CurveKind::QuantumAmpSystem { source_t: 0.3 }, nu).unwrap();
            assert!(rel(a.t_equiv, b.t_equiv) < 1e-15);
        }
    }

    #[test]
    fn grid_counting() {
        let g = log_grid(1e9, 1e12, 10).unwrap();
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 1e9);
        assert_eq!(g[30], 1e12);
        assert!(rel(g[10], 1e10) < 1e-12);
    }

    #[test]
    fn single_cell_table() {
        let t = figure7_dataset(&[CurveKind::QuantumAmpSystem { source_t: 4.0 }], &[1e10]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].len(), 1);
        assert!(figure7_dataset(&[], &[1e10]).is_err());
        assert!(figure7_dataset(&default_figure7_curves(), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn csv_header_names_every_curve() {
        let t = figure7_dataset(&default_figure7_curves(), &[1e9, 1e10]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("nu_Hz,amp_system_T=0.01K,"));
        assert_eq!(header.split(',').count(), 1 + default_figure7_curves().len());
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn crossing_finder_locates_known_root() {
        // red(1e-19) equals black(4 K) where the two temperatures meet
        let red = CurveKind::DetectorNep { nep: 1e-19, resolution: 100.0 };
        let black = CurveKind::QuantumAmpSystem { source_t: 4.0 };
        let xs = find_crossings(&red, &black, 1e7, 1e13).unwrap();
        assert_eq!(xs.len(), 1);
        let a = curve_point(&red, xs[0]).unwrap().t_equiv;
        let b = curve_point(&black, xs[0]).unwrap().t_equiv;
        assert!(rel(a, b) < 1e-9);
    }
}
