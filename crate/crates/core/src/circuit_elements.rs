//! Quantised lumped elements and superconductor constants.

use std::io::{Read, Write};

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, HBAR, PLANCK};
use crate::error::{require_non_negative, require_positive, Error, Result};

/// An LC resonator with loaded quality factor Q held at physical
/// temperature T_p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorSpec {
    omega0: f64,
    inductance: f64,
    capacitance: f64,
    q: f64,
    temperature: f64,
}

impl ResonatorSpec {
    /// Checks that ω₀ agrees with 1/√(LC) to 1e-9.
    pub fn new(omega0: f64, inductance: f64, capacitance: f64, q: f64, temperature: f64) -> Result<Self> {
        require_positive("ω0", omega0)?;
        let spec = ResonatorSpec::from_lc(inductance, capacitance, q, temperature)?;
        if ((spec.omega0 - omega0) / omega0).abs() > 1e-9 {
            return Err(Error::invalid(
                "ω0",
                format!("{omega0} does not match 1/√(LC) = {}", spec.omega0),
            ));
        }
        Ok(spec)
    }

    pub fn from_lc(inductance: f64, capacitance: f64, q: f64, temperature: f64) -> Result<Self> {
        require_positive("inductance", inductance)?;
        require_positive("capacitance", capacitance)?;
        require_positive("Q", q)?;
        require_non_negative("physical temperature", temperature)?;
        Ok(ResonatorSpec {
            omega0: 1.0 / (inductance * capacitance).sqrt(),
            inductance,
            capacitance,
            q,
            temperature,
        })
    }

    /// Resonator at `f0` with the given capacitance; L follows from ω₀.
    pub fn from_frequency(f0: f64, capacitance: f64, q: f64, temperature: f64) -> Result<Self> {
        require_positive("f0", f0)?;
        require_positive("capacitance", capacitance)?;
        let omega0 = 2.0 * std::f64::consts::PI * f0;
        ResonatorSpec::from_lc(1.0 / (omega0 * omega0 * capacitance), capacitance, q, temperature)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn f0(&self) -> f64 {
        self.omega0 / (2.0 * std::f64::consts::PI)
    }

    pub fn inductance(&self) -> f64 {
        self.inductance
    }

    pub fn capacitance(&self) -> f64 {
        self.capacitance
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Parallel loss resistance ω₀LQ.
    pub fn resistance(&self) -> f64 {
        self.omega0 * self.inductance * self.q
    }
}

/// coth(ħω/2kT), i.e. 2n̄ + 1; exactly 1 at T = 0.
pub fn coth_factor(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let two_x = HBAR * omega / (BOLTZMANN * temperature);
    1.0 + 2.0 / two_x.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureVariance {
    /// (Δv)², V².
    pub voltage: f64,
    /// (Δi)², A².
    pub current: f64,
}

/// Voltage and current variances of the resonator mode in thermal
/// equilibrium at T_p.
pub fn quadrature_variance(res: &ResonatorSpec) -> QuadratureVariance {
    let zpf = 0.5 * HBAR * res.omega0;
    let coth = coth_factor(res.omega0, res.temperature);
    QuadratureVariance {
        voltage: zpf / res.capacitance * coth,
        current: zpf / res.inductance * coth,
    }
}

/// hν₀/k, the temperature at which thermal and zero-point fluctuations of
/// a mode at ν₀ are comparable.
pub fn classical_quantum_crossover_t(nu0: f64) -> Result<f64> {
    require_positive("frequency", nu0)?;
    Ok(PLANCK * nu0 / BOLTZMANN)
}

/// πf₀/2Q, the noise bandwidth of a single-pole Lorentzian response.
pub fn lorentzian_noise_bandwidth(f0: f64, q: f64) -> Result<f64> {
    require_positive("f0", f0)?;
    if q.is_nan() || q <= 0.0 {
        return Err(Error::invalid("Q", format!("must be > 0, got {q}")));
    }
    Ok(std::f64::consts::PI * f0 / (2.0 * q))
}

/// h/2e, Wb.
pub fn flux_quantum() -> f64 {
    PLANCK / (2.0 * ELEMENTARY_CHARGE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    /// Critical temperature, K.
    pub t_c: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, t_c: f64) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::invalid("material name", "must not be empty"));
        }
        require_positive("T_c", t_c)?;
        Ok(Material { name, t_c })
    }
}

/// Common sensor superconductors and their critical temperatures.
pub fn builtin_materials() -> Vec<Material> {
    [
        ("NbN", 16.0),
        ("Nb", 9.3),
        ("Ta", 4.48),
        ("Al", 1.2),
        ("Mo", 0.9),
        ("Ti", 0.39),
    ]
    .into_iter()
    .map(|(name, t_c)| Material {
        name: name.to_string(),
        t_c,
    })
    .collect()
}

/// Case-insensitive lookup in the built-in table.
pub fn find_material(name: &str) -> Option<Material> {
    builtin_materials()
        .into_iter()
        .find(|m| m.name.eq_ignore_ascii_case(name))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapProperties {
    /// BCS gap 7kT_c/2, eV.
    pub energy_ev: f64,
    /// Pair-breaking frequency E_g/h, Hz.
    pub frequency: f64,
}

impl GapProperties {
    pub fn energy_mev(&self) -> f64 {
        self.energy_ev * 1e3
    }
}

pub fn gap_properties(m: &Material) -> GapProperties {
    let joules = 3.5 * BOLTZMANN * m.t_c;
    GapProperties {
        energy_ev: joules / ELEMENTARY_CHARGE,
        frequency: joules / PLANCK,
    }
}

/// Reads materials from CSV with header `name,T_c`.
pub fn read_materials_csv<R: Read>(input: R) -> Result<Vec<Material>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "name" || &headers[1] != "T_c" {
        return Err(Error::parse(1, "expected header `name,T_c`"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let t_c: f64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad T_c {:?}", &rec[1])))?;
        out.push(Material::new(&rec[0], t_c).map_err(|e| Error::parse(line, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_materials_csv<W: Write>(materials: &[Material], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "T_c"])?;
    for m in materials {
        w.write_record([m.name.clone(), m.t_c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
