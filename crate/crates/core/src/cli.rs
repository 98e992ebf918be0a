//! The `qnoise` command-line front end.
//!
//! Every subcommand produces a CSV table. The first line of the output is a
//! `#` comment carrying the tool version, the constants revision and, for
//! stochastic commands, the seed and RNG algorithm. Files given with `-o` are
//! written to a temporary file in the same directory and renamed into place.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::circuit_elements::{
    builtin_materials, classical_quantum_crossover_t, flux_quantum, gap_properties,
    lorentzian_noise_bandwidth, quadrature_variance, read_materials_csv, ResonatorSpec,
};
use crate::constants::CONSTANTS_REVISION;
use crate::coupled_mode::{
    coupling, detected_power_modal, detected_power_trace, diagonalize, SampledKernel,
};
use crate::error::{Error, Result};
use crate::noise_network::{
    noise_temperature, noise_temperature_mc, quantum_two_port, sql_noise_temperature,
    AmplifierNoiseModel, Netlist, SourceReflection,
};
use crate::photon_statistics::{
    power_variance_mc, sample_counts, variance_decomposition, AmplitudeModel, MixtureConfig,
    RNG_ALGORITHM,
};
use crate::radiometry::{
    crossover_frequency, power_fluctuation, radiometer_resolution, thermal_power, Etendue,
    IntegrationSpec, SpectralBand, ThermalSource,
};
use crate::sensitivity::{
    default_figure7_curves, figure7_dataset, log_grid, nep_to_temperature_resolved, CurveKind,
    DetectorSpec,
};

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "qnoise", version, about = "Noise and sensitivity of quantum-limited instruments")]
pub struct RunConfig {
    /// Write the CSV here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for stochastic commands (chosen from the clock if absent).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Suppress informational messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Thermal power, photon noise and radiometer resolution of a source.
    Radiometry(RadiometryArgs),
    /// Monte Carlo photon-count statistics.
    Photonstats(PhotonstatsArgs),
    /// Detector sensitivity and coupled-mode calculations.
    #[command(subcommand)]
    Detector(DetectorCommand),
    /// Noise-wave networks and amplifier noise.
    #[command(subcommand)]
    Network(NetworkCommand),
    /// Resonators and superconductor constants.
    #[command(subcommand)]
    Circuit(CircuitCommand),
    /// Detector versus amplifier comparison curves.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RadiometryArgs {
    /// Source temperature, K.
    #[arg(long)]
    pub temperature: f64,
    /// Lower band edge, Hz.
    #[arg(long)]
    pub lo: f64,
    /// Upper band edge, Hz.
    #[arg(long)]
    pub hi: f64,
    /// Quadrature seed panels (also the Monte Carlo bin count).
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    /// Post-detection integration time, s.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Transverse mode count (default: single-mode line).
    #[arg(long, conflicts_with_all = ["area", "half_angle"])]
    pub modes: Option<f64>,
    /// Source area, m² (with --wavelength; half space unless --half-angle).
    #[arg(long, requires = "wavelength")]
    pub area: Option<f64>,
    /// Wavelength used for mode counting, m.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Beam half opening angle, rad.
    #[arg(long, requires = "area")]
    pub half_angle: Option<f64>,
    /// Count both polarisations.
    #[arg(long)]
    pub both_polarisations: bool,
    /// Also run the Monte Carlo estimate of the power variance.
    #[arg(long)]
    pub mc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Complex Gaussian amplitude (thermal light).
    Thermal,
    /// Fixed amplitude (coherent light).
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct PhotonstatsArgs {
    /// Mean occupancy n̄.
    #[arg(long)]
    pub mean: f64,
    /// Number of temporal samples.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, value_enum, default_value_t = ModelArg::Thermal)]
    pub model: ModelArg,
    /// Emit the count histogram instead of the summary.
    #[arg(long)]
    pub histogram: bool,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum DetectorCommand {
    /// Equivalent noise temperature of a detector.
    Nep {
        /// Intrinsic NEP, W/√Hz.
        #[arg(long)]
        nep: f64,
        /// Centre frequency, Hz.
        #[arg(long)]
        nu0: f64,
        /// Resolution ν₀/Δν of a Lorentzian filter.
        #[arg(long, required_unless_present = "bandwidth", conflicts_with = "bandwidth")]
        resolution: Option<f64>,
        /// Pre-detection bandwidth, Hz.
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Eigenmodes of a kernel file, as CSV.
    Modes { kernel: PathBuf },
    /// Power absorbed by a detector kernel from a field kernel.
    Power { detector: PathBuf, field: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum NetworkCommand {
    /// Propagate source correlations through a netlist.
    Solve {
        netlist: PathBuf,
        /// Override the netlist frequency, Hz.
        #[arg(long)]
        freq: Option<f64>,
    },
    /// Noise temperature of an amplifier behind a mismatched source.
    Amplifier {
        #[arg(long)]
        ta: f64,
        #[arg(long)]
        tb: f64,
        #[arg(long, default_value_t = 0.0)]
        tc: f64,
        /// Phase of the noise-wave correlation, rad.
        #[arg(long, default_value_t = 0.0)]
        phi_c: f64,
        /// Source reflection magnitude.
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Source reflection phase, rad.
        #[arg(long, default_value_t = 0.0)]
        phi_src: f64,
        /// Cross-check with this many Monte Carlo noise-wave samples.
        #[arg(long)]
        mc_samples: Option<u64>,
    },
    /// Added noise of a quantum-limited amplifier.
    Quantum {
        /// Power gain |S21|².
        #[arg(long)]
        gain: f64,
        /// Frequency, Hz.
        #[arg(long)]
        freq: f64,
        /// Temperature of the internal noise modes, K.
        #[arg(long)]
        internal_temperature: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum CircuitCommand {
    /// Superconductor gap energies and frequencies.
    Materials {
        /// Extra materials from a `name,T_c` CSV file.
        #[arg(long)]
        import: Option<PathBuf>,
    },
    /// Quadrature variances and noise bandwidth of an LC resonator.
    Resonator {
        #[arg(long)]
        f0: f64,
        /// Capacitance, F.
        #[arg(long)]
        capacitance: f64,
        #[arg(long)]
        q: f64,
        /// Physical temperature, K.
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Args)]
#[command(group(clap::ArgGroup::new("curves").required(true).multiple(true).args(["fig7", "curve"])))]
pub struct CompareArgs {
    /// The standard five-family comparison chart.
    #[arg(long)]
    pub fig7: bool,
    /// Extra curve: amp:T, source:T, nep:NEP:R, dark:RATE:R or squeezed:DB:T.
    #[arg(long, value_parser = parse_curve)]
    pub curve: Vec<CurveKind>,
    #[arg(long, default_value_t = 1e8)]
    pub lo: f64,
    #[arg(long, default_value_t = 1e13)]
    pub hi: f64,
    #[arg(long, default_value_t = 20)]
    pub per_decade: usize,
}

fn parse_curve(s: &str) -> std::result::Result<CurveKind, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> std::result::Result<f64, String> {
        parts
            .get(i)
            .ok_or_else(|| format!("curve {s:?} is missing a parameter"))?
            .parse::<f64>()
            .map_err(|_| format!("bad number in curve {s:?}"))
    };
    let expect = |n: usize| {
        if parts.len() == n {
            Ok(())
        } else {
            Err(format!("curve {s:?} takes {} parameters", n - 1))
        }
    };
    let kind = match parts[0] {
        "amp" => {
            expect(2)?;
            CurveKind::QuantumAmpSystem { source_t: num(1)? }
        }
        "source" => {
            expect(2)?;
            CurveKind::SingleModeRadiance { source_t: num(1)? }
        }
        "nep" => {
            expect(3)?;
            CurveKind::DetectorNep {
                nep: num(1)?,
                resolution: num(2)?,
            }
        }
        "dark" => {
            expect(3)?;
            CurveKind::DarkRate {
                rate: num(1)?,
                resolution: num(2)?,
            }
        }
        "squeezed" => {
            expect(3)?;
            CurveKind::SqueezedSql {
                squeeze_db: num(1)?,
                source_t: num(2)?,
            }
        }
        other => return Err(format!("unknown curve family {other:?}")),
    };
    kind.validate().map_err(|e| e.to_string())?;
    Ok(kind)
}

/// Why a command line was rejected.
#[derive(Debug)]
pub enum ConfigError {
    Clap(clap::Error),
    UnreadableInput { path: PathBuf, source: io::Error },
}

impl ConfigError {
    /// 0 for `--help`/`--version`, 2 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Clap(e) => e.exit_code(),
            ConfigError::UnreadableInput { .. } => 2,
        }
    }

    /// Prints the message (help text goes to stdout) and returns the exit code.
    pub fn report(&self) -> i32 {
        match self {
            ConfigError::Clap(e) => {
                let _ = e.print();
            }
            ConfigError::UnreadableInput { path, source } => {
                eprintln!("error: cannot read {}: {source}", path.display());
            }
        }
        self.exit_code()
    }
}

impl RunConfig {
    fn inputs(&self) -> Vec<&Path> {
        match &self.command {
            Command::Detector(DetectorCommand::Modes { kernel }) => vec![kernel],
            Command::Detector(DetectorCommand::Power { detector, field }) => vec![detector, field],
            Command::Network(NetworkCommand::Solve { netlist, .. }) => vec![netlist],
            Command::Circuit(CircuitCommand::Materials { import: Some(p) }) => vec![p],
            _ => vec![],
        }
        .into_iter()
        .map(PathBuf::as_path)
        .collect()
    }

    fn is_stochastic(&self) -> bool {
        match &self.command {
            Command::Photonstats(_) => true,
            Command::Radiometry(a) => a.mc,
            Command::Network(NetworkCommand::Amplifier { mc_samples, .. }) => mc_samples.is_some(),
            _ => false,
        }
    }
}

/// Parses `argv` (including the program name) and checks that input files
/// can be read.
pub fn parse_config<I, T>(argv: I) -> std::result::Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = RunConfig::try_parse_from(argv).map_err(ConfigError::Clap)?;
    for path in cfg.inputs() {
        if let Err(source) = fs::File::open(path) {
            return Err(ConfigError::UnreadableInput {
                path: path.to_path_buf(),
                source,
            });
        }
    }
    Ok(cfg)
}

/// Runs a parsed configuration; returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let seed = cfg.seed.unwrap_or_else(clock_seed);
    let mut meta = format!(
        "# qnoise {} constants={}",
        env!("CARGO_PKG_VERSION"),
        CONSTANTS_REVISION
    );
    if cfg.is_stochastic() {
        meta.push_str(&format!(" seed={seed} rng={RNG_ALGORITHM}"));
    }
    meta.push('\n');
    let body = match execute(cfg, seed) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let mut out = meta.into_bytes();
    out.extend_from_slice(&body.data);
    if !cfg.quiet {
        for note in &body.notes {
            eprintln!("{note}");
        }
    }
    let written = match &cfg.output {
        Some(path) => write_atomic(path, &out),
        None => io::stdout().write_all(&out).map_err(Error::from),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Parses and runs; the whole program in one call.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_config(argv) {
        Ok(cfg) => run(&cfg),
        Err(e) => e.report(),
    }
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

struct Output {
    data: Vec<u8>,
    notes: Vec<String>,
}

impl Output {
    fn new(data: Vec<u8>) -> Self {
        Output {
            data,
            notes: Vec::new(),
        }
    }
}

/// Two- or three-column `quantity,value[,unit]` table.
fn summary(rows: &[(&str, f64, &str)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value", "unit"])?;
    for (q, v, u) in rows {
        w.write_record([q.to_string(), format!("{v:e}"), u.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn execute(cfg: &RunConfig, seed: u64) -> Result<Output> {
    match &cfg.command {
        Command::Radiometry(a) => radiometry(a, seed),
        Command::Photonstats(a) => photonstats(a, seed),
        Command::Detector(d) => detector(d),
        Command::Network(n) => network(n, seed),
        Command::Circuit(c) => circuit(c),
        Command::Compare(c) => compare(c),
    }
}

fn radiometry(a: &RadiometryArgs, seed: u64) -> Result<Output> {
    let etendue = match (a.modes, a.area, a.wavelength, a.half_angle) {
        (Some(n), _, _, _) => Etendue::mode_count(n)?,
        (None, Some(area), Some(wl), Some(theta)) => Etendue::cone(area, wl, theta)?,
        (None, Some(area), Some(wl), None) => Etendue::half_space(area, wl)?,
        _ => Etendue::TemLine,
    };
    let mut src = ThermalSource::new(a.temperature, etendue)?;
    if a.both_polarisations {
        src = src.with_both_polarisations();
    }
    let band = SpectralBand::new(a.lo, a.hi, a.points)?;
    let integ = IntegrationSpec::new(a.tau)?;
    let power = thermal_power(&src, &band)?;
    let fluct = power_fluctuation(&src, &band, &integ)?;
    let mut rows = vec![
        ("power", power, "W"),
        ("variance_classical", fluct.classical, "W^2"),
        ("variance_quantum", fluct.quantum, "W^2"),
        ("variance_total", fluct.total(), "W^2"),
        ("power_rms", fluct.rms(), "W"),
        ("radiometer_dT", radiometer_resolution(a.temperature, band.bandwidth(), a.tau)?, "K"),
    ];
    if a.temperature > 0.0 {
        rows.push(("crossover_frequency", crossover_frequency(a.temperature)?, "Hz"));
    }
    if a.mc {
        let est = power_variance_mc(&src, &band, &integ, seed)?;
        rows.push(("mc_variance_classical", est.classical, "W^2"));
        rows.push(("mc_variance_quantum", est.quantum, "W^2"));
        rows.push(("mc_variance_total", est.total, "W^2"));
        rows.push(("mc_variance_from_counts", est.from_counts, "W^2"));
        rows.push(("mc_draws", est.draws as f64, "1"));
    }
    Ok(Output::new(summary(&rows)?))
}

fn photonstats(a: &PhotonstatsArgs, seed: u64) -> Result<Output> {
    let model = match a.model {
        ModelArg::Thermal => AmplitudeModel::ComplexGaussian,
        ModelArg::Fixed => AmplitudeModel::FixedAmplitude,
    };
    let cfg = MixtureConfig::new(a.mean, a.samples, model, seed)?;
    let stats = sample_counts(&cfg);
    if a.histogram {
        let mut buf = Vec::new();
        stats.write_histogram_csv(&mut buf)?;
        return Ok(Output::new(buf));
    }
    let mut rows = vec![
        ("samples", stats.samples as f64, "1"),
        ("mean", stats.sample_mean, "1"),
        ("variance", stats.sample_variance, "1"),
        ("variance_standard_error", stats.variance_standard_error(), "1"),
    ];
    let mut notes = Vec::new();
    match variance_decomposition(&stats) {
        Ok(d) => {
            rows.push(("classical_part", d.classical, "1"));
            rows.push(("quantum_part", d.quantum, "1"));
        }
        Err(e) => notes.push(format!("note: no variance decomposition ({e})")),
    }
    Ok(Output {
        data: summary(&rows)?,
        notes,
    })
}

fn read_kernel(path: &Path) -> Result<SampledKernel> {
    SampledKernel::parse(&fs::read_to_string(path)?)
}

fn detector(cmd: &DetectorCommand) -> Result<Output> {
    match cmd {
        DetectorCommand::Nep {
            nep,
            nu0,
            resolution,
            bandwidth,
        } => {
            let spec = match (resolution, bandwidth) {
                (Some(r), _) => DetectorSpec::with_resolution(*nep, *nu0, *r)?,
                (None, Some(b)) => DetectorSpec::with_bandwidth(*nep, *nu0, *b)?,
                (None, None) => return Err(Error::invalid("detector", "need --resolution or --bandwidth")),
            };
            let rows = [
                ("pre_detection_bandwidth", spec.pre_detection_bandwidth(), "Hz"),
                ("equivalent_noise_temperature", nep_to_temperature_resolved(&spec), "K"),
            ];
            Ok(Output::new(summary(&rows)?))
        }
        DetectorCommand::Modes { kernel } => {
            let modes = diagonalize(&read_kernel(kernel)?)?;
            let mut buf = Vec::new();
            modes.write_csv(&mut buf)?;
            Ok(Output::new(buf))
        }
        DetectorCommand::Power { detector, field } => {
            let d = read_kernel(detector)?;
            let e = read_kernel(field)?;
            let trace = detected_power_trace(&d, &e)?;
            let dh = SampledKernel::new(
                d.grid().clone(),
                d.dissipative(),
                crate::coupled_mode::KernelKind::Response,
                d.frequency(),
            )?;
            let dm = diagonalize(&dh)?;
            let em = diagonalize(&e)?;
            let s = coupling(&dm, &em)?;
            let modal = detected_power_modal(&dm, &em, &s)?;
            let rows = [
                ("power_trace", trace, "W/Hz"),
                ("power_modal", modal, "W/Hz"),
                ("detector_modes", dm.len() as f64, "1"),
                ("field_modes", em.len() as f64, "1"),
            ];
            Ok(Output::new(summary(&rows)?))
        }
    }
}

fn network(cmd: &NetworkCommand, seed: u64) -> Result<Output> {
    match cmd {
        NetworkCommand::Solve { netlist, freq } => {
            let mut net = Netlist::parse(&fs::read_to_string(netlist)?)?;
            if let Some(f) = freq {
                if !(f.is_finite() && *f > 0.0) {
                    return Err(Error::invalid("frequency", "must be > 0"));
                }
                net.frequency = *f;
            }
            let sol = net.solve()?;
            let mut buf = Vec::new();
            sol.output.write_csv(&mut buf)?;
            let notes = if sol.vacuum_inserted.is_empty() {
                Vec::new()
            } else {
                vec![format!("vacuum inserted at: {}", sol.vacuum_inserted.join(", "))]
            };
            Ok(Output { data: buf, notes })
        }
        NetworkCommand::Amplifier {
            ta,
            tb,
            tc,
            phi_c,
            gamma,
            phi_src,
            mc_samples,
        } => {
            let amp = AmplifierNoiseModel::new(*ta, *tb, *tc, *phi_c)?;
            let src = SourceReflection::new(*gamma, *phi_src)?;
            let mut rows = vec![("noise_temperature", noise_temperature(&amp, &src), "K")];
            if let Some(n) = mc_samples {
                rows.push(("noise_temperature_mc", noise_temperature_mc(&amp, &src, *n, seed)?, "K"));
            }
            Ok(Output::new(summary(&rows)?))
        }
        NetworkCommand::Quantum {
            gain,
            freq,
            internal_temperature,
        } => {
            if !(gain.is_finite() && *gain >= 0.0) {
                return Err(Error::invalid("gain", "must be finite and >= 0"));
            }
            let zero = Complex64::new(0.0, 0.0);
            let s = [[zero, zero], [Complex64::new(gain.sqrt(), 0.0), zero]];
            let omega = 2.0 * std::f64::consts::PI * freq;
            let r = quantum_two_port(s, omega, [None, None], *internal_temperature)?;
            let mut rows = vec![
                ("output_density", r.output_density, "W/Hz"),
                ("added_noise", r.added_noise, "W/Hz"),
                ("noise_floor", r.noise_floor, "W/Hz"),
                ("noise_commutator", r.noise_commutator, "1"),
                ("commutator_residual", r.commutator_residual, "1"),
            ];
            if *gain >= 1.0 {
                rows.push(("sql_noise_temperature", sql_noise_temperature(*gain, *freq)?, "K"));
            }
            Ok(Output {
                data: summary(&rows)?,
                notes: vec![format!(
                    "vacuum inserted at ports: {:?}",
                    r.vacuum_inserted
                )],
            })
        }
    }
}

fn circuit(cmd: &CircuitCommand) -> Result<Output> {
    match cmd {
        CircuitCommand::Materials { import } => {
            let mut mats = builtin_materials();
            if let Some(p) = import {
                mats.extend(read_materials_csv(fs::File::open(p)?)?);
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "T_c_K", "E_g_meV", "f_g_GHz"])?;
            for m in &mats {
                let g = gap_properties(m);
                w.write_record([
                    m.name.clone(),
                    m.t_c.to_string(),
                    format!("{:.4}", g.energy_mev()),
                    format!("{:.2}", g.frequency / 1e9),
                ])?;
            }
            let data = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(Output {
                data,
                notes: vec![format!("flux quantum h/2e = {:e} Wb", flux_quantum())],
            })
        }
        CircuitCommand::Resonator {
            f0,
            capacitance,
            q,
            temperature,
        } => {
            let r = ResonatorSpec::from_frequency(*f0, *capacitance, *q, *temperature)?;
            let v = quadrature_variance(&r);
            let rows = [
                ("inductance", r.inductance(), "H"),
                ("voltage_variance", v.voltage, "V^2"),
                ("current_variance", v.current, "A^2"),
                ("noise_bandwidth", lorentzian_noise_bandwidth(*f0, *q)?, "Hz"),
                ("crossover_temperature", classical_quantum_crossover_t(*f0)?, "K"),
            ];
            Ok(Output::new(summary(&rows)?))
        }
    }
}

fn compare(a: &CompareArgs) -> Result<Output> {
    let mut curves = if a.fig7 { default_figure7_curves() } else { Vec::new() };
    curves.extend(a.curve.iter().copied());
    let grid = log_grid(a.lo, a.hi, a.per_decade)?;
    let table = figure7_dataset(&curves, &grid)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    Ok(Output::new(buf))
}
