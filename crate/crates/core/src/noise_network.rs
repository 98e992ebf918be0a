//! Noise-wave propagation through scattering flow graphs.
//!
//! Nodes carry travelling-wave amplitudes d, edges carry complex gains, and
//! each node may inject a wave n. With C[to, from] the edge gains the node
//! amplitudes solve d = (I − C)⁻¹ n, and source correlations map through
//! K = (I − C)⁻¹ as N_c = K N_s K†. Also here: the classical two-port noise
//! temperature with source mismatch and the quantum added-noise bookkeeping
//! of linear amplifiers.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constants::{BOLTZMANN, HBAR, PLANCK};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::photon_statistics::lane_rng;
use crate::radiometry::occupancy;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const MC_LANE: u64 = 1 << 16;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub gain: Complex64,
}

/// Node handles of a two-port inserted with [`FlowGraph::add_two_port`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoPortNodes {
    /// Wave incident on port 1.
    pub a1: usize,
    /// Wave leaving port 1.
    pub b1: usize,
    pub a2: usize,
    pub b2: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    z0: f64,
}

impl Default for FlowGraph {
    fn default() -> Self {
        FlowGraph {
            names: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            z0: 50.0,
        }
    }
}

impl FlowGraph {
    pub fn new(z0: f64) -> Result<Self> {
        require_positive("reference impedance", z0)?;
        Ok(FlowGraph {
            z0,
            ..FlowGraph::default()
        })
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn add_node(&mut self, name: &str) -> Result<usize> {
        if name.is_empty() {
            return Err(Error::invalid("node name", "must not be empty"));
        }
        if self.index.contains_key(name) {
            return Err(Error::invalid("node name", format!("duplicate node {name:?}")));
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn add_edge(&mut self, from: usize, to: usize, gain: Complex64) -> Result<()> {
        let n = self.len();
        if from >= n || to >= n {
            return Err(Error::invalid("edge", format!("node index out of range ({from} -> {to})")));
        }
        if !(gain.re.is_finite() && gain.im.is_finite()) {
            return Err(Error::invalid("edge gain", "must be finite"));
        }
        self.edges.push(Edge { from, to, gain });
        Ok(())
    }

    pub fn add_edge_by_name(&mut self, from: &str, to: &str, gain: Complex64) -> Result<()> {
        let f = self
            .node(from)
            .ok_or_else(|| Error::invalid("edge", format!("unknown node {from:?}")))?;
        let t = self
            .node(to)
            .ok_or_else(|| Error::invalid("edge", format!("unknown node {to:?}")))?;
        self.add_edge(f, t, gain)
    }

    /// Inserts the four wave nodes of a two-port with scattering matrix `s`
    /// (named `<name>.a1`, `<name>.b1`, ...) and its internal edges.
    pub fn add_two_port(&mut self, name: &str, s: [[Complex64; 2]; 2]) -> Result<TwoPortNodes> {
        let a1 = self.add_node(&format!("{name}.a1"))?;
        let b1 = self.add_node(&format!("{name}.b1"))?;
        let a2 = self.add_node(&format!("{name}.a2"))?;
        let b2 = self.add_node(&format!("{name}.b2"))?;
        for (from, to, g) in [
            (a1, b1, s[0][0]),
            (a2, b1, s[0][1]),
            (a1, b2, s[1][0]),
            (a2, b2, s[1][1]),
        ] {
            if g != zero() {
                self.add_edge(from, to, g)?;
            }
        }
        Ok(TwoPortNodes { a1, b1, a2, b2 })
    }

    /// Joins an outgoing wave to an incoming one with unit gain.
    pub fn connect(&mut self, outgoing: usize, incoming: usize) -> Result<()> {
        self.add_edge(outgoing, incoming, one())
    }

    /// C[to, from] = Σ gains of parallel edges.
    pub fn connection_matrix(&self) -> DMatrix<Complex64> {
        let n = self.len();
        let mut c = DMatrix::zeros(n, n);
        for e in &self.edges {
            c[(e.to, e.from)] += e.gain;
        }
        c
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.connection_matrix())
    }

    /// K = (I − C)⁻¹, after checking that every loop decays.
    pub fn transfer_matrix(&self) -> Result<DMatrix<Complex64>> {
        let c = self.connection_matrix();
        self.check_stable(&c)?;
        let n = self.len();
        let a = DMatrix::<Complex64>::identity(n, n) - c;
        a.lu().try_inverse().ok_or(Error::Singular)
    }

    fn check_stable(&self, c: &DMatrix<Complex64>) -> Result<()> {
        let rho = spectral_radius(c);
        if rho.is_finite() && rho < 1.0 {
            return Ok(());
        }
        Err(Error::UnstableGraph {
            spectral_radius: rho,
            loop_nodes: self.worst_loop(c),
        })
    }

    /// Names along a cycle inside the strongly connected component with the
    /// largest spectral radius.
    fn worst_loop(&self, c: &DMatrix<Complex64>) -> Vec<String> {
        let mut g = DiGraph::<usize, ()>::new();
        let ids: Vec<_> = (0..self.len()).map(|i| g.add_node(i)).collect();
        for e in &self.edges {
            if e.gain != zero() {
                g.add_edge(ids[e.from], ids[e.to], ());
            }
        }
        let mut best: Option<(f64, Vec<usize>)> = None;
        for comp in tarjan_scc(&g) {
            let members: Vec<usize> = comp.iter().map(|&ix| g[ix]).collect();
            let cyclic = members.len() > 1
                || self
                    .edges
                    .iter()
                    .any(|e| e.from == members[0] && e.to == members[0]);
            if !cyclic {
                continue;
            }
            let sub = DMatrix::from_fn(members.len(), members.len(), |i, j| c[(members[i], members[j])]);
            let rho = spectral_radius(&sub);
            if best.as_ref().is_none_or(|(b, _)| rho > *b) {
                best = Some((rho, members));
            }
        }
        let Some((_, members)) = best else {
            return Vec::new();
        };
        let set: HashSet<usize> = members.iter().copied().collect();
        // follow the strongest edge inside the component until a node repeats
        let mut path = vec![*members.iter().min().unwrap()];
        loop {
            let here = *path.last().unwrap();
            let next = self
                .edges
                .iter()
                .filter(|e| e.from == here && set.contains(&e.to))
                .max_by(|a, b| a.gain.norm().total_cmp(&b.gain.norm()))
                .map(|e| e.to);
            let Some(next) = next else { break };
            if let Some(pos) = path.iter().position(|&p| p == next) {
                let mut cycle: Vec<usize> = path[pos..].to_vec();
                cycle.push(next);
                return cycle.into_iter().map(|i| self.names[i].clone()).collect();
            }
            path.push(next);
        }
        members.into_iter().map(|i| self.names[i].clone()).collect()
    }
}

/// Largest eigenvalue magnitude of a complex matrix.
pub fn spectral_radius(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            t.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max)
        }
        None => {
            // Gelfand bound ‖M^k‖^(1/k) as a fallback
            let mut p = m.clone();
            for _ in 0..6 {
                p = &p * &p;
            }
            p.norm().powf(1.0 / 64.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSolution {
    pub amplitudes: DVector<Complex64>,
    /// ‖(I − C)d − n‖.
    pub residual: f64,
}

/// Solves (I − C)d = n for the node amplitudes.
pub fn solve_waves(g: &FlowGraph, sources: &[Complex64]) -> Result<WaveSolution> {
    if sources.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            found: sources.len(),
        });
    }
    let c = g.connection_matrix();
    g.check_stable(&c)?;
    let n = g.len();
    let a = DMatrix::<Complex64>::identity(n, n) - c;
    let rhs = DVector::from_column_slice(sources);
    let d = a.clone().lu().solve(&rhs).ok_or(Error::Singular)?;
    let residual = (&a * &d - &rhs).norm();
    Ok(WaveSolution {
        amplitudes: d,
        residual,
    })
}

/// Hermitian correlation matrix of noise waves, W/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    labels: Vec<String>,
    matrix: DMatrix<Complex64>,
}

impl CorrelationMatrix {
    pub fn new(labels: Vec<String>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != labels.len() || matrix.ncols() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: matrix.nrows(),
            });
        }
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                defect = defect.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
                scale = scale.max(matrix[(i, j)].norm());
            }
        }
        if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NonHermitian {
                max_asymmetry: defect,
            });
        }
        Ok(CorrelationMatrix { labels, matrix })
    }

    /// Uncorrelated waves with the given spectral powers.
    pub fn diagonal(labels: Vec<String>, powers: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(powers.len(), powers.iter().map(|&p| Complex64::new(p, 0.0)));
        CorrelationMatrix::new(labels, DMatrix::from_diagonal(&d))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// Spectral power E[aa*] of each wave, W/Hz.
    pub fn powers(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// E[aa*]/k for each wave.
    pub fn temperatures(&self) -> Vec<f64> {
        self.powers().into_iter().map(|p| p / BOLTZMANN).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest eigenvalue no lower than −1e-10 of the largest entry.
    pub fn is_psd(&self) -> bool {
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.min_eigenvalue() >= -PSD_TOL * scale
    }

    /// CSV with header `port,T_K,<p>_re,<p>_im,...`; one row per wave.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["port".to_string(), "T_K".to_string()];
        for l in &self.labels {
            header.push(format!("{l}_re"));
            header.push(format!("{l}_im"));
        }
        w.write_record(&header)?;
        let temps = self.temperatures();
        for (i, l) in self.labels.iter().enumerate() {
            let mut row = vec![l.clone(), format!("{:e}", temps[i])];
            for j in 0..self.labels.len() {
                row.push(format!("{:e}", self.matrix[(i, j)].re));
                row.push(format!("{:e}", self.matrix[(i, j)].im));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// N_c = K N_s K† over all nodes of the graph.
pub fn propagate_correlations(g: &FlowGraph, ns: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    if ns.matrix.nrows() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            found: ns.matrix.nrows(),
        });
    }
    let k = g.transfer_matrix()?;
    let nc = &k * &ns.matrix * k.adjoint();
    let nc = (&nc + nc.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(CorrelationMatrix {
        labels: g.names.clone(),
        matrix: nc,
    })
}

/// Input-referred noise waves of a two-port amplifier, in kelvin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierNoiseModel {
    /// Wave incident on the input, E[aₙaₙ*]/k.
    pub t_a: f64,
    /// Wave emitted from the input towards the source, E[bₙbₙ*]/k.
    pub t_b: f64,
    /// |E[bₙaₙ*]|/k.
    pub t_c: f64,
    /// Phase of E[bₙaₙ*].
    pub phi_c: f64,
    pub s: [[Complex64; 2]; 2],
}

impl AmplifierNoiseModel {
    pub fn new(t_a: f64, t_b: f64, t_c: f64, phi_c: f64) -> Result<Self> {
        require_non_negative("T_a", t_a)?;
        require_non_negative("T_b", t_b)?;
        require_non_negative("T_c", t_c)?;
        if !phi_c.is_finite() {
            return Err(Error::invalid("φ_c", "must be finite"));
        }
        let bound = (t_a * t_b).sqrt();
        if t_c > bound * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "T_c",
                format!("correlation {t_c} exceeds √(T_a T_b) = {bound}"),
            ));
        }
        Ok(AmplifierNoiseModel {
            t_a,
            t_b,
            t_c,
            phi_c,
            s: [[zero(), zero()], [one(), zero()]],
        })
    }

    pub fn with_s(mut self, s: [[Complex64; 2]; 2]) -> Self {
        self.s = s;
        self
    }

    /// Normalised correlation Γ = T_c/√(T_a T_b).
    pub fn correlation_coefficient(&self) -> f64 {
        let d = (self.t_a * self.t_b).sqrt();
        if d == 0.0 {
            0.0
        } else {
            self.t_c / d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceReflection {
    pub magnitude: f64,
    pub phase: f64,
}

impl SourceReflection {
    pub fn new(magnitude: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&magnitude) {
            return Err(Error::invalid("|Γ_src|", format!("must lie in [0, 1], got {magnitude}")));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("φ_src", "must be finite"));
        }
        Ok(SourceReflection { magnitude, phase })
    }

    pub fn matched() -> Self {
        SourceReflection {
            magnitude: 0.0,
            phase: 0.0,
        }
    }

    pub fn gamma(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// T_n = T_a + |Γ|²T_b + 2T_c|Γ|cos(φ_c + φ_src).
pub fn noise_temperature(amp: &AmplifierNoiseModel, src: &SourceReflection) -> f64 {
    let g = src.magnitude;
    amp.t_a + g * g * amp.t_b + 2.0 * amp.t_c * g * (amp.phi_c + src.phase).cos()
}

/// Two-node graph for the source mismatch: the amplifier's backward wave
/// reflects off the source and rejoins the incident wave.
pub fn source_mismatch_graph(src: &SourceReflection) -> Result<FlowGraph> {
    let mut g = FlowGraph::default();
    let input = g.add_node("in")?;
    let back = g.add_node("back")?;
    g.add_edge(back, input, src.gamma())?;
    Ok(g)
}

/// Monte Carlo estimate of T_n by sampling correlated complex Gaussian noise
/// waves and pushing them through [`source_mismatch_graph`].
///
/// Amplitudes are in units of √(k·K), so E|d_in|² is the noise temperature.
pub fn noise_temperature_mc(
    amp: &AmplifierNoiseModel,
    src: &SourceReflection,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InsufficientSamples { got: 0, min: 1 });
    }
    let g = source_mismatch_graph(src)?;
    let k = g.transfer_matrix()?;
    let (k_in_a, k_in_b) = (k[(0, 0)], k[(0, 1)]);
    // Cholesky factor of [[T_a, c*], [c, T_b]] with c = E[b a*]
    let c = Complex64::from_polar(amp.t_c, amp.phi_c);
    let l11 = amp.t_a.sqrt();
    let l21 = if l11 > 0.0 { c / l11 } else { zero() };
    let l22 = (amp.t_b - l21.norm_sqr()).max(0.0).sqrt();
    let lanes = samples.div_ceil(MC_LANE);
    let sums: Vec<f64> = (0..lanes)
        .into_par_iter()
        .map(|lane| {
            let mut rng = lane_rng(seed, lane);
            let n = MC_LANE.min(samples - lane * MC_LANE);
            let mut acc = 0.0;
            for _ in 0..n {
                let z1 = complex_normal(&mut rng);
                let z2 = complex_normal(&mut rng);
                let a = z1 * l11;
                let b = l21 * z1 + z2 * l22;
                acc += (k_in_a * a + k_in_b * b).norm_sqr();
            }
            acc
        })
        .collect();
    Ok(sums.iter().sum::<f64>() / samples as f64)
}

/// Circular complex Gaussian with E|z|² = 1.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
}

/// 1/|1 − Γ_src Γ_amp|², the build-up of noise between two reflecting
/// interfaces.
pub fn resonant_input_enhancement(gamma_src: Complex64, gamma_amp: Complex64) -> Result<f64> {
    if gamma_src.norm() > 1.0 || gamma_amp.norm() > 1.0 {
        return Err(Error::invalid("reflection coefficient", "magnitude must not exceed 1"));
    }
    let loop_gain = gamma_src * gamma_amp;
    if loop_gain.norm() >= 1.0 {
        return Err(Error::UnstableGraph {
            spectral_radius: loop_gain.norm(),
            loop_nodes: vec!["source".into(), "amplifier".into(), "source".into()],
        });
    }
    Ok(1.0 / (one() - loop_gain).norm_sqr())
}

/// Quantum state presented to a port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PortState {
    Vacuum,
    /// Thermal state at temperature T, K.
    Thermal(f64),
    /// Coherent drive with spectral power density, W/Hz, on top of vacuum.
    Coherent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumPort {
    omega: f64,
    state: PortState,
}

impl QuantumPort {
    pub fn new(omega: f64, state: PortState) -> Result<Self> {
        require_positive("mode frequency", omega)?;
        match state {
            PortState::Thermal(t) => {
                require_non_negative("port temperature", t)?;
            }
            PortState::Coherent(p) => {
                require_non_negative("coherent power", p)?;
            }
            PortState::Vacuum => {}
        }
        Ok(QuantumPort { omega, state })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn state(&self) -> PortState {
        self.state
    }

    /// Mean photon number n̄ per mode.
    pub fn occupancy(&self) -> f64 {
        match self.state {
            PortState::Vacuum => 0.0,
            PortState::Thermal(t) => occupancy(self.omega / (2.0 * PI), t),
            PortState::Coherent(p) => p / (HBAR * self.omega),
        }
    }

    /// Symmetrised one-sided spectral density ħω(n̄ + ½), W/Hz.
    pub fn spectral_density(&self) -> f64 {
        HBAR * self.omega * (self.occupancy() + 0.5)
    }
}

/// Noise commutators I − S S† that the internal noise modes must supply for
/// the outgoing waves of an arbitrary S to remain bosonic.
pub fn noise_commutators(s: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = s.nrows();
    DMatrix::identity(n, n) - s * s.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTwoPortResult {
    /// Symmetrised output density at port 2, W/Hz.
    pub output_density: f64,
    /// Added noise density at port 2, W/Hz.
    pub added_noise: f64,
    /// (ħω/2)·| |S21|² − 1 |, the floor the added noise never goes below.
    pub noise_floor: f64,
    /// [n̂₂, n̂₂†] realised by the noise modes.
    pub noise_commutator: f64,
    /// [n̂₂, n̂₂†] − (1 − |S21|² − |S22|²); zero when the bookkeeping closes.
    pub commutator_residual: f64,
    /// Input ports that were undriven and given vacuum.
    pub vacuum_inserted: Vec<usize>,
}

/// Positive and negative parts of a 2×2 Hermitian matrix, H = P − Q.
fn split_hermitian(h: &DMatrix<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let off = h[(0, 1)];
    if off == zero() {
        // diagonal case kept exact
        let (a, d) = (h[(0, 0)].re, h[(1, 1)].re);
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(a.max(0.0), 0.0),
            Complex64::new(d.max(0.0), 0.0),
        ]));
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new((-a).max(0.0), 0.0),
            Complex64::new((-d).max(0.0), 0.0),
        ]));
        return (p, q);
    }
    let eig = h.clone().symmetric_eigen();
    let mut p = DMatrix::zeros(2, 2);
    let mut q = DMatrix::zeros(2, 2);
    for i in 0..2 {
        let v = eig.eigenvectors.column(i);
        let proj = &v * v.adjoint();
        let l = eig.eigenvalues[i];
        if l >= 0.0 {
            p += proj * Complex64::new(l, 0.0);
        } else {
            q += proj * Complex64::new(-l, 0.0);
        }
    }
    (p, q)
}

/// Output density and added noise at port 2 of a linear two-port.
///
/// The noise is carried by the fewest auxiliary modes able to restore the
/// output commutators: one annihilation-like mode per positive eigenvalue of
/// I − SS† and one creation-like mode per negative one. With
/// `internal_temperature` the auxiliary modes are thermal instead of vacuum.
/// Undriven inputs are given vacuum and listed in the result.
pub fn quantum_two_port(
    s: [[Complex64; 2]; 2],
    omega: f64,
    inputs: [Option<PortState>; 2],
    internal_temperature: Option<f64>,
) -> Result<QuantumTwoPortResult> {
    require_positive("mode frequency", omega)?;
    let mut vacuum_inserted = Vec::new();
    let mut densities = [0.0; 2];
    for (i, st) in inputs.iter().enumerate() {
        let state = st.unwrap_or_else(|| {
            vacuum_inserted.push(i + 1);
            PortState::Vacuum
        });
        densities[i] = QuantumPort::new(omega, state)?.spectral_density();
    }
    let sm = DMatrix::from_row_slice(2, 2, &[s[0][0], s[0][1], s[1][0], s[1][1]]);
    let cn = noise_commutators(&sm);
    let (p, q) = split_hermitian(&cn);
    let half_quantum = 0.5 * HBAR * omega;
    let thermal_factor = match internal_temperature {
        Some(t) => 2.0 * occupancy(omega / (2.0 * PI), require_non_negative("internal temperature", t)?) + 1.0,
        None => 1.0,
    };
    let g21 = s[1][0].norm_sqr();
    let g22 = s[1][1].norm_sqr();
    let noise_floor = half_quantum * (g21 - 1.0).abs();
    let modelled = half_quantum * (p[(1, 1)].re + q[(1, 1)].re) * thermal_factor;
    let added_noise = modelled.max(noise_floor);
    let noise_commutator = p[(1, 1)].re - q[(1, 1)].re;
    let commutator_residual = noise_commutator - (1.0 - g21 - g22);
    Ok(QuantumTwoPortResult {
        output_density: g21 * densities[0] + g22 * densities[1] + added_noise,
        added_noise,
        noise_floor,
        noise_commutator,
        commutator_residual,
        vacuum_inserted,
    })
}

/// (hν/2k)(1 − 1/G), the smallest noise temperature of a phase-preserving
/// amplifier with power gain G.
pub fn sql_noise_temperature(gain: f64, nu: f64) -> Result<f64> {
    require_positive("frequency", nu)?;
    if gain.is_nan() || gain < 1.0 {
        return Err(Error::invalid("power gain", format!("the bound needs G >= 1, got {gain}")));
    }
    Ok(PLANCK * nu / (2.0 * BOLTZMANN) * (1.0 - 1.0 / gain))
}

/// How thermal sources are turned into wave powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseConvention {
    /// Rayleigh–Jeans kT per unit bandwidth.
    Classical,
    /// Symmetrised ħω(n̄ + ½), with vacuum on every undriven port.
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    Thermal(f64),
    Vacuum,
    /// Explicit spectral power, W/Hz.
    Psd(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub graph: FlowGraph,
    pub frequency: f64,
    pub convention: NoiseConvention,
    pub sources: Vec<(usize, SourceKind)>,
    pub correlations: Vec<(usize, usize, Complex64)>,
    /// Declared external input ports.
    pub ports: Vec<usize>,
}

impl Netlist {
    /// Parses the netlist text format.
    ///
    /// ```text
    /// freq 5e9
    /// z0 50
    /// mode quantum            # or classical (default)
    /// node in
    /// node out
    /// port in
    /// edge in out 0.9 0.0
    /// source in thermal 4.0   # or: vacuum | psd <W/Hz>
    /// corr in out 1e-23 0     # off-diagonal source correlation, W/Hz
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut z0 = 50.0;
        let mut freq = None;
        let mut convention = NoiseConvention::Classical;
        let mut graph = FlowGraph::default();
        let mut pending_edges = Vec::new();
        let mut sources = Vec::new();
        let mut pending_corr = Vec::new();
        let mut pending_ports = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let ln = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let need = |n: usize| -> Result<()> {
                if toks.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(ln, format!("`{}` takes {} arguments", toks[0], n - 1)))
                }
            };
            let num = |t: &str| -> Result<f64> {
                t.parse::<f64>()
                    .map_err(|_| Error::parse(ln, format!("not a number: {t:?}")))
            };
            match toks[0] {
                "freq" => {
                    need(2)?;
                    freq = Some(num(toks[1])?);
                }
                "z0" => {
                    need(2)?;
                    z0 = num(toks[1])?;
                }
                "mode" => {
                    need(2)?;
                    convention = match toks[1] {
                        "classical" => NoiseConvention::Classical,
                        "quantum" => NoiseConvention::Quantum,
                        other => return Err(Error::parse(ln, format!("unknown mode {other:?}"))),
                    };
                }
                "node" => {
                    need(2)?;
                    graph
                        .add_node(toks[1])
                        .map_err(|e| Error::parse(ln, e.to_string()))?;
                }
                "port" => {
                    need(2)?;
                    pending_ports.push((ln, toks[1].to_string()));
                }
                "edge" => {
                    need(5)?;
                    let g = Complex64::new(num(toks[3])?, num(toks[4])?);
                    pending_edges.push((ln, toks[1].to_string(), toks[2].to_string(), g));
                }
                "source" => {
                    if toks.len() < 3 {
                        return Err(Error::parse(ln, "`source` takes <node> <kind> [value]"));
                    }
                    let kind = match (toks[2], toks.len()) {
                        ("thermal", 4) => SourceKind::Thermal(num(toks[3])?),
                        ("psd", 4) => SourceKind::Psd(num(toks[3])?),
                        ("vacuum", 3) => SourceKind::Vacuum,
                        (k, _) => {
                            return Err(Error::parse(ln, format!("bad source specification {k:?}")))
                        }
                    };
                    let v = match kind {
                        SourceKind::Thermal(v) | SourceKind::Psd(v) => v,
                        SourceKind::Vacuum => 0.0,
                    };
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::parse(ln, "source value must be finite and >= 0"));
                    }
                    sources.push((ln, toks[1].to_string(), kind));
                }
                "corr" => {
                    need(5)?;
                    let c = Complex64::new(num(toks[3])?, num(toks[4])?);
                    pending_corr.push((ln, toks[1].to_string(), toks[2].to_string(), c));
                }
                other => return Err(Error::parse(ln, format!("unknown keyword {other:?}"))),
            }
        }
        let frequency = freq.ok_or_else(|| Error::invalid("netlist", "missing `freq` line"))?;
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::parse(0, "frequency must be > 0"));
        }
        if !(z0.is_finite() && z0 > 0.0) {
            return Err(Error::parse(0, "z0 must be > 0"));
        }
        graph.z0 = z0;
        let lookup = |g: &FlowGraph, ln: usize, name: &str| {
            g.node(name)
                .ok_or_else(|| Error::parse(ln, format!("unknown node {name:?}")))
        };
        for (ln, from, to, gain) in pending_edges {
            let f = lookup(&graph, ln, &from)?;
            let t = lookup(&graph, ln, &to)?;
            graph.add_edge(f, t, gain).map_err(|e| Error::parse(ln, e.to_string()))?;
        }
        let mut resolved = Vec::new();
        let mut seen = HashSet::new();
        for (ln, name, kind) in sources {
            let id = lookup(&graph, ln, &name)?;
            if !seen.insert(id) {
                return Err(Error::parse(ln, format!("node {name:?} already has a source")));
            }
            resolved.push((id, kind));
        }
        let mut correlations = Vec::new();
        for (ln, a, b, c) in pending_corr {
            let i = lookup(&graph, ln, &a)?;
            let j = lookup(&graph, ln, &b)?;
            if i == j {
                return Err(Error::parse(ln, "use `source` for self-correlation"));
            }
            correlations.push((i, j, c));
        }
        let mut ports = Vec::new();
        for (ln, name) in pending_ports {
            ports.push(lookup(&graph, ln, &name)?);
        }
        Ok(Netlist {
            graph,
            frequency,
            convention,
            sources: resolved,
            correlations,
            ports,
        })
    }

    fn wave_power(&self, kind: SourceKind) -> f64 {
        let hnu = PLANCK * self.frequency;
        match (kind, self.convention) {
            (SourceKind::Psd(p), _) => p,
            (SourceKind::Vacuum, NoiseConvention::Classical) => 0.0,
            (SourceKind::Vacuum, NoiseConvention::Quantum) => 0.5 * hnu,
            (SourceKind::Thermal(t), NoiseConvention::Classical) => BOLTZMANN * t,
            (SourceKind::Thermal(t), NoiseConvention::Quantum) => {
                hnu * (occupancy(self.frequency, t) + 0.5)
            }
        }
    }

    /// Input ports: the declared ones, or else every node without incoming
    /// edges.
    pub fn input_ports(&self) -> Vec<usize> {
        if !self.ports.is_empty() {
            return self.ports.clone();
        }
        let fed: HashSet<usize> = self
            .graph
            .edges
            .iter()
            .filter(|e| e.gain != zero())
            .map(|e| e.to)
            .collect();
        (0..self.graph.len()).filter(|i| !fed.contains(i)).collect()
    }

    /// Builds N_s, adding vacuum to undriven input ports in quantum mode.
    pub fn source_correlations(&self) -> Result<(CorrelationMatrix, Vec<String>)> {
        let n = self.graph.len();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        let mut driven = HashSet::new();
        for &(id, kind) in &self.sources {
            m[(id, id)] = Complex64::new(self.wave_power(kind), 0.0);
            driven.insert(id);
        }
        for &(i, j, c) in &self.correlations {
            m[(i, j)] = c;
            m[(j, i)] = c.conj();
        }
        let mut inserted = Vec::new();
        if self.convention == NoiseConvention::Quantum {
            for id in self.input_ports() {
                if !driven.contains(&id) {
                    m[(id, id)] = Complex64::new(self.wave_power(SourceKind::Vacuum), 0.0);
                    inserted.push(self.graph.name(id).to_string());
                }
            }
        }
        let ns = CorrelationMatrix::new(self.graph.names.clone(), m)?;
        Ok((ns, inserted))
    }

    pub fn solve(&self) -> Result<NetworkSolution> {
        let (source, vacuum_inserted) = self.source_correlations()?;
        let output = propagate_correlations(&self.graph, &source)?;
        Ok(NetworkSolution {
            source,
            output,
            vacuum_inserted,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub source: CorrelationMatrix,
    pub output: CorrelationMatrix,
    pub vacuum_inserted: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn self_loop_geometric_series() {
        let mut g = FlowGraph::default();
        let a = g.add_node("a").unwrap();
        g.add_edge(a, a, c(0.5, 0.0)).unwrap();
        let sol = solve_waves(&g, &[one()]).unwrap();
        assert!((sol.amplitudes[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(sol.residual < 1e-15);
    }

    #[test]
    fn no_edges_passes_sources_through() {
        let mut g = FlowGraph::default();
        g.add_node("a").unwrap();
        g.add_node("b").unwrap();
        let n = [c(1.0, 2.0), c(-3.0, 0.5)];
        let sol = solve_waves(&g, &n).unwrap();
        assert_eq!(sol.amplitudes.as_slice(), &n);
    }

    #[test]
    fn two_stage_cascade_matches_closed_form() {
        let sa = [[c(0.1, 0.2), c(0.05, 0.0)], [c(0.8, -0.3), c(0.3, 0.1)]];
        let sb = [[c(-0.2, 0.4), c(0.01, 0.02)], [c(0.7, 0.2), c(0.1, -0.1)]];
        let mut g = FlowGraph::default();
        let a = g.add_two_port("A", sa).unwrap();
        let b = g.add_two_port("B", sb).unwrap();
        g.connect(a.b2, b.a1).unwrap();
        g.connect(b.b1, a.a2).unwrap();
        let mut n = vec![zero(); g.len()];
        n[a.a1] = one();
        let d = solve_waves(&g, &n).unwrap().amplitudes;
        let mason = sa[1][0] * sb[1][0] / (one() - sa[1][1] * sb[0][0]);
        assert!((d[b.b2] - mason).norm() < 1e-15);
    }

    #[test]
    fn unstable_loop_is_reported() {
        let mut g = FlowGraph::default();
        let x = g.add_node("x").unwrap();
        let y = g.add_node("y").unwrap();
        let z = g.add_node("z").unwrap();
        g.add_edge(x, y, c(1.2, 0.0)).unwrap();
        g.add_edge(y, z, c(1.0, 0.0)).unwrap();
        g.add_edge(z, y, c(1.1, 0.0)).unwrap();
        match solve_waves(&g, &[one(), zero(), zero()]) {
            Err(Error::UnstableGraph {
                spectral_radius,
                loop_nodes,
            }) => {
                assert!((spectral_radius - 1.1f64.sqrt()).abs() < 1e-12);
                assert_eq!(loop_nodes, vec!["y", "z", "y"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unity_loop_is_unstable() {
        let mut g = FlowGraph::default();
        let a = g.add_node("a").unwrap();
        g.add_edge(a, a, c(0.0, 1.0)).unwrap();
        let err = g.transfer_matrix().unwrap_err();
        assert!(err.to_string().contains("a -> a"), "{err}");
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let mut g = FlowGraph::default();
        g.add_node("a").unwrap();
        assert!(g.add_node("a").is_err());
        assert!(FlowGraph::new(0.0).is_err());
    }

    #[test]
    fn unitary_stage_preserves_unit_noise() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = [[c(h, 0.0), c(0.0, h)], [c(0.0, h), c(h, 0.0)]];
        let mut g = FlowGraph::default();
        let p = g.add_two_port("hybrid", s).unwrap();
        let mut powers = vec![0.0; 4];
        powers[p.a1] = 1.0;
        powers[p.a2] = 1.0;
        let ns = CorrelationMatrix::diagonal(g.names().to_vec(), &powers).unwrap();
        let nc = propagate_correlations(&g, &ns).unwrap();
        assert!((nc.get(p.b1, p.b1).re - 1.0).abs() < 1e-15);
        assert!((nc.get(p.b2, p.b2).re - 1.0).abs() < 1e-15);
        assert!(nc.get(p.b1, p.b2).norm() < 1e-15);
    }

    #[test]
    fn zero_connection_keeps_correlations() {
        let mut g = FlowGraph::default();
        g.add_node("a").unwrap();
        g.add_node("b").unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let ns = CorrelationMatrix::new(g.names().to_vec(), m).unwrap();
        let nc = propagate_correlations(&g, &ns).unwrap();
        assert_eq!(nc.matrix(), ns.matrix());
        assert!(nc.is_psd());
    }

    #[test]
    fn non_hermitian_correlation_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.4, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            CorrelationMatrix::new(vec!["a".into(), "b".into()], m),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn matched_source_gives_t_a() {
        let amp = AmplifierNoiseModel::new(5.0, 3.0, 2.0, 0.7).unwrap();
        assert_eq!(noise_temperature(&amp, &SourceReflection::matched()), 5.0);
    }

    #[test]
    fn uncorrelated_waves_add_in_power() {
        let amp = AmplifierNoiseModel::new(5.0, 3.0, 0.0, 0.0).unwrap();
        let src = SourceReflection::new(0.4, 1.1).unwrap();
        assert!((noise_temperature(&amp, &src) - (5.0 + 0.16 * 3.0)).abs() < 1e-15);
    }

    #[test]
    fn phase_sweep_peak_to_peak() {
        let amp = AmplifierNoiseModel::new(5.0, 3.0, 2.0, 0.3).unwrap();
        let g = 0.6;
        let ts: Vec<f64> = (0..3600)
            .map(|i| {
                let src = SourceReflection::new(g, 2.0 * PI * i as f64 / 3600.0).unwrap();
                noise_temperature(&amp, &src)
            })
            .collect();
        let max = ts.iter().copied().fold(f64::MIN, f64::max);
        let min = ts.iter().copied().fold(f64::MAX, f64::min);
        assert!((max - min - 4.0 * 2.0 * g).abs() < 1e-5);
        let mid = 5.0 + g * g * 3.0;
        assert!(((max + min) / 2.0 - mid).abs() < 1e-5);
    }

    #[test]
    fn amplifier_model_validation() {
        assert!(AmplifierNoiseModel::new(1.0, 1.0, 1.5, 0.0).is_err());
        assert!(AmplifierNoiseModel::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(SourceReflection::new(1.1, 0.0).is_err());
        let amp = AmplifierNoiseModel::new(4.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(amp.correlation_coefficient(), 0.5);
    }

    #[test]
    fn monte_carlo_noise_temperature() {
        let amp = AmplifierNoiseModel::new(5.0, 3.0, 2.0, 0.3).unwrap();
        let src = SourceReflection::new(0.5, -0.8).unwrap();
        let exact = noise_temperature(&amp, &src);
        let mc = noise_temperature_mc(&amp, &src, 200_000, 17).unwrap();
        assert!((mc - exact).abs() / exact < 0.01, "mc {mc} vs {exact}");
        assert_eq!(mc, noise_temperature_mc(&amp, &src, 200_000, 17).unwrap());
    }

    #[test]
    fn enhancement_examples() {
        assert_eq!(resonant_input_enhancement(zero(), c(0.7, 0.2)).unwrap(), 1.0);
        let v = resonant_input_enhancement(c(0.5, 0.0), c(0.5, 0.0)).unwrap();
        assert!((v - 1.0 / 0.5625).abs() < 1e-12);
        let g_amp = Complex64::from_polar(0.6, 1.0);
        let best = (0..360)
            .map(|i| {
                let g_src = Complex64::from_polar(0.8, 2.0 * PI * i as f64 / 360.0 - PI);
                (i, resonant_input_enhancement(g_src, g_amp).unwrap())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let phase = 2.0 * PI * best.0 as f64 / 360.0 - PI;
        assert!((phase + 1.0).abs() < 2.0 * PI / 360.0);
        assert!(resonant_input_enhancement(c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    fn amp(gain: f64) -> [[Complex64; 2]; 2] {
        [[zero(), zero()], [c(gain.sqrt(), 0.0), zero()]]
    }

    #[test]
    fn unity_gain_adds_no_noise() {
        let r = quantum_two_port(amp(1.0), 1e10, [None, None], None).unwrap();
        assert_eq!(r.added_noise, 0.0);
        assert_eq!(r.vacuum_inserted, vec![1, 2]);
    }

    #[test]
    fn gain_100_minimal_noise() {
        let omega = 2.0 * PI * 1e10;
        let half = 0.5 * HBAR * omega;
        let r = quantum_two_port(amp(100.0), omega, [Some(PortState::Vacuum), None], None).unwrap();
        assert!((r.added_noise - 99.0 * half).abs() < 1e-12 * r.added_noise);
        assert!((r.output_density - 199.0 * half).abs() < 1e-12 * r.output_density);
        assert_eq!(r.noise_commutator, -99.0);
        assert_eq!(r.commutator_residual, 0.0);
        assert_eq!(r.vacuum_inserted, vec![2]);
        // a warm amplifier only adds more
        let hot = quantum_two_port(amp(100.0), omega, [None, None], Some(1.0)).unwrap();
        assert!(hot.added_noise > r.added_noise);
    }

    #[test]
    fn attenuator_noise_restores_vacuum() {
        // a cold lossy line maps vacuum to vacuum
        let omega = 2.0 * PI * 5e9;
        let r = quantum_two_port(amp(0.25), omega, [None, None], None).unwrap();
        assert!((r.output_density - 0.5 * HBAR * omega).abs() < 1e-12 * r.output_density);
    }

    #[test]
    fn sql_examples() {
        assert_eq!(sql_noise_temperature(1.0, 1e10).unwrap(), 0.0);
        let tq = sql_noise_temperature(f64::INFINITY, 1e10).unwrap();
        assert!((tq - 0.2400).abs() < 0.00024);
        let half = sql_noise_temperature(2.0, 1e10).unwrap();
        assert!((half - tq / 2.0).abs() < 1e-15);
        assert!(sql_noise_temperature(0.5, 1e10).is_err());
    }

    const NETLIST: &str = "\
# lossy line into a cold load
freq 5e9
mode quantum
node in
node out
port in
edge in out 0.5 0
source out vacuum
";

    #[test]
    fn netlist_vacuum_augmentation() {
        let net = Netlist::parse(NETLIST).unwrap();
        let sol = net.solve().unwrap();
        assert_eq!(sol.vacuum_inserted, vec!["in"]);
        let half = 0.5 * PLANCK * 5e9;
        let out = net.graph.node("out").unwrap();
        assert!((sol.output.get(out, out).re - 1.25 * half).abs() < 1e-12 * half);
    }

    #[test]
    fn netlist_classical_thermal() {
        let text = "freq 1e9\nnode a\nnode b\nedge a b 0.5 0\nsource a thermal 100\n";
        let net = Netlist::parse(text).unwrap();
        let sol = net.solve().unwrap();
        assert!(sol.vacuum_inserted.is_empty());
        let t = sol.output.temperatures();
        assert!((t[1] - 25.0).abs() < 1e-12);
        let mut buf = Vec::new();
        sol.output.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("port,T_K,a_re,a_im,b_re,b_im\n"));
    }

    #[test]
    fn netlist_errors_have_line_numbers() {
        let bad = "freq 1e9\nnode a\nedge a b 1 0\n";
        assert!(matches!(Netlist::parse(bad), Err(Error::Parse { line: 3, .. })));
        let bad = "freq 1e9\nnode a\nnode a\n";
        assert!(matches!(Netlist::parse(bad), Err(Error::Parse { line: 3, .. })));
        let bad = "node a\n";
        assert!(matches!(Netlist::parse(bad), Err(Error::InvalidParameter { .. })));
        let bad = "freq 1e9\nnode a\nsource a thermal\n";
        assert!(matches!(Netlist::parse(bad), Err(Error::Parse { line: 3, .. })));
        let bad = "freq 1e9\nbogus\n";
        assert!(matches!(Netlist::parse(bad), Err(Error::Parse { line: 2, .. })));
    }
}
