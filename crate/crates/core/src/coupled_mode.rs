//! Sampled response tensors and field correlations on a weighted grid.
//!
//! A kernel K(r₁, r₂) sampled at points rᵢ with quadrature weights wᵢ is
//! stored as the matrix K[i, j]. Integrals over the reference surface become
//! weighted sums, so with W = diag(w) the detected power is Tr[W D W E] and
//! mode functions are orthonormal under v†Wu. Polarisation is folded into the
//! point index: a two-component field on P points is a 2P-point grid.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::constants::PLANCK;
use crate::error::{require_positive, Error, Result};
use crate::radiometry::SpectralBand;

const HERMITIAN_TOL: f64 = 1e-12;
const EIGEN_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    /// Position on the reference surface, m.
    pub position: [f64; 3],
    /// Quadrature weight, m² (or whatever measure the kernel integrates over).
    pub weight: f64,
    /// Polarisation index for vector fields; zero for scalar kernels.
    pub pol: u8,
}

impl GridPoint {
    pub fn new(position: [f64; 3], weight: f64) -> Self {
        GridPoint {
            position,
            weight,
            pol: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<GridPoint>,
}

impl Grid {
    pub fn new(points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid", "needs at least one point"));
        }
        for p in &points {
            require_positive("grid weight", p.weight)?;
        }
        Ok(Grid { points })
    }

    /// `n` points with unit weight along x, spaced by 1 m.
    pub fn unit(n: usize) -> Result<Self> {
        Grid::new(
            (0..n)
                .map(|i| GridPoint::new([i as f64, 0.0, 0.0], 1.0))
                .collect(),
        )
    }

    /// Uniform 1-D grid on `[lo, hi]` with midpoint weights.
    pub fn uniform_line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || hi <= lo {
            return Err(Error::invalid("grid", "need n > 0 and hi > lo"));
        }
        let h = (hi - lo) / n as f64;
        Grid::new(
            (0..n)
                .map(|i| GridPoint::new([lo + (i as f64 + 0.5) * h, 0.0, 0.0], h))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.points.iter().map(|p| p.weight))
    }

    /// Weighted inner product Σ wᵢ conj(aᵢ) bᵢ.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        self.points
            .iter()
            .zip(a.iter().zip(b))
            .map(|(p, (x, y))| x.conj() * y * p.weight)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Detector response tensor D̄. May carry a reactive (anti-Hermitian) part.
    Response,
    /// Field correlation Ē. Must be Hermitian.
    FieldCorrelation,
}

impl KernelKind {
    fn label(&self) -> &'static str {
        match self {
            KernelKind::Response => "response",
            KernelKind::FieldCorrelation => "field",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel {
    grid: Grid,
    values: DMatrix<Complex64>,
    kind: KernelKind,
    frequency: f64,
}

/// Largest |K − K†| entry and the scale it is judged against.
fn hermitian_defect(m: &DMatrix<Complex64>) -> (f64, f64) {
    let n = m.nrows();
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
            scale = scale.max(m[(i, j)].norm());
        }
    }
    (defect, scale)
}

impl SampledKernel {
    /// Field correlations must be Hermitian to 1e-12 relative; response
    /// kernels are stored as given.
    pub fn new(
        grid: Grid,
        values: DMatrix<Complex64>,
        kind: KernelKind,
        frequency: f64,
    ) -> Result<Self> {
        if values.nrows() != grid.len() || values.ncols() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: if values.nrows() != grid.len() {
                    values.nrows()
                } else {
                    values.ncols()
                },
            });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("kernel", "entries must be finite"));
        }
        require_positive("kernel frequency", frequency)?;
        let k = SampledKernel {
            grid,
            values,
            kind,
            frequency,
        };
        if kind == KernelKind::FieldCorrelation {
            k.check_hermitian()?;
        }
        Ok(k)
    }

    /// Builds Σ wₘ vₘ vₘ† from a mode set.
    pub fn from_modes(modes: &ModeSet, kind: KernelKind, frequency: f64) -> Result<Self> {
        SampledKernel::new(modes.grid.clone(), modes.reconstruct(), kind, frequency)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let (defect, scale) = hermitian_defect(&self.values);
        if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NonHermitian {
                max_asymmetry: defect,
            });
        }
        Ok(())
    }

    /// Hermitian part (K + K†)/2, the part that dissipates energy.
    pub fn dissipative(&self) -> DMatrix<Complex64> {
        (&self.values + self.values.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Anti-Hermitian part (K − K†)/2i, the reactive part.
    pub fn reactive(&self) -> DMatrix<Complex64> {
        (&self.values - self.values.adjoint()) * Complex64::new(0.0, -0.5)
    }

    /// Parses the kernel text format.
    ///
    /// ```text
    /// kind response          # or: field
    /// freq 5e9
    /// point x y z weight [pol]
    /// ...
    /// values
    /// re im re im ...        # row-major, n² pairs, free line breaks
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut freq = None;
        let mut points = Vec::new();
        let mut numbers = Vec::new();
        let mut in_values = false;
        let mut values_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if in_values {
                for tok in line.split_whitespace() {
                    numbers.push(parse_f64(tok, line_no)?);
                }
                continue;
            }
            let mut toks = line.split_whitespace();
            let key = toks.next().unwrap_or_default();
            let rest: Vec<&str> = toks.collect();
            match key {
                "kind" => {
                    kind = Some(match rest.first().copied() {
                        Some("response") => KernelKind::Response,
                        Some("field") => KernelKind::FieldCorrelation,
                        other => {
                            return Err(Error::parse(
                                line_no,
                                format!("unknown kernel kind {other:?}"),
                            ))
                        }
                    })
                }
                "freq" => {
                    let tok = rest
                        .first()
                        .ok_or_else(|| Error::parse(line_no, "freq needs a value"))?;
                    freq = Some(parse_f64(tok, line_no)?);
                }
                "point" => {
                    if rest.len() != 4 && rest.len() != 5 {
                        return Err(Error::parse(line_no, "point needs x y z weight [pol]"));
                    }
                    let x = parse_f64(rest[0], line_no)?;
                    let y = parse_f64(rest[1], line_no)?;
                    let z = parse_f64(rest[2], line_no)?;
                    let w = parse_f64(rest[3], line_no)?;
                    let pol = match rest.get(4) {
                        Some(p) => p
                            .parse::<u8>()
                            .map_err(|_| Error::parse(line_no, format!("bad polarisation {p:?}")))?,
                        None => 0,
                    };
                    points.push(GridPoint {
                        position: [x, y, z],
                        weight: w,
                        pol,
                    });
                }
                "values" => {
                    in_values = true;
                    values_line = line_no;
                }
                other => return Err(Error::parse(line_no, format!("unknown keyword {other:?}"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::parse(0, "missing `kind` line"))?;
        let freq = freq.ok_or_else(|| Error::invalid("kernel", "missing `freq` line"))?;
        if !in_values {
            return Err(Error::parse(0, "missing `values` section"));
        }
        let n = points.len();
        if numbers.len() != 2 * n * n {
            return Err(Error::parse(
                values_line,
                format!("expected {} numbers for {n} points, found {}", 2 * n * n, numbers.len()),
            ));
        }
        let grid = Grid::new(points)?;
        let values = DMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            Complex64::new(numbers[k], numbers[k + 1])
        });
        SampledKernel::new(grid, values, kind, freq)
    }

    /// Inverse of [`SampledKernel::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind {}", self.kind.label());
        let _ = writeln!(s, "freq {:e}", self.frequency);
        for p in self.grid.points() {
            let [x, y, z] = p.position;
            let _ = writeln!(s, "point {x:e} {y:e} {z:e} {:e} {}", p.weight, p.pol);
        }
        s.push_str("values\n");
        let n = self.grid.len();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.values[(i, j)];
                    format!("{:e} {:e}", z.re, z.im)
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("not a number: {tok:?}")))
}

/// Eigenmodes of a kernel: K = Σ wₘ vₘ vₘ† with v†Wv = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    grid: Grid,
    weights: Vec<f64>,
    /// Column m holds mode m sampled on the grid.
    vectors: DMatrix<Complex64>,
}

impl ModeSet {
    /// Builds a mode set from explicit weights and column vectors.
    pub fn new(grid: Grid, weights: Vec<f64>, vectors: DMatrix<Complex64>) -> Result<Self> {
        if vectors.nrows() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: vectors.nrows(),
            });
        }
        if vectors.ncols() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: vectors.ncols(),
            });
        }
        Ok(ModeSet {
            grid,
            weights,
            vectors,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mode(&self, m: usize) -> Vec<Complex64> {
        self.vectors.column(m).iter().copied().collect()
    }

    /// Σ wₘ vₘ vₘ†.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.grid.len();
        let mut k = DMatrix::zeros(n, n);
        for (m, &w) in self.weights.iter().enumerate() {
            let v = self.vectors.column(m);
            k += (&v * v.adjoint()) * Complex64::new(w, 0.0);
        }
        k
    }

    /// max |V†WV − I|.
    pub fn orthonormality_error(&self) -> f64 {
        let w = self.grid.weights().map(|x| Complex64::new(x, 0.0));
        let wv = DMatrix::from_diagonal(&w) * &self.vectors;
        let g = self.vectors.adjoint() * wv;
        let id = DMatrix::<Complex64>::identity(g.nrows(), g.ncols());
        (g - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// CSV with one row per mode: `weight,v0_re,v0_im,v1_re,...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["weight".to_string()];
        for i in 0..self.grid.len() {
            header.push(format!("v{i}_re"));
            header.push(format!("v{i}_im"));
        }
        w.write_record(&header)?;
        for (m, weight) in self.weights.iter().enumerate() {
            let mut row = vec![format!("{weight:e}")];
            for z in self.vectors.column(m).iter() {
                row.push(format!("{:e}", z.re));
                row.push(format!("{:e}", z.im));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Weighted Hermitian eigendecomposition of a kernel.
///
/// Solves the symmetric problem W^½ K W^½ y = λ y and maps back with
/// v = W^-½ y. Modes with |λ| below 1e-12 of the largest are dropped; the
/// rest are returned in descending order.
pub fn diagonalize(kernel: &SampledKernel) -> Result<ModeSet> {
    kernel.check_hermitian()?;
    let sqrt_w = kernel.grid.weights().map(f64::sqrt);
    let n = kernel.grid.len();
    let m = DMatrix::from_fn(n, n, |i, j| kernel.values[(i, j)] * sqrt_w[i] * sqrt_w[j]);
    // exact Hermitian symmetrisation so the solver sees a clean input
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut order: Vec<usize> = (0..n)
        .filter(|&i| max > 0.0 && eig.eigenvalues[i].abs() >= EIGEN_CUTOFF * max)
        .collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let weights: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])] / sqrt_w[r]
    });
    ModeSet::new(kernel.grid.clone(), weights, vectors)
}

/// Overlaps S[m, n] = Σ wᵢ conj(Rₘ,ᵢ) Uₙ,ᵢ between detector and field modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    s: DMatrix<Complex64>,
}

impl CouplingMatrix {
    pub fn from_matrix(s: DMatrix<Complex64>) -> Self {
        CouplingMatrix { s }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.s
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.s[(m, n)]
    }

    /// (detector modes, field modes).
    pub fn shape(&self) -> (usize, usize) {
        self.s.shape()
    }

    pub fn max_abs(&self) -> f64 {
        self.s.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn coupling(detector: &ModeSet, field: &ModeSet) -> Result<CouplingMatrix> {
    if detector.grid != field.grid {
        return Err(Error::GridMismatch);
    }
    let w = field.grid.weights().map(|x| Complex64::new(x, 0.0));
    let wu = DMatrix::from_diagonal(&w) * &field.vectors;
    Ok(CouplingMatrix {
        s: detector.vectors.adjoint() * wu,
    })
}

/// Σ αₘ βₙ |Sₘₙ|², power per unit bandwidth.
pub fn detected_power_modal(detector: &ModeSet, field: &ModeSet, s: &CouplingMatrix) -> Result<f64> {
    let (rows, cols) = s.shape();
    if rows != detector.len() {
        return Err(Error::DimensionMismatch {
            expected: detector.len(),
            found: rows,
        });
    }
    if cols != field.len() {
        return Err(Error::DimensionMismatch {
            expected: field.len(),
            found: cols,
        });
    }
    let mut p = 0.0;
    for (m, a) in detector.weights.iter().enumerate() {
        for (n, b) in field.weights.iter().enumerate() {
            p += a * b * s.s[(m, n)].norm_sqr();
        }
    }
    Ok(p)
}

/// W^½ K W^½ for the Hermitian part of a response kernel, or the kernel
/// itself for a field correlation.
fn weighted(k: &SampledKernel) -> DMatrix<Complex64> {
    let base = match k.kind {
        KernelKind::Response => k.dissipative(),
        KernelKind::FieldCorrelation => k.values.clone(),
    };
    let sqrt_w = k.grid.weights().map(f64::sqrt);
    let n = k.grid.len();
    DMatrix::from_fn(n, n, |i, j| base[(i, j)] * sqrt_w[i] * sqrt_w[j])
}

fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    // Tr[AB] without forming AB
    let n = a.nrows();
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

/// Re Tr[W D W E], power per unit bandwidth.
pub fn detected_power_trace(d: &SampledKernel, e: &SampledKernel) -> Result<f64> {
    if d.grid != e.grid {
        return Err(Error::GridMismatch);
    }
    Ok(trace_product(&weighted(d), &weighted(e)).re)
}

/// Covariance of two detector outputs split into its two terms, W².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputCovariance {
    /// Wave-noise term (1/τ)∫dν Tr[Dₐ E D_b E].
    pub classical: f64,
    /// Photon shot term (1/τ)∫dν hν Tr[Dₐ E]; zero unless same detector.
    pub shot: f64,
}

impl OutputCovariance {
    pub fn total(&self) -> f64 {
        self.classical + self.shot
    }
}

/// Covariance of the outputs of detectors `a` and `b` viewing field `E`.
///
/// Kernels are taken as flat across `band`.
pub fn output_covariance(
    d_a: &SampledKernel,
    d_b: &SampledKernel,
    e: &SampledKernel,
    tau: f64,
    same_detector: bool,
    band: &SpectralBand,
) -> Result<OutputCovariance> {
    require_positive("integration time", tau)?;
    if d_a.grid != e.grid || d_b.grid != e.grid {
        return Err(Error::GridMismatch);
    }
    let a = weighted(d_a);
    let b = weighted(d_b);
    let f = weighted(e);
    let af = &a * &f;
    let bf = &b * &f;
    let chain = trace_product(&af, &bf).re;
    let classical = chain * band.bandwidth() / tau;
    let shot = if same_detector {
        let nu_integral = 0.5 * (band.hi() * band.hi() - band.lo() * band.lo());
        af.trace().re * PLANCK * nu_integral / tau
    } else {
        0.0
    };
    Ok(OutputCovariance { classical, shot })
}

/// Phase θ of a response kernel element at drive frequency ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePhase {
    theta: f64,
    omega0: f64,
}

impl ResponsePhase {
    pub fn new(theta: f64, omega0: f64) -> Result<Self> {
        if !(-PI..=PI).contains(&theta) {
            return Err(Error::invalid("phase", format!("must lie in [-π, π], got {theta}")));
        }
        require_positive("drive frequency", omega0)?;
        Ok(ResponsePhase { theta, omega0 })
    }

    /// Phase of a complex response value.
    pub fn from_response(k: Complex64, omega0: f64) -> Result<Self> {
        ResponsePhase::new(k.arg(), omega0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Normalised instantaneous power [1 + cos 2ω₀t] cos θ + sin 2ω₀t sin θ.
    pub fn power_at(&self, t: f64) -> f64 {
        let x = 2.0 * self.omega0 * t;
        (1.0 + x.cos()) * self.theta.cos() + x.sin() * self.theta.sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneComponents {
    /// Time-averaged absorbed power (the power factor cos θ).
    pub dissipative_avg: f64,
    /// Time average of the reactive term, which always vanishes.
    pub reactive_avg: f64,
    /// (t, P(t)) over one drive period 2π/ω₀.
    pub waveform: Vec<(f64, f64)>,
}

pub fn homodyne_components(phase: &ResponsePhase, samples: usize) -> HomodyneComponents {
    let period = 2.0 * PI / phase.omega0;
    let n = samples.max(1);
    let waveform = (0..n)
        .map(|i| {
            let t = period * i as f64 / n as f64;
            (t, phase.power_at(t))
        })
        .collect();
    HomodyneComponents {
        dissipative_avg: phase.theta.cos(),
        reactive_avg: 0.0,
        waveform,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn field(grid: Grid, m: DMatrix<Complex64>) -> SampledKernel {
        SampledKernel::new(grid, m, KernelKind::FieldCorrelation, 1e9).unwrap()
    }

    #[test]
    fn identity_kernel_has_unit_weights() {
        let k = field(Grid::unit(5).unwrap(), DMatrix::identity(5, 5));
        let modes = diagonalize(&k).unwrap();
        assert_eq!(modes.len(), 5);
        for w in modes.weights() {
            assert!((w - 1.0).abs() < 1e-14);
        }
        assert!(modes.orthonormality_error() < 1e-12);
    }

    #[test]
    fn rank_one_kernel() {
        let grid = Grid::uniform_line(0.0, 2.0, 8).unwrap();
        let u: Vec<Complex64> = (0..8).map(|i| c(1.0 + i as f64, 0.5 * i as f64)).collect();
        let uv = DVector::from_vec(u.clone());
        let k = field(grid.clone(), &uv * uv.adjoint());
        let modes = diagonalize(&k).unwrap();
        let norm2 = grid.inner(&u, &u).re;
        assert_eq!(modes.len(), 1);
        assert!((modes.weights()[0] - norm2).abs() < 1e-10 * norm2);
        let rec = modes.reconstruct();
        let diff = (&rec - k.values()).norm() / k.values().norm();
        assert!(diff < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(0, 1)] = c(0.25, 0.0);
        let err = SampledKernel::new(Grid::unit(3).unwrap(), m.clone(), KernelKind::FieldCorrelation, 1e9);
        match err {
            Err(Error::NonHermitian { max_asymmetry }) => assert!((max_asymmetry - 0.25).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        // response kernels may carry a reactive part but cannot be diagonalised
        let k = SampledKernel::new(Grid::unit(3).unwrap(), m, KernelKind::Response, 1e9).unwrap();
        assert!(matches!(diagonalize(&k), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn identical_bases_couple_to_identity() {
        let grid = Grid::uniform_line(-1.0, 1.0, 6).unwrap();
        let m = DMatrix::from_fn(6, 6, |i, j| c(1.0 / (1.0 + (i as f64 - j as f64).abs()), 0.0));
        let modes = diagonalize(&field(grid, m)).unwrap();
        let s = coupling(&modes, &modes).unwrap();
        let id = DMatrix::<Complex64>::identity(modes.len(), modes.len());
        assert!((s.matrix() - id).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_modes_do_not_couple() {
        let grid = Grid::unit(2).unwrap();
        let a = ModeSet::new(grid.clone(), vec![1.0], DMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        let b = ModeSet::new(grid, vec![1.0], DMatrix::from_column_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert_eq!(coupling(&a, &b).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = diagonalize(&field(Grid::unit(2).unwrap(), DMatrix::identity(2, 2))).unwrap();
        let b = diagonalize(&field(Grid::uniform_line(0.0, 1.0, 2).unwrap(), DMatrix::identity(2, 2))).unwrap();
        assert!(matches!(coupling(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn gaussian_overlap_matches_closed_form() {
        // normalised Gaussians of width σ separated by d overlap as exp(-d²/8σ²)
        let sigma = 0.3;
        let d = 0.4;
        let grid = Grid::uniform_line(-6.0, 6.0, 4000).unwrap();
        let g = |x0: f64| -> Vec<Complex64> {
            let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
            grid.points()
                .iter()
                .map(|p| {
                    let x = p.position[0] - x0;
                    c(norm * (-x * x / (4.0 * sigma * sigma)).exp(), 0.0)
                })
                .collect()
        };
        let n = grid.len();
        let a = ModeSet::new(grid.clone(), vec![1.0], DMatrix::from_vec(n, 1, g(0.0))).unwrap();
        let b = ModeSet::new(grid.clone(), vec![1.0], DMatrix::from_vec(n, 1, g(d))).unwrap();
        let s = coupling(&a, &b).unwrap();
        let exact = (-d * d / (8.0 * sigma * sigma)).exp();
        assert!((s.get(0, 0).norm() - exact).abs() < 1e-6);
    }

    #[test]
    fn modal_power_single_modes() {
        let grid = Grid::unit(1).unwrap();
        let a = ModeSet::new(grid.clone(), vec![2.0], DMatrix::from_element(1, 1, c(1.0, 0.0))).unwrap();
        let b = ModeSet::new(grid, vec![3.0], DMatrix::from_element(1, 1, c(1.0, 0.0))).unwrap();
        let s = CouplingMatrix::from_matrix(DMatrix::from_element(1, 1, c(0.6, 0.0)));
        let p = detected_power_modal(&a, &b, &s).unwrap();
        assert!((p - 2.0 * 3.0 * 0.36).abs() < 1e-15);
        let bad = CouplingMatrix::from_matrix(DMatrix::zeros(2, 1));
        assert!(detected_power_modal(&a, &b, &bad).is_err());
    }

    #[test]
    fn identity_detector_counts_modes() {
        let k = field(Grid::unit(4).unwrap(), DMatrix::identity(4, 4));
        let modes = diagonalize(&k).unwrap();
        let s = coupling(&modes, &modes).unwrap();
        assert!((detected_power_modal(&modes, &modes, &s).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn trace_power_special_cases() {
        let grid = Grid::uniform_line(0.0, 1.0, 3).unwrap();
        let e = field(grid.clone(), DMatrix::from_fn(3, 3, |i, j| c(if i == j { 2.0 } else { 0.5 }, 0.0)));
        let zero = field(grid.clone(), DMatrix::zeros(3, 3));
        let d = SampledKernel::new(grid.clone(), DMatrix::zeros(3, 3), KernelKind::Response, 1e9).unwrap();
        assert_eq!(detected_power_trace(&d, &zero).unwrap(), 0.0);
        // identity response in the continuous sense is W⁻¹ in sampled form
        let w = grid.weights();
        let d_id = SampledKernel::new(
            grid.clone(),
            DMatrix::from_diagonal(&w.map(|x| c(1.0 / x, 0.0))),
            KernelKind::Response,
            1e9,
        )
        .unwrap();
        let beta_sum: f64 = diagonalize(&e).unwrap().weights().iter().sum();
        assert!((detected_power_trace(&d_id, &e).unwrap() - beta_sum).abs() < 1e-12 * beta_sum);
    }

    #[test]
    fn reactive_part_does_not_absorb() {
        let grid = Grid::unit(2).unwrap();
        let mut m = DMatrix::<Complex64>::identity(2, 2);
        m[(0, 1)] = c(0.0, 0.3);
        m[(1, 0)] = c(0.0, 0.3); // anti-Hermitian off-diagonal pair
        let d = SampledKernel::new(grid.clone(), m, KernelKind::Response, 1e9).unwrap();
        let e = field(grid, DMatrix::from_element(2, 2, c(1.0, 0.0)));
        assert!((detected_power_trace(&d, &e).unwrap() - 2.0).abs() < 1e-15);
        assert!((d.reactive()[(0, 1)] - c(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn covariance_of_zero_field_is_zero() {
        let grid = Grid::unit(2).unwrap();
        let d = SampledKernel::new(grid.clone(), DMatrix::identity(2, 2), KernelKind::Response, 1e9).unwrap();
        let e = field(grid, DMatrix::zeros(2, 2));
        let band = SpectralBand::from_edges(1e9, 2e9).unwrap();
        let c = output_covariance(&d, &d, &e, 1.0, true, &band).unwrap();
        assert_eq!(c.total(), 0.0);
    }

    #[test]
    fn phase_bounds() {
        assert!(ResponsePhase::new(3.2, 1.0).is_err());
        assert!(ResponsePhase::new(0.0, 0.0).is_err());
        let p = ResponsePhase::from_response(c(0.0, 2.0), 1.0).unwrap();
        assert!((p.theta() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn homodyne_examples() {
        let h = homodyne_components(&ResponsePhase::new(0.0, 1e9).unwrap(), 64);
        assert_eq!((h.dissipative_avg, h.reactive_avg), (1.0, 0.0));
        let h = homodyne_components(&ResponsePhase::new(PI / 2.0, 1e9).unwrap(), 64);
        assert!(h.dissipative_avg.abs() < 1e-15);
        // pure sloshing: power goes negative for part of the cycle
        assert!(h.waveform.iter().any(|&(_, p)| p < -0.5));
        let h = homodyne_components(&ResponsePhase::new(PI / 4.0, 1e9).unwrap(), 64);
        assert!((h.dissipative_avg - 0.707_106_78).abs() < 1e-8);
        let mean = h.waveform.iter().map(|p| p.1).sum::<f64>() / 64.0;
        assert!((mean - h.dissipative_avg).abs() < 1e-12);
    }

    #[test]
    fn kernel_text_round_trip() {
        let grid = Grid::new(vec![
            GridPoint { position: [0.0, 0.0, 0.0], weight: 0.5, pol: 0 },
            GridPoint { position: [0.0, 0.0, 0.0], weight: 0.5, pol: 1 },
        ])
        .unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(3.0, 0.0)]);
        let k = field(grid, m);
        let parsed = SampledKernel::parse(&k.to_text()).unwrap();
        assert_eq!(parsed, k);
    }

    #[test]
    fn kernel_parse_errors_carry_line_numbers() {
        let text = "kind field\nfreq 1e9\npoint 0 0 0 1\nvalues\n1 0 2\n";
        match SampledKernel::parse(text) {
            Err(Error::Parse { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        let text = "kind field\nfreq abc\n";
        assert!(matches!(SampledKernel::parse(text), Err(Error::Parse { line: 2, .. })));
        let text = "kind wat\n";
        assert!(matches!(SampledKernel::parse(text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn mode_csv_has_header_and_rows() {
        let modes = diagonalize(&field(Grid::unit(2).unwrap(), DMatrix::identity(2, 2))).unwrap();
        let mut buf = Vec::new();
        modes.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "weight,v0_re,v0_im,v1_re,v1_im");
        assert_eq!(lines.len(), 3);
    }
}
