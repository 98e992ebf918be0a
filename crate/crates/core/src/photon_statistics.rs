//! Seeded Monte Carlo of photon counts drawn from a Poisson mixture.
//!
//! Each longitudinal mode is treated as a coherent state with random complex
//! amplitude α. Its intensity ξ = |α|² is drawn from an amplitude model and
//! the detected count is Poisson(ξ). The count variance then splits into the
//! variance of ξ (wave noise) and the mean Poisson variance E[ξ] (shot noise).
//!
//! Work is split into fixed-size lanes. Lane `i` draws from ChaCha8 seeded
//! with the user seed on stream `i`, so results do not depend on the number
//! of worker threads and are merged in lane order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constants::PLANCK;
use crate::error::{require_non_negative, Error, Result};
use crate::radiometry::{IntegrationSpec, PhotonSource, SpectralBand};

/// Recorded in output metadata so runs can be reproduced elsewhere.
pub const RNG_ALGORITHM: &str = "ChaCha8(seed_from_u64(seed), stream=lane)";

const LANE_SIZE: u64 = 1 << 16;
const MIN_DECOMPOSITION_SAMPLES: u64 = 100;
const MIN_LONGITUDINAL_SAMPLES: f64 = 10.0;
const PTRS_THRESHOLD: f64 = 30.0;

/// Random stream for one lane of work.
pub fn lane_rng(seed: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng
}

/// Distribution of the mode intensity ξ = |α|².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeModel {
    /// ξ equals the mean occupancy in every mode (pure Poisson counts).
    FixedAmplitude,
    /// Both quadratures of α are independent zero-mean Gaussians, so ξ is
    /// exponentially distributed (thermal light).
    ComplexGaussian,
}

impl AmplitudeModel {
    pub fn sample<R: Rng + ?Sized>(&self, mean_occupancy: f64, rng: &mut R) -> f64 {
        match self {
            AmplitudeModel::FixedAmplitude => mean_occupancy,
            AmplitudeModel::ComplexGaussian => {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                0.5 * mean_occupancy * (x * x + y * y)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureConfig {
    pub mean_occupancy: f64,
    pub samples: u64,
    pub model: AmplitudeModel,
    pub seed: u64,
}

impl MixtureConfig {
    pub fn new(mean_occupancy: f64, samples: u64, model: AmplitudeModel, seed: u64) -> Result<Self> {
        require_non_negative("mean occupancy", mean_occupancy)?;
        if samples == 0 {
            return Err(Error::invalid("samples", "need at least one temporal sample"));
        }
        Ok(MixtureConfig {
            mean_occupancy,
            samples,
            model,
            seed,
        })
    }
}

/// Draws a Poisson variate with mean `lambda`.
///
/// Sequential inversion below a mean of 30, Hörmann's transformed rejection
/// with squeeze (PTRS) above.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < PTRS_THRESHOLD {
        poisson_inversion(lambda, rng)
    } else {
        poisson_ptrs(lambda, rng)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= lambda / k as f64;
        if p == 0.0 {
            break;
        }
        cdf += p;
    }
    k
}

fn poisson_ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// ln(k!) exactly for small k, Stirling series otherwise.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 20 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    let x2 = x * x;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x * x2 * x2)
        - 1.0 / (1680.0 * x * x2 * x2 * x2)
}

/// Streaming mean/variance (Welford), mergeable with Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64) / n as f64;
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Default)]
struct LaneTally {
    counts: RunningMoments,
    intensity: RunningMoments,
    histogram: Vec<u64>,
}

impl LaneTally {
    fn record(&mut self, xi: f64, n: u64) {
        self.counts.push(n as f64);
        self.intensity.push(xi);
        let idx = n as usize;
        if idx >= self.histogram.len() {
            self.histogram.resize(idx + 1, 0);
        }
        self.histogram[idx] += 1;
    }

    fn merge(&mut self, other: &LaneTally) {
        self.counts.merge(&other.counts);
        self.intensity.merge(&other.intensity);
        if other.histogram.len() > self.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (h, o) in self.histogram.iter_mut().zip(&other.histogram) {
            *h += o;
        }
    }
}

/// Runs `samples` mixture draws with intensity mean `mean` over lanes
/// `first_lane..` and merges the tallies in lane order.
fn tally(mean: f64, samples: u64, model: AmplitudeModel, seed: u64, first_lane: u64) -> LaneTally {
    let lanes = samples.div_ceil(LANE_SIZE);
    let parts: Vec<LaneTally> = (0..lanes)
        .into_par_iter()
        .map(|lane| {
            let mut rng = lane_rng(seed, first_lane + lane);
            let n = LANE_SIZE.min(samples - lane * LANE_SIZE);
            let mut t = LaneTally::default();
            for _ in 0..n {
                let xi = model.sample(mean, &mut rng);
                let count = sample_poisson(xi, &mut rng);
                t.record(xi, count);
            }
            t
        })
        .collect();
    parts.iter().fold(LaneTally::default(), |mut acc, p| {
        acc.merge(p);
        acc
    })
}

/// Moments and histogram of simulated photon counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CountStatistics {
    pub samples: u64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    /// Sample variance of the intensities ξ.
    pub classical_part: f64,
    /// Sample mean of ξ, i.e. the average conditional Poisson variance.
    pub poisson_part: f64,
    /// `histogram[n]` is the number of samples with n detected photons.
    pub histogram: Vec<u64>,
    pub seed: u64,
    pub model: AmplitudeModel,
}

impl CountStatistics {
    /// Standard error of `sample_variance`, √((m₄ − m₂²)/M) from the histogram.
    pub fn variance_standard_error(&self) -> f64 {
        let m = self.samples as f64;
        let mean = self.sample_mean;
        let (mut m2, mut m4) = (0.0, 0.0);
        for (n, &c) in self.histogram.iter().enumerate() {
            let d = n as f64 - mean;
            let d2 = d * d;
            m2 += c as f64 * d2;
            m4 += c as f64 * d2 * d2;
        }
        m2 /= m;
        m4 /= m;
        ((m4 - m2 * m2).max(0.0) / m).sqrt()
    }

    /// Empirical probability of detecting `n` photons.
    pub fn probability(&self, n: usize) -> f64 {
        self.histogram.get(n).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    /// Writes the histogram as CSV with columns `n,count`.
    pub fn write_histogram_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "count"])?;
        for (n, c) in self.histogram.iter().enumerate() {
            w.write_record([n.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates `cfg.samples` longitudinal modes and tallies the detected counts.
pub fn sample_counts(cfg: &MixtureConfig) -> CountStatistics {
    let t = tally(cfg.mean_occupancy, cfg.samples, cfg.model, cfg.seed, 0);
    CountStatistics {
        samples: cfg.samples,
        sample_mean: t.counts.mean(),
        sample_variance: t.counts.variance(),
        classical_part: t.intensity.variance(),
        poisson_part: t.intensity.mean(),
        histogram: t.histogram,
        seed: cfg.seed,
        model: cfg.model,
    }
}

/// Draws only the intensities ξ, in the same lane layout as [`sample_counts`].
pub fn sample_intensities(cfg: &MixtureConfig) -> Vec<f64> {
    let lanes = cfg.samples.div_ceil(LANE_SIZE);
    let parts: Vec<Vec<f64>> = (0..lanes)
        .into_par_iter()
        .map(|lane| {
            let mut rng = lane_rng(cfg.seed, lane);
            let n = LANE_SIZE.min(cfg.samples - lane * LANE_SIZE);
            (0..n).map(|_| cfg.model.sample(cfg.mean_occupancy, &mut rng)).collect()
        })
        .collect();
    parts.concat()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    /// V̂[ξ], the wave-noise part.
    pub classical: f64,
    /// Ê[ξ], the shot-noise part.
    pub quantum: f64,
}

impl VarianceDecomposition {
    pub fn total(&self) -> f64 {
        self.classical + self.quantum
    }
}

/// Splits the count variance by the law of total variance.
pub fn variance_decomposition(stats: &CountStatistics) -> Result<VarianceDecomposition> {
    if stats.samples < MIN_DECOMPOSITION_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: stats.samples,
            min: MIN_DECOMPOSITION_SAMPLES,
        });
    }
    Ok(VarianceDecomposition {
        classical: stats.classical_part,
        quantum: stats.poisson_part,
    })
}

/// Bose–Einstein (geometric) photon-number distribution n̄ⁿ/(1+n̄)ⁿ⁺¹.
pub fn bose_einstein_pmf(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ratio = mean / (1.0 + mean);
    ratio.powf(n as f64) / (1.0 + mean)
}

/// Monte Carlo estimate of the power variance of a photon source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerVarianceEstimate {
    /// `classical + quantum`, W².
    pub total: f64,
    /// Wave-noise part built from V̂[ξ], W².
    pub classical: f64,
    /// Shot-noise part built from Ê[ξ], W².
    pub quantum: f64,
    /// The same quantity built directly from the count variance, W².
    pub from_counts: f64,
    /// Number of simulated mode draws.
    pub draws: u64,
    pub seed: u64,
}

/// Simulates N·B·τ independent mode draws across the band and converts the
/// counts into an estimate of (ΔP)².
///
/// The band is cut into sub-bins; within a bin the occupancy is taken at the
/// bin centre and each transverse mode contributes one longitudinal mode per
/// `1/Δν` of integration time. Every draw is thermal: ξ is exponential with
/// the source occupancy as its mean.
pub fn power_variance_mc<S: PhotonSource>(
    source: &S,
    band: &SpectralBand,
    integ: &IntegrationSpec,
    seed: u64,
) -> Result<PowerVarianceEstimate> {
    let tau = integ.tau();
    let bt = band.bandwidth() * tau;
    if bt < MIN_LONGITUDINAL_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: bt as u64,
            min: MIN_LONGITUDINAL_SAMPLES as u64,
        });
    }
    let modes = source.modes();
    let total_draws = modes * bt;
    let bins = (band.points() as f64)
        .min((total_draws / 100.0).floor())
        .max(1.0) as usize;
    let width = band.bandwidth() / bins as f64;

    let mut est = PowerVarianceEstimate {
        total: 0.0,
        classical: 0.0,
        quantum: 0.0,
        from_counts: 0.0,
        draws: 0,
        seed,
    };
    // Lane ids are partitioned per bin so bins never share a stream.
    let lanes_per_bin = (total_draws / bins as f64 / LANE_SIZE as f64).ceil() as u64 + 1;
    for bin in 0..bins {
        let lo = band.lo() + bin as f64 * width;
        let hi = lo + width;
        let mean = source.occupancy(0.5 * (lo + hi));
        // cumulative rounding keeps the total at N·B·τ
        let draws = (modes * tau * width * (bin + 1) as f64).round() as u64
            - (modes * tau * width * bin as f64).round() as u64;
        if draws < 2 || mean == 0.0 {
            est.draws += draws;
            continue;
        }
        let t = tally(
            mean,
            draws,
            AmplitudeModel::ComplexGaussian,
            seed,
            bin as u64 * lanes_per_bin,
        );
        // (1/τ²) Σ_modes (hν)² V[n] with the mode count N Δν τ folded in,
        // and (hν)² integrated exactly across the bin.
        let weight = modes * PLANCK * PLANCK * (hi.powi(3) - lo.powi(3)) / 3.0 / tau;
        est.classical += weight * t.intensity.variance();
        est.quantum += weight * t.intensity.mean();
        est.from_counts += weight * t.counts.variance();
        est.draws += draws;
    }
    est.total = est.classical + est.quantum;
    Ok(est)
}
