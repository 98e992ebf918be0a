//! Sensitivity modelling for quantum-limited radio to far-infrared instruments.
//!
//! The crate is organised by physical topic:
//!
//! * [`radiometry`]: mode counting, thermal power and its wave/shot noise.
//! * [`photon_statistics`]: seeded Monte Carlo of the Poisson-mixture picture
//!   of photon noise.
//! * [`coupled_mode`]: sampled response and correlation kernels, their
//!   eigenmodes, detected power and inter-detector covariance.
//! * [`noise_network`]: signal-flow-graph solver for noise waves, amplifier
//!   noise temperature and quantum added-noise bookkeeping.
//! * [`circuit_elements`]: quantised resonators and superconductor constants.
//! * [`sensitivity`]: detector versus amplifier comparison curves.
//! * [`cli`]: the `qnoise` command-line front end.

pub mod circuit_elements;
pub mod cli;
pub mod constants;
pub mod coupled_mode;
pub mod error;
pub mod noise_network;
pub mod photon_statistics;
pub mod quadrature;
pub mod radiometry;
pub mod sensitivity;

pub use error::{Error, Result};
pub use num_complex::Complex64;
