//! Simulation library for a GaAs double-dot hybrid qubit with
//! energy-selective tunneling readout.
//!
//! The crate is organized around four physics layers:
//!
//! * [`model`] — the 4×4 two-charge-configuration Hamiltonian, its
//!   eigenlevels and dispersion, and unit conversions between gate
//!   voltage, detuning energy, and frequency.
//! * [`pulse`] — time evolution under detuning trajectories (ramps,
//!   dwells, Gaussian-edged microwave bursts) with Lindblad relaxation
//!   and quasistatic detuning noise; Rabi/Ramsey/tomography scans and
//!   the ramp error budget.
//! * [`readout`] — Monte Carlo single-shot detector traces with
//!   tunneling, relaxation and thermal statistics; threshold detection,
//!   min-value histograms, fidelity/visibility analysis, and tunnel-time
//!   maximum-likelihood estimation.
//! * [`fci`] — a two-electron full-configuration-interaction solver on
//!   2D finite-difference grids: sparse single-particle eigenbasis,
//!   factorized two-electron integrals, Slater–Condon assembly, and
//!   interaction-quenching analysis of the singlet–triplet splitting.
//!
//! Supporting modules: [`units`] (physical constants), [`rng`]
//! (deterministic per-stream random numbers), [`fit`] (sinusoid fits,
//!  FFT peaks, linear regression), [`io`] (CSV / binary trace frames).
//!
//! All scan and batch entry points are deterministic functions of their
//! inputs and a 64-bit seed, independent of thread count.

pub mod error;
pub mod fci;
pub mod fit;
pub mod io;
pub mod model;
pub mod pulse;
pub mod readout;
pub mod rng;
pub mod units;

pub use error::Error;
