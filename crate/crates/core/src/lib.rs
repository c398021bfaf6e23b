//! Simulation and analysis of a one-dimensional waveguide coupled to an
//! array of tunable, saturable transmon qubits.
//!
//! The crate is organised around the physical pipeline:
//!
//! * [`qubit`]: closed-form single-emitter reflection and transmission
//!   (two-level with probe saturation, dressed three-level for Autler-Townes).
//! * [`hamiltonian`]: the single-excitation effective non-Hermitian
//!   Hamiltonian of the array, its eigenmodes and the subradiant linewidth law.
//! * [`transfer`]: 2x2 transfer-matrix chains with background mirrors,
//!   S-parameters, saturation sweeps and bandgap extraction.
//! * [`input_output`]: the Markovian dipole solver and the three-qubit
//!   Fano reduction.
//! * [`calibration`]: flux-crosstalk matrix extraction, compensation
//!   currents and spectrum normalisation.
//! * [`fitting`]: damped least-squares fits of resonances, Lorentzians,
//!   power laws and saturation points.
//! * [`experiment`]: configuration-driven scenarios with CSV/JSON/SVG output.
//!
//! All frequencies and rates are angular (rad/s) and the time convention is
//! `exp(+i omega t)`, so decay shows up as a positive imaginary part of an
//! eigenfrequency.

pub mod calibration;
pub mod error;
pub mod experiment;
pub mod fitting;
pub mod hamiltonian;
pub mod preset;
pub mod input_output;
pub mod qubit;
pub mod spectrum;
pub mod transfer;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
