//! Simulation and pulse-scheduling toolkit for a one-dimensional
//! fluorine-chain NMR quantum computer read out by force microscopy.
//!
//! The crate is split by physical subsystem:
//!
//! * [`lattice`] — chain-crystal geometry and the static dipolar couplings
//!   (nearest-neighbour zz coupling, cross-chain recoupling coefficients,
//!   the recoupling linewidth figure of merit, gradient splitting).
//! * [`spinsys`] — exact dynamics of small planes × chains registers:
//!   Hamiltonian assembly, ideal and sampled pulse propagation, fidelities
//!   and zeroth-order average Hamiltonians.
//! * [`pulses`] — WAHUHA cycles, Hadamard sign-matrix decoupling,
//!   selective recoupling, interleaving, CNOT compilation and schedule I/O.
//! * [`magnet`] — closed-form field of a uniformly magnetized prism.
//! * [`mrfm`] — effective-pure-state magnetization, readout force,
//!   scalability curves and cyclic adiabatic inversion readout.
//!
//! All angular frequencies are in rad/s and every other quantity is SI.

pub mod constants;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod magnet;
pub mod mrfm;
pub mod pulses;
pub mod spinsys;

pub use error::{Error, Result, Violation};

/// Locale-free, round-trip-exact number formatting used for every table
/// this crate and its front end write.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
