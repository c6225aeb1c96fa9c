//! Physical constants (CODATA 2018) shared by every module.

use std::f64::consts::PI;

/// Vacuum permeability μ₀ in N·A⁻².
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// μ₀/4π in N·A⁻².
pub const MU_0_OVER_4PI: f64 = MU_0 / (4.0 * PI);

/// Reduced Planck constant ħ in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant k_B in J/K.
pub const K_B: f64 = 1.380_649e-23;

/// ¹⁹F gyromagnetic ratio used by the presets, 2π × 40 MHz/T, in rad·s⁻¹·T⁻¹.
pub const GAMMA_F19: f64 = 2.0 * PI * 40.0e6;
