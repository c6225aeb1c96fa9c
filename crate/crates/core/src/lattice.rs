//! Chain-crystal geometry and the static dipolar couplings derived from it.
//!
//! Spins sit on parallel chains with intra-chain spacing `a`. The chains
//! pierce the transverse plane on a two-dimensional Bravais lattice spanned
//! by `transverse_basis`. Each crystal plane orthogonal to the chains holds
//! one resonant frequency (one qubit); the copies of a qubit across chains
//! form the ensemble.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{GAMMA_F19, HBAR, MU_0_OVER_4PI};
use crate::error::{Error, Result};

/// Names accepted by [`ChainLattice::preset`].
pub const PRESETS: [&str; 2] = ["fluorapatite", "simple_cubic"];

/// Fluorapatite F–F distance along the c axis (c/2), in meters.
pub const FLUORAPATITE_A: f64 = 3.442e-10;
/// Fluorapatite hexagonal a axis: spacing of the triangular chain lattice.
pub const FLUORAPATITE_CHAIN_SPACING: f64 = 9.367e-10;
/// CaF₂ fluorine sublattice constant (simple cubic).
pub const SIMPLE_CUBIC_A: f64 = 2.7255e-10;

/// Initial cutoff radius for lattice sums, in units of the nearest
/// transverse spacing.
pub const INITIAL_CUTOFF_SPACINGS: f64 = 4.0;
/// Maximum number of cutoff doublings before giving up.
pub const MAX_DOUBLINGS: usize = 12;
/// Default relative tolerance for [`sigma_over_delta`].
pub const DEFAULT_REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLattice {
    pub name: String,
    /// Distance between neighbouring spins along a chain (m).
    pub a: f64,
    /// Two vectors spanning the chain lattice in the transverse plane (m).
    pub transverse_basis: [[f64; 2]; 2],
    /// Gyromagnetic ratio (rad·s⁻¹·T⁻¹).
    pub gamma: f64,
    /// Angle between the chain axis and the applied field (rad).
    pub phi: f64,
}

impl ChainLattice {
    pub fn new(name: impl Into<String>, a: f64, transverse_basis: [[f64; 2]; 2], gamma: f64, phi: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("chain spacing must be positive, got {a}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidArgument("phi must be finite".into()));
        }
        let [u, v] = transverse_basis;
        let cross = u[0] * v[1] - u[1] * v[0];
        let scale = norm2(u) * norm2(v);
        if !(cross.abs() > 1e-12 * scale) || !cross.is_finite() {
            return Err(Error::InvalidArgument("transverse basis vectors are linearly dependent".into()));
        }
        Ok(ChainLattice { name: name.into(), a, transverse_basis, gamma, phi })
    }

    /// Looks up a named preset (see [`PRESETS`]).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fluorapatite" => Self::triangular("fluorapatite", FLUORAPATITE_A, FLUORAPATITE_CHAIN_SPACING),
            "simple_cubic" => Self::square("simple_cubic", SIMPLE_CUBIC_A, SIMPLE_CUBIC_A),
            other => {
                Err(Error::InvalidArgument(format!("unknown lattice preset '{other}' (known: {})", PRESETS.join(", "))))
            }
        }
    }

    /// Chains on a triangular lattice of the given spacing, ¹⁹F nuclei, φ = 0.
    pub fn triangular(name: &str, a: f64, spacing: f64) -> Result<Self> {
        let basis = [[spacing, 0.0], [0.5 * spacing, 0.5 * 3f64.sqrt() * spacing]];
        Self::new(name, a, basis, GAMMA_F19, 0.0)
    }

    /// Chains on a square lattice of the given spacing, ¹⁹F nuclei, φ = 0.
    pub fn square(name: &str, a: f64, spacing: f64) -> Result<Self> {
        Self::new(name, a, [[spacing, 0.0], [0.0, spacing]], GAMMA_F19, 0.0)
    }

    /// Same lattice with the transverse basis multiplied by `factor`.
    pub fn with_transverse_scale(&self, factor: f64) -> Result<Self> {
        let [u, v] = self.transverse_basis;
        Self::new(
            self.name.clone(),
            self.a,
            [[u[0] * factor, u[1] * factor], [v[0] * factor, v[1] * factor]],
            self.gamma,
            self.phi,
        )
    }

    /// Length of the shortest nonzero transverse lattice vector (m).
    pub fn nearest_transverse_spacing(&self) -> f64 {
        let [u, v] = self.transverse_basis;
        let mut best = f64::INFINITY;
        for i in -2i64..=2 {
            for j in -2i64..=2 {
                if i == 0 && j == 0 {
                    continue;
                }
                let p = combine(u, v, i, j);
                best = best.min(norm2(p));
            }
        }
        best
    }

    /// (μ₀/4π)γ²ħ / a³ in rad/s: the dipolar prefactor at the chain spacing.
    pub fn dipolar_unit(&self) -> f64 {
        MU_0_OVER_4PI * self.gamma * self.gamma * HBAR / self.a.powi(3)
    }
}

/// Secular zz coupling between planes `i` and `j` of the same chain, in rad/s.
///
/// The Hamiltonian term is ħ δω_ij I_z I_z; the sign is kept, so δω is
/// negative for chains parallel to the field.
pub fn intra_chain_coupling(lat: &ChainLattice, i: i64, j: i64) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidArgument("coupling of a plane with itself".into()));
    }
    let sep = (j - i).unsigned_abs() as f64;
    let angular = 1.0 - 3.0 * lat.phi.cos().powi(2);
    Ok(lat.dipolar_unit() * angular / sep.powi(3))
}

/// Cross-chain recoupling coefficient b(λ) = (λ² − 2) / (2(1 + λ²)^{5/2}).
///
/// `lambda` is the transverse distance between the two chains in units of
/// the chain spacing. b(0) = −1 recovers the in-chain nearest-neighbour term.
pub fn b_coefficient(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    (l2 - 2.0) / (2.0 * (1.0 + l2).powf(2.5))
}

/// Gradient-induced splitting between adjacent planes, Δω = γ a |∇B|.
pub fn splitting(lat: &ChainLattice, grad: f64) -> f64 {
    lat.gamma * lat.a * grad.abs()
}

/// A point of the transverse chain lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSite {
    /// Integer coordinates in the transverse basis.
    pub index: (i64, i64),
    /// Cartesian position (m).
    pub position: [f64; 2],
    /// Distance from the origin chain (m).
    pub distance: f64,
}

/// All chain-lattice points with norm ≤ `radius`, sorted by distance and
/// then by integer index.
pub fn chain_sites_within(lat: &ChainLattice, radius: f64, exclude_origin: bool) -> Vec<ChainSite> {
    if !(radius >= 0.0) {
        return Vec::new();
    }
    let [u, v] = lat.transverse_basis;
    let area = (u[0] * v[1] - u[1] * v[0]).abs();
    // |i| ≤ r|v|/area and |j| ≤ r|u|/area for any point of norm ≤ r.
    let imax = (radius * norm2(v) / area).floor() as i64 + 1;
    let jmax = (radius * norm2(u) / area).floor() as i64 + 1;
    let mut sites = Vec::new();
    for i in -imax..=imax {
        for j in -jmax..=jmax {
            if exclude_origin && i == 0 && j == 0 {
                continue;
            }
            let p = combine(u, v, i, j);
            let d = norm2(p);
            if d <= radius {
                sites.push(ChainSite { index: (i, j), position: p, distance: d });
            }
        }
    }
    sites.sort_by(|x, y| match x.distance.total_cmp(&y.distance) {
        Ordering::Equal => x.index.cmp(&y.index),
        o => o,
    });
    sites
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SigmaOptions {
    /// Also count the control copies on the plane below the target.
    pub include_lower_plane: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingMetrics {
    /// Nearest-neighbour intra-chain coupling δω (rad/s, signed).
    pub delta_omega_nn: f64,
    /// Effective linewidth σ during recoupling (rad/s).
    pub sigma: f64,
    pub sigma_over_delta: f64,
    /// Cutoff radius at which the sum was accepted (m).
    pub convergence_radius: f64,
    /// (cutoff radius, σ/δω) for every evaluated cutoff.
    pub trace: Vec<(f64, f64)>,
}

/// σ/δω = ½ √(Σ_{n≠m} b_mn²) over the transverse chain lattice.
pub fn sigma_over_delta(lat: &ChainLattice, rel_tol: f64) -> Result<CouplingMetrics> {
    sigma_over_delta_with(lat, rel_tol, SigmaOptions::default())
}

pub fn sigma_over_delta_with(lat: &ChainLattice, rel_tol: f64, opts: SigmaOptions) -> Result<CouplingMetrics> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let planes = if opts.include_lower_plane { 2.0 } else { 1.0 };
    let eval = |radius: f64| -> f64 {
        // Smallest terms first.
        let sum: f64 =
            chain_sites_within(lat, radius, true).iter().rev().map(|s| b_coefficient(s.distance / lat.a).powi(2)).sum();
        0.5 * (planes * sum).sqrt()
    };

    let mut radius = INITIAL_CUTOFF_SPACINGS * lat.nearest_transverse_spacing();
    let mut prev = eval(radius);
    let mut trace = vec![(radius, prev)];
    let mut last_change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        radius *= 2.0;
        let cur = eval(radius);
        trace.push((radius, cur));
        last_change = if cur == prev { 0.0 } else { (cur - prev).abs() / cur.abs() };
        prev = cur;
        if last_change < rel_tol {
            let delta = intra_chain_coupling(lat, 0, 1)?;
            return Ok(CouplingMetrics {
                delta_omega_nn: delta,
                sigma: cur * delta.abs(),
                sigma_over_delta: cur,
                convergence_radius: radius,
                trace,
            });
        }
    }
    Err(Error::ConvergenceFailure { doublings: MAX_DOUBLINGS, last_change })
}

/// Convenience: δω/2π in Hz.
pub fn to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

fn combine(u: [f64; 2], v: [f64; 2], i: i64, j: i64) -> [f64; 2] {
    let (fi, fj) = (i as f64, j as f64);
    [fi * u[0] + fj * v[0], fi * u[1] + fj * v[1]]
}

fn norm2(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}
