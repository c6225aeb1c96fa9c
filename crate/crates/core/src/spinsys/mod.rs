//! Exact dynamics of small planes × chains spin-1/2 registers.
//!
//! Spin `plane * n_chains + chain` is ordered plane-major. The simulation
//! frame rotates at the plane-0 carrier; every plane carries an explicit
//! offset. Hamiltonians are in rad/s with ħ = 1.

mod aht;
mod dynamics;
mod state;

use serde::Serialize;

use crate::constants::HBAR;
use crate::constants::MU_0_OVER_4PI;
use crate::error::{Error, Result};
use crate::lattice::{splitting, ChainLattice};
use crate::linalg::{dim, iz_value, spin_mask, CMatrix, C64};

pub use aht::{average_hamiltonian_0, operator_component, pair_operator, spin_operator, Axis};
pub use dynamics::{
    evolve, evolve_time_dependent, gate_fidelity, local_z_fidelity, propagator, Mode, Propagator, Trajectory,
};
pub use state::{expectation, expectation_iz_plane, state_fidelity, trajectory_csv, QuantumState};

/// Largest register the simulator accepts (Hilbert dimension 4096).
pub const MAX_SPINS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// Secular coupling between spins of different frequency: c I_z I_z.
    Zz,
    /// Like-spin coupling: (c/2)(3 I_z I_z − I·I).
    FullDipolar,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub kind: CouplingKind,
    /// (μ₀/4π)γ²ħ(1 − 3cos²θ)/r³ in rad/s.
    pub coefficient: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SystemOptions {
    /// Keep the same-plane (like-spin) couplings. Turning them off isolates
    /// the cross-plane dynamics.
    pub same_plane_couplings: bool,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions { same_plane_couplings: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinSystem {
    n_planes: usize,
    chain_positions: Vec<[f64; 2]>,
    offsets: Vec<f64>,
    couplings: Vec<Coupling>,
}

impl SpinSystem {
    /// Assembles a system from explicit parts, checking the structural
    /// invariants (size cap, no self or duplicate pairs, same-plane pairs
    /// full dipolar and cross-plane pairs zz).
    pub fn from_parts(
        n_planes: usize,
        chain_positions: Vec<[f64; 2]>,
        offsets: Vec<f64>,
        couplings: Vec<Coupling>,
    ) -> Result<Self> {
        let n_chains = chain_positions.len();
        if n_planes == 0 || n_chains == 0 {
            return Err(Error::InvalidArgument("need at least one plane and one chain".into()));
        }
        let total = n_planes * n_chains;
        if total > MAX_SPINS {
            return Err(Error::SizeCap { requested: total, cap: MAX_SPINS });
        }
        if offsets.len() != n_planes {
            return Err(Error::DimensionMismatch { expected: n_planes, actual: offsets.len() });
        }
        for (i, p) in chain_positions.iter().enumerate() {
            if chain_positions[..i].contains(p) {
                return Err(Error::DuplicatePosition(i));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut normalized = Vec::with_capacity(couplings.len());
        for c in couplings {
            let (a, b) = (c.a.min(c.b), c.a.max(c.b));
            if a == b || b >= total {
                return Err(Error::InvalidArgument(format!("bad coupling pair ({}, {})", c.a, c.b)));
            }
            if !seen.insert((a, b)) {
                return Err(Error::InvalidArgument(format!("pair ({a}, {b}) listed twice")));
            }
            let same_plane = a / n_chains == b / n_chains;
            let expected = if same_plane { CouplingKind::FullDipolar } else { CouplingKind::Zz };
            if c.kind != expected {
                return Err(Error::InvalidArgument(format!("pair ({a}, {b}) must be {expected:?}")));
            }
            normalized.push(Coupling { a, b, ..c });
        }
        normalized.sort_by_key(|c| (c.a, c.b));
        Ok(SpinSystem { n_planes, chain_positions, offsets, couplings: normalized })
    }

    pub fn n_planes(&self) -> usize {
        self.n_planes
    }

    pub fn n_chains(&self) -> usize {
        self.chain_positions.len()
    }

    pub fn total_spins(&self) -> usize {
        self.n_planes * self.n_chains()
    }

    pub fn dim(&self) -> usize {
        dim(self.total_spins())
    }

    pub fn chain_positions(&self) -> &[[f64; 2]] {
        &self.chain_positions
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn spin_index(&self, plane: usize, chain: usize) -> usize {
        plane * self.n_chains() + chain
    }

    pub fn plane_of(&self, spin: usize) -> usize {
        spin / self.n_chains()
    }

    pub fn spins_in_plane(&self, plane: usize) -> impl Iterator<Item = usize> {
        let n = self.n_chains();
        plane * n..(plane + 1) * n
    }

    /// Symmetric lookup of the coupling between two spins.
    pub fn coupling(&self, a: usize, b: usize) -> Option<&Coupling> {
        let (a, b) = (a.min(b), a.max(b));
        self.couplings.iter().find(|c| c.a == a && c.b == b)
    }

    /// Largest offset difference between any two planes or the frame.
    pub fn max_offset_spread(&self) -> f64 {
        let hi = self.offsets.iter().copied().fold(0.0, f64::max);
        let lo = self.offsets.iter().copied().fold(0.0, f64::min);
        hi - lo
    }

    /// Same system with every same-plane coupling removed.
    pub fn without_same_plane(&self) -> Self {
        let mut s = self.clone();
        s.couplings.retain(|c| c.kind != CouplingKind::FullDipolar);
        s
    }

    /// Internal (free-evolution) Hamiltonian in rad/s.
    pub fn hamiltonian(&self) -> CMatrix {
        let n = self.total_spins();
        let d = dim(n);
        let mut h = CMatrix::zeros(d, d);
        for idx in 0..d {
            let mut diag = 0.0;
            for s in 0..n {
                diag += self.offsets[self.plane_of(s)] * iz_value(n, s, idx);
            }
            for c in &self.couplings {
                // both forms carry c·I_z I_z on the diagonal
                diag += c.coefficient * iz_value(n, c.a, idx) * iz_value(n, c.b, idx);
            }
            h[(idx, idx)] = C64::new(diag, 0.0);
        }
        for c in self.couplings.iter().filter(|c| c.kind == CouplingKind::FullDipolar) {
            let (ma, mb) = (spin_mask(n, c.a), spin_mask(n, c.b));
            for idx in 0..d {
                let (ba, bb) = (idx & ma != 0, idx & mb != 0);
                if ba != bb {
                    h[(idx ^ (ma | mb), idx)] += C64::new(-0.25 * c.coefficient, 0.0);
                }
            }
        }
        h
    }
}

/// Builds a planes × chains register from crystal geometry.
///
/// `chain_positions` are transverse chain coordinates in units of `a`.
/// Plane `i` is offset by `i·Δω` from plane 0, with Δω = γ a |grad|.
pub fn build_system(
    lat: &ChainLattice,
    n_planes: usize,
    chain_positions: &[[f64; 2]],
    grad: f64,
) -> Result<SpinSystem> {
    build_system_with(lat, n_planes, chain_positions, grad, SystemOptions::default())
}

pub fn build_system_with(
    lat: &ChainLattice,
    n_planes: usize,
    chain_positions: &[[f64; 2]],
    grad: f64,
    opts: SystemOptions,
) -> Result<SpinSystem> {
    let n_chains = chain_positions.len();
    let total = n_planes * n_chains;
    if total > MAX_SPINS {
        return Err(Error::SizeCap { requested: total, cap: MAX_SPINS });
    }
    if !grad.is_finite() {
        return Err(Error::InvalidArgument("gradient must be finite".into()));
    }
    let dw = splitting(lat, grad);
    let offsets = (0..n_planes).map(|i| i as f64 * dw).collect();

    // chain axis at angle φ from z in the xz plane; transverse x' ⟂ axis
    let (sp, cp) = lat.phi.sin_cos();
    let axis = [sp, 0.0, cp];
    let ex = [cp, 0.0, -sp];
    let position = |plane: usize, chain: usize| -> [f64; 3] {
        let [x, y] = chain_positions[chain];
        let z = plane as f64;
        [lat.a * (z * axis[0] + x * ex[0]), lat.a * (z * axis[1] + y), lat.a * (z * axis[2] + x * ex[2])]
    };
    let unit = MU_0_OVER_4PI * lat.gamma * lat.gamma * HBAR;
    let mut couplings = Vec::new();
    for s in 0..total {
        for t in s + 1..total {
            let (ps, pt) = (s / n_chains, t / n_chains);
            let same_plane = ps == pt;
            if same_plane && !opts.same_plane_couplings {
                continue;
            }
            let (r1, r2) = (position(ps, s % n_chains), position(pt, t % n_chains));
            let d = [r2[0] - r1[0], r2[1] - r1[1], r2[2] - r1[2]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let cos2 = (d[2] / r).powi(2);
            let coefficient = unit * (1.0 - 3.0 * cos2) / r.powi(3);
            let kind = if same_plane { CouplingKind::FullDipolar } else { CouplingKind::Zz };
            couplings.push(Coupling { a: s, b: t, kind, coefficient });
        }
    }
    SpinSystem::from_parts(n_planes, chain_positions.to_vec(), offsets, couplings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{b_coefficient, intra_chain_coupling};
    use crate::linalg::hermiticity_error;
    use approx::assert_relative_eq;

    fn fap() -> ChainLattice {
        ChainLattice::preset("fluorapatite").unwrap()
    }

    #[test]
    fn two_planes_one_chain_matches_intra_chain_coupling() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0]], 1.4e6).unwrap();
        assert_eq!(sys.couplings().len(), 1);
        let c = sys.couplings()[0];
        assert_eq!(c.kind, CouplingKind::Zz);
        assert_relative_eq!(c.coefficient, intra_chain_coupling(&fap(), 0, 1).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(sys.offsets()[1], splitting(&fap(), 1.4e6), max_relative = 1e-15);
    }

    #[test]
    fn same_plane_pair_is_full_dipolar_with_perpendicular_geometry() {
        let lambda = 2.7214;
        let lat = fap();
        let sys = build_system(&lat, 1, &[[0.0, 0.0], [lambda, 0.0]], 0.0).unwrap();
        let c = sys.couplings()[0];
        assert_eq!(c.kind, CouplingKind::FullDipolar);
        let expect = MU_0_OVER_4PI * lat.gamma.powi(2) * HBAR / (lambda * lat.a).powi(3);
        assert_relative_eq!(c.coefficient, expect, max_relative = 1e-12);
    }

    #[test]
    fn cross_plane_cross_chain_matches_b_coefficient() {
        let lat = fap();
        let dw = intra_chain_coupling(&lat, 0, 1).unwrap();
        for lambda in [0.5, 1.0, 2.7214, 4.1] {
            let sys = build_system(&lat, 2, &[[0.0, 0.0], [0.0, lambda]], 0.0).unwrap();
            // plane 0 chain 0 (spin 0) with plane 1 chain 1 (spin 3)
            let c = sys.coupling(3, 0).unwrap();
            assert_eq!(c.kind, CouplingKind::Zz);
            assert_relative_eq!(c.coefficient, -dw * b_coefficient(lambda), max_relative = 1e-12);
        }
    }

    #[test]
    fn magic_angle_pair_vanishes() {
        // separation (λ, 0, 1)·a with λ = √2 puts θ at the magic angle
        let sys = build_system(&fap(), 2, &[[0.0, 0.0], [2f64.sqrt(), 0.0]], 0.0).unwrap();
        assert!(sys.coupling(0, 3).unwrap().coefficient.abs() < 1e-9);
    }

    #[test]
    fn size_cap_and_duplicates() {
        let pos: Vec<[f64; 2]> = (0..13).map(|i| [i as f64 * 3.0, 0.0]).collect();
        assert!(matches!(build_system(&fap(), 1, &pos, 0.0), Err(Error::SizeCap { requested: 13, .. })));
        assert!(matches!(build_system(&fap(), 2, &[[0.0, 0.0], [0.0, 0.0]], 0.0), Err(Error::DuplicatePosition(1))));
    }

    #[test]
    fn from_parts_enforces_tags() {
        let bad = Coupling { a: 0, b: 1, kind: CouplingKind::FullDipolar, coefficient: 1.0 };
        assert!(SpinSystem::from_parts(2, vec![[0.0, 0.0]], vec![0.0, 0.0], vec![bad]).is_err());
        let selfc = Coupling { a: 1, b: 1, kind: CouplingKind::Zz, coefficient: 1.0 };
        assert!(SpinSystem::from_parts(2, vec![[0.0, 0.0]], vec![0.0, 0.0], vec![selfc]).is_err());
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_total_iz() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0], [2.7214, 0.0]], 1.4e6).unwrap();
        let h = sys.hamiltonian();
        assert!(hermiticity_error(&h) == 0.0);
        // total I_z is diagonal; H must not connect different total I_z
        let n = sys.total_spins();
        for r in 0..h.nrows() {
            for c in 0..h.ncols() {
                if h[(r, c)].norm() > 0.0 {
                    let mr: f64 = (0..n).map(|s| iz_value(n, s, r)).sum();
                    let mc: f64 = (0..n).map(|s| iz_value(n, s, c)).sum();
                    assert_eq!(mr, mc);
                }
            }
        }
    }
}
