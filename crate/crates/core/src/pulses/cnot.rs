//! CNOT between adjacent planes from the native zz coupling.
//!
//! The gate is built in the frame where every plane rotates at its own
//! carrier: target Ry(−π/2), free (or recoupled) evolution for
//! T = π/|δω|, Rz(∓π/2) on both planes to turn exp(∓iπ I_z I_z) into a
//! controlled-Z, target Ry(π/2), and finally Rz(−ω_i T) on every plane to
//! undo the carrier offsets accumulated in the plane-0 frame.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dim, spin_mask, CMatrix, C64};
use crate::spinsys::{Propagator, SpinSystem};

use super::hadamard::{decoupling_schedule, hadamard_sign_matrix, recouple};
use super::sequence::{PulseEvent, Sequence, Target};

#[derive(Clone, Debug, Serialize)]
pub struct CnotProgram {
    pub sequence: Sequence,
    /// CNOT on every chain, identity on spectator planes.
    #[serde(skip)]
    pub target: Propagator,
    /// Nearest-neighbour coupling (rad/s) driving the gate.
    pub coupling: f64,
    /// Coupled evolution time π/|coupling|.
    pub gate_time: f64,
}

/// Permutation matrix flipping `target` when `control` is down.
pub fn cnot_matrix(n_spins: usize, control: usize, target: usize) -> Result<CMatrix> {
    if control == target || control >= n_spins || target >= n_spins {
        return Err(Error::InvalidArgument(format!("bad CNOT pair ({control}, {target}) for {n_spins} spins")));
    }
    let d = dim(n_spins);
    let (mc, mt) = (spin_mask(n_spins, control), spin_mask(n_spins, target));
    let mut m = CMatrix::zeros(d, d);
    for idx in 0..d {
        let out = if idx & mc != 0 { idx ^ mt } else { idx };
        m[(out, idx)] = C64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Angle reduced to (−π, π].
fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

fn instant(t: f64, theta: f64, phase: f64, plane: usize) -> PulseEvent {
    PulseEvent::new(t, 0.0, theta, phase.rem_euclid(TAU), Target::Plane(plane))
}

/// Composite z rotation exp(−iφ I_z) = Rx(π/2) Ry(φ) Rx(−π/2), in time order.
fn rz_events(t: f64, phi: f64, plane: usize, out: &mut Vec<PulseEvent>) {
    let phi = wrap(phi);
    if phi.abs() < 1e-15 {
        return;
    }
    let ry_phase = if phi > 0.0 { FRAC_PI_2 } else { 3.0 * FRAC_PI_2 };
    out.push(instant(t, FRAC_PI_2, PI, plane));
    out.push(instant(t, phi.abs(), ry_phase, plane));
    out.push(instant(t, FRAC_PI_2, 0.0, plane));
}

/// Compiles a CNOT from `control` plane to the adjacent `target` plane,
/// applied on every chain at once.
///
/// With more than two planes the other planes are decoupled by a Hadamard
/// schedule in which control and target share a sign row.
pub fn compile_cnot(sys: &SpinSystem, control: usize, target: usize) -> Result<CnotProgram> {
    let n_planes = sys.n_planes();
    if control >= n_planes || target >= n_planes || control == target {
        return Err(Error::InvalidArgument(format!("bad plane pair ({control}, {target}) for {n_planes} planes")));
    }
    if control.abs_diff(target) != 1 {
        return Err(Error::Unsupported(format!("CNOT between non-adjacent planes {control} and {target}")));
    }
    let j = sys
        .coupling(sys.spin_index(control, 0), sys.spin_index(target, 0))
        .map(|c| c.coefficient)
        .filter(|c| *c != 0.0)
        .ok_or_else(|| Error::InvalidArgument("control and target planes are not coupled".into()))?;
    let gate_time = PI / j.abs();

    let mut events = vec![instant(0.0, FRAC_PI_2, 3.0 * FRAC_PI_2, target)];
    if n_planes > 2 {
        let report = recouple(&hadamard_sign_matrix(n_planes)?, (control, target))?;
        let slot = gate_time / report.matrix.n_columns() as f64;
        events.extend_from_slice(decoupling_schedule(&report.matrix, slot, 0.0)?.events());
    }
    let t = gate_time;
    let cz = -j.signum() * FRAC_PI_2;
    rz_events(t, cz, control, &mut events);
    rz_events(t, cz, target, &mut events);
    events.push(instant(t, FRAC_PI_2, FRAC_PI_2, target));
    for (plane, &w) in sys.offsets().iter().enumerate() {
        rz_events(t, -w * t, plane, &mut events);
    }
    let sequence = Sequence::new(format!("cnot-{control}-{target}"), events, gate_time)?;

    let n = sys.total_spins();
    let d = sys.dim();
    let mut u = CMatrix::identity(d, d);
    for chain in 0..sys.n_chains() {
        u = cnot_matrix(n, sys.spin_index(control, chain), sys.spin_index(target, chain))? * u;
    }
    Ok(CnotProgram { sequence, target: Propagator::new(u)?, coupling: j, gate_time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sigma_over_delta, ChainLattice};
    use crate::spinsys::{build_system, build_system_with, gate_fidelity, propagator, Mode, SystemOptions};

    fn fap() -> ChainLattice {
        ChainLattice::preset("fluorapatite").unwrap()
    }

    fn fidelity(sys: &SpinSystem, c: usize, t: usize) -> f64 {
        let prog = compile_cnot(sys, c, t).unwrap();
        let u = propagator(sys, &prog.sequence, Mode::Ideal).unwrap();
        gate_fidelity(&u, &prog.target).unwrap()
    }

    #[test]
    fn cnot_truth_table() {
        let m = cnot_matrix(2, 0, 1).unwrap();
        // |10⟩ (control down) ↔ |11⟩
        assert_eq!(m[(3, 2)].re, 1.0);
        assert_eq!(m[(2, 3)].re, 1.0);
        assert_eq!(m[(0, 0)].re, 1.0);
        assert!(cnot_matrix(2, 1, 1).is_err());
    }

    #[test]
    fn two_plane_single_chain_is_exact() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0]], 1.4e6).unwrap();
        assert!(fidelity(&sys, 0, 1) > 1.0 - 1e-6);
        assert!(fidelity(&sys, 1, 0) > 1.0 - 1e-6);
    }

    #[test]
    fn without_gradient_is_exact() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0]], 0.0).unwrap();
        assert!(fidelity(&sys, 0, 1) > 1.0 - 1e-6);
    }

    #[test]
    fn three_planes_with_recoupling() {
        let sys = build_system(&fap(), 3, &[[0.0, 0.0]], 1.4e6).unwrap();
        assert!(fidelity(&sys, 1, 2) > 1.0 - 1e-6);
        assert!(fidelity(&sys, 1, 0) > 1.0 - 1e-6);
    }

    #[test]
    fn spectator_chain_error_is_bounded() {
        let lat = fap();
        let lambda = lat.nearest_transverse_spacing() / lat.a;
        let sys = build_system_with(&lat, 2, &[[0.0, 0.0], [lambda, 0.0]], 1.4e6, SystemOptions::default()).unwrap();
        let infidelity = 1.0 - fidelity(&sys, 0, 1);
        let ratio = sigma_over_delta(&lat, crate::lattice::DEFAULT_REL_TOL).unwrap().sigma_over_delta;
        assert!(infidelity > 0.0);
        assert!(infidelity <= 4.0 * ratio * ratio, "{infidelity} vs {}", 4.0 * ratio * ratio);
    }

    #[test]
    fn non_adjacent_planes_are_unsupported() {
        let sys = build_system(&fap(), 3, &[[0.0, 0.0]], 1.4e6).unwrap();
        assert!(matches!(compile_cnot(&sys, 0, 2), Err(Error::Unsupported(_))));
    }
}
