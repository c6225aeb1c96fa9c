use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dim, inner, spin_mask, CMatrix, C64};
use crate::pulses::Sequence;

use super::dynamics::pulse_unitary;
use super::SpinSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Single-spin operator I_axis on `spin` in an `n_spins` register.
pub fn spin_operator(n_spins: usize, spin: usize, axis: Axis) -> CMatrix {
    let d = dim(n_spins);
    let mask = spin_mask(n_spins, spin);
    let mut m = CMatrix::zeros(d, d);
    for idx in 0..d {
        let up = idx & mask == 0;
        match axis {
            Axis::Z => m[(idx, idx)] = C64::new(if up { 0.5 } else { -0.5 }, 0.0),
            Axis::X => m[(idx ^ mask, idx)] = C64::new(0.5, 0.0),
            // I_y|↑⟩ = (i/2)|↓⟩, I_y|↓⟩ = −(i/2)|↑⟩
            Axis::Y => m[(idx ^ mask, idx)] = C64::new(0.0, if up { 0.5 } else { -0.5 }),
        }
    }
    m
}

/// I_a^axis I_b^axis.
pub fn pair_operator(n_spins: usize, a: usize, b: usize, axis: Axis) -> CMatrix {
    spin_operator(n_spins, a, axis) * spin_operator(n_spins, b, axis)
}

/// Coefficient of `op` in `h` under the trace inner product.
pub fn operator_component(h: &CMatrix, op: &CMatrix) -> f64 {
    inner(op, h).re / inner(op, op).re
}

/// Zeroth-order average Hamiltonian of one cycle in the toggling frame of
/// the pulses, (1/T) Σ_k Δt_k U_k† H U_k.
///
/// Only instantaneous pulses are supported; each acts at its start time.
pub fn average_hamiltonian_0(sys: &SpinSystem, seq: &Sequence) -> Result<CMatrix> {
    if !(seq.cycle_time > 0.0) {
        return Err(Error::InvalidArgument("average Hamiltonian needs a positive cycle time".into()));
    }
    if let Some(e) = seq.events().iter().find(|e| e.duration > 0.0) {
        return Err(Error::Unsupported(format!(
            "average Hamiltonian with a finite pulse ({:e} s at {:e} s)",
            e.duration, e.t_start
        )));
    }
    if seq.planes_referenced() > sys.n_planes() {
        return Err(Error::InvalidArgument("sequence addresses a plane outside the system".into()));
    }
    let h = sys.hamiltonian();
    let d = sys.dim();
    let mut toggle = CMatrix::identity(d, d);
    let mut acc = CMatrix::zeros(d, d);
    let mut cursor = 0.0;
    let add = |toggle: &CMatrix, dt: f64, acc: &mut CMatrix| {
        if dt > 0.0 {
            *acc += (toggle.adjoint() * &h * toggle) * C64::new(dt, 0.0);
        }
    };
    for e in seq.events() {
        add(&toggle, e.t_start - cursor, &mut acc);
        cursor = cursor.max(e.t_start);
        toggle = pulse_unitary(sys, e, e.t_start) * toggle;
    }
    add(&toggle, seq.cycle_time - cursor, &mut acc);
    Ok(acc / C64::new(seq.cycle_time, 0.0))
}
