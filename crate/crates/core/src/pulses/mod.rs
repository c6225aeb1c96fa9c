//! Pulse schedules: construction, validation and compilation.
//!
//! A [`Sequence`] is a validated, time-ordered list of [`PulseEvent`]s over
//! one cycle. Generators in this module only ever return sequences that
//! satisfy the [`Sequence`] invariants.
//!
//! Pulse phases of plane-selective events are referenced to the carrier of
//! the targeted plane (phase-continuous from t = 0); broadband phases are
//! referenced to the plane-0 carrier.

mod cnot;
mod hadamard;
mod io;
mod sequence;
mod timeline;

pub use cnot::{cnot_matrix, compile_cnot, CnotProgram};
pub use hadamard::{
    decoupling_schedule, effective_coupling_scale, hadamard_sign_matrix, recouple, sylvester, RecoupleReport,
    SignMatrix,
};
pub use io::{from_json, to_csv, to_json};
pub(crate) use sequence::intervals_overlap;
pub use sequence::{PulseEvent, Sequence, Target};
pub use timeline::{broadband_windows, cycle_time_model, interleave, wahuha};
