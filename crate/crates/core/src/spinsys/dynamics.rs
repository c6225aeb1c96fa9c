use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_gate_cols_adjoint, apply_gate_rows, apply_gate_vec, dim, expm_hermitian, inner, rotation, spin_mask,
    unitarity_error, CMatrix, CVector, Gate2, HermitianExp, C64, ZERO,
};
use crate::pulses::{PulseEvent, Sequence, Target};

use super::{QuantumState, SpinSystem};

/// Tolerance on ‖U†U − 1‖_max for every propagator handed out.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Upper bound on integration steps for one sampled pulse.
pub const MAX_PULSE_STEPS: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Pulses act as instantaneous rotations at their centre times.
    Ideal,
    /// Finite pulses are integrated as rotating-wave drive terms.
    Sampled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    matrix: CMatrix,
}

impl Propagator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        let err = unitarity_error(&matrix);
        if !(err < UNITARITY_TOL) {
            return Err(Error::NotUnitary(err));
        }
        Ok(Propagator { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Propagator { matrix: CMatrix::identity(d, d) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `self` followed by `next` (i.e. next · self).
    pub fn then(&self, next: &Propagator) -> Propagator {
        Propagator { matrix: &next.matrix * &self.matrix }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Event-boundary times, starting at 0 and ending at the cycle time.
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
}

impl Trajectory {
    pub fn final_state(&self) -> &QuantumState {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

enum Segment<'a> {
    Free(f64),
    Instant(&'a PulseEvent, f64),
    Driven(&'a PulseEvent),
    Mark(f64),
}

fn push_mark(segs: &mut Vec<Segment<'_>>, t: f64) {
    if let Some(Segment::Mark(last)) = segs.last() {
        if *last == t {
            return;
        }
    }
    segs.push(Segment::Mark(t));
}

fn plan<'a>(sys: &SpinSystem, seq: &'a Sequence, mode: Mode) -> Result<Vec<Segment<'a>>> {
    if seq.planes_referenced() > sys.n_planes() {
        return Err(Error::InvalidArgument(format!(
            "sequence addresses plane {} but the system has {} planes",
            seq.planes_referenced() - 1,
            sys.n_planes()
        )));
    }
    let mut segs = vec![Segment::Mark(0.0)];
    let mut cursor = 0.0;
    match mode {
        Mode::Ideal => {
            let mut items: Vec<(f64, &PulseEvent)> = seq.events().iter().map(|e| (e.t_center(), e)).collect();
            items.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (k, &(t, e)) in items.iter().enumerate() {
                if t > cursor {
                    segs.push(Segment::Free(t - cursor));
                    cursor = t;
                }
                segs.push(Segment::Instant(e, t));
                if items.get(k + 1).map_or(true, |n| n.0 != t) {
                    push_mark(&mut segs, t);
                }
            }
        }
        Mode::Sampled => {
            let ev = seq.events();
            let eps = 1e-12 * seq.cycle_time;
            for i in 0..ev.len() {
                for j in i + 1..ev.len() {
                    if ev[j].t_start >= ev[i].t_end() - eps {
                        break;
                    }
                    if (ev[i].duration > 0.0 || ev[j].duration > 0.0)
                        && crate::pulses::intervals_overlap(&ev[i], &ev[j], eps)
                    {
                        return Err(Error::Overlap(i, j));
                    }
                }
            }
            for e in ev {
                if e.t_start > cursor {
                    segs.push(Segment::Free(e.t_start - cursor));
                    cursor = e.t_start;
                    push_mark(&mut segs, cursor);
                }
                if e.duration == 0.0 {
                    segs.push(Segment::Instant(e, e.t_start));
                } else {
                    segs.push(Segment::Driven(e));
                    cursor = e.t_end();
                }
                push_mark(&mut segs, cursor);
            }
        }
    }
    if seq.cycle_time > cursor {
        segs.push(Segment::Free(seq.cycle_time - cursor));
    }
    push_mark(&mut segs, seq.cycle_time.max(cursor));
    Ok(segs)
}

/// Anything that can be pushed forward by unitaries.
trait Evolving {
    fn gate(&mut self, n_spins: usize, spin: usize, g: &Gate2);
    fn unitary(&mut self, u: &CMatrix);
    fn free(&mut self, exp: &HermitianExp, cache: &mut HashMap<u64, CMatrix>, dt: f64);
}

fn cached<'c>(exp: &HermitianExp, cache: &'c mut HashMap<u64, CMatrix>, dt: f64) -> &'c CMatrix {
    cache.entry(dt.to_bits()).or_insert_with(|| exp.propagator(dt))
}

impl Evolving for CMatrix {
    fn gate(&mut self, n_spins: usize, spin: usize, g: &Gate2) {
        apply_gate_rows(self, n_spins, spin, g);
    }
    fn unitary(&mut self, u: &CMatrix) {
        *self = u * &*self;
    }
    fn free(&mut self, exp: &HermitianExp, cache: &mut HashMap<u64, CMatrix>, dt: f64) {
        match exp {
            HermitianExp::Diagonal(_) => *self = exp.apply_left(dt, self),
            HermitianExp::Dense { .. } => *self = cached(exp, cache, dt) * &*self,
        }
    }
}

impl Evolving for QuantumState {
    fn gate(&mut self, n_spins: usize, spin: usize, g: &Gate2) {
        match self {
            QuantumState::Pure(v) => apply_gate_vec(v, n_spins, spin, g),
            QuantumState::Density(m) => {
                apply_gate_rows(m, n_spins, spin, g);
                apply_gate_cols_adjoint(m, n_spins, spin, g);
            }
        }
    }
    fn unitary(&mut self, u: &CMatrix) {
        self.apply_unitary(u);
    }
    fn free(&mut self, exp: &HermitianExp, cache: &mut HashMap<u64, CMatrix>, dt: f64) {
        match (exp, &mut *self) {
            (HermitianExp::Diagonal(d), QuantumState::Pure(v)) => {
                for (a, e) in v.iter_mut().zip(d) {
                    *a *= C64::from_polar(1.0, -e * dt);
                }
            }
            _ => {
                let u = cached(exp, cache, dt).clone();
                self.apply_unitary(&u);
            }
        }
    }
}

/// Carrier offset (rad/s) of the pulse's target in the plane-0 frame.
fn carrier(sys: &SpinSystem, e: &PulseEvent) -> f64 {
    match e.target {
        Target::Broadband => 0.0,
        Target::Plane(p) => sys.offsets()[p],
    }
}

fn apply_instant<E: Evolving>(sys: &SpinSystem, x: &mut E, e: &PulseEvent, t: f64) {
    let g = rotation(e.flip_angle, e.phase + carrier(sys, e) * t);
    let n = sys.total_spins();
    match e.target {
        Target::Broadband => (0..n).for_each(|s| x.gate(n, s, &g)),
        Target::Plane(p) => sys.spins_in_plane(p).for_each(|s| x.gate(n, s, &g)),
    }
}

/// Full-register unitary of an instantaneous pulse applied at `t`.
pub(super) fn pulse_unitary(sys: &SpinSystem, e: &PulseEvent, t: f64) -> CMatrix {
    let d = sys.dim();
    let mut u = CMatrix::identity(d, d);
    apply_instant(sys, &mut u, e, t);
    u
}

/// Σ over all spins of cos φ I_x + sin φ I_y.
fn transverse_operator(n_spins: usize, phase: f64) -> CMatrix {
    let d = dim(n_spins);
    let mut m = CMatrix::zeros(d, d);
    let half = C64::from_polar(0.5, phase);
    for s in 0..n_spins {
        let mask = spin_mask(n_spins, s);
        for up in (0..d).filter(|i| i & mask == 0) {
            let down = up | mask;
            m[(down, up)] += half;
            m[(up, down)] += half.conj();
        }
    }
    m
}

fn apply_driven<E: Evolving>(sys: &SpinSystem, h0: &CMatrix, x: &mut E, e: &PulseEvent) -> Result<()> {
    let wc = carrier(sys, e);
    let spread = sys.offsets().iter().map(|w| (w - wc).abs()).fold(sys.max_offset_spread().max(wc.abs()), f64::max);
    let mut dt_max = e.duration / 10.0;
    if spread > 0.0 {
        dt_max = dt_max.min(1.0 / (20.0 * spread));
    }
    let steps = (e.duration / dt_max).ceil();
    if !(steps.is_finite()) || steps as usize > MAX_PULSE_STEPS {
        return Err(Error::StepUnderflow(format!(
            "pulse of {:e} s needs {steps} steps (limit {MAX_PULSE_STEPS})",
            e.duration
        )));
    }
    let steps = steps as usize;
    let dt = e.duration / steps as f64;
    let w1 = e.flip_angle / e.duration;
    let n = sys.total_spins();
    for k in 0..steps {
        let t_mid = e.t_start + (k as f64 + 0.5) * dt;
        let drive = transverse_operator(n, e.phase + wc * t_mid);
        let h = h0 + drive * C64::new(w1, 0.0);
        x.unitary(&expm_hermitian(&h, dt));
    }
    Ok(())
}

fn run<E: Evolving + Clone>(
    sys: &SpinSystem,
    seq: &Sequence,
    mode: Mode,
    mut x: E,
    mut record: impl FnMut(f64, &E),
) -> Result<E> {
    let segs = plan(sys, seq, mode)?;
    let h0 = sys.hamiltonian();
    let exp = HermitianExp::new(&h0);
    let mut cache = HashMap::new();
    for seg in segs {
        match seg {
            Segment::Free(dt) => x.free(&exp, &mut cache, dt),
            Segment::Instant(e, t) => apply_instant(sys, &mut x, e, t),
            Segment::Driven(e) => apply_driven(sys, &h0, &mut x, e)?,
            Segment::Mark(t) => record(t, &x),
        }
    }
    Ok(x)
}

/// Propagates `state` through `seq`, returning the state at every event
/// boundary (including t = 0 and the cycle end).
pub fn evolve(sys: &SpinSystem, seq: &Sequence, state: &QuantumState, mode: Mode) -> Result<Trajectory> {
    if state.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), actual: state.dim() });
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    run(sys, seq, mode, state.clone(), |t, s| {
        times.push(t);
        states.push(s.clone());
    })?;
    Ok(Trajectory { times, states })
}

/// Cycle propagator of `seq` on `sys`.
pub fn propagator(sys: &SpinSystem, seq: &Sequence, mode: Mode) -> Result<Propagator> {
    let d = sys.dim();
    let u = run(sys, seq, mode, CMatrix::identity(d, d), |_, _| {})?;
    Propagator::new(u)
}

/// |Tr(target† actual)| / d.
pub fn gate_fidelity(actual: &Propagator, target: &Propagator) -> Result<f64> {
    if actual.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), actual: actual.dim() });
    }
    Ok(inner(target.matrix(), actual.matrix()).norm() / actual.dim() as f64)
}

/// Fidelity of `u` with the closest product of single-spin z rotations.
///
/// Single-spin phases are read off the diagonal at the basis states with
/// one spin flipped; any two-or-more-body phase or off-diagonal weight
/// lowers the result below 1.
pub fn local_z_fidelity(u: &Propagator) -> f64 {
    let m = u.matrix();
    let d = m.nrows();
    let n = d.trailing_zeros() as usize;
    let d0 = m[(0, 0)];
    if d0 == ZERO {
        return 0.0;
    }
    let base = d0 / d0.norm();
    let single: Vec<C64> = (0..n)
        .map(|s| {
            let r = m[(spin_mask(n, s), spin_mask(n, s))] / d0;
            if r == ZERO {
                C64::new(1.0, 0.0)
            } else {
                r / r.norm()
            }
        })
        .collect();
    let mut overlap = ZERO;
    for idx in 0..d {
        let mut p = base;
        for (s, ph) in single.iter().enumerate() {
            if idx & spin_mask(n, s) != 0 {
                p *= ph;
            }
        }
        overlap += p.conj() * m[(idx, idx)];
    }
    overlap.norm() / d as f64
}

/// Piecewise-constant (midpoint) integration of a time-dependent
/// Hamiltonian from `t0` over `steps` steps of `dt`. `observe` is called
/// at `t0` and after every step.
pub fn evolve_time_dependent(
    initial: &CVector,
    t0: f64,
    dt: f64,
    steps: usize,
    hamiltonian: impl Fn(f64) -> CMatrix,
    mut observe: impl FnMut(f64, &CVector),
) -> Result<CVector> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::StepUnderflow(format!("step {dt:e} s")));
    }
    let mut psi = initial.clone();
    observe(t0, &psi);
    for k in 0..steps {
        let t_mid = t0 + (k as f64 + 0.5) * dt;
        let h = hamiltonian(t_mid);
        if h.nrows() != psi.len() {
            return Err(Error::DimensionMismatch { expected: psi.len(), actual: h.nrows() });
        }
        psi = expm_hermitian(&h, dt) * psi;
        observe(t0 + (k + 1) as f64 * dt, &psi);
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ChainLattice;
    use crate::linalg::{max_abs, rotation_z};
    use crate::pulses::wahuha;
    use crate::spinsys::{build_system, expectation, spin_operator, Axis};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fap() -> ChainLattice {
        ChainLattice::preset("fluorapatite").unwrap()
    }

    fn total_iz(n: usize) -> CMatrix {
        (0..n).fold(CMatrix::zeros(dim(n), dim(n)), |acc, s| acc + spin_operator(n, s, Axis::Z))
    }

    fn tilted(sys: &SpinSystem) -> QuantumState {
        let seq = Sequence::new("tilt", vec![PulseEvent::new(0.0, 0.0, 0.7, 0.3, Target::Broadband)], 0.0).unwrap();
        evolve(sys, &seq, &QuantumState::all_up(sys.total_spins()), Mode::Ideal).unwrap().final_state().clone()
    }

    #[test]
    fn free_evolution_conserves_energy_and_total_iz() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0], [2.7214, 0.0]], 1.4e6).unwrap();
        let psi = tilted(&sys);
        let h = sys.hamiltonian();
        let iz = total_iz(4);
        let seq = Sequence::empty("free", 3e-4).unwrap();
        let traj = evolve(&sys, &seq, &psi, Mode::Ideal).unwrap();
        assert_eq!(traj.times, vec![0.0, 3e-4]);
        let (e0, m0) = (expectation(&psi, &h), expectation(&psi, &iz));
        let last = traj.final_state();
        assert!((expectation(last, &h) - e0).abs() < 1e-9 * e0.abs().max(1.0));
        assert!((expectation(last, &iz) - m0).abs() < 1e-12);
        assert!(last.normalization_error() < 1e-12);
    }

    #[test]
    fn density_and_pure_evolution_agree() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0]], 1.4e6).unwrap();
        let psi = tilted(&sys);
        let rho = QuantumState::Density(psi.to_density());
        let seq = wahuha(1e-5, 0.0).unwrap();
        let a = evolve(&sys, &seq, &psi, Mode::Ideal).unwrap();
        let b = evolve(&sys, &seq, &rho, Mode::Ideal).unwrap();
        assert_eq!(a.times.len(), b.times.len());
        let diff = a.final_state().to_density() - b.final_state().to_density();
        assert!(max_abs(&diff) < 1e-12);
    }

    #[test]
    fn boundaries_include_pulse_centres() {
        let sys = build_system(&fap(), 1, &[[0.0, 0.0]], 0.0).unwrap();
        let seq = wahuha(1e-5, 1e-6).unwrap();
        let traj = evolve(&sys, &seq, &QuantumState::all_up(1), Mode::Ideal).unwrap();
        assert_eq!(traj.times.len(), 6);
        let sampled = evolve(&sys, &seq, &QuantumState::all_up(1), Mode::Sampled).unwrap();
        // start and end of every pulse plus the two cycle ends
        assert_eq!(sampled.times.len(), 10);
    }

    #[test]
    fn short_pulses_match_ideal_rotations() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0], [2.7214, 0.0]], 0.0).unwrap();
        let scale = sys.couplings().iter().map(|c| c.coefficient.abs()).fold(0.0, f64::max);
        let width = 1.0 / (100.0 * scale);
        let seq = wahuha(20.0 * width, width).unwrap();
        let ideal = propagator(&sys, &seq, Mode::Ideal).unwrap();
        let sampled = propagator(&sys, &seq, Mode::Sampled).unwrap();
        let f = gate_fidelity(&sampled, &ideal).unwrap();
        assert!(f > 1.0 - 1e-3, "{f}");
    }

    #[test]
    fn sampled_pi_pulse_flips_on_resonance_plane() {
        let sys = build_system(&fap(), 1, &[[0.0, 0.0]], 0.0).unwrap();
        let seq = Sequence::new("pi", vec![PulseEvent::new(0.0, 1e-6, PI, 0.0, Target::Plane(0))], 2e-6).unwrap();
        let out = evolve(&sys, &seq, &QuantumState::all_up(1), Mode::Sampled).unwrap();
        let iz = expectation_iz(out.final_state());
        assert!((iz + 0.5).abs() < 1e-12);
    }

    fn expectation_iz(s: &QuantumState) -> f64 {
        expectation(s, &spin_operator(1, 0, Axis::Z))
    }

    #[test]
    fn overlapping_finite_pulses_rejected_in_sampled_mode() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0]], 1.4e6).unwrap();
        let seq = Sequence::new(
            "both",
            vec![
                PulseEvent::new(0.0, 1e-6, PI, 0.0, Target::Plane(0)),
                PulseEvent::new(5e-7, 1e-6, PI, 0.0, Target::Plane(1)),
            ],
            2e-6,
        )
        .unwrap();
        assert!(propagator(&sys, &seq, Mode::Ideal).is_ok());
        assert!(matches!(propagator(&sys, &seq, Mode::Sampled), Err(Error::Overlap(0, 1))));
    }

    #[test]
    fn plane_out_of_range_and_state_size_checked() {
        let sys = build_system(&fap(), 1, &[[0.0, 0.0]], 0.0).unwrap();
        let seq = Sequence::new("p", vec![PulseEvent::new(0.0, 0.0, PI, 0.0, Target::Plane(1))], 1e-6).unwrap();
        assert!(propagator(&sys, &seq, Mode::Ideal).is_err());
        let empty = Sequence::empty("e", 1e-6).unwrap();
        assert!(matches!(
            evolve(&sys, &empty, &QuantumState::all_up(2), Mode::Ideal),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zz_evolution_for_pi_over_coupling_is_cz_type() {
        let sys = build_system(&fap(), 2, &[[0.0, 0.0]], 0.0).unwrap();
        let j = sys.couplings()[0].coefficient;
        let t = PI / j.abs();
        let u = propagator(&sys, &Sequence::empty("zz", t).unwrap(), Mode::Ideal).unwrap();
        // exp(∓iπ I_z I_z): diagonal phases e^{∓iπ/4}(1, i, i, 1)
        let s = j.signum();
        let expect = CMatrix::from_diagonal(&CVector::from_vec(
            [1.0, -1.0, -1.0, 1.0].iter().map(|&p| C64::from_polar(1.0, -s * p * PI / 4.0)).collect(),
        ));
        assert!(gate_fidelity(&u, &Propagator::new(expect).unwrap()).unwrap() > 1.0 - 1e-12);
        // entangling, hence not a product of local z rotations
        assert!(local_z_fidelity(&u) < 0.9);
    }

    #[test]
    fn local_z_fidelity_of_product_rotations_is_one() {
        let mut u = CMatrix::identity(8, 8);
        for (s, a) in [0.3, -1.2, 2.5].iter().enumerate() {
            apply_gate_rows(&mut u, 3, s, &rotation_z(*a));
        }
        let p = Propagator::new(u * C64::from_polar(1.0, 0.4)).unwrap();
        assert!((local_z_fidelity(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::identity(2, 2) * C64::new(1.1, 0.0);
        assert!(matches!(Propagator::new(m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn time_dependent_integrator_is_exact_for_constant_h() {
        let h = spin_operator(1, 0, Axis::X) * C64::new(3.0, 0.0);
        let psi0 = CVector::from_vec(vec![C64::new(1.0, 0.0), ZERO]);
        let mut seen = 0;
        let out = evolve_time_dependent(&psi0, 0.0, 0.01, 100, |_| h.clone(), |_, _| seen += 1).unwrap();
        let exact = expm_hermitian(&h, 1.0) * psi0;
        assert_eq!(seen, 101);
        assert!((out - exact).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn propagators_compose(
            a in prop::collection::vec((0.01f64..0.99, 0.1f64..3.0, 0.0f64..6.28), 0..4),
            b in prop::collection::vec((0.01f64..0.99, 0.1f64..3.0, 0.0f64..6.28), 0..4),
        ) {
            let sys = build_system(&fap(), 2, &[[0.0, 0.0]], 1.4e6).unwrap();
            let t = 2e-5;
            let mk = |v: &[(f64, f64, f64)]| {
                let ev = v.iter().map(|&(f, th, ph)| PulseEvent::new(f * t, 0.0, th, ph, Target::Broadband)).collect();
                Sequence::new("r", ev, t).unwrap()
            };
            let (sa, sb) = (mk(&a), mk(&b));
            let joined = sa.then(&sb).unwrap();
            let ua = propagator(&sys, &sa, Mode::Ideal).unwrap();
            let ub = propagator(&sys, &sb, Mode::Ideal).unwrap();
            let uj = propagator(&sys, &joined, Mode::Ideal).unwrap();
            prop_assert!(max_abs(&(uj.matrix() - ua.then(&ub).matrix())) < 1e-10);
        }
    }
}
