use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result, Violation};

use super::sequence::{PulseEvent, Sequence, Target};

/// WAHUHA cycle over 6τ with broadband π/2 pulses of phases −x, y, −y, x.
///
/// Pulses are centred at τ, 2τ, 4τ and 5τ, leaving free windows of
/// τ, τ, 2τ, τ, τ between pulse centres.
pub fn wahuha(tau: f64, pulse_width: f64) -> Result<Sequence> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    if !(pulse_width >= 0.0) || pulse_width >= tau {
        return Err(Error::InvalidArgument(format!("pulse width {pulse_width:e} s must be in [0, tau = {tau:e} s)")));
    }
    let centres_phases = [(1.0, PI), (2.0, FRAC_PI_2), (4.0, 3.0 * FRAC_PI_2), (5.0, 0.0)];
    let events = centres_phases
        .iter()
        .map(|&(c, phase)| {
            PulseEvent::new(c * tau - 0.5 * pulse_width, pulse_width, FRAC_PI_2, phase, Target::Broadband)
        })
        .collect();
    Sequence::new("wahuha", events, 6.0 * tau)
}

/// Free-evolution windows (start, end) between the broadband pulses of a
/// sequence, including the leading and trailing windows.
pub fn broadband_windows(seq: &Sequence) -> Vec<(f64, f64)> {
    let mut windows = Vec::new();
    let mut cursor = 0.0;
    for e in seq.events().iter().filter(|e| e.target == Target::Broadband) {
        windows.push((cursor, e.t_start));
        cursor = e.t_end();
    }
    windows.push((cursor, seq.cycle_time));
    windows
}

/// Merges plane-selective pulses into a broadband cycle.
///
/// The broadband cycle is repeated enough times to cover the selective
/// cycle. Selective pulses keep their times; each must fit entirely inside
/// one free window of the repeated broadband timeline and be shorter than
/// the smallest interior window. All offenders are reported together.
pub fn interleave(broadband: &Sequence, selective: &Sequence) -> Result<Sequence> {
    if broadband.events().iter().any(|e| e.target != Target::Broadband) {
        return Err(Error::InvalidArgument("broadband sequence contains selective pulses".into()));
    }
    if selective.events().iter().any(|e| e.target == Target::Broadband) {
        return Err(Error::InvalidArgument("selective sequence contains broadband pulses".into()));
    }
    if !(broadband.cycle_time > 0.0) {
        return Err(Error::InvalidArgument("broadband cycle time must be positive".into()));
    }
    let ratio = selective.cycle_time / broadband.cycle_time;
    let reps = ((ratio - 1e-9).ceil() as usize).max(1);
    let repeated = broadband.repeat(reps)?;

    let windows = broadband_windows(&repeated);
    // interior windows (between two pulses) bound the usable width
    let smallest = windows
        .iter()
        .enumerate()
        .filter(|&(i, _)| i > 0 && i + 1 < windows.len())
        .map(|(_, w)| w.1 - w.0)
        .fold(f64::INFINITY, f64::min);
    let eps = 1e-12 * repeated.cycle_time;

    let mut violations = Vec::new();
    for (idx, e) in selective.events().iter().enumerate() {
        if e.duration >= smallest {
            violations.push(Violation {
                index: idx,
                reason: format!("width {:e} s is not below the smallest free window {:e} s", e.duration, smallest),
            });
            continue;
        }
        let fits = windows.iter().any(|&(a, b)| e.t_start >= a - eps && e.t_end() <= b + eps);
        if !fits {
            violations.push(Violation {
                index: idx,
                reason: format!("[{:e}, {:e}] s straddles a broadband pulse", e.t_start, e.t_end()),
            });
        }
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    let mut events = repeated.events().to_vec();
    events.extend_from_slice(selective.events());
    let label = format!("{}|{}", broadband.label, selective.label);
    Sequence::new(label, events, repeated.cycle_time.max(selective.cycle_time))
}

/// Decoupling/recoupling cycle time t_c = L n² / Δω.
pub fn cycle_time_model(n: usize, block_length: f64, delta_omega: f64) -> Result<f64> {
    if n == 0 || !(block_length > 0.0) || !(delta_omega > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need n ≥ 1, L > 0, Δω > 0 (got {n}, {block_length}, {delta_omega})"
        )));
    }
    Ok(block_length * (n * n) as f64 / delta_omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{decoupling_schedule, hadamard_sign_matrix};

    #[test]
    fn wahuha_layout() {
        let s = wahuha(1e-5, 1e-6).unwrap();
        assert!((s.cycle_time - 6e-5).abs() < 1e-18);
        assert_eq!(s.len(), 4);
        let w = broadband_windows(&s);
        let lens: Vec<f64> = w.iter().map(|(a, b)| b - a).collect();
        let expect = [0.95e-5, 0.9e-5, 1.9e-5, 0.9e-5, 0.95e-5];
        for (a, b) in lens.iter().zip(expect) {
            assert!((a - b).abs() < 1e-18);
        }
        assert!(wahuha(1e-5, 1e-5).is_err());
    }

    #[test]
    fn empty_selective_repeats_broadband() {
        let bb = wahuha(1e-5, 0.0).unwrap();
        let sel = Sequence::empty("none", 2.5 * bb.cycle_time).unwrap();
        let out = interleave(&bb, &sel).unwrap();
        assert_eq!(out.len(), 12);
        assert!((out.cycle_time - 3.0 * bb.cycle_time).abs() < 1e-18);
    }

    fn figure_pattern(width_frac: f64) -> Result<Sequence> {
        let tau = 1e-5;
        let bb = wahuha(tau, 0.1 * tau)?;
        let m = hadamard_sign_matrix(3)?;
        let sel = decoupling_schedule(&m, bb.cycle_time, width_frac * tau)?;
        interleave(&bb, &sel)
    }

    #[test]
    fn figure_pattern_fits() {
        let s = figure_pattern(0.2).unwrap();
        // one broadband line plus selective pulses on every decoupled plane
        let bb = s.events().iter().filter(|e| e.target == Target::Broadband).count();
        assert_eq!(bb, 16);
        assert!(s.events().iter().any(|e| e.target == Target::Plane(1)));
        assert!(s.events().iter().any(|e| e.target == Target::Plane(2)));
    }

    #[test]
    fn wide_selective_pulse_rejected_with_offenders() {
        let tau = 1e-5;
        let bb = wahuha(tau, 0.1 * tau).unwrap();
        let m = hadamard_sign_matrix(3).unwrap();
        let sel = decoupling_schedule(&m, 4.0 * bb.cycle_time, 2.0 * tau).unwrap();
        match interleave(&bb, &sel) {
            Err(Error::Validation(v)) => assert_eq!(v.len(), sel.len()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interleave_preserves_events() {
        let s = figure_pattern(0.2).unwrap();
        let m = hadamard_sign_matrix(3).unwrap();
        let slot = wahuha(1e-5, 1e-6).unwrap().cycle_time;
        let sel = decoupling_schedule(&m, slot, 0.2e-5).unwrap();
        for p in 0..3 {
            let a: Vec<f64> = s.events().iter().filter(|e| e.target == Target::Plane(p)).map(|e| e.t_start).collect();
            let b: Vec<f64> = sel.events().iter().filter(|e| e.target == Target::Plane(p)).map(|e| e.t_start).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cycle_time_values() {
        let dw = 2.0 * PI * 19.2e3;
        let t = cycle_time_model(10, 16.0, dw).unwrap();
        assert!((t - 13.3e-3).abs() / 13.3e-3 < 0.01);
        assert_eq!(cycle_time_model(20, 16.0, dw).unwrap() / t, 4.0);
        assert!((cycle_time_model(10, 32.0, dw).unwrap() / t - 2.0).abs() < 1e-15);
        assert!(cycle_time_model(0, 1.0, dw).is_err());
    }
}
