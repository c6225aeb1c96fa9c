use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Short, strong pulse affecting every plane.
    Broadband,
    /// Narrow-band pulse resonant with one plane.
    Plane(usize),
}

impl Target {
    /// Two targets conflict if they can act on the same spin.
    pub fn conflicts_with(self, other: Target) -> bool {
        match (self, other) {
            (Target::Plane(a), Target::Plane(b)) => a == b,
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub t_start: f64,
    /// Zero means instantaneous (ideal).
    pub duration: f64,
    pub flip_angle: f64,
    /// 0 = x, π/2 = y, π = −x, 3π/2 = −y.
    pub phase: f64,
    pub target: Target,
}

impl PulseEvent {
    pub fn new(t_start: f64, duration: f64, flip_angle: f64, phase: f64, target: Target) -> Self {
        PulseEvent { t_start, duration, flip_angle, phase, target }
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn t_center(&self) -> f64 {
        self.t_start + 0.5 * self.duration
    }

    fn check(&self) -> Option<String> {
        if !(self.t_start >= 0.0 && self.t_start.is_finite()) {
            return Some(format!("t_start {} must be finite and non-negative", self.t_start));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Some(format!("duration {} must be finite and non-negative", self.duration));
        }
        if !(self.flip_angle > 0.0 && self.flip_angle <= 2.0 * PI) {
            return Some(format!("flip angle {} outside (0, 2π]", self.flip_angle));
        }
        if !self.phase.is_finite() {
            return Some("phase must be finite".into());
        }
        None
    }
}

/// A validated pulse schedule over one cycle.
///
/// Invariants: events are sorted by start time (ties keep insertion order,
/// which is also the application order of simultaneous instantaneous
/// pulses); events whose targets conflict never overlap in time; every
/// event ends by `cycle_time`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sequence {
    pub label: String,
    pub cycle_time: f64,
    events: Vec<PulseEvent>,
}

impl Sequence {
    pub fn new(label: impl Into<String>, mut events: Vec<PulseEvent>, cycle_time: f64) -> Result<Self> {
        if !(cycle_time >= 0.0 && cycle_time.is_finite()) {
            return Err(Error::InvalidArgument(format!("cycle time {cycle_time} must be finite and non-negative")));
        }
        events.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        let violations = validate(&events, cycle_time);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(Sequence { label: label.into(), cycle_time, events })
    }

    pub fn empty(label: impl Into<String>, cycle_time: f64) -> Result<Self> {
        Self::new(label, Vec::new(), cycle_time)
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// One more than the highest plane index referenced, or 0.
    pub fn planes_referenced(&self) -> usize {
        self.events
            .iter()
            .filter_map(|e| match e.target {
                Target::Plane(p) => Some(p + 1),
                Target::Broadband => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// The cycle played `times` times back to back.
    pub fn repeat(&self, times: usize) -> Result<Self> {
        let mut events = Vec::with_capacity(self.events.len() * times);
        for r in 0..times {
            let shift = r as f64 * self.cycle_time;
            events.extend(self.events.iter().map(|e| PulseEvent { t_start: e.t_start + shift, ..*e }));
        }
        Sequence::new(self.label.clone(), events, self.cycle_time * times as f64)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Sequence) -> Result<Self> {
        let mut events = self.events.clone();
        events.extend(next.events.iter().map(|e| PulseEvent { t_start: e.t_start + self.cycle_time, ..*e }));
        Sequence::new(format!("{}+{}", self.label, next.label), events, self.cycle_time + next.cycle_time)
    }
}

fn tolerance(cycle_time: f64) -> f64 {
    1e-12 * cycle_time.max(1e-300)
}

pub(crate) fn validate(events: &[PulseEvent], cycle_time: f64) -> Vec<Violation> {
    let eps = tolerance(cycle_time);
    let mut out = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if let Some(reason) = e.check() {
            out.push(Violation { index: i, reason });
            continue;
        }
        if e.t_end() > cycle_time + eps {
            out.push(Violation {
                index: i,
                reason: format!("ends at {:e} s after the cycle time {:e} s", e.t_end(), cycle_time),
            });
        }
    }
    // events are sorted by start, so only forward neighbours starting before
    // the end of event i can overlap it
    for i in 0..events.len() {
        let a = &events[i];
        for (j, b) in events.iter().enumerate().skip(i + 1) {
            if b.t_start >= a.t_end() - eps {
                break;
            }
            if a.target.conflicts_with(b.target) && intervals_overlap(a, b, eps) {
                out.push(Violation { index: j, reason: format!("overlaps event {i} on a shared target") });
            }
        }
    }
    out
}

/// Open-interval overlap. Simultaneous instantaneous pulses do not overlap:
/// they are applied one after the other.
pub(crate) fn intervals_overlap(a: &PulseEvent, b: &PulseEvent, eps: f64) -> bool {
    a.t_start < b.t_end() - eps && b.t_start < a.t_end() - eps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse(t: f64, d: f64, target: Target) -> PulseEvent {
        PulseEvent::new(t, d, PI, 0.0, target)
    }

    #[test]
    fn sorts_events() {
        let s = Sequence::new("s", vec![pulse(2.0, 0.1, Target::Plane(0)), pulse(1.0, 0.1, Target::Plane(0))], 3.0)
            .unwrap();
        assert_eq!(s.events()[0].t_start, 1.0);
    }

    #[test]
    fn same_target_overlap_rejected() {
        let err = Sequence::new("s", vec![pulse(1.0, 0.5, Target::Plane(1)), pulse(1.2, 0.5, Target::Plane(1))], 3.0)
            .unwrap_err();
        match err {
            Error::Validation(v) => assert_eq!(v.len(), 1),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn different_planes_may_overlap_but_broadband_may_not() {
        assert!(
            Sequence::new("s", vec![pulse(1.0, 0.5, Target::Plane(1)), pulse(1.2, 0.5, Target::Plane(2))], 3.0).is_ok()
        );
        assert!(Sequence::new("s", vec![pulse(1.0, 0.5, Target::Plane(1)), pulse(1.2, 0.5, Target::Broadband)], 3.0)
            .is_err());
    }

    #[test]
    fn adjacent_and_simultaneous_instantaneous_pulses_allowed() {
        assert!(
            Sequence::new("s", vec![pulse(1.0, 0.5, Target::Plane(1)), pulse(1.5, 0.5, Target::Plane(1))], 3.0).is_ok()
        );
        assert!(
            Sequence::new("s", vec![pulse(1.0, 0.0, Target::Plane(1)), pulse(1.0, 0.0, Target::Plane(1))], 3.0).is_ok()
        );
        // an instantaneous pulse inside a finite one is an overlap
        assert!(Sequence::new("s", vec![pulse(1.0, 0.5, Target::Plane(1)), pulse(1.2, 0.0, Target::Plane(1))], 3.0)
            .is_err());
    }

    #[test]
    fn event_past_cycle_end_rejected() {
        assert!(Sequence::new("s", vec![pulse(2.9, 0.2, Target::Broadband)], 3.0).is_err());
    }

    #[test]
    fn bad_flip_angle_rejected() {
        let e = PulseEvent::new(0.0, 0.0, 0.0, 0.0, Target::Broadband);
        assert!(Sequence::new("s", vec![e], 1.0).is_err());
        let e = PulseEvent::new(0.0, 0.0, 7.0, 0.0, Target::Broadband);
        assert!(Sequence::new("s", vec![e], 1.0).is_err());
    }

    #[test]
    fn repeat_and_then() {
        let s = Sequence::new("s", vec![pulse(0.5, 0.1, Target::Broadband)], 1.0).unwrap();
        let r = s.repeat(3).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.cycle_time, 3.0);
        let t = s.then(&r).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.events()[1].t_start, 1.5);
    }
}
