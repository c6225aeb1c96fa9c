//! Schedule export and import.
//!
//! JSON layout: `{"label", "cycle_time", "events": [{"t_start", "duration",
//! "flip_angle", "phase", "target"}]}` with `target` either `"broadband"` or
//! `{"plane": i}`. Numbers use shortest round-trip formatting, so
//! `to_json(from_json(to_json(s)))` reproduces the text exactly.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::format_float;

use super::sequence::{PulseEvent, Sequence, Target};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    label: String,
    cycle_time: f64,
    events: Vec<PulseEvent>,
}

pub fn to_json(seq: &Sequence) -> String {
    // Sequence only holds strings, finite floats and enums.
    serde_json::to_string_pretty(seq).expect("sequence serializes")
}

pub fn from_json(text: &str) -> Result<Sequence> {
    let raw: RawSequence = serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))?;
    Sequence::new(raw.label, raw.events, raw.cycle_time)
}

pub fn to_csv(seq: &Sequence) -> String {
    let mut out = String::from("index,t_start_s,duration_s,t_end_s,flip_angle_rad,phase_rad,target\n");
    for (i, e) in seq.events().iter().enumerate() {
        let target = match e.target {
            Target::Broadband => "broadband".to_string(),
            Target::Plane(p) => format!("plane{p}"),
        };
        out.push_str(&format!(
            "{i},{},{},{},{},{},{target}\n",
            format_float(e.t_start),
            format_float(e.duration),
            format_float(e.t_end()),
            format_float(e.flip_angle),
            format_float(e.phase),
        ));
    }
    out
}
