//! Trajectory files (versioned JSON) and trace export (CSV).
//!
//! Trajectory file layout:
//!
//! ```text
//! {
//!   "header": {
//!     "format_version": 1,
//!     "wheel_radius_m": 0.1,
//!     "gantry_offset_m": 0.1,
//!     "upper_link_length_m": 0.2,
//!     "lower_link_length_m": 0.15,
//!     "servo1": {"min_deg": 0.0, "max_deg": 360.0, "max_rate_deg_s": 360.0},
//!     "servo2": {...},
//!     "servo3": {...}
//!   },
//!   "waypoints": [
//!     {"t":0.0,"s1":0.0,"s2":0.0,"s3":0.0},
//!     ...
//!   ]
//! }
//! ```
//!
//! Numbers are written in shortest round-trip form, so reading a written file
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{SimTrace, Trajectory, Waypoint};
use crate::mechanism::{MechanismGeometry, ServoLimit, ServoLimits, ServoState};

pub const FORMAT_VERSION: u32 = 1;

pub const TRACE_HEADER: &str = "t,s1,s2,s3,theta_wheel_deg,x_m,engaged,event_flags";

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    wheel_radius_m: f64,
    gantry_offset_m: f64,
    upper_link_length_m: f64,
    lower_link_length_m: f64,
    servo1: ServoLimit,
    servo2: ServoLimit,
    servo3: ServoLimit,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointRecord {
    t: f64,
    s1: f64,
    s2: f64,
    s3: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    header: Header,
    waypoints: Vec<WaypointRecord>,
}

fn header_of(traj: &Trajectory) -> Header {
    let g = &traj.geometry;
    Header {
        format_version: FORMAT_VERSION,
        wheel_radius_m: g.wheel_radius,
        gantry_offset_m: g.gantry_offset,
        upper_link_length_m: g.upper_link_length,
        lower_link_length_m: g.lower_link_length,
        servo1: traj.limits.servo1,
        servo2: traj.limits.servo2,
        servo3: traj.limits.servo3,
    }
}

/// Serializes a trajectory, one waypoint per line.
pub fn trajectory_to_json(traj: &Trajectory) -> String {
    let header = serde_json::to_string_pretty(&header_of(traj)).expect("header serializes");
    let mut out = String::from("{\n  \"header\": ");
    out.push_str(&header.replace('\n', "\n  "));
    out.push_str(",\n  \"waypoints\": [");
    for (i, wp) in traj.waypoints.iter().enumerate() {
        let rec = WaypointRecord {
            t: wp.t,
            s1: wp.state.s1,
            s2: wp.state.s2,
            s3: wp.state.s3,
        };
        out.push_str(if i == 0 { "\n    " } else { ",\n    " });
        out.push_str(&serde_json::to_string(&rec).expect("waypoint serializes"));
    }
    out.push_str(if traj.waypoints.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
    out
}

/// Parses a trajectory file. Only syntax and header sanity are checked here;
/// waypoint constraints belong to validation.
pub fn parse_trajectory(text: &str) -> Result<Trajectory, FileError> {
    let file: TrajectoryFile = serde_json::from_str(text).map_err(|e| FileError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let h = file.header;
    if h.format_version != FORMAT_VERSION {
        return Err(FileError::UnsupportedVersion {
            found: h.format_version,
        });
    }
    let geometry = MechanismGeometry {
        wheel_radius: h.wheel_radius_m,
        gantry_offset: h.gantry_offset_m,
        upper_link_length: h.upper_link_length_m,
        lower_link_length: h.lower_link_length_m,
    };
    let limits = ServoLimits {
        servo1: h.servo1,
        servo2: h.servo2,
        servo3: h.servo3,
    };
    geometry
        .check()
        .and_then(|_| limits.check())
        .map_err(|e| FileError::InvalidHeader(e.to_string()))?;
    let waypoints = file
        .waypoints
        .into_iter()
        .map(|r| Waypoint::new(r.t, ServoState::new(r.s1, r.s2, r.s3)))
        .collect();
    Ok(Trajectory::new(geometry, limits, waypoints))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trajectory(&text)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), FileError> {
    fs::write(path, trajectory_to_json(traj)).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Formats a value with nine significant digits: fixed notation for
/// exponents in `-5..9`, scientific otherwise.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let exp: i32 = sci[sci.find('e').expect("scientific notation") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, v)
    } else {
        sci
    }
}

/// One header row plus one row per sample.
pub fn trace_to_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.samples.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_sig9(s.t),
            format_sig9(s.state.s1),
            format_sig9(s.state.s2),
            format_sig9(s.state.s3),
            format_sig9(s.theta_wheel),
            format_sig9(s.x),
            u8::from(s.engaged),
            s.flags
        );
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<(), FileError> {
    fs::write(path, trace_to_csv(trace)).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}
