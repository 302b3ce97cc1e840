//! Parameter-file loading and CSV trajectory persistence.
//!
//! Trajectory schema: `t, phi1, phi2, R00..R22 (row-major), x1, x2`, one
//! header row, every value printed with 17 significant digits so that
//! read ∘ write is the identity bit for bit. The PMP variant appends
//! `gamma1, gamma2, p1, p2`.

use std::path::Path;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::kinematics::{Pose, RobotParams, Sample, ShapeState, Trajectory, Vec2};

const TRAJECTORY_HEADER: [&str; 14] = [
    "t", "phi1", "phi2", "R00", "R01", "R02", "R10", "R11", "R12", "R20", "R21", "R22", "x1",
    "x2",
];
const OCP_HEADER: [&str; 18] = [
    "t", "phi1", "phi2", "R00", "R01", "R02", "R10", "R11", "R12", "R20", "R21", "R22", "x1",
    "x2", "gamma1", "gamma2", "p1", "p2",
];

/// One row of the `ocp` output: a kinematic sample with its costates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcpSample {
    pub t: f64,
    pub shape: ShapeState,
    pub pose: Pose,
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: Vec2,
}

/// 17 significant digits: the shortest count that reproduces every f64
/// exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_field(raw: &str, row: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::SchemaError {
        row,
        message: format!("not a number: {raw:?}"),
    })
}

fn pose_fields(pose: &Pose) -> [f64; 11] {
    let r = &pose.r;
    [
        r[(0, 0)],
        r[(0, 1)],
        r[(0, 2)],
        r[(1, 0)],
        r[(1, 1)],
        r[(1, 2)],
        r[(2, 0)],
        r[(2, 1)],
        r[(2, 2)],
        pose.x.x,
        pose.x.y,
    ]
}

fn pose_from_fields(f: &[f64]) -> Pose {
    Pose {
        r: Matrix3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]),
        x: Vec2::new(f[9], f[10]),
    }
}

pub fn write_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for s in &traj.samples {
        let mut rec = Vec::with_capacity(14);
        rec.push(fmt(s.t));
        rec.push(fmt(s.shape.phi1));
        rec.push(fmt(s.shape.phi2));
        rec.extend(pose_fields(&s.pose).iter().map(|v| fmt(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(&mut r, &TRAJECTORY_HEADER)?;
    let mut samples = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let fields = parse_row(&record, 14, row)?;
        samples.push(Sample {
            t: fields[0],
            shape: ShapeState::new(fields[1], fields[2]),
            pose: pose_from_fields(&fields[3..14]),
        });
    }
    Ok(Trajectory { samples })
}

pub fn write_ocp_trajectory(samples: &[OcpSample], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(OCP_HEADER)?;
    for s in samples {
        let mut rec = Vec::with_capacity(18);
        rec.push(fmt(s.t));
        rec.push(fmt(s.shape.phi1));
        rec.push(fmt(s.shape.phi2));
        rec.extend(pose_fields(&s.pose).iter().map(|v| fmt(*v)));
        rec.push(fmt(s.gamma1));
        rec.push(fmt(s.gamma2));
        rec.push(fmt(s.p.x));
        rec.push(fmt(s.p.y));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ocp_trajectory(path: impl AsRef<Path>) -> Result<Vec<OcpSample>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(&mut r, &OCP_HEADER)?;
    let mut samples = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let f = parse_row(&record, 18, row)?;
        samples.push(OcpSample {
            t: f[0],
            shape: ShapeState::new(f[1], f[2]),
            pose: pose_from_fields(&f[3..14]),
            gamma1: f[14],
            gamma2: f[15],
            p: Vec2::new(f[16], f[17]),
        });
    }
    Ok(samples)
}

fn check_header<R: std::io::Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = r.headers()?;
    if header.len() != expected.len() || header.iter().zip(expected).any(|(a, b)| a != *b) {
        return Err(Error::SchemaError {
            row: 0,
            message: format!("header mismatch: expected {expected:?}"),
        });
    }
    Ok(())
}

fn parse_row(record: &csv::StringRecord, width: usize, row: usize) -> Result<Vec<f64>> {
    if record.len() != width {
        return Err(Error::SchemaError {
            row,
            message: format!("expected {width} columns, found {}", record.len()),
        });
    }
    record.iter().map(|raw| parse_field(raw, row)).collect()
}

/// Loads `key = value` robot parameters. Requires exactly the keys `r`,
/// `rho`, `h`, `w`, `j_ratio`; `#` starts a comment; blank lines are
/// ignored. Validation (positivity, presence) is delegated to
/// [`RobotParams::new`], which names the offending key.
pub fn load_params(path: impl AsRef<Path>) -> Result<RobotParams> {
    let text = std::fs::read_to_string(path)?;
    let mut values: [Option<f64>; 5] = [None; 5];
    const KEYS: [&str; 5] = ["r", "rho", "h", "w", "j_ratio"];
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let stripped = raw_line.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(Error::ParseError { line, message: format!("expected key = value, got {stripped:?}") });
        };
        let key = key.trim();
        let Some(slot) = KEYS.iter().position(|k| *k == key) else {
            return Err(Error::ParseError { line, message: format!("unknown key {key:?}") });
        };
        if values[slot].is_some() {
            return Err(Error::ParseError { line, message: format!("duplicate key {key:?}") });
        }
        let parsed = value.trim().parse::<f64>().map_err(|_| Error::ParseError {
            line,
            message: format!("invalid number {:?} for key {key:?}", value.trim()),
        })?;
        values[slot] = Some(parsed);
    }
    for (slot, key) in KEYS.iter().enumerate() {
        if values[slot].is_none() {
            return Err(Error::ValidationError {
                key: key.to_string(),
                message: "missing from parameter file".to_string(),
            });
        }
    }
    RobotParams::new(
        values[0].unwrap(),
        values[1].unwrap(),
        values[2].unwrap(),
        values[3].unwrap(),
        values[4].unwrap(),
    )
}
